//! Task-space rigid body driven by a Cartesian impedance law.
//!
//! On the real arm the impedance wrench is mapped to joint torques through
//! the Jacobian transpose, with Coriolis and gravity terms cancelled by the
//! controller. Those terms do not change the closed-loop behavior seen in
//! task space, so the plant here is the grasped object itself: a single
//! rigid body that feels the impedance wrench plus whatever the environment
//! pushes back with.

use nalgebra::{Matrix3, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axis_angle_to_quat, quat_diff_axis_angle, AxisAngle, Pose, Vec3};

/// Simulation rate of the impedance loop.
pub const CONTROL_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Wrench {
    pub fn zero() -> Self {
        Wrench::default()
    }

    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Wrench { force, torque }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        Wrench { force: self.force + rhs.force, torque: self.torque + rhs.torque }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceGains {
    /// Position stiffness, N/m.
    pub kp: Matrix3<f64>,
    /// Orientation stiffness, N·m/rad.
    pub kq: Matrix3<f64>,
    /// Damping on the twist `[v; ω]`.
    pub damping: Matrix6<f64>,
    /// Position error is scaled down to at most this norm, m.
    #[serde(default)]
    pub max_position_error: Option<f64>,
    /// Orientation error is scaled down to at most this angle, rad.
    #[serde(default)]
    pub max_orientation_error: Option<f64>,
}

impl ImpedanceGains {
    /// Diagonal stiffness with damping ratio one for the given body.
    pub fn critically_damped(kp: f64, kq: f64, body: &RigidBody) -> Self {
        let mut damping = Matrix6::zeros();
        for i in 0..3 {
            damping[(i, i)] = 2.0 * (kp * body.mass).sqrt();
            damping[(i + 3, i + 3)] = 2.0 * (kq * body.inertia[(i, i)]).sqrt();
        }
        ImpedanceGains {
            kp: Matrix3::identity() * kp,
            kq: Matrix3::identity() * kq,
            damping,
            max_position_error: None,
            max_orientation_error: None,
        }
    }

    pub fn with_saturation(mut self, position: f64, orientation: f64) -> Self {
        self.max_position_error = Some(position);
        self.max_orientation_error = Some(orientation);
        self
    }

    pub fn zero() -> Self {
        ImpedanceGains {
            kp: Matrix3::zeros(),
            kq: Matrix3::zeros(),
            damping: Matrix6::zeros(),
            max_position_error: None,
            max_orientation_error: None,
        }
    }
}

impl Default for ImpedanceGains {
    /// Deliberately soft: 60 N/m and 4 N·m/rad, error saturated at 5 cm and
    /// 0.35 rad.
    fn default() -> Self {
        ImpedanceGains::critically_damped(60.0, 4.0, &RigidBody::default()).with_saturation(0.05, 0.35)
    }
}

/// Apparent mass properties of the end effector with its grasped object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidBody {
    /// kg
    pub mass: f64,
    /// Body-frame inertia, kg·m².
    pub inertia: Matrix3<f64>,
}

impl Default for RigidBody {
    fn default() -> Self {
        RigidBody { mass: 1.0, inertia: Matrix3::identity() * 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub pose: Pose,
    /// Linear velocity, m/s, target frame.
    pub linear: Vec3,
    /// Angular velocity, rad/s, target frame.
    pub angular: Vec3,
    pub body: RigidBody,
}

impl PlantState {
    pub fn at_rest(pose: Pose, body: RigidBody) -> Self {
        PlantState { pose, linear: Vec3::zeros(), angular: Vec3::zeros(), body }
    }

    pub fn twist(&self) -> Vector6<f64> {
        Vector6::new(self.linear.x, self.linear.y, self.linear.z, self.angular.x, self.angular.y, self.angular.z)
    }

    pub fn world_inertia(&self) -> Matrix3<f64> {
        let r = self.pose.q.to_rotation_matrix();
        r * self.body.inertia * r.transpose()
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.body.mass * self.linear.norm_squared() + 0.5 * self.angular.dot(&(self.world_inertia() * self.angular))
    }
}

/// Stiffness pulls toward the setpoint, damping resists the current twist.
pub fn impedance_wrench(state: &PlantState, setpoint: &Pose, gains: &ImpedanceGains) -> Wrench {
    let pos_err = saturate(setpoint.p - state.pose.p, gains.max_position_error);
    let rot_err = saturate(quat_diff_axis_angle(&setpoint.q, &state.pose.q).0, gains.max_orientation_error);
    let damp = gains.damping * state.twist();
    Wrench {
        force: gains.kp * pos_err - Vec3::new(damp[0], damp[1], damp[2]),
        torque: gains.kq * rot_err - Vec3::new(damp[3], damp[4], damp[5]),
    }
}

fn saturate(v: Vec3, limit: Option<f64>) -> Vec3 {
    match limit {
        Some(max) if v.norm() > max => v * (max / v.norm()),
        _ => v,
    }
}

/// One semi-implicit Euler step: velocities first, then the pose with the
/// new velocities. The orientation is advanced through the exponential map.
pub fn step(state: &PlantState, setpoint: &Pose, gains: &ImpedanceGains, external: &Wrench, dt: f64) -> Result<PlantState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let wrench = impedance_wrench(state, setpoint, gains) + *external;
    let inertia = state.world_inertia();
    let lin_acc = wrench.force / state.body.mass;
    let gyro = state.angular.cross(&(inertia * state.angular));
    let ang_acc = inertia
        .try_inverse()
        .map(|inv| inv * (wrench.torque - gyro))
        .unwrap_or_else(|| Vec3::repeat(f64::NAN));
    if !(lin_acc.iter().chain(ang_acc.iter()).all(|v| v.is_finite())) {
        return Err(Error::NonFinite(format!(
            "plant acceleration under wrench force={:?} torque={:?}",
            wrench.force.as_slice(),
            wrench.torque.as_slice()
        )));
    }
    let linear = state.linear + lin_acc * dt;
    let angular = state.angular + ang_acc * dt;
    let p = state.pose.p + linear * dt;
    let q = (axis_angle_to_quat(&AxisAngle(angular * dt)) * state.pose.q).canonicalize();
    Ok(PlantState { pose: Pose::new(p, q), linear, angular, body: state.body.clone() })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::geometry::Quaternion;

    fn energy(state: &PlantState, setpoint: &Pose, gains: &ImpedanceGains) -> f64 {
        let e = setpoint.p - state.pose.p;
        state.kinetic_energy() + 0.5 * e.dot(&(gains.kp * e))
    }

    fn full_energy(state: &PlantState, setpoint: &Pose, gains: &ImpedanceGains, kq: f64) -> f64 {
        let theta = quat_diff_axis_angle(&setpoint.q, &state.pose.q).angle();
        energy(state, setpoint, gains) + 0.5 * kq * theta * theta
    }

    #[test]
    fn equilibrium_produces_no_wrench() {
        let pose = Pose::new(Vec3::new(0.1, -0.2, 0.3), Quaternion::new(0.9, 0.1, -0.3, 0.2).normalize());
        let state = PlantState::at_rest(pose, RigidBody::default());
        let gains = ImpedanceGains::default();
        let w = impedance_wrench(&state, &pose, &gains);
        assert_eq!(w.force, Vec3::zeros());
        assert!(w.torque.norm() < 1e-15);
        let next = step(&state, &pose, &gains, &Wrench::zero(), CONTROL_DT).unwrap();
        assert!(next.twist().norm() < 1e-14);
    }

    #[test]
    fn linear_and_rotational_stiffness() {
        let gains = ImpedanceGains::critically_damped(120.0, 3.0, &RigidBody::default());
        let state = PlantState::at_rest(Pose::identity(), RigidBody::default());
        let w = impedance_wrench(&state, &Pose::from_position(Vec3::new(0.01, 0.0, 0.0)), &gains);
        assert_abs_diff_eq!(w.force, Vec3::new(1.2, 0.0, 0.0), epsilon = 1e-15);
        assert_eq!(w.torque, Vec3::zeros());

        let target = Pose::new(Vec3::zeros(), Quaternion::from_axis_angle(&Vec3::z(), PI / 18.0));
        let w = impedance_wrench(&state, &target, &gains);
        let oracle = quat_diff_axis_angle(&target.q, &Quaternion::IDENTITY).0 * 3.0;
        assert_abs_diff_eq!(w.torque, oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(w.torque.z, 3.0 * PI / 18.0, epsilon = 1e-12);
    }

    #[test]
    fn saturation_caps_error_but_keeps_direction() {
        let gains = ImpedanceGains::critically_damped(60.0, 4.0, &RigidBody::default()).with_saturation(0.05, 0.35);
        let state = PlantState::at_rest(Pose::identity(), RigidBody::default());
        let far = Pose::new(Vec3::new(0.3, -0.4, 0.0), Quaternion::from_axis_angle(&Vec3::x(), 2.0));
        let w = impedance_wrench(&state, &far, &gains);
        assert_abs_diff_eq!(w.force, Vec3::new(0.03, -0.04, 0.0) * 60.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.torque, Vec3::new(0.35 * 4.0, 0.0, 0.0), epsilon = 1e-12);
        let near = Pose::from_position(Vec3::new(0.01, 0.0, 0.0));
        assert_eq!(impedance_wrench(&state, &near, &gains).force, Vec3::new(0.6, 0.0, 0.0));
    }

    #[test]
    fn zero_gains_leave_state_unchanged() {
        let state = PlantState::at_rest(Pose::from_position(Vec3::new(1.0, 2.0, 3.0)), RigidBody::default());
        let next = step(&state, &Pose::identity(), &ImpedanceGains::zero(), &Wrench::zero(), CONTROL_DT).unwrap();
        assert_eq!(next, state);
    }

    #[test]
    fn free_space_step_response_settles() {
        let gains = ImpedanceGains::default();
        let setpoint = Pose::new(Vec3::new(0.05, -0.03, 0.02), Quaternion::from_axis_angle(&Vec3::new(1.0, 1.0, 0.0), 0.3));
        let mut state = PlantState::at_rest(Pose::identity(), RigidBody::default());
        for _ in 0..2000 {
            state = step(&state, &setpoint, &gains, &Wrench::zero(), CONTROL_DT).unwrap();
            assert!(state.pose.is_finite());
        }
        assert!((state.pose.p - setpoint.p).norm() < 1e-3);
        assert!(quat_diff_axis_angle(&setpoint.q, &state.pose.q).angle() < 1e-3);
    }

    #[test]
    fn energy_never_increases_in_free_space() {
        let body = RigidBody::default();
        let gains = ImpedanceGains::default();
        // translation only: the textbook energy of the translational spring
        let setpoint = Pose::from_position(Vec3::new(0.04, 0.02, -0.05));
        let mut state = PlantState::at_rest(Pose::identity(), body.clone());
        state.linear = Vec3::new(-0.2, 0.1, 0.3);
        let mut e = energy(&state, &setpoint, &gains);
        for _ in 0..3000 {
            state = step(&state, &setpoint, &gains, &Wrench::zero(), CONTROL_DT).unwrap();
            let next = energy(&state, &setpoint, &gains);
            assert!(next <= e + 1e-6, "energy rose from {e} to {next}");
            e = next;
        }

        // with an orientation error, include the isotropic rotational spring
        let setpoint = Pose::new(setpoint.p, Quaternion::from_axis_angle(&Vec3::new(0.3, -1.0, 0.2), 0.8));
        let mut state = PlantState::at_rest(Pose::identity(), body);
        state.angular = Vec3::new(0.5, 0.0, -0.4);
        let mut e = full_energy(&state, &setpoint, &gains, 4.0);
        for _ in 0..3000 {
            state = step(&state, &setpoint, &gains, &Wrench::zero(), CONTROL_DT).unwrap();
            let next = full_energy(&state, &setpoint, &gains, 4.0);
            assert!(next <= e + 1e-6, "energy rose from {e} to {next}");
            e = next;
        }
    }

    fn tracking_error(kp: f64) -> f64 {
        let body = RigidBody::default();
        let gains = ImpedanceGains::critically_damped(kp, 4.0, &body);
        let mut state = PlantState::at_rest(Pose::identity(), body);
        let mut total = 0.0;
        let n = 4000;
        for k in 0..n {
            let t = k as f64 * CONTROL_DT;
            let setpoint = Pose::from_position(Vec3::new(0.05 * t, 0.03 * (2.0 * t).sin(), -0.01 * t));
            state = step(&state, &setpoint, &gains, &Wrench::zero(), CONTROL_DT).unwrap();
            total += (setpoint.p - state.pose.p).norm();
        }
        total / n as f64
    }

    #[test]
    fn halving_stiffness_increases_tracking_error() {
        let stiff = tracking_error(60.0);
        let soft = tracking_error(30.0);
        assert!(soft > stiff, "soft {soft} vs stiff {stiff}");
    }

    #[test]
    fn determinism_and_unit_norm() {
        let gains = ImpedanceGains::default();
        let setpoint = Pose::new(Vec3::new(0.1, 0.0, 0.0), Quaternion::from_axis_angle(&Vec3::x(), 2.0));
        let run = || {
            let mut s = PlantState::at_rest(Pose::identity(), RigidBody::default());
            for _ in 0..500 {
                s = step(&s, &setpoint, &gains, &Wrench::new(Vec3::new(0.0, 0.3, 0.0), Vec3::new(0.01, 0.0, 0.0)), CONTROL_DT).unwrap();
                assert!((s.pose.q.norm() - 1.0).abs() < 1e-9);
            }
            s
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_wrench_is_reported() {
        let state = PlantState::at_rest(Pose::identity(), RigidBody::default());
        let bad = Wrench::new(Vec3::new(f64::INFINITY, 0.0, 0.0), Vec3::zeros());
        match step(&state, &Pose::identity(), &ImpedanceGains::default(), &bad, CONTROL_DT) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains("inf")),
            other => panic!("expected non-finite error, got {other:?}"),
        }
        assert!(step(&state, &Pose::identity(), &ImpedanceGains::default(), &Wrench::zero(), 0.0).is_err());
    }
}
