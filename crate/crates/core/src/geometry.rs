//! Quaternion, axis-angle and pose algebra.
//!
//! Conventions used throughout the crate:
//!
//! * Quaternions are stored scalar-first as `(w, x, y, z)` and multiply with
//!   the Hamilton convention, so `a * b` applies `b` first, then `a`.
//! * A rotation vector (axis-angle) `ν` encodes the rotation of angle `‖ν‖`
//!   about `ν / ‖ν‖`. Conversions back from quaternions always return the
//!   shortest arc (`‖ν‖ ≤ π`), since `q` and `-q` are resolved to `w ≥ 0`
//!   before taking the logarithm.
//! * A [`Pose`] maps points from its child frame into its parent frame:
//!   `x_parent = q · x_child + p`.

use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Below this rotation angle the axis-angle maps switch to a Taylor expansion.
const SMALL_ANGLE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        match axis.try_normalize(0.0) {
            Some(unit) => axis_angle_to_quat(&AxisAngle(unit * angle)),
            None => Quaternion::IDENTITY,
        }
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn normalize(&self) -> Quaternion {
        let n = self.norm();
        Quaternion::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Inverse of a unit quaternion.
    pub fn inverse(&self) -> Quaternion {
        self.conjugate()
    }

    /// Picks the representative with `w ≥ 0`.
    pub fn canonicalize(&self) -> Quaternion {
        if self.w < 0.0 {
            -*self
        } else {
            *self
        }
    }

    /// Hamilton product without renormalization.
    pub fn hamilton(&self, b: &Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        // v' = v + 2 u × (u × v + w v), u = vector part
        let u = self.vector();
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(&t)
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let Quaternion { w, x, y, z } = *self;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Spherical interpolation along the shortest arc.
    pub fn slerp(&self, other: &Quaternion, s: f64) -> Quaternion {
        let mut end = *other;
        if self.dot(&end) < 0.0 {
            end = -end;
        }
        let delta = quat_to_axis_angle(&end.hamilton(&self.conjugate()));
        axis_angle_to_quat(&AxisAngle(delta.0 * s)) * *self
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Quaternion::IDENTITY
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        quat_mul(&self, &rhs)
    }
}

/// Rotation vector: direction is the axis, norm is the angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle(pub Vec3);

impl AxisAngle {
    pub fn zero() -> Self {
        AxisAngle(Vec3::zeros())
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Maps an arbitrary rotation vector to the equivalent one with `‖ν‖ ≤ π`.
    pub fn canonicalize(&self) -> AxisAngle {
        quat_to_axis_angle(&axis_angle_to_quat(self))
    }
}

/// Hamilton product `a ∘ b`, renormalized.
pub fn quat_mul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    a.hamilton(b).normalize()
}

/// Exponential map from a rotation vector to a unit quaternion.
pub fn axis_angle_to_quat(nu: &AxisAngle) -> Quaternion {
    let theta = nu.angle();
    let (w, s) = if theta < SMALL_ANGLE {
        // cos(θ/2) and sin(θ/2)/θ to second order
        (1.0 - theta * theta / 8.0, 0.5 - theta * theta / 48.0)
    } else {
        ((theta / 2.0).cos(), (theta / 2.0).sin() / theta)
    };
    Quaternion::new(w, nu.0.x * s, nu.0.y * s, nu.0.z * s)
}

/// Logarithm map of a unit quaternion, shortest arc.
pub fn quat_to_axis_angle(q: &Quaternion) -> AxisAngle {
    let q = q.canonicalize();
    let v = q.vector();
    let s = v.norm();
    if s < SMALL_ANGLE {
        // θ ≈ 2 s / w for small s
        return AxisAngle(v * (2.0 / q.w));
    }
    let angle = 2.0 * s.atan2(q.w);
    AxisAngle(v * (angle / s))
}

/// `q_des ⊖ q`: the rotation vector taking `q` to `q_des`, expressed in the
/// parent frame (log of `q_des ∘ q⁻¹`).
pub fn quat_diff_axis_angle(q_des: &Quaternion, q: &Quaternion) -> AxisAngle {
    quat_to_axis_angle(&q_des.canonicalize().hamilton(&q.canonicalize().conjugate()))
}

/// Sign-aligned component-wise mean of unit quaternions, renormalized.
pub fn quat_mean(qs: &[Quaternion]) -> Result<Quaternion> {
    let first = *qs.first().ok_or(Error::Empty("quaternion list"))?;
    let mut acc = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    for q in qs {
        let q = if q.dot(&first) < 0.0 { -*q } else { *q };
        acc = Quaternion::new(acc.w + q.w, acc.x + q.x, acc.y + q.y, acc.z + q.z);
    }
    if acc.norm() == 0.0 {
        return Err(Error::InvalidInput("quaternions cancel out".into()));
    }
    Ok(acc.normalize().canonicalize())
}

/// Rigid transform: position in meters plus unit-quaternion orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub p: Vec3,
    pub q: Quaternion,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn new(p: Vec3, q: Quaternion) -> Self {
        Pose { p, q }
    }

    pub fn identity() -> Self {
        Pose { p: Vec3::zeros(), q: Quaternion::IDENTITY }
    }

    pub fn from_position(p: Vec3) -> Self {
        Pose { p, q: Quaternion::IDENTITY }
    }

    pub fn inverse(&self) -> Pose {
        let q_inv = self.q.inverse();
        Pose { p: -q_inv.rotate(&self.p), q: q_inv }
    }

    pub fn transform_point(&self, v: &Vec3) -> Vec3 {
        self.q.rotate(v) + self.p
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.q.to_rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.p);
        m
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().all(|v| v.is_finite()) && self.q.is_finite()
    }

    /// Flat `[px, py, pz, qw, qx, qy, qz]` layout used by observations and files.
    pub fn to_array(&self) -> [f64; 7] {
        [self.p.x, self.p.y, self.p.z, self.q.w, self.q.x, self.q.y, self.q.z]
    }
}

/// `a ∘ b`: first apply `b`, then `a`.
pub fn compose_pose(a: &Pose, b: &Pose) -> Pose {
    Pose { p: a.p + a.q.rotate(&b.p), q: quat_mul(&a.q, &b.q) }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        compose_pose(&self, &rhs)
    }
}
