//! Step response of the Cartesian impedance plant with and without a
//! constant disturbance.
//!
//! `cargo run --example plant`

use residual_promp::geometry::{quat_diff_axis_angle, Pose, Quaternion, Vec3};
use residual_promp::plant::{step, ImpedanceGains, PlantState, RigidBody, Wrench, CONTROL_DT};

fn main() -> residual_promp::Result<()> {
    let body = RigidBody::default();
    let gains = ImpedanceGains::default();
    let target = Pose::new(Vec3::new(0.02, 0.0, -0.01), Quaternion::from_axis_angle(&Vec3::z(), 0.2));

    for (label, push) in [("free", Wrench::zero()), ("pushed", Wrench::new(Vec3::new(0.21, -0.12, 0.0), Vec3::new(0.0, 0.0, 0.31)))] {
        let mut state = PlantState::at_rest(Pose::identity(), body.clone());
        println!("{label}:");
        for k in 1..=2000 {
            state = step(&state, &target, &gains, &push, CONTROL_DT)?;
            if k % 250 == 0 {
                let ep = (target.p - state.pose.p).norm() * 1e3;
                let eq = quat_diff_axis_angle(&target.q, &state.pose.q).angle().to_degrees();
                println!("  t = {:.2} s  position error {ep:6.3} mm  orientation error {eq:6.3}°  KE {:.2e} J", k as f64 * CONTROL_DT, state.kinetic_energy());
            }
        }
    }
    Ok(())
}
