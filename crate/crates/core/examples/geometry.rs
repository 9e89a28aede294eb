//! Quaternion, axis-angle and pose helpers.
//!
//! `cargo run --example geometry`

use std::f64::consts::FRAC_PI_2;

use residual_promp::geometry::{axis_angle_to_quat, compose_pose, quat_diff_axis_angle, quat_to_axis_angle, Pose, Quaternion, Vec3};

fn main() {
    let yaw = Quaternion::from_axis_angle(&Vec3::z(), FRAC_PI_2);
    let nu = quat_to_axis_angle(&yaw);
    println!("90° about z as axis-angle: {:?} (angle {:.4} rad)", nu.0.as_slice(), nu.angle());
    println!("back to a quaternion:      {:?}", axis_angle_to_quat(&nu).to_array());

    // shortest rotation from q to q_des, never longer than π
    let q = Quaternion::from_axis_angle(&Vec3::x(), 0.3);
    let r = quat_diff_axis_angle(&yaw, &q);
    println!("rotation taking q onto yaw: angle {:.4} rad", r.angle());

    let gripper = Pose::new(Vec3::new(0.1, 0.0, 0.2), yaw);
    let grasp = Pose::from_position(Vec3::new(0.0, 0.0, -0.05));
    let object = compose_pose(&gripper, &grasp);
    println!("object under the gripper:  p = {:?}", object.p.as_slice());
    println!("gripper from object:       p = {:?}", compose_pose(&object, &grasp.inverse()).p.as_slice());
}
