//! Closed-loop flight simulation with SLAM-like pose feedback.
//!
//! The pipeline mirrors a LiDAR-SLAM-in-the-loop multirotor: statistical pose
//! sources ([`pose_sources`]) and an IMU feed a 9-state constant-acceleration
//! Kalman filter ([`estimator`]), whose estimate drives a cascade PID
//! controller ([`control`]) commanding a point-mass quadrotor plant
//! ([`vehicle`]). References come from [`reference`], evaluation from
//! [`metrics`], and [`harness`] wires it all together.

pub mod control;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod metrics;
pub mod pose_sources;
pub mod reference;
pub mod vehicle;

pub use error::{Error, Result};

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;

pub type Vector3 = nalgebra::Vector3<f64>;

/// Cartesian axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}
