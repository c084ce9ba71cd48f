//! Point-mass quadrotor plant.
//!
//! The autopilot's attitude loop is a first-order lag on roll and pitch and on
//! the yaw rate. Specific thrust acts along the body z axis; translation is
//! integrated with semi-implicit Euler.

use serde::{Deserialize, Serialize};

use crate::control::AttitudeCommand;
use crate::error::{config, Result};
use crate::{Vector3, GRAVITY};

/// Tilt envelope shared by the controller and the plant, rad.
pub const MAX_TILT: f64 = 0.8;

pub const MAX_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vector3,
    pub velocity: Vector3,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Current yaw rate after the lag, rad/s.
    pub yaw_rate: f64,
    pub time: f64,
}

impl VehicleState {
    pub fn at_rest(position: Vector3) -> Self {
        Self { position, ..Self::default() }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite())
            && [self.roll, self.pitch, self.yaw, self.yaw_rate, self.time]
                .iter()
                .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantParams {
    pub mass: f64,
    pub thrust_to_weight: f64,
    pub attitude_time_constant: f64,
    pub yaw_rate_time_constant: f64,
    /// Linear drag per unit velocity, 1/s.
    pub drag: f64,
    pub gravity: f64,
    /// Hold the vehicle on the z = 0 plane instead of letting it sink below.
    pub ground_contact: bool,
}

impl Default for PlantParams {
    fn default() -> Self {
        // Four 68 N propulsion units on a 9 kg airframe.
        let mass = 9.0;
        Self {
            mass,
            thrust_to_weight: 4.0 * 68.0 / (mass * GRAVITY),
            attitude_time_constant: 0.15,
            yaw_rate_time_constant: 0.1,
            drag: 0.1,
            gravity: GRAVITY,
            ground_contact: true,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("attitude_time_constant", self.attitude_time_constant),
            ("yaw_rate_time_constant", self.yaw_rate_time_constant),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(config(format!("plant {name} must be positive, got {v}")));
            }
        }
        if !(self.drag.is_finite() && self.drag >= 0.0) {
            return Err(config("plant drag must be non-negative"));
        }
        if !(self.thrust_to_weight.is_finite() && self.thrust_to_weight > 1.0) {
            return Err(config("thrust-to-weight must exceed 1"));
        }
        Ok(())
    }

    /// Normalized thrust that balances gravity.
    pub fn hover_thrust(&self) -> f64 {
        1.0 / self.thrust_to_weight
    }
}

/// World-frame specific thrust for the given attitude and normalized thrust.
pub fn thrust_vector(roll: f64, pitch: f64, yaw: f64, thrust: f64, params: &PlantParams) -> Vector3 {
    let specific = thrust * params.thrust_to_weight * params.gravity;
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    // Third column of Rz(yaw)·Ry(pitch)·Rx(roll).
    Vector3::new(cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr) * specific
}

/// Translational acceleration after the attitude update of this step.
pub fn acceleration(state: &VehicleState, thrust: f64, params: &PlantParams) -> Vector3 {
    thrust_vector(state.roll, state.pitch, state.yaw, thrust, params)
        - Vector3::new(0.0, 0.0, params.gravity)
        - state.velocity * params.drag
}

pub fn step(
    state: &VehicleState,
    cmd: &AttitudeCommand,
    params: &PlantParams,
    dt: f64,
) -> Result<VehicleState> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(config(format!("plant step must be in (0, {MAX_DT}], got {dt}")));
    }
    // Exact discretization of the first-order lags.
    let att = 1.0 - (-dt / params.attitude_time_constant).exp();
    let yaw_lag = 1.0 - (-dt / params.yaw_rate_time_constant).exp();

    let mut next = *state;
    next.roll = (state.roll + (cmd.roll - state.roll) * att).clamp(-MAX_TILT, MAX_TILT);
    next.pitch = (state.pitch + (cmd.pitch - state.pitch) * att).clamp(-MAX_TILT, MAX_TILT);
    next.yaw_rate = state.yaw_rate + (cmd.yaw_rate - state.yaw_rate) * yaw_lag;
    next.yaw = crate::wrap_angle(state.yaw + next.yaw_rate * dt);

    let a = acceleration(&next, cmd.thrust, params);
    next.velocity = state.velocity + a * dt;
    next.position = state.position + next.velocity * dt;
    if params.ground_contact && next.position.z <= 0.0 {
        next.position.z = 0.0;
        if next.velocity.z < 0.0 {
            next.velocity.z = 0.0;
        }
        if state.position.z <= 0.0 && a.z <= 0.0 {
            // Resting on the ground: no sliding.
            next.velocity.x = 0.0;
            next.velocity.y = 0.0;
            next.position.x = state.position.x;
            next.position.y = state.position.y;
        }
    }
    next.time = state.time + dt;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_params() -> PlantParams {
        PlantParams { drag: 0.0, ground_contact: false, ..PlantParams::default() }
    }

    fn hover(params: &PlantParams) -> AttitudeCommand {
        AttitudeCommand { roll: 0.0, pitch: 0.0, yaw_rate: 0.0, thrust: params.hover_thrust() }
    }

    #[test]
    fn hover_is_equilibrium() {
        let params = PlantParams::default();
        let mut s = VehicleState::at_rest(Vector3::new(1.0, 2.0, 3.0));
        for _ in 0..1000 {
            let next = step(&s, &hover(&params), &params, 0.005).unwrap();
            assert!((next.position - s.position).amax() < 1e-12);
            assert!(next.velocity.amax() < 1e-12);
            s = next;
        }
    }

    #[test]
    fn free_fall() {
        let params = free_params();
        let dt = 0.005;
        let mut s = VehicleState::at_rest(Vector3::new(0.0, 0.0, 1000.0));
        let cmd = AttitudeCommand { thrust: 0.0, ..hover(&params) };
        let n = 400;
        for _ in 0..n {
            s = step(&s, &cmd, &params, dt).unwrap();
        }
        let t = n as f64 * dt;
        assert!((s.velocity.z + GRAVITY * t).abs() <= GRAVITY * dt);
    }

    #[test]
    fn tilted_level_flight_accelerates_with_tan() {
        let params = PlantParams { drag: 0.0, ..PlantParams::default() };
        let theta: f64 = 0.3;
        let thrust = 1.0 / (params.thrust_to_weight * theta.cos());
        let s = VehicleState { pitch: theta, ..VehicleState::at_rest(Vector3::new(0.0, 0.0, 10.0)) };
        let cmd = AttitudeCommand { roll: 0.0, pitch: theta, yaw_rate: 0.0, thrust };
        let dt = 0.005;
        let next = step(&s, &cmd, &params, dt).unwrap();
        let ax = next.velocity.x / dt;
        assert!((ax - GRAVITY * theta.tan()).abs() < 1e-9, "{ax}");
        assert!((next.velocity.z / dt).abs() < 1e-9);
    }

    #[test]
    fn attitude_lag_reaches_63_percent_at_tau() {
        let params = PlantParams::default();
        let dt = 0.005;
        let tau = params.attitude_time_constant;
        let cmd = AttitudeCommand { pitch: 0.4, ..hover(&params) };
        let mut s = VehicleState::at_rest(Vector3::new(0.0, 0.0, 50.0));
        let mut crossed = None;
        for k in 1..=200 {
            s = step(&s, &cmd, &params, dt).unwrap();
            if crossed.is_none() && s.pitch >= 0.4 * (1.0 - (-1.0f64).exp()) - 1e-12 {
                crossed = Some(k as f64 * dt);
            }
        }
        let t = crossed.unwrap();
        assert!((t - tau).abs() <= dt, "crossed at {t}");
    }

    #[test]
    fn zero_thrust_conserves_energy() {
        let params = free_params();
        let dt = 0.005;
        let mut s = VehicleState {
            velocity: Vector3::new(3.0, -1.0, 5.0),
            ..VehicleState::at_rest(Vector3::new(0.0, 0.0, 500.0))
        };
        let cmd = AttitudeCommand { thrust: 0.0, ..hover(&params) };
        let energy = |s: &VehicleState| 0.5 * s.velocity.norm_squared() + GRAVITY * s.position.z;
        let e0 = energy(&s);
        for _ in 0..2000 {
            let prev = energy(&s);
            s = step(&s, &cmd, &params, dt).unwrap();
            // Semi-implicit Euler: per-step energy error O(dt).
            assert!((energy(&s) - prev).abs() <= GRAVITY * GRAVITY * dt * dt + 1e-9);
        }
        assert!((energy(&s) - e0).abs() <= GRAVITY * GRAVITY * dt * 10.0);
    }

    #[test]
    fn tilt_is_clamped() {
        let params = PlantParams::default();
        let cmd = AttitudeCommand { roll: 5.0, pitch: -5.0, ..hover(&params) };
        let mut s = VehicleState::at_rest(Vector3::new(0.0, 0.0, 100.0));
        for _ in 0..1000 {
            s = step(&s, &cmd, &params, 0.005).unwrap();
            assert!(s.roll.abs() <= MAX_TILT && s.pitch.abs() <= MAX_TILT);
        }
    }

    #[test]
    fn rejects_bad_dt() {
        let params = PlantParams::default();
        let s = VehicleState::default();
        assert!(step(&s, &hover(&params), &params, 0.0).is_err());
        assert!(step(&s, &hover(&params), &params, 0.02).is_err());
    }

    #[test]
    fn ground_supports_idle_vehicle() {
        let params = PlantParams::default();
        let mut s = VehicleState::default();
        let cmd = AttitudeCommand { thrust: 0.0, ..hover(&params) };
        for _ in 0..100 {
            s = step(&s, &cmd, &params, 0.005).unwrap();
        }
        assert_eq!(s.position, Vector3::zeros());
        assert_eq!(s.velocity, Vector3::zeros());
    }

    #[test]
    fn deterministic() {
        let params = PlantParams::default();
        let run = || {
            let mut s = VehicleState::at_rest(Vector3::new(0.0, 0.0, 2.0));
            let cmd = AttitudeCommand { roll: 0.1, pitch: -0.2, yaw_rate: 0.3, thrust: 0.4 };
            for _ in 0..500 {
                s = step(&s, &cmd, &params, 0.005).unwrap();
            }
            s
        };
        assert_eq!(run(), run());
    }
}
