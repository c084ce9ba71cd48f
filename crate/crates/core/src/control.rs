//! Cascade position/velocity controller with feedforward.
//!
//! The outer loop turns position error into a velocity setpoint, the inner
//! loop turns velocity error into a desired acceleration, and a small-angle
//! map converts that into roll, pitch, yaw rate and thrust for the autopilot.

use serde::{Deserialize, Serialize};

use crate::estimator::StateVector;
use crate::reference::TrajectoryPoint;
use crate::vehicle::MAX_TILT;
use crate::{wrap_angle, Vector3, GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttitudeCommand {
    pub roll: f64,
    pub pitch: f64,
    pub yaw_rate: f64,
    /// Normalized to [0, 1].
    pub thrust: f64,
}

impl AttitudeCommand {
    pub fn within_envelope(&self) -> bool {
        self.roll.abs() <= MAX_TILT
            && self.pitch.abs() <= MAX_TILT
            && (0.0..=1.0).contains(&self.thrust)
            && self.yaw_rate.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AxisPid {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral contribution.
    pub integrator_limit: f64,
    /// Bound on the loop output.
    pub output_limit: f64,
}

impl Default for AxisPid {
    fn default() -> Self {
        Self { kp: 1.0, ki: 0.0, kd: 0.0, integrator_limit: 1.0, output_limit: 1.0 }
    }
}

impl AxisPid {
    fn valid(&self) -> bool {
        [self.kp, self.ki, self.kd].iter().all(|g| g.is_finite() && *g >= 0.0)
            && self.integrator_limit.is_finite()
            && self.integrator_limit > 0.0
            && self.output_limit.is_finite()
            && self.output_limit > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidGains {
    /// Outer loop per axis; output limit is the velocity limit (m/s).
    pub position: [AxisPid; 3],
    /// Inner loop per axis; output limit is the acceleration limit (m/s²).
    pub velocity: [AxisPid; 3],
    pub ff_velocity: f64,
    pub ff_acceleration: f64,
    pub yaw_kp: f64,
    pub max_yaw_rate: f64,
    /// Low-pass cutoff on the derivative terms, rad/s.
    pub derivative_cutoff: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        // Tuned on the noiseless carto-like step scenario; see docs/tuning.md.
        let horizontal_pos = AxisPid { kp: 1.1, ki: 0.0, kd: 0.0, integrator_limit: 1.0, output_limit: 3.0 };
        let vertical_pos = AxisPid { kp: 1.0, ki: 0.0, kd: 0.0, integrator_limit: 1.0, output_limit: 2.0 };
        let horizontal_vel = AxisPid { kp: 1.35, ki: 0.5, kd: 0.05, integrator_limit: 2.0, output_limit: 6.0 };
        let vertical_vel = AxisPid { kp: 2.5, ki: 0.5, kd: 0.05, integrator_limit: 2.0, output_limit: 5.0 };
        Self {
            position: [horizontal_pos, horizontal_pos, vertical_pos],
            velocity: [horizontal_vel, horizontal_vel, vertical_vel],
            ff_velocity: 1.0,
            ff_acceleration: 1.0,
            yaw_kp: 1.0,
            max_yaw_rate: 1.0,
            derivative_cutoff: 20.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> crate::Result<()> {
        let loops_ok = self.position.iter().chain(&self.velocity).all(AxisPid::valid);
        let rest_ok = [self.ff_velocity, self.ff_acceleration, self.yaw_kp]
            .iter()
            .all(|g| g.is_finite() && *g >= 0.0)
            && self.max_yaw_rate > 0.0
            && self.derivative_cutoff > 0.0;
        if loops_ok && rest_ok {
            Ok(())
        } else {
            Err(crate::error::config("controller gains must be >= 0 and limits > 0"))
        }
    }
}

/// Integrators, derivative filters and the previous command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlState {
    pub position_integrator: Vector3,
    pub velocity_integrator: Vector3,
    prev_position: Option<Vector3>,
    prev_velocity: Option<Vector3>,
    position_derivative: Vector3,
    velocity_derivative: Vector3,
    /// Sign of inner-loop saturation per axis from the previous update.
    velocity_saturation: [f64; 3],
    position_saturation: [f64; 3],
    pub last_command: AttitudeCommand,
}

/// P-only outer loop with velocity feedforward, clamped per axis.
pub fn position_loop(reference: &TrajectoryPoint, est: &StateVector, gains: &PidGains) -> Vector3 {
    let error = reference.position - est.position();
    Vector3::from_fn(|axis, _| {
        let g = &gains.position[axis];
        let v = g.kp * error[axis] + gains.ff_velocity * reference.velocity[axis];
        v.clamp(-g.output_limit, g.output_limit)
    })
}

fn lowpass_alpha(cutoff: f64, dt: f64) -> f64 {
    1.0 - (-cutoff * dt).exp()
}

/// Shared PID update: integral clamped with conditional integration,
/// derivative on the measured signal through a first-order low-pass.
#[allow(clippy::too_many_arguments)]
fn pid_axis(
    g: &AxisPid,
    error: f64,
    measured: f64,
    prev_measured: Option<f64>,
    integrator: &mut f64,
    derivative: &mut f64,
    saturation: &mut f64,
    alpha: f64,
    feedforward: f64,
    dt: f64,
) -> f64 {
    // Stop integrating into a saturated output.
    if !(*saturation != 0.0 && error.signum() == *saturation) {
        *integrator = (*integrator + g.ki * error * dt).clamp(-g.integrator_limit, g.integrator_limit);
    }
    let raw_d = prev_measured.map_or(0.0, |p| -(measured - p) / dt);
    *derivative += (raw_d - *derivative) * alpha;
    let unclamped = g.kp * error + *integrator + g.kd * *derivative + feedforward;
    let out = unclamped.clamp(-g.output_limit, g.output_limit);
    *saturation = if out != unclamped { unclamped.signum() } else { 0.0 };
    out
}

/// Inner velocity loop. Returns the desired acceleration.
pub fn velocity_loop(
    v_sp: &Vector3,
    est: &StateVector,
    ref_acc: &Vector3,
    gains: &PidGains,
    state: &mut ControlState,
    dt: f64,
) -> Vector3 {
    debug_assert!(dt > 0.0);
    let vel = est.velocity();
    let alpha = lowpass_alpha(gains.derivative_cutoff, dt);
    let prev = state.prev_velocity;
    let out = Vector3::from_fn(|axis, _| {
        pid_axis(
            &gains.velocity[axis],
            v_sp[axis] - vel[axis],
            vel[axis],
            prev.map(|p| p[axis]),
            &mut state.velocity_integrator[axis],
            &mut state.velocity_derivative[axis],
            &mut state.velocity_saturation[axis],
            alpha,
            gains.ff_acceleration * ref_acc[axis],
            dt,
        )
    });
    state.prev_velocity = Some(vel);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeLimits {
    pub max_tilt: f64,
    pub yaw_kp: f64,
    pub max_yaw_rate: f64,
}

impl AttitudeLimits {
    pub fn from_gains(gains: &PidGains) -> Self {
        Self { max_tilt: MAX_TILT, yaw_kp: gains.yaw_kp, max_yaw_rate: gains.max_yaw_rate }
    }
}

/// Small-angle map from desired acceleration to an attitude command.
pub fn acceleration_to_attitude(
    a_des: &Vector3,
    yaw_est: f64,
    yaw_ref: f64,
    hover_thrust: f64,
    limits: &AttitudeLimits,
) -> AttitudeCommand {
    let tilt = limits.max_tilt.min(MAX_TILT);
    let (s, c) = yaw_est.sin_cos();
    let clamp_tilt = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(-tilt, tilt) };
    let pitch = clamp_tilt((a_des.x * c + a_des.y * s) / GRAVITY);
    let roll = clamp_tilt((a_des.x * s - a_des.y * c) / GRAVITY);
    let thrust = hover_thrust * (1.0 + a_des.z / GRAVITY);
    let thrust = if thrust.is_nan() { hover_thrust } else { thrust.clamp(0.0, 1.0) };
    let yaw_rate = (limits.yaw_kp * wrap_angle(yaw_ref - yaw_est))
        .clamp(-limits.max_yaw_rate, limits.max_yaw_rate);
    let yaw_rate = if yaw_rate.is_nan() { 0.0 } else { yaw_rate };
    AttitudeCommand { roll, pitch, yaw_rate, thrust }
}

/// Position → velocity → attitude cascade.
#[derive(Debug, Clone)]
pub struct CascadeController {
    gains: PidGains,
    state: ControlState,
}

impl CascadeController {
    pub fn new(gains: PidGains) -> Self {
        Self { gains, state: ControlState::default() }
    }

    pub fn gains(&self) -> &PidGains {
        &self.gains
    }

    pub fn state(&self) -> &ControlState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = ControlState::default();
    }

    /// Velocity setpoint, including outer-loop I and D terms when configured.
    fn velocity_setpoint(&mut self, reference: &TrajectoryPoint, est: &StateVector, dt: f64) -> Vector3 {
        let outer_pid = self.gains.position.iter().any(|g| g.ki > 0.0 || g.kd > 0.0);
        if !outer_pid {
            return position_loop(reference, est, &self.gains);
        }
        let pos = est.position();
        let alpha = lowpass_alpha(self.gains.derivative_cutoff, dt);
        let prev = self.state.prev_position;
        let gains = &self.gains;
        let state = &mut self.state;
        let out = Vector3::from_fn(|axis, _| {
            pid_axis(
                &gains.position[axis],
                reference.position[axis] - pos[axis],
                pos[axis],
                prev.map(|p| p[axis]),
                &mut state.position_integrator[axis],
                &mut state.position_derivative[axis],
                &mut state.position_saturation[axis],
                alpha,
                gains.ff_velocity * reference.velocity[axis],
                dt,
            )
        });
        self.state.prev_position = Some(pos);
        out
    }

    pub fn update(
        &mut self,
        reference: &TrajectoryPoint,
        est: &StateVector,
        yaw_est: f64,
        hover_thrust: f64,
        dt: f64,
    ) -> AttitudeCommand {
        let v_sp = self.velocity_setpoint(reference, est, dt);
        let a_des = velocity_loop(&v_sp, est, &reference.acceleration, &self.gains, &mut self.state, dt);
        let cmd = acceleration_to_attitude(
            &a_des,
            yaw_est,
            reference.yaw,
            hover_thrust,
            &AttitudeLimits::from_gains(&self.gains),
        );
        self.state.last_command = cmd;
        cmd
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{overshoot, ResponseLog};
    use crate::vehicle::{self, PlantParams, VehicleState};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn point(pos: [f64; 3], vel: [f64; 3]) -> TrajectoryPoint {
        TrajectoryPoint {
            time: 0.0,
            position: Vector3::from(pos),
            velocity: Vector3::from(vel),
            acceleration: Vector3::zeros(),
            yaw: 0.0,
        }
    }

    fn est_at(pos: [f64; 3], vel: [f64; 3]) -> StateVector {
        StateVector::from_kinematics(Vector3::from(pos), Vector3::from(vel), Vector3::zeros())
    }

    fn p_only(kp: f64, limit: f64) -> PidGains {
        let pid = AxisPid { kp, ki: 0.0, kd: 0.0, integrator_limit: 1.0, output_limit: limit };
        PidGains { position: [pid; 3], velocity: [pid; 3], ff_velocity: 0.0, ff_acceleration: 0.0, ..PidGains::default() }
    }

    #[test]
    fn position_loop_zero_error() {
        let v = position_loop(&point([1.0, 2.0, 3.0], [0.0; 3]), &est_at([1.0, 2.0, 3.0], [0.0; 3]), &PidGains::default());
        assert_eq!(v, Vector3::zeros());
    }

    #[test]
    fn position_loop_proportional_and_clamp() {
        let gains = p_only(1.0, 100.0);
        let v = position_loop(&point([2.0, 0.0, 0.0], [0.0; 3]), &est_at([0.0; 3], [0.0; 3]), &gains);
        assert_eq!(v, Vector3::new(2.0, 0.0, 0.0));
        let gains = p_only(1.0, 5.0);
        let v = position_loop(&point([100.0, 0.0, 0.0], [0.0; 3]), &est_at([0.0; 3], [0.0; 3]), &gains);
        assert_eq!(v, Vector3::new(5.0, 0.0, 0.0));
    }

    #[test]
    fn position_loop_adds_velocity_feedforward() {
        let mut gains = p_only(1.0, 100.0);
        gains.ff_velocity = 1.0;
        let v = position_loop(&point([0.0; 3], [0.5, -0.25, 0.0]), &est_at([0.0; 3], [0.0; 3]), &gains);
        assert_eq!(v, Vector3::new(0.5, -0.25, 0.0));
    }

    #[test]
    fn velocity_loop_zero_error() {
        let mut st = ControlState::default();
        let a = velocity_loop(&Vector3::zeros(), &est_at([0.0; 3], [0.0; 3]), &Vector3::zeros(), &PidGains::default(), &mut st, 0.005);
        assert_eq!(a, Vector3::zeros());
    }

    #[test]
    fn velocity_loop_pure_p() {
        let mut st = ControlState::default();
        let gains = p_only(2.0, 100.0);
        let a = velocity_loop(&Vector3::new(1.0, 0.0, 0.0), &est_at([0.0; 3], [0.0; 3]), &Vector3::zeros(), &gains, &mut st, 0.005);
        assert_eq!(a, Vector3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn velocity_loop_integrates() {
        let mut gains = p_only(0.0, 100.0);
        for g in &mut gains.velocity {
            g.ki = 0.5;
            g.integrator_limit = 100.0;
        }
        let mut st = ControlState::default();
        let dt = 0.01;
        let steps = 300;
        let mut a = Vector3::zeros();
        for _ in 0..steps {
            a = velocity_loop(&Vector3::new(1.0, 0.0, 0.0), &est_at([0.0; 3], [0.0; 3]), &Vector3::zeros(), &gains, &mut st, dt);
        }
        let t = steps as f64 * dt;
        assert!((a.x - 0.5 * t).abs() < 1e-9);
    }

    #[test]
    fn integrator_respects_limit_under_saturation() {
        let gains = PidGains::default();
        let mut st = ControlState::default();
        for _ in 0..100_000 {
            velocity_loop(&Vector3::new(50.0, -50.0, 50.0), &est_at([0.0; 3], [0.0; 3]), &Vector3::zeros(), &gains, &mut st, 0.005);
            for axis in 0..3 {
                assert!(st.velocity_integrator[axis].abs() <= gains.velocity[axis].integrator_limit);
            }
        }
    }

    #[test]
    fn hover_mapping() {
        let limits = AttitudeLimits::from_gains(&PidGains::default());
        let c = acceleration_to_attitude(&Vector3::zeros(), 0.4, 0.4, 0.33, &limits);
        assert_eq!(c, AttitudeCommand { roll: 0.0, pitch: 0.0, yaw_rate: 0.0, thrust: 0.33 });
    }

    #[test]
    fn small_angle_mapping() {
        let limits = AttitudeLimits::from_gains(&PidGains::default());
        let c = acceleration_to_attitude(&Vector3::new(GRAVITY * 0.1, 0.0, 0.0), 0.0, 0.0, 0.33, &limits);
        assert!((c.pitch - 0.1).abs() < 1e-15);
        assert_eq!(c.roll, 0.0);
        let c = acceleration_to_attitude(&Vector3::new(GRAVITY * 10.0, 0.0, 0.0), 0.0, 0.0, 0.33, &limits);
        assert_eq!(c.pitch, 0.8);
    }

    #[test]
    fn mapping_agrees_with_plant_geometry() {
        // A small commanded tilt must accelerate the plant along a_des.
        let params = PlantParams { drag: 0.0, ..PlantParams::default() };
        let limits = AttitudeLimits::from_gains(&PidGains::default());
        for yaw in [0.0, 0.7, -2.0] {
            let a_des = Vector3::new(0.3, -0.2, 0.0);
            let c = acceleration_to_attitude(&a_des, yaw, yaw, params.hover_thrust(), &limits);
            let s = VehicleState { roll: c.roll, pitch: c.pitch, yaw, ..VehicleState::default() };
            let a = vehicle::acceleration(&s, c.thrust, &params);
            assert!((a.x - a_des.x).abs() < 5e-3 && (a.y - a_des.y).abs() < 5e-3, "{a:?}");
        }
    }

    #[test]
    fn yaw_full_turn_is_no_error() {
        let limits = AttitudeLimits::from_gains(&PidGains::default());
        let c = acceleration_to_attitude(&Vector3::zeros(), 1.0, 1.0 + 2.0 * PI, 0.3, &limits);
        assert!(c.yaw_rate.abs() < 1e-12);
        let c = acceleration_to_attitude(&Vector3::zeros(), 3.0, -3.0, 0.3, &limits);
        // Shortest way round: positive.
        assert!(c.yaw_rate > 0.0);
    }

    proptest! {
        #[test]
        fn commands_always_in_envelope(
            pos in prop::array::uniform3(-1e4f64..1e4),
            vel in prop::array::uniform3(-1e3f64..1e3),
            acc in prop::array::uniform3(-1e3f64..1e3),
            yaw in -10.0f64..10.0,
            yaw_ref in -10.0f64..10.0,
        ) {
            let mut ctl = CascadeController::new(PidGains::default());
            let reference = TrajectoryPoint {
                time: 0.0, position: Vector3::zeros(), velocity: Vector3::zeros(),
                acceleration: Vector3::from(acc), yaw: yaw_ref,
            };
            for _ in 0..5 {
                let cmd = ctl.update(&reference, &est_at(pos, vel), yaw, 0.33, 0.005);
                prop_assert!(cmd.within_envelope());
                for axis in 0..3 {
                    prop_assert!(ctl.state().velocity_integrator[axis].abs()
                        <= ctl.gains().velocity[axis].integrator_limit);
                }
            }
        }
    }

    /// Perfect-state closed loop on the plant; returns the x response.
    fn closed_loop_step(amplitude: f64, seconds: f64) -> ResponseLog {
        let params = PlantParams::default();
        let dt = 0.005;
        let mut ctl = CascadeController::new(PidGains::default());
        let start = Vector3::new(0.0, 0.0, 2.0);
        let mut s = VehicleState::at_rest(start);
        let reference = point([amplitude, 0.0, 2.0], [0.0; 3]);
        let mut times = Vec::new();
        let mut refs = Vec::new();
        let mut resp = Vec::new();
        let n = (seconds / dt) as usize;
        for k in 0..n {
            let est = StateVector::from_kinematics(s.position, s.velocity, Vector3::zeros());
            times.push(k as f64 * dt);
            refs.push(amplitude);
            resp.push(s.position.x);
            let cmd = ctl.update(&reference, &est, s.yaw, params.hover_thrust(), dt);
            s = vehicle::step(&s, &cmd, &params, dt).unwrap();
        }
        ResponseLog::new(times, refs, resp).unwrap()
    }

    #[test]
    fn saturated_recovery_has_no_extra_overshoot() {
        let small = closed_loop_step(1.0, 40.0);
        let large = closed_loop_step(20.0, 60.0);
        let po_small = overshoot(&small, 0.0).unwrap();
        let po_large = overshoot(&large, 0.0).unwrap();
        assert!(po_large <= po_small * 1.1, "saturated {po_large}% vs unsaturated {po_small}%");
    }

    #[test]
    fn feedforward_tracks_like_open_loop_plant() {
        // Zero feedback gains: the cascade reduces to a_des = a_ref, so the
        // closed loop must match the plant driven open-loop with a_ref.
        let params = PlantParams::default();
        let dt = 0.005;
        let mut gains = PidGains::default();
        for g in gains.position.iter_mut().chain(gains.velocity.iter_mut()) {
            *g = AxisPid { kp: 0.0, ki: 0.0, kd: 0.0, ..*g };
        }
        gains.ff_velocity = 0.0;
        let mut ctl = CascadeController::new(gains.clone());
        let limits = AttitudeLimits::from_gains(&gains);
        let mut closed = VehicleState::at_rest(Vector3::new(0.0, 0.0, 5.0));
        let mut open = closed;
        for k in 0..2000 {
            let t = k as f64 * dt;
            let acc = Vector3::new(0.5 * (0.5 * t).sin(), 0.3 * (0.3 * t).cos(), 0.0);
            let reference = TrajectoryPoint { time: t, position: Vector3::zeros(), velocity: Vector3::zeros(), acceleration: acc, yaw: 0.0 };
            let est = StateVector::from_kinematics(closed.position, closed.velocity, Vector3::zeros());
            let c1 = ctl.update(&reference, &est, closed.yaw, params.hover_thrust(), dt);
            let c2 = acceleration_to_attitude(&acc, open.yaw, 0.0, params.hover_thrust(), &limits);
            assert_eq!(c1, c2);
            closed = vehicle::step(&closed, &c1, &params, dt).unwrap();
            open = vehicle::step(&open, &c2, &params, dt).unwrap();
        }
        assert_eq!(closed, open);
    }
}
