//! Statistical stand-ins for LiDAR SLAM pose outputs and an IMU.
//!
//! A pose source publishes on a fixed rate grid. Each sample is the true
//! position plus a random-walk drift bias and white noise whose spread grows
//! linearly above a degradation altitude. Loop closures zero the drift bias,
//! which steps the raw output; [`StepSmoother`] spreads that step with a
//! decaying exponential so the feedback stays continuous.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::Vector3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseMeasurement {
    pub timestamp: f64,
    pub position: Vector3,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelMeasurement {
    pub timestamp: f64,
    /// Inertial frame, gravity compensated.
    pub acceleration: Vector3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopClosureEvent {
    pub time: f64,
    /// Step applied to the raw pose output.
    pub delta: Vector3,
}

/// A loop closure forced at a fixed time. Without `delta` the accumulated
/// drift is cancelled, as an automatic closure would.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedLoopClosure {
    pub time: f64,
    #[serde(default)]
    pub delta: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorProfile {
    pub name: String,
    /// Publish rate, Hz.
    pub rate: f64,
    /// Delay between the instant a pose describes and its delivery, s.
    pub latency: f64,
    /// White noise standard deviation per axis, m.
    pub noise_std: [f64; 3],
    /// Drift random-walk density per axis, m/√s.
    pub drift_density: [f64; 3],
    pub z_drift_multiplier: f64,
    /// Altitude above which noise grows, m.
    pub degradation_altitude: f64,
    /// Relative noise growth per metre above `degradation_altitude`.
    pub degradation_slope: f64,
    pub loop_closure: bool,
    pub revisit_radius: f64,
    /// Minimum age of a visited pose before a revisit counts, s.
    pub min_excursion_time: f64,
    /// Minimum drift magnitude that triggers a closure, m.
    pub min_loop_drift: f64,
    /// Loop-closure smoothing window, s; 0 disables smoothing.
    pub smoothing_window: f64,
}

impl SensorProfile {
    /// 50 Hz source with loop closures and step smoothing.
    pub fn carto_like() -> Self {
        Self {
            name: "carto-like".into(),
            rate: 50.0,
            latency: 0.02,
            noise_std: [0.02, 0.02, 0.03],
            drift_density: [0.004, 0.004, 0.004],
            z_drift_multiplier: 1.0,
            degradation_altitude: 4.0,
            degradation_slope: 0.0,
            loop_closure: true,
            revisit_radius: 3.0,
            min_excursion_time: 30.0,
            min_loop_drift: 0.1,
            smoothing_window: 5.0,
        }
    }

    /// 20 Hz scan-rate source with strong vertical drift and altitude
    /// degradation, no loop closures.
    pub fn loam_like() -> Self {
        Self {
            name: "loam-like".into(),
            rate: 20.0,
            latency: 0.05,
            noise_std: [0.02, 0.02, 0.03],
            drift_density: [0.0045, 0.0045, 0.0045],
            z_drift_multiplier: 4.0,
            degradation_altitude: 4.0,
            degradation_slope: 6.0,
            loop_closure: false,
            revisit_radius: 3.0,
            min_excursion_time: 30.0,
            min_loop_drift: 0.1,
            smoothing_window: 0.0,
        }
    }

    /// Zero noise, zero drift, no latency.
    pub fn ideal(rate: f64) -> Self {
        Self {
            name: "ideal".into(),
            rate,
            latency: 0.0,
            noise_std: [0.0; 3],
            drift_density: [0.0; 3],
            z_drift_multiplier: 1.0,
            degradation_altitude: 4.0,
            degradation_slope: 0.0,
            loop_closure: false,
            revisit_radius: 3.0,
            min_excursion_time: 30.0,
            min_loop_drift: 0.1,
            smoothing_window: 0.0,
        }
    }

    pub fn builtins() -> Vec<SensorProfile> {
        vec![Self::carto_like(), Self::loam_like()]
    }

    pub fn builtin(name: &str) -> Option<SensorProfile> {
        Self::builtins().into_iter().find(|p| p.name == name)
    }

    /// Same information rate at a different publish rate: per-sample noise
    /// scales with √rate and the latency stays one publish period.
    pub fn with_rate_at_equal_noise_density(&self, rate: f64) -> Self {
        let scale = (rate / self.rate).sqrt();
        Self {
            rate,
            latency: 1.0 / rate,
            noise_std: self.noise_std.map(|s| s * scale),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(config(format!("profile {}: rate must be positive", self.name)));
        }
        if !self.noise_std.iter().chain(&self.drift_density).all(|&s| finite_nonneg(s)) {
            return Err(config(format!("profile {}: noise and drift must be non-negative", self.name)));
        }
        if !(finite_nonneg(self.z_drift_multiplier)
            && finite_nonneg(self.degradation_slope)
            && finite_nonneg(self.latency)
            && finite_nonneg(self.min_excursion_time)
            && finite_nonneg(self.min_loop_drift))
        {
            return Err(config(format!("profile {}: negative parameter", self.name)));
        }
        if !(self.degradation_altitude.is_finite() && self.degradation_altitude > 0.0) {
            return Err(config(format!("profile {}: degradation altitude must be positive", self.name)));
        }
        if !(self.revisit_radius.is_finite() && self.revisit_radius > 0.0) {
            return Err(config(format!("profile {}: revisit radius must be positive", self.name)));
        }
        if !finite_nonneg(self.smoothing_window) {
            return Err(config(format!("profile {}: smoothing window must be >= 0", self.name)));
        }
        Ok(())
    }

    /// Noise standard deviation multiplier at the given altitude.
    pub fn noise_gain(&self, altitude: f64) -> f64 {
        1.0 + self.degradation_slope * (altitude - self.degradation_altitude).max(0.0)
    }
}

/// Interval between stored poses in the revisit history, s.
const HISTORY_INTERVAL: f64 = 1.0;

/// Tolerance on the publish grid, s.
const GRID_EPS: f64 = 1e-9;

/// Stateful pose source: owns its RNG, drift bias and revisit history.
#[derive(Debug, Clone)]
pub struct PoseSource {
    profile: SensorProfile,
    rng: ChaCha8Rng,
    drift_bias: Vector3,
    published: u64,
    last_drift_time: f64,
    noise_scale: f64,
    history: Vec<(f64, Vector3)>,
    in_revisit: bool,
    scripted: Vec<ScriptedLoopClosure>,
    next_scripted: usize,
}

impl PoseSource {
    pub fn new(profile: SensorProfile, seed: u64) -> Result<Self> {
        profile.validate()?;
        Ok(Self {
            profile,
            rng: seeded_stream(seed, 1),
            drift_bias: Vector3::zeros(),
            published: 0,
            last_drift_time: 0.0,
            noise_scale: 1.0,
            history: Vec::new(),
            in_revisit: false,
            scripted: Vec::new(),
            next_scripted: 0,
        })
    }

    /// Replaces the revisit logic with closures at fixed times.
    pub fn with_scripted_events(mut self, mut events: Vec<ScriptedLoopClosure>) -> Self {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        self.scripted = events;
        self.next_scripted = 0;
        self
    }

    pub fn profile(&self) -> &SensorProfile {
        &self.profile
    }

    pub fn drift_bias(&self) -> Vector3 {
        self.drift_bias
    }

    pub fn set_drift_bias(&mut self, bias: Vector3) {
        self.drift_bias = bias;
    }

    /// Extra white-noise multiplier, e.g. for an immature map.
    pub fn set_noise_scale(&mut self, scale: f64) {
        self.noise_scale = scale;
    }

    pub fn published(&self) -> u64 {
        self.published
    }

    /// True when `t` lies on the next publish tick.
    pub fn is_due(&self, t: f64) -> bool {
        t + GRID_EPS >= self.published as f64 / self.profile.rate
    }

    /// Emits a measurement when `t` reaches the next publish tick.
    pub fn sample_pose(&mut self, t: f64, truth: Vector3, yaw: f64) -> Option<PoseMeasurement> {
        if !self.is_due(t) {
            return None;
        }
        self.published += 1;

        let dt = (t - self.last_drift_time).max(0.0);
        self.last_drift_time = t;
        let sqrt_dt = dt.sqrt();
        for axis in 0..3 {
            let mut density = self.profile.drift_density[axis];
            if axis == 2 {
                density *= self.profile.z_drift_multiplier;
            }
            let n: f64 = StandardNormal.sample(&mut self.rng);
            self.drift_bias[axis] += density * sqrt_dt * n;
        }

        let gain = self.profile.noise_gain(truth.z) * self.noise_scale;
        let mut position = truth + self.drift_bias;
        for axis in 0..3 {
            let n: f64 = StandardNormal.sample(&mut self.rng);
            position[axis] += self.profile.noise_std[axis] * gain * n;
        }
        Some(PoseMeasurement { timestamp: t, position, yaw })
    }

    /// Checks for a loop closure and, if one fires, removes the drift bias.
    ///
    /// Call before [`sample_pose`](Self::sample_pose) on the same tick so the
    /// returned step shows up in that tick's raw sample.
    pub fn maybe_loop_close(&mut self, t: f64, truth: Vector3) -> Option<LoopClosureEvent> {
        if !self.scripted.is_empty() {
            return self.scripted_event(t);
        }
        if !self.profile.loop_closure {
            return None;
        }
        if self.history.last().is_none_or(|&(th, _)| t - th >= HISTORY_INTERVAL - GRID_EPS) {
            self.history.push((t, truth));
        }
        let cutoff = t - self.profile.min_excursion_time;
        let r2 = self.profile.revisit_radius.powi(2);
        let near_old = self
            .history
            .iter()
            .take_while(|&&(th, _)| th <= cutoff)
            .any(|(_, p)| (p - truth).norm_squared() <= r2);
        if !near_old {
            self.in_revisit = false;
            return None;
        }
        if self.in_revisit {
            return None;
        }
        if self.drift_bias.norm() <= self.profile.min_loop_drift {
            return None;
        }
        self.in_revisit = true;
        Some(self.apply_closure(t, -self.drift_bias))
    }

    fn scripted_event(&mut self, t: f64) -> Option<LoopClosureEvent> {
        let ev = *self.scripted.get(self.next_scripted)?;
        if t + GRID_EPS < ev.time {
            return None;
        }
        self.next_scripted += 1;
        let delta = ev.delta.map_or(-self.drift_bias, Vector3::from);
        if delta.norm() == 0.0 {
            return None;
        }
        Some(self.apply_closure(t, delta))
    }

    fn apply_closure(&mut self, t: f64, delta: Vector3) -> LoopClosureEvent {
        self.drift_bias += delta;
        LoopClosureEvent { time: t, delta }
    }
}

/// Decaying-residual smoother for loop-closure steps.
///
/// After an event with step `Δ` at `t_e`, the output is
/// `raw(t) − Δ·exp(−(t − t_e)/τ)` with `τ = window / 5`, so the output is
/// continuous at `t_e` and the residual at `t_e + window` is `e⁻⁵·|Δ|`.
/// Overlapping events superpose.
#[derive(Debug, Clone, Default)]
pub struct StepSmoother {
    window: f64,
    active: Vec<LoopClosureEvent>,
}

/// Residuals older than this many time constants are discarded (e⁻⁶⁰ ≈ 1e-26).
const SMOOTHER_HORIZON_TAUS: f64 = 60.0;

impl StepSmoother {
    pub fn new(window: f64) -> Self {
        Self { window, active: Vec::new() }
    }

    pub fn time_constant(&self) -> f64 {
        self.window / 5.0
    }

    pub fn push(&mut self, event: LoopClosureEvent) {
        if self.window > 0.0 {
            self.active.push(event);
        }
    }

    /// Offset added to the raw output at time `t`.
    pub fn offset(&self, t: f64) -> Vector3 {
        let tau = self.time_constant();
        self.active
            .iter()
            .filter(|e| t >= e.time)
            .map(|e| -e.delta * (-(t - e.time) / tau).exp())
            .sum()
    }

    pub fn apply(&mut self, raw: PoseMeasurement) -> PoseMeasurement {
        if self.active.is_empty() {
            return raw;
        }
        let out = PoseMeasurement { position: raw.position + self.offset(raw.timestamp), ..raw };
        let horizon = SMOOTHER_HORIZON_TAUS * self.time_constant();
        self.active.retain(|e| raw.timestamp - e.time < horizon);
        out
    }
}

/// Smooths a recorded raw stream around one loop-closure event.
pub fn smooth_step(
    raw: &[PoseMeasurement],
    event: &LoopClosureEvent,
    window: f64,
) -> Vec<PoseMeasurement> {
    let mut smoother = StepSmoother::new(window);
    smoother.push(*event);
    raw.iter().map(|&m| smoother.apply(m)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImuConfig {
    /// White noise standard deviation per axis, m/s².
    pub noise_std: [f64; 3],
    /// Constant bias per axis, m/s².
    pub bias: [f64; 3],
    /// Saturation magnitude per axis, m/s².
    pub range: f64,
}

impl Default for ImuConfig {
    fn default() -> Self {
        Self { noise_std: [0.05; 3], bias: [0.0; 3], range: 16.0 * crate::GRAVITY }
    }
}

impl ImuConfig {
    pub fn ideal() -> Self {
        Self { noise_std: [0.0; 3], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.noise_std.iter().all(|s| s.is_finite() && *s >= 0.0) {
            return Err(config("imu noise must be non-negative"));
        }
        if !self.bias.iter().all(|b| b.is_finite()) {
            return Err(config("imu bias must be finite"));
        }
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err(config("imu range must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Imu {
    config: ImuConfig,
    rng: ChaCha8Rng,
}

impl Imu {
    pub fn new(config: ImuConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, rng: seeded_stream(seed, 2) })
    }

    pub fn sample_imu(&mut self, t: f64, truth_accel: Vector3) -> AccelMeasurement {
        let mut acceleration = truth_accel;
        for axis in 0..3 {
            let n: f64 = StandardNormal.sample(&mut self.rng);
            acceleration[axis] += self.config.bias[axis] + self.config.noise_std[axis] * n;
            acceleration[axis] = acceleration[axis].clamp(-self.config.range, self.config.range);
        }
        AccelMeasurement { timestamp: t, acceleration }
    }
}

/// Independent deterministic RNG stream per (seed, consumer).
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(rate: f64) -> SensorProfile {
        SensorProfile::ideal(rate)
    }

    fn sample_std(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    #[test]
    fn noiseless_source_reports_truth() {
        let mut src = PoseSource::new(quiet(50.0), 3).unwrap();
        let truth = Vector3::new(1.5, -2.0, 3.25);
        for k in 0..100 {
            if let Some(m) = src.sample_pose(k as f64 * 0.005, truth, 0.3) {
                assert_eq!(m.position, truth);
                assert_eq!(m.yaw, 0.3);
            }
        }
        assert_eq!(src.published(), 25);
    }

    #[test]
    fn no_degradation_below_threshold() {
        let p = SensorProfile::loam_like();
        assert_eq!(p.noise_gain(2.0), 1.0);
        assert_eq!(p.noise_gain(4.0), 1.0);
        assert!((p.noise_gain(5.0) - (1.0 + p.degradation_slope)).abs() < 1e-15);
    }

    #[test]
    fn white_noise_std_matches_profile() {
        let mut profile = quiet(1.0);
        profile.noise_std = [0.02; 3];
        let mut src = PoseSource::new(profile, 11).unwrap();
        let n = 100_000;
        let mut axes: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(n));
        for k in 0..n {
            let m = src.sample_pose(k as f64, Vector3::new(1.0, 2.0, 1.0), 0.0).unwrap();
            for (axis, col) in axes.iter_mut().enumerate() {
                col.push(m.position[axis]);
            }
        }
        for col in &axes {
            let s = sample_std(col);
            assert!((0.019..=0.021).contains(&s), "std {s}");
        }
    }

    #[test]
    fn publish_count_follows_rate() {
        for rate in [20.0, 50.0, 30.0] {
            let mut src = PoseSource::new(quiet(rate), 0).unwrap();
            let dt = 0.005;
            let steps = (60.0 / dt) as usize;
            let count = (0..steps)
                .filter_map(|k| src.sample_pose(k as f64 * dt, Vector3::zeros(), 0.0))
                .count();
            assert!((count as f64 - rate * 60.0).abs() <= 1.0, "rate {rate}: {count}");
        }
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let run = |seed| {
            let mut src = PoseSource::new(SensorProfile::loam_like(), seed).unwrap();
            (0..2000)
                .filter_map(|k| src.sample_pose(k as f64 * 0.005, Vector3::new(0.0, 0.0, 5.0), 0.0))
                .map(|m| m.position)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn drift_variance_grows_linearly() {
        let density = 0.01;
        let horizon = 50.0;
        let seeds = 400;
        let mut acc = 0.0;
        for seed in 0..seeds {
            let mut profile = quiet(10.0);
            profile.drift_density = [density; 3];
            let mut src = PoseSource::new(profile, seed).unwrap();
            for k in 0..=(horizon * 10.0) as usize {
                src.sample_pose(k as f64 * 0.1, Vector3::zeros(), 0.0);
            }
            acc += src.drift_bias().norm_squared();
        }
        let expected = 3.0 * density * density * horizon;
        let mean = acc / seeds as f64;
        // |b|²/(σ²T) ~ χ²₃: variance 6 per sample.
        let band = 3.0 * (6.0 / seeds as f64).sqrt() * density * density * horizon;
        assert!((mean - expected).abs() <= band, "mean {mean}, expected {expected} ± {band}");
    }

    fn closure_profile() -> SensorProfile {
        SensorProfile { loop_closure: true, ..quiet(10.0) }
    }

    #[test]
    fn revisit_without_drift_emits_nothing() {
        let mut src = PoseSource::new(closure_profile(), 0).unwrap();
        assert!(src.maybe_loop_close(0.0, Vector3::zeros()).is_none());
        assert!(src.maybe_loop_close(40.0, Vector3::new(0.5, 0.0, 0.0)).is_none());
    }

    #[test]
    fn revisit_with_drift_cancels_bias_once() {
        let mut src = PoseSource::new(closure_profile(), 0).unwrap();
        src.maybe_loop_close(0.0, Vector3::zeros());
        src.maybe_loop_close(10.0, Vector3::new(20.0, 0.0, 0.0));
        src.set_drift_bias(Vector3::new(0.5, 0.0, 0.0));
        // Away from the old pose: no revisit.
        assert!(src.maybe_loop_close(35.0, Vector3::new(20.0, 0.0, 0.0)).is_none());
        let ev = src.maybe_loop_close(40.0, Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(ev.delta, Vector3::new(-0.5, 0.0, 0.0));
        assert_eq!(src.drift_bias(), Vector3::zeros());
        let m = src.sample_pose(40.0, Vector3::new(1.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(m.position, Vector3::new(1.0, 0.0, 0.0));
        // Still inside the same revisit: no second event.
        src.set_drift_bias(Vector3::new(0.4, 0.0, 0.0));
        assert!(src.maybe_loop_close(41.0, Vector3::new(1.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn scripted_events_override_revisit_logic() {
        let profile = SensorProfile { loop_closure: false, ..quiet(10.0) };
        let mut src = PoseSource::new(profile, 0).unwrap().with_scripted_events(vec![
            ScriptedLoopClosure { time: 5.0, delta: Some([0.0, 1.0, 0.0]) },
            ScriptedLoopClosure { time: 2.0, delta: None },
        ]);
        src.set_drift_bias(Vector3::new(0.3, 0.0, 0.0));
        assert!(src.maybe_loop_close(1.9, Vector3::zeros()).is_none());
        let first = src.maybe_loop_close(2.0, Vector3::new(50.0, 0.0, 0.0)).unwrap();
        assert_eq!(first.delta, Vector3::new(-0.3, 0.0, 0.0));
        assert!(src.maybe_loop_close(4.0, Vector3::zeros()).is_none());
        let second = src.maybe_loop_close(5.0, Vector3::zeros()).unwrap();
        assert_eq!(second.time, 5.0);
        assert_eq!(src.drift_bias(), Vector3::new(0.0, 1.0, 0.0));
    }

    fn raw_stream(step: Vector3, t_event: f64, rate: f64, end: f64) -> Vec<PoseMeasurement> {
        let n = (end * rate) as usize;
        (0..=n)
            .map(|k| {
                let t = k as f64 / rate;
                let position = if t >= t_event { step } else { Vector3::zeros() };
                PoseMeasurement { timestamp: t, position, yaw: 0.0 }
            })
            .collect()
    }

    #[test]
    fn smoother_is_continuous_and_decays() {
        let step = Vector3::new(1.0, 0.0, 0.0);
        let ev = LoopClosureEvent { time: 10.0, delta: step };
        let raw = raw_stream(step, 10.0, 50.0, 20.0);
        let out = smooth_step(&raw, &ev, 5.0);
        let at = |t: f64| out.iter().find(|m| (m.timestamp - t).abs() < 1e-9).unwrap();
        // The held offset cancels the step exactly at the event.
        assert_eq!(at(10.0).position, Vector3::zeros());
        let residual = at(15.0).position - step;
        assert!((residual.x.abs() - (-5.0f64).exp()).abs() < 1e-12);
        assert!(residual.x.abs() <= 0.007);
        let tau: f64 = 1.0;
        let bound = (1.0 - (-0.02 / tau).exp()) + 1e-12;
        let max_jump = out
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm())
            .fold(0.0, f64::max);
        assert!(max_jump <= bound, "jump {max_jump} > {bound}");
    }

    #[test]
    fn zero_window_passes_through() {
        let step = Vector3::new(0.0, 0.0, 2.0);
        let ev = LoopClosureEvent { time: 1.0, delta: step };
        let raw = raw_stream(step, 1.0, 20.0, 3.0);
        assert_eq!(smooth_step(&raw, &ev, 0.0), raw);
    }

    #[test]
    fn overlapping_events_superpose() {
        let mut s = StepSmoother::new(5.0);
        s.push(LoopClosureEvent { time: 0.0, delta: Vector3::new(1.0, 0.0, 0.0) });
        s.push(LoopClosureEvent { time: 1.0, delta: Vector3::new(0.0, 2.0, 0.0) });
        let off = s.offset(2.0);
        assert!((off.x + (-2.0f64).exp()).abs() < 1e-15);
        assert!((off.y + 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn noiseless_imu_is_exact() {
        let mut imu = Imu::new(ImuConfig::ideal(), 0).unwrap();
        let a = Vector3::new(0.3, -1.0, 2.0);
        assert_eq!(imu.sample_imu(0.0, a).acceleration, a);
    }

    #[test]
    fn imu_bias_and_noise_statistics() {
        let cfg = ImuConfig { noise_std: [0.1; 3], bias: [0.05, 0.0, 0.0], ..ImuConfig::default() };
        let mut imu = Imu::new(cfg, 5).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|k| imu.sample_imu(k as f64, Vector3::zeros()).acceleration.x).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.05).abs() <= 3.0 * 0.1 / 100.0, "mean {mean}");

        let ys: Vec<f64> = (0..100_000).map(|k| imu.sample_imu(k as f64, Vector3::zeros()).acceleration.y).collect();
        let s = sample_std(&ys);
        assert!((0.095..=0.105).contains(&s), "std {s}");
    }

    #[test]
    fn profile_validation() {
        let mut p = SensorProfile::carto_like();
        p.rate = 0.0;
        assert!(p.validate().is_err());
        let mut p = SensorProfile::carto_like();
        p.noise_std[1] = -0.1;
        assert!(p.validate().is_err());
        assert!(SensorProfile::builtin("loam-like").is_some());
        assert!(SensorProfile::builtin("nope").is_none());
    }
}
