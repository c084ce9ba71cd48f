//! Reference generators: per-axis step sequences, constrained upward helices,
//! straight moves, and the takeoff/landing plans that bracket every scenario.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{wrap_angle, Axis, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub position: Vector3,
    pub velocity: Vector3,
    pub acceleration: Vector3,
    pub yaw: f64,
}

impl TrajectoryPoint {
    pub fn hold(time: f64, position: Vector3, yaw: f64) -> Self {
        Self { time, position, velocity: Vector3::zeros(), acceleration: Vector3::zeros(), yaw }
    }
}

/// A time-parameterized reference.
pub trait Reference {
    fn duration(&self) -> f64;

    /// Point at time `t` from the start; clamped to `[0, duration]`.
    fn sample(&self, t: f64) -> TrajectoryPoint;

    /// Uniformly sampled stream including both endpoints.
    fn stream(&self, dt: f64) -> Vec<TrajectoryPoint> {
        let n = (self.duration() / dt).round() as usize;
        (0..=n).map(|k| self.sample(k as f64 * dt)).collect()
    }
}

/// Rest-to-rest trapezoidal speed profile over a distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidProfile {
    distance: f64,
    peak_speed: f64,
    accel: f64,
    t_accel: f64,
    t_cruise: f64,
}

impl TrapezoidProfile {
    pub fn new(distance: f64, max_speed: f64, max_accel: f64) -> Result<Self> {
        if !(distance.is_finite() && distance >= 0.0) {
            return Err(Error::Precondition(format!("profile distance {distance} must be >= 0")));
        }
        if !(max_speed > 0.0 && max_accel > 0.0 && max_speed.is_finite() && max_accel.is_finite()) {
            return Err(Error::Precondition("profile limits must be positive".into()));
        }
        let accel_distance = max_speed * max_speed / max_accel;
        let (peak_speed, t_cruise) = if accel_distance >= distance {
            ((distance * max_accel).sqrt(), 0.0)
        } else {
            (max_speed, (distance - accel_distance) / max_speed)
        };
        Ok(Self { distance, peak_speed, accel: max_accel, t_accel: peak_speed / max_accel, t_cruise })
    }

    pub fn duration(&self) -> f64 {
        2.0 * self.t_accel + self.t_cruise
    }

    pub fn peak_speed(&self) -> f64 {
        self.peak_speed
    }

    pub fn accel(&self) -> f64 {
        self.accel
    }

    /// Times where the acceleration switches.
    pub fn switch_times(&self) -> [f64; 2] {
        [self.t_accel, self.t_accel + self.t_cruise]
    }

    /// `(distance, speed, acceleration)` at time `t`.
    pub fn sample(&self, t: f64) -> (f64, f64, f64) {
        let t = t.clamp(0.0, self.duration());
        let a = self.accel;
        let t1 = self.t_accel;
        let t2 = t1 + self.t_cruise;
        if t < t1 {
            (0.5 * a * t * t, a * t, a)
        } else if t < t2 {
            (0.5 * a * t1 * t1 + self.peak_speed * (t - t1), self.peak_speed, 0.0)
        } else if t < self.duration() {
            let tr = self.duration() - t;
            (self.distance - 0.5 * a * tr * tr, a * tr, -a)
        } else {
            (self.distance, 0.0, 0.0)
        }
    }
}

/// Piecewise-constant position steps on one axis about a hold point.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSequence {
    pub axis: Axis,
    pub amplitude: f64,
    pub hold_time: f64,
    pub repetitions: usize,
    pub hold_point: Vector3,
    pub yaw: f64,
}

/// One reference step, for per-step metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub axis: Axis,
    /// Onset time.
    pub time: f64,
    pub from: f64,
    pub to: f64,
    /// End of the hold window after the step.
    pub end: f64,
}

impl StepSequence {
    pub fn new(
        axis: Axis,
        amplitude: f64,
        hold_time: f64,
        repetitions: usize,
        hold_point: Vector3,
    ) -> Result<Self> {
        if amplitude == 0.0 || !amplitude.is_finite() {
            return Err(Error::Precondition("step amplitude must be non-zero".into()));
        }
        if !(hold_time > 0.0 && hold_time.is_finite()) {
            return Err(Error::Precondition("step hold time must be positive".into()));
        }
        if repetitions == 0 {
            return Err(Error::Precondition("at least one step repetition is required".into()));
        }
        Ok(Self { axis, amplitude, hold_time, repetitions, hold_point, yaw: 0.0 })
    }

    /// Offsets from the hold point: 0, +A, −A, … , +A, −A, 0.
    pub fn levels(&self) -> Vec<f64> {
        let mut levels = vec![0.0];
        for _ in 0..self.repetitions {
            levels.push(self.amplitude);
            levels.push(-self.amplitude);
        }
        levels.push(0.0);
        levels
    }

    pub fn steps(&self) -> Vec<StepEvent> {
        let base = self.hold_point[self.axis.index()];
        self.levels()
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let time = (i + 1) as f64 * self.hold_time;
                StepEvent { axis: self.axis, time, from: base + w[0], to: base + w[1], end: time + self.hold_time }
            })
            .collect()
    }
}

impl Reference for StepSequence {
    fn duration(&self) -> f64 {
        self.levels().len() as f64 * self.hold_time
    }

    fn sample(&self, t: f64) -> TrajectoryPoint {
        let levels = self.levels();
        let t = t.clamp(0.0, self.duration());
        let i = ((t / self.hold_time).floor() as usize).min(levels.len() - 1);
        let mut position = self.hold_point;
        position[self.axis.index()] += levels[i];
        TrajectoryPoint::hold(t, position, self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum YawMode {
    #[default]
    Fixed,
    Tangent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HelixSpec {
    /// Horizontal center (x, y), m.
    pub center: [f64; 2],
    pub radius: f64,
    pub climb: f64,
    pub start_altitude: f64,
    pub turns: f64,
    /// Per-axis speed limit, m/s.
    pub max_velocity: f64,
    /// Per-axis acceleration limit, m/s².
    pub max_acceleration: f64,
    pub yaw_mode: YawMode,
}

impl Default for HelixSpec {
    fn default() -> Self {
        Self::slow()
    }
}

impl HelixSpec {
    pub fn slow() -> Self {
        Self {
            center: [0.0, 0.0],
            radius: 2.5,
            climb: 8.0,
            start_altitude: 1.0,
            turns: 3.0,
            max_velocity: 1.0,
            max_acceleration: 0.5,
            yaw_mode: YawMode::Fixed,
        }
    }

    /// Twice the slow variant's limits on the same geometry.
    pub fn fast() -> Self {
        Self { max_velocity: 2.0, max_acceleration: 1.0, ..Self::slow() }
    }

    pub fn start_point(&self) -> Vector3 {
        Vector3::new(self.center[0] + self.radius, self.center[1], self.start_altitude)
    }
}

/// Upward helix with a shared trapezoidal profile on the winding angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Helix {
    spec: HelixSpec,
    profile: TrapezoidProfile,
    total_angle: f64,
}

impl Helix {
    pub fn new(spec: HelixSpec) -> Result<Self> {
        let fields = [
            ("radius", spec.radius),
            ("climb", spec.climb),
            ("turns", spec.turns),
            ("max_velocity", spec.max_velocity),
            ("max_acceleration", spec.max_acceleration),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Infeasible(format!("helix {name} must be positive, got {v}")));
            }
        }
        let total_angle = TAU * spec.turns;
        let r = spec.radius;
        let vz_per_rad = spec.climb / total_angle;
        let (vs, as_) = (spec.max_velocity, spec.max_acceleration);

        // Centripetal r·ω² and tangential r·α share the per-axis budget.
        let omega_cap = (vs / r).min(vs / vz_per_rad).min((as_ / r).sqrt());
        let alpha_for = |omega: f64| ((as_ - r * omega * omega) / r).min(as_ / vz_per_rad);
        let time_for = |omega: f64| {
            let alpha = alpha_for(omega);
            if !(alpha > 0.0) {
                return f64::INFINITY;
            }
            TrapezoidProfile::new(total_angle, omega, alpha).map_or(f64::INFINITY, |p| p.duration())
        };

        let (mut lo, mut hi) = (0.0, omega_cap);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if time_for(m1) <= time_for(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let omega = 0.5 * (lo + hi);
        let alpha = alpha_for(omega);
        if !(omega > 0.0 && alpha > 0.0 && time_for(omega).is_finite()) {
            return Err(Error::Infeasible("no speed profile satisfies the acceleration limit".into()));
        }
        let profile = TrapezoidProfile::new(total_angle, omega, alpha)?;
        Ok(Self { spec, profile, total_angle })
    }

    pub fn spec(&self) -> &HelixSpec {
        &self.spec
    }

    pub fn profile(&self) -> &TrapezoidProfile {
        &self.profile
    }

    pub fn end_point(&self) -> Vector3 {
        self.sample(self.duration()).position
    }
}

impl Reference for Helix {
    fn duration(&self) -> f64 {
        self.profile.duration()
    }

    fn sample(&self, t: f64) -> TrajectoryPoint {
        let t = t.clamp(0.0, self.duration());
        let (theta, w, alpha) = self.profile.sample(t);
        let r = self.spec.radius;
        let k = self.spec.climb / self.total_angle;
        let (s, c) = theta.sin_cos();
        let [cx, cy] = self.spec.center;
        let position = Vector3::new(cx + r * c, cy + r * s, self.spec.start_altitude + k * theta);
        let velocity = Vector3::new(-r * s * w, r * c * w, k * w);
        let acceleration = Vector3::new(
            -r * c * w * w - r * s * alpha,
            -r * s * w * w + r * c * alpha,
            k * alpha,
        );
        let yaw = match self.spec.yaw_mode {
            YawMode::Fixed => 0.0,
            YawMode::Tangent => wrap_angle(theta + FRAC_PI_2),
        };
        TrajectoryPoint { time: t, position, velocity, acceleration, yaw }
    }
}

/// Straight rest-to-rest move.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMove {
    from: Vector3,
    direction: Vector3,
    profile: TrapezoidProfile,
    yaw: f64,
}

impl LineMove {
    pub fn new(from: Vector3, to: Vector3, max_speed: f64, max_accel: f64, yaw: f64) -> Result<Self> {
        let d = to - from;
        let distance = d.norm();
        let direction = if distance > 0.0 { d / distance } else { Vector3::zeros() };
        Ok(Self { from, direction, profile: TrapezoidProfile::new(distance, max_speed, max_accel)?, yaw })
    }
}

impl Reference for LineMove {
    fn duration(&self) -> f64 {
        self.profile.duration()
    }

    fn sample(&self, t: f64) -> TrajectoryPoint {
        let (s, v, a) = self.profile.sample(t);
        TrajectoryPoint {
            time: t.clamp(0.0, self.duration()),
            position: self.from + self.direction * s,
            velocity: self.direction * v,
            acceleration: self.direction * a,
            yaw: self.yaw,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Hold { position: Vector3, yaw: f64, duration: f64 },
    Line(LineMove),
    Helix(Helix),
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match self {
            Segment::Hold { duration, .. } => *duration,
            Segment::Line(m) => m.duration(),
            Segment::Helix(h) => h.duration(),
        }
    }

    fn sample(&self, t: f64) -> TrajectoryPoint {
        match self {
            Segment::Hold { position, yaw, .. } => TrajectoryPoint::hold(t, *position, *yaw),
            Segment::Line(m) => m.sample(t),
            Segment::Helix(h) => h.sample(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Takeoff,
    Main,
    Landing,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Takeoff => "takeoff",
            Phase::Main => "main",
            Phase::Landing => "landing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "takeoff" => Some(Phase::Takeoff),
            "main" => Some(Phase::Main),
            "landing" => Some(Phase::Landing),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PlannedSegment {
    start: f64,
    phase: Phase,
    segment: Segment,
}

/// Limits for the scripted vertical takeoff and landing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerticalLimits {
    pub speed: f64,
    pub accel: f64,
    /// Hold on the ground before takeoff, s.
    pub ground_hold: f64,
    /// Hold after reaching altitude and after landing, s.
    pub settle: f64,
}

impl Default for VerticalLimits {
    fn default() -> Self {
        Self { speed: 0.5, accel: 0.5, ground_hold: 1.0, settle: 5.0 }
    }
}

/// A full mission: takeoff, main phase, landing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plan {
    segments: Vec<PlannedSegment>,
    steps: Vec<StepEvent>,
}

impl Plan {
    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.start + s.segment.duration())
    }

    pub fn end_point(&self) -> Vector3 {
        self.sample(self.duration()).position
    }

    fn push(&mut self, phase: Phase, segment: Segment) {
        let start = self.duration();
        self.segments.push(PlannedSegment { start, phase, segment });
    }

    fn locate(&self, t: f64) -> Option<&PlannedSegment> {
        let i = self.segments.partition_point(|s| s.start <= t);
        self.segments.get(i.checked_sub(1)?)
    }

    pub fn sample(&self, t: f64) -> TrajectoryPoint {
        let t = t.clamp(0.0, self.duration());
        match self.locate(t) {
            Some(s) => TrajectoryPoint { time: t, ..s.segment.sample(t - s.start) },
            None => TrajectoryPoint::hold(t, Vector3::zeros(), 0.0),
        }
    }

    pub fn phase(&self, t: f64) -> Phase {
        self.locate(t.clamp(0.0, self.duration())).map_or(Phase::Takeoff, |s| s.phase)
    }

    /// Step events of a step mission, in absolute time.
    pub fn steps(&self) -> &[StepEvent] {
        &self.steps
    }

    /// `[start, end)` of the main phase.
    pub fn main_window(&self) -> (f64, f64) {
        let mains: Vec<_> = self.segments.iter().filter(|s| s.phase == Phase::Main).collect();
        match (mains.first(), mains.last()) {
            (Some(a), Some(b)) => (a.start, b.start + b.segment.duration()),
            _ => (0.0, 0.0),
        }
    }

    fn takeoff(ground: Vector3, to: Vector3, limits: &VerticalLimits) -> Result<Self> {
        let mut plan = Plan::default();
        plan.push(Phase::Takeoff, Segment::Hold { position: ground, yaw: 0.0, duration: limits.ground_hold });
        let above = Vector3::new(ground.x, ground.y, to.z);
        plan.push(Phase::Takeoff, Segment::Line(LineMove::new(ground, above, limits.speed, limits.accel, 0.0)?));
        if (to - above).norm() > 0.0 {
            plan.push(Phase::Takeoff, Segment::Line(LineMove::new(above, to, limits.speed, limits.accel, 0.0)?));
        }
        plan.push(Phase::Takeoff, Segment::Hold { position: to, yaw: 0.0, duration: limits.settle });
        Ok(plan)
    }

    fn land(&mut self, limits: &VerticalLimits) -> Result<()> {
        let top = self.end_point();
        let ground = Vector3::new(top.x, top.y, 0.0);
        self.push(Phase::Landing, Segment::Hold { position: top, yaw: 0.0, duration: limits.settle });
        self.push(Phase::Landing, Segment::Line(LineMove::new(top, ground, limits.speed, limits.accel, 0.0)?));
        self.push(Phase::Landing, Segment::Hold { position: ground, yaw: 0.0, duration: limits.settle });
        Ok(())
    }

    /// Takeoff to `hover`, step sequences on each axis in turn, land.
    pub fn step_mission(
        hover: Vector3,
        axes: &[Axis],
        amplitude: f64,
        hold_time: f64,
        repetitions: usize,
        limits: &VerticalLimits,
    ) -> Result<Self> {
        let ground = Vector3::new(hover.x, hover.y, 0.0);
        let mut plan = Self::takeoff(ground, hover, limits)?;
        for &axis in axes {
            let seq = StepSequence::new(axis, amplitude, hold_time, repetitions, hover)?;
            let offset = plan.duration();
            plan.steps.extend(seq.steps().into_iter().map(|s| StepEvent {
                time: s.time + offset,
                end: s.end + offset,
                ..s
            }));
            for level in seq.levels() {
                let mut position = hover;
                position[axis.index()] += level;
                plan.push(Phase::Main, Segment::Hold { position, yaw: 0.0, duration: hold_time });
            }
        }
        plan.land(limits)?;
        Ok(plan)
    }

    pub fn helix_mission(spec: HelixSpec, limits: &VerticalLimits) -> Result<Self> {
        let helix = Helix::new(spec)?;
        let start = helix.spec().start_point();
        let mut plan = Self::takeoff(Vector3::new(start.x, start.y, 0.0), start, limits)?;
        plan.push(Phase::Main, Segment::Helix(helix));
        plan.land(limits)?;
        Ok(plan)
    }

    /// Visits `waypoints` in order `repeat` times with straight moves,
    /// holding `dwell` seconds at each.
    pub fn waypoint_mission(
        waypoints: &[Vector3],
        dwell: f64,
        repeat: usize,
        max_speed: f64,
        max_accel: f64,
        limits: &VerticalLimits,
    ) -> Result<Self> {
        let first = *waypoints.first().ok_or(Error::EmptyInput("waypoints"))?;
        let mut plan = Self::takeoff(Vector3::new(first.x, first.y, 0.0), first, limits)?;
        let mut here = first;
        for _ in 0..repeat.max(1) {
            for &wp in waypoints {
                if (wp - here).norm() > 0.0 {
                    plan.push(Phase::Main, Segment::Line(LineMove::new(here, wp, max_speed, max_accel, 0.0)?));
                }
                if dwell > 0.0 {
                    plan.push(Phase::Main, Segment::Hold { position: wp, yaw: 0.0, duration: dwell });
                }
                here = wp;
            }
        }
        plan.land(limits)?;
        Ok(plan)
    }

    /// Absolute times where the reference acceleration may jump.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for s in &self.segments {
            out.push(s.start);
            match &s.segment {
                Segment::Line(m) => out.extend(m.profile.switch_times().map(|t| s.start + t)),
                Segment::Helix(h) => out.extend(h.profile.switch_times().map(|t| s.start + t)),
                Segment::Hold { .. } => {}
            }
        }
        out.push(self.duration());
        out
    }
}

impl Reference for Plan {
    fn duration(&self) -> f64 {
        Plan::duration(self)
    }

    fn sample(&self, t: f64) -> TrajectoryPoint {
        Plan::sample(self, t)
    }
}

/// Stream form of [`StepSequence`].
pub fn step_sequence(
    axis: Axis,
    amplitude: f64,
    hold_time: f64,
    repetitions: usize,
    hold_point: Vector3,
    dt: f64,
) -> Result<Vec<TrajectoryPoint>> {
    Ok(StepSequence::new(axis, amplitude, hold_time, repetitions, hold_point)?.stream(dt))
}

/// Stream form of [`Helix`].
pub fn helix(spec: HelixSpec, dt: f64) -> Result<Vec<TrajectoryPoint>> {
    Ok(Helix::new(spec)?.stream(dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_levels_alternate() {
        let seq = StepSequence::new(Axis::X, 1.0, 15.0, 2, Vector3::new(3.0, 4.0, 2.0)).unwrap();
        let xs: Vec<f64> = (0..6).map(|i| seq.sample(i as f64 * 15.0 + 1.0).position.x).collect();
        assert_eq!(xs, vec![3.0, 4.0, 2.0, 4.0, 2.0, 3.0]);
        for p in seq.stream(0.1) {
            assert_eq!(p.position.y, 4.0);
            assert_eq!(p.position.z, 2.0);
            assert_eq!(p.velocity, Vector3::zeros());
            assert_eq!(p.acceleration, Vector3::zeros());
        }
        let steps = seq.steps();
        assert_eq!(steps.len(), 5);
        assert_eq!((steps[1].from, steps[1].to), (4.0, 2.0));
    }

    #[test]
    fn zero_amplitude_rejected() {
        assert!(matches!(
            StepSequence::new(Axis::Y, 0.0, 15.0, 2, Vector3::zeros()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn trapezoid_reaches_distance() {
        let p = TrapezoidProfile::new(10.0, 2.0, 1.0).unwrap();
        assert_eq!(p.duration(), 2.0 * 2.0 + 3.0);
        assert_eq!(p.sample(p.duration()), (10.0, 0.0, 0.0));
        let tri = TrapezoidProfile::new(1.0, 5.0, 1.0).unwrap();
        assert!((tri.peak_speed() - 1.0).abs() < 1e-15);
        assert!((tri.sample(tri.duration()).0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn helix_respects_limits() {
        for spec in [HelixSpec::slow(), HelixSpec::fast()] {
            let dt = 0.01;
            for p in helix(spec.clone(), dt).unwrap() {
                assert!(p.velocity.amax() <= spec.max_velocity + 1e-9);
                assert!(p.acceleration.amax() <= spec.max_acceleration + 1e-9);
            }
        }
    }

    #[test]
    fn fast_helix_is_quicker() {
        let slow = Helix::new(HelixSpec::slow()).unwrap();
        let fast = Helix::new(HelixSpec::fast()).unwrap();
        assert!(fast.duration() < slow.duration());
    }

    #[test]
    fn helix_geometry() {
        let h = Helix::new(HelixSpec::slow()).unwrap();
        let start = h.sample(0.0);
        assert!((start.position - HelixSpec::slow().start_point()).norm() < 1e-12);
        let end = h.end_point();
        assert!((end.z - 9.0).abs() < 1e-9);
        assert!((end.x - 2.5).abs() < 1e-9 && end.y.abs() < 1e-9);
    }

    #[test]
    fn infeasible_helix_rejected() {
        let spec = HelixSpec { max_acceleration: 0.0, ..HelixSpec::slow() };
        assert!(matches!(Helix::new(spec), Err(Error::Infeasible(_))));
        let spec = HelixSpec { radius: -1.0, ..HelixSpec::slow() };
        assert!(Helix::new(spec).is_err());
    }

    #[test]
    fn tangent_yaw_follows_motion() {
        let spec = HelixSpec { yaw_mode: YawMode::Tangent, ..HelixSpec::slow() };
        let h = Helix::new(spec).unwrap();
        let p = h.sample(h.duration() / 2.0);
        let heading = p.velocity.y.atan2(p.velocity.x);
        assert!(wrap_angle(heading - p.yaw).abs() < 1e-9);
    }

    #[test]
    fn step_mission_brackets_with_takeoff_and_landing() {
        let hover = Vector3::new(0.0, 0.0, 2.0);
        let plan = Plan::step_mission(hover, &Axis::ALL, 1.0, 15.0, 2, &VerticalLimits::default()).unwrap();
        assert_eq!(plan.steps().len(), 15);
        assert_eq!(plan.sample(0.0).position, Vector3::zeros());
        assert_eq!(plan.end_point(), Vector3::zeros());
        assert_eq!(plan.phase(0.0), Phase::Takeoff);
        assert_eq!(plan.phase(plan.duration()), Phase::Landing);
        let s = plan.steps()[0];
        assert_eq!(plan.phase(s.time), Phase::Main);
        assert_eq!(plan.sample(s.time + 0.1).position.x, 1.0);
        assert_eq!(plan.sample(s.time - 0.1).position.x, 0.0);
    }

    #[test]
    fn plan_is_c1_continuous() {
        let plan = Plan::helix_mission(HelixSpec::slow(), &VerticalLimits::default()).unwrap();
        let dt = 1e-3;
        let pts = plan.stream(dt);
        for w in pts.windows(2) {
            assert!((w[1].position - w[0].position).norm() <= 2.0 * dt + 1e-12);
            assert!((w[1].velocity - w[0].velocity).norm() <= 1.5 * dt + 1e-12);
        }
    }
}
