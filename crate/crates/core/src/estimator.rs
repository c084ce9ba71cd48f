//! Nine-state constant-acceleration discrete Kalman filter.
//!
//! The state is ordered `[x, ẋ, ẍ, y, ẏ, ÿ, z, ż, z̈]`. Positions come from a
//! SLAM pose source and accelerations from an IMU; velocity is never measured
//! and is recovered through the kinematic coupling in the transition matrix.
//! The observation matrix keeps the full 9×9 shape with all-zero velocity rows,
//! so the velocity columns of the Kalman gain are exactly zero.

use std::collections::VecDeque;

use nalgebra::{Matrix3, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{config, ensure_finite, Error, Result};
use crate::pose_sources::{AccelMeasurement, PoseMeasurement};
use crate::Vector3;

pub const STATE_DIM: usize = 9;

pub type Matrix9 = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type Vector9 = SVector<f64, STATE_DIM>;

/// State indices never observed directly (the velocity slots).
pub const UNMEASURED_SLOTS: [usize; 3] = [1, 4, 7];

/// Index of the position slot for axis `axis` (0 = x, 1 = y, 2 = z).
pub const fn position_slot(axis: usize) -> usize {
    3 * axis
}

pub const fn velocity_slot(axis: usize) -> usize {
    3 * axis + 1
}

pub const fn acceleration_slot(axis: usize) -> usize {
    3 * axis + 2
}

/// Relative tolerance below which a Cholesky pivot of the innovation
/// covariance is treated as zero.
const SINGULAR_PIVOT_RTOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(pub Vector9);

impl StateVector {
    pub fn zeros() -> Self {
        Self(Vector9::zeros())
    }

    pub fn from_kinematics(position: Vector3, velocity: Vector3, acceleration: Vector3) -> Self {
        let mut v = Vector9::zeros();
        for axis in 0..3 {
            v[position_slot(axis)] = position[axis];
            v[velocity_slot(axis)] = velocity[axis];
            v[acceleration_slot(axis)] = acceleration[axis];
        }
        Self(v)
    }

    pub fn position(&self) -> Vector3 {
        Vector3::new(self.0[0], self.0[3], self.0[6])
    }

    pub fn velocity(&self) -> Vector3 {
        Vector3::new(self.0[1], self.0[4], self.0[7])
    }

    pub fn acceleration(&self) -> Vector3 {
        Vector3::new(self.0[2], self.0[5], self.0[8])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance(pub Matrix9);

impl Covariance {
    pub fn from_diagonal(diag: &[f64; STATE_DIM]) -> Self {
        Self(Matrix9::from_diagonal(&Vector9::from_column_slice(diag)))
    }

    pub fn identity() -> Self {
        Self(Matrix9::identity())
    }

    pub fn diagonal(&self) -> [f64; STATE_DIM] {
        let d = self.0.diagonal();
        std::array::from_fn(|i| d[i])
    }

    /// Largest absolute asymmetry `max |P − Pᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.symmetric_eigenvalues().min()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    fn symmetrized(m: Matrix9) -> Self {
        Self((m + m.transpose()) * 0.5)
    }
}

/// The 3×3 per-axis constant-acceleration block.
pub fn kinematic_block(ts: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, ts, 0.5 * ts * ts, 0.0, 1.0, ts, 0.0, 0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    ts: f64,
    f: Matrix9,
    q: Matrix9,
}

impl TransitionModel {
    pub fn new(ts: f64, q_diag: &[f64; STATE_DIM]) -> Result<Self> {
        if !(ts.is_finite() && ts > 0.0) {
            return Err(config(format!("sample time must be positive, got {ts}")));
        }
        if let Some(i) = q_diag.iter().position(|&q| !(q.is_finite() && q > 0.0)) {
            return Err(config(format!(
                "process noise diagonal entry {i} must be positive, got {}",
                q_diag[i]
            )));
        }
        let a = kinematic_block(ts);
        let mut f = Matrix9::zeros();
        for axis in 0..3 {
            f.fixed_view_mut::<3, 3>(3 * axis, 3 * axis).copy_from(&a);
        }
        let q = Matrix9::from_diagonal(&Vector9::from_column_slice(q_diag));
        Ok(Self { ts, f, q })
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn f(&self) -> &Matrix9 {
        &self.f
    }

    pub fn q(&self) -> &Matrix9 {
        &self.q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    h: Matrix9,
    r: Matrix9,
}

impl ObservationModel {
    /// Per-axis observation block: position and acceleration measured,
    /// velocity row zero.
    pub fn block() -> Matrix3<f64> {
        Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    }

    pub fn new(r_diag: &[f64; STATE_DIM]) -> Result<Self> {
        if let Some(i) = r_diag.iter().position(|&r| !(r.is_finite() && r > 0.0)) {
            return Err(config(format!(
                "measurement noise diagonal entry {i} must be positive, got {}",
                r_diag[i]
            )));
        }
        let b = Self::block();
        let mut h = Matrix9::zeros();
        for axis in 0..3 {
            h.fixed_view_mut::<3, 3>(3 * axis, 3 * axis).copy_from(&b);
        }
        let r = Matrix9::from_diagonal(&Vector9::from_column_slice(r_diag));
        Ok(Self { h, r })
    }

    /// Builds R from position and acceleration variances. The velocity slots
    /// are never observed; they get unit variance so S stays invertible.
    pub fn from_variances(position: Vector3, acceleration: Vector3) -> Result<Self> {
        let mut diag = [1.0; STATE_DIM];
        for axis in 0..3 {
            diag[position_slot(axis)] = position[axis];
            diag[acceleration_slot(axis)] = acceleration[axis];
        }
        Self::new(&diag)
    }

    pub fn h(&self) -> &Matrix9 {
        &self.h
    }

    pub fn r(&self) -> &Matrix9 {
        &self.r
    }
}

/// Measurement in state ordering: positions, zeros, accelerations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementVector(pub Vector9);

impl MeasurementVector {
    pub fn new(position: Vector3, acceleration: Vector3) -> Self {
        let StateVector(v) = StateVector::from_kinematics(position, Vector3::zeros(), acceleration);
        Self(v)
    }
}

pub fn predict(
    state: &StateVector,
    cov: &Covariance,
    model: &TransitionModel,
) -> Result<(StateVector, Covariance)> {
    if !state.is_finite() {
        return Err(Error::NonFinite("predict state"));
    }
    if !cov.is_finite() {
        return Err(Error::NonFinite("predict covariance"));
    }
    let f = &model.f;
    let x = f * state.0;
    let p = f * cov.0 * f.transpose() + model.q;
    Ok((StateVector(x), Covariance::symmetrized(p)))
}

/// Innovation covariance `S = H P Hᵀ + R`.
pub fn innovation_covariance(cov: &Covariance, obs: &ObservationModel) -> Matrix9 {
    obs.h * cov.0 * obs.h.transpose() + obs.r
}

/// Kalman gain `K = P Hᵀ S⁻¹`, rejecting a numerically singular `S`.
/// Cholesky pivots of S, each relative to its own diagonal entry: what is
/// left of S_ii after removing the part explained by earlier rows.
fn check_pivots(s: &Matrix9) -> Result<()> {
    let mut l = Matrix9::zeros();
    for i in 0..STATE_DIM {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            if i == j {
                let pivot = s[(i, i)] - dot;
                if !(pivot > SINGULAR_PIVOT_RTOL * s[(i, i)]) || !pivot.is_finite() {
                    return Err(Error::SingularInnovation { index: i, value: s[(i, i)] });
                }
                l[(i, i)] = pivot.sqrt();
            } else {
                l[(i, j)] = (s[(i, j)] - dot) / l[(j, j)];
            }
        }
    }
    Ok(())
}

pub fn kalman_gain(cov: &Covariance, obs: &ObservationModel) -> Result<Matrix9> {
    let s = innovation_covariance(cov, obs);
    check_pivots(&s)?;
    let chol = s
        .cholesky()
        .ok_or(Error::SingularInnovation { index: STATE_DIM - 1, value: s[(STATE_DIM - 1, STATE_DIM - 1)] })?;
    // K = P Hᵀ S⁻¹  ⇔  S Kᵀ = H P  (S and P symmetric)
    let hp = obs.h * cov.0;
    Ok(chol.solve(&hp).transpose())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub state: StateVector,
    pub cov: Covariance,
    /// False when the measurement was rejected and the prior returned.
    pub applied: bool,
}

pub fn correct(
    state: &StateVector,
    cov: &Covariance,
    z: &MeasurementVector,
    obs: &ObservationModel,
) -> Result<Posterior> {
    if !z.0.iter().all(|v| v.is_finite()) {
        return Ok(Posterior { state: *state, cov: *cov, applied: false });
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("correct state"));
    }
    if !cov.is_finite() {
        return Err(Error::NonFinite("correct covariance"));
    }
    let k = kalman_gain(cov, obs)?;
    let innovation = z.0 - obs.h * state.0;
    let x = state.0 + k * innovation;
    let p = (Matrix9::identity() - k * obs.h) * cov.0;
    Ok(Posterior { state: StateVector(x), cov: Covariance::symmetrized(p), applied: true })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// Base period; the filter is stepped once per IMU sample.
    pub ts: f64,
    /// Per-step process noise diagonal in state ordering.
    pub q_diag: [f64; STATE_DIM],
    /// Initial covariance diagonal.
    pub prior_diag: [f64; STATE_DIM],
    /// Position measurement variance per axis (m²).
    pub position_variance: [f64; 3],
    /// Acceleration measurement variance per axis ((m/s²)²).
    pub acceleration_variance: [f64; 3],
    /// Multiplier applied to R for a channel that has no fresh sample.
    pub hold_factor: f64,
}

/// Smallest measurement variance accepted; keeps R positive definite for
/// noiseless sensor profiles.
pub const MIN_MEASUREMENT_VARIANCE: f64 = 1e-8;

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            ts: 0.005,
            q_diag: block_diagonal([1e-4, 1e-3, 1e-2]),
            prior_diag: block_diagonal([1e-2, 1.0, 1.0]),
            position_variance: [0.02 * 0.02; 3],
            acceleration_variance: [0.05 * 0.05; 3],
            hold_factor: 1e6,
        }
    }
}

/// Repeats a `(position, velocity, acceleration)` triple over the three axes.
pub fn block_diagonal(block: [f64; 3]) -> [f64; STATE_DIM] {
    std::array::from_fn(|i| block[i % 3])
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        TransitionModel::new(self.ts, &self.q_diag)?;
        if let Some(i) = self.prior_diag.iter().position(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(config(format!("prior diagonal entry {i} must be non-negative")));
        }
        self.observation(false, false)?;
        if !(self.hold_factor >= 1e6) {
            return Err(config("hold factor must be at least 1e6"));
        }
        Ok(())
    }

    fn observation(&self, hold_position: bool, hold_acceleration: bool) -> Result<ObservationModel> {
        let pos_scale = if hold_position { self.hold_factor } else { 1.0 };
        let acc_scale = if hold_acceleration { self.hold_factor } else { 1.0 };
        let pos = Vector3::from_fn(|i, _| self.position_variance[i].max(MIN_MEASUREMENT_VARIANCE));
        let acc =
            Vector3::from_fn(|i, _| self.acceleration_variance[i].max(MIN_MEASUREMENT_VARIANCE));
        ObservationModel::from_variances(pos * pos_scale, acc * acc_scale)
    }
}

/// Bookkeeping for [`FusionFilter::fuse_step`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterCounters {
    pub predicts: u64,
    pub corrections: u64,
    pub poses_applied: u64,
    pub accels_applied: u64,
    pub dropped_out_of_order: u64,
    pub dropped_non_finite: u64,
    /// Messages that became due in the same step as a newer one.
    pub superseded: u64,
}

/// Multi-rate filter: one prediction per base period, one correction when any
/// measurement is due.
#[derive(Debug, Clone)]
pub struct FusionFilter {
    config: FilterConfig,
    transition: TransitionModel,
    observe_both: ObservationModel,
    observe_accel_only: ObservationModel,
    observe_pose_only: ObservationModel,
    state: StateVector,
    cov: Covariance,
    t0: f64,
    steps: u64,
    yaw: f64,
    last_pose_time: Option<f64>,
    last_accel_time: Option<f64>,
    pending_poses: VecDeque<PoseMeasurement>,
    pending_accels: VecDeque<AccelMeasurement>,
    counters: FilterCounters,
}

/// Messages stamped within this of the filter clock count as due.
const TIME_EPS: f64 = 1e-9;

impl FusionFilter {
    pub fn initialize(pose0: &PoseMeasurement, config: FilterConfig) -> Result<Self> {
        let mut values = pose0.position.as_slice().to_vec();
        values.extend([pose0.timestamp, pose0.yaw]);
        ensure_finite(&values, "initial pose").map_err(|_| config_err_nonfinite())?;
        config.validate()?;
        let transition = TransitionModel::new(config.ts, &config.q_diag)?;
        Ok(Self {
            observe_both: config.observation(false, false)?,
            observe_accel_only: config.observation(true, false)?,
            observe_pose_only: config.observation(false, true)?,
            transition,
            state: StateVector::from_kinematics(pose0.position, Vector3::zeros(), Vector3::zeros()),
            cov: Covariance::from_diagonal(&config.prior_diag),
            t0: pose0.timestamp,
            steps: 0,
            yaw: pose0.yaw,
            last_pose_time: Some(pose0.timestamp),
            last_accel_time: None,
            pending_poses: VecDeque::new(),
            pending_accels: VecDeque::new(),
            counters: FilterCounters::default(),
            config,
        })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn covariance(&self) -> &Covariance {
        &self.cov
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn ts(&self) -> f64 {
        self.transition.ts()
    }

    /// Filter clock: initialization time plus elapsed base periods.
    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.transition.ts()
    }

    /// Yaw of the latest applied pose (not filtered).
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn counters(&self) -> FilterCounters {
        self.counters
    }

    pub fn last_pose_time(&self) -> Option<f64> {
        self.last_pose_time
    }

    pub fn last_accel_time(&self) -> Option<f64> {
        self.last_accel_time
    }

    /// Advances the filter by one base period and applies any due
    /// measurements. Messages stamped in the future are held until due; stale
    /// ones (not newer than the last applied message) are dropped.
    pub fn fuse_step(
        &mut self,
        pose: Option<PoseMeasurement>,
        accel: Option<AccelMeasurement>,
    ) -> Result<()> {
        if let Some(p) = pose {
            self.enqueue_pose(p);
        }
        if let Some(a) = accel {
            self.enqueue_accel(a);
        }

        let (x, p) = predict(&self.state, &self.cov, &self.transition)?;
        self.state = x;
        self.cov = p;
        self.steps += 1;
        self.counters.predicts += 1;

        let now = self.time();
        let pose = take_latest_due(&mut self.pending_poses, now, |m| m.timestamp, &mut self.counters);
        let accel =
            take_latest_due(&mut self.pending_accels, now, |m| m.timestamp, &mut self.counters);

        let predicted = self.state;
        let (position, obs) = match (&pose, &accel) {
            (None, None) => return Ok(()),
            (Some(p), Some(_)) => (p.position, &self.observe_both),
            (Some(p), None) => (p.position, &self.observe_pose_only),
            // Positions are held at the prediction so the innovation is zero.
            (None, Some(_)) => (predicted.position(), &self.observe_accel_only),
        };
        let acceleration = accel.as_ref().map_or(predicted.acceleration(), |a| a.acceleration);
        let z = MeasurementVector::new(position, acceleration);

        let posterior = correct(&self.state, &self.cov, &z, obs)?;
        if !posterior.applied {
            self.counters.dropped_non_finite += 1;
            return Ok(());
        }
        self.state = posterior.state;
        self.cov = posterior.cov;
        self.counters.corrections += 1;
        if let Some(p) = pose {
            self.counters.poses_applied += 1;
            self.last_pose_time = Some(p.timestamp);
            if p.yaw.is_finite() {
                self.yaw = p.yaw;
            }
        }
        if let Some(a) = accel {
            self.counters.accels_applied += 1;
            self.last_accel_time = Some(a.timestamp);
        }
        Ok(())
    }

    fn enqueue_pose(&mut self, p: PoseMeasurement) {
        let newest = self.pending_poses.back().map(|m| m.timestamp).or(self.last_pose_time);
        if newest.is_some_and(|t| p.timestamp <= t) {
            self.counters.dropped_out_of_order += 1;
        } else {
            self.pending_poses.push_back(p);
        }
    }

    fn enqueue_accel(&mut self, a: AccelMeasurement) {
        let newest = self.pending_accels.back().map(|m| m.timestamp).or(self.last_accel_time);
        if newest.is_some_and(|t| a.timestamp <= t) {
            self.counters.dropped_out_of_order += 1;
        } else {
            self.pending_accels.push_back(a);
        }
    }
}

fn config_err_nonfinite() -> Error {
    config("initial pose must be finite")
}

fn take_latest_due<M>(
    queue: &mut VecDeque<M>,
    now: f64,
    stamp: impl Fn(&M) -> f64,
    counters: &mut FilterCounters,
) -> Option<M> {
    let mut latest = None;
    while queue.front().is_some_and(|m| stamp(m) <= now + TIME_EPS) {
        if latest.replace(queue.pop_front()?).is_some() {
            counters.superseded += 1;
        }
    }
    latest
}
