//! Scenario orchestration: one fixed-step master loop at the plant rate with
//! the pose source, IMU, filter and controller scheduled on its ticks.
//!
//! Per tick, in order: reference sample, loop-closure check, pose publish
//! (smoothed, then delayed by the profile latency), IMU sample and filter
//! step, controller update, log row, plant step. The IMU, filter and
//! controller share the filter period, a whole multiple of the plant step.

mod config;
mod record;
mod report;
mod suite;

use std::collections::VecDeque;
use std::path::Path;

pub use config::{ReferenceSpec, ResolvedScenario, ScenarioConfig, SensorSpec};
pub use record::{Row, RunRecord};
pub use report::{compute_report, detect_steps, step_results, AxisReport, RunReport, RunStatus};
pub use suite::{run_suite, Stat, SuiteConfig, SuiteReport, SuiteRow, SuiteSummary};

use crate::control::{AttitudeCommand, CascadeController};
use crate::error::{Error, Result};
use crate::estimator::FusionFilter;
use crate::pose_sources::{AccelMeasurement, Imu, PoseMeasurement, PoseSource, StepSmoother};
use crate::vehicle::{self, VehicleState};
use crate::Vector3;

/// Position magnitude beyond which a run is aborted as diverged, m.
pub const SAFETY_BOUND: f64 = 1e3;

const TICK_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub report: RunReport,
}

struct Delayed {
    due: f64,
    pose: PoseMeasurement,
}

fn metadata(s: &ResolvedScenario) -> Vec<(&'static str, String)> {
    let cfg = &s.config;
    let mut meta = vec![
        ("label", cfg.label()),
        ("seed", cfg.seed.to_string()),
        ("profile", s.profile.name.clone()),
        ("pose_rate_hz", s.profile.rate.to_string()),
        ("latency_s", s.profile.latency.to_string()),
        ("degradation_altitude", s.profile.degradation_altitude.to_string()),
        ("reference", cfg.reference.kind().to_string()),
        ("dt", cfg.dt.to_string()),
        ("filter_ts", cfg.filter.ts.to_string()),
        ("attitude_time_constant", cfg.plant.attitude_time_constant.to_string()),
        ("duration", s.duration.to_string()),
    ];
    if let ReferenceSpec::Steps { hover, amplitude, hold_time, .. } = &cfg.reference {
        meta.push(("hover_altitude", hover[2].to_string()));
        meta.push(("step_amplitude", amplitude.to_string()));
        meta.push(("step_hold_time", hold_time.to_string()));
    }
    meta
}

/// Runs one scenario to completion or divergence. Nothing is written to disk
/// here; see [`run_and_save`].
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let scenario = cfg.resolve()?;
    let record = simulate(&scenario)?;
    let report = compute_report(&record)?;
    Ok(RunOutcome { record, report })
}

/// Runs a scenario and, when an output directory is configured, writes the
/// log, the metrics and the plot files there.
pub fn run_and_save(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let outcome = run_scenario(cfg)?;
    if let Some(dir) = &cfg.output_dir {
        save_outcome(&outcome, dir)?;
    }
    Ok(outcome)
}

pub fn save_outcome(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    outcome.record.save(&dir.join("run.csv"))?;
    outcome.report.write_csv(std::fs::File::create(dir.join("metrics.csv"))?)?;
    outcome.record.write_stream_files(&dir.join("streams"))?;
    outcome.record.write_plot_files(&dir.join("plots"))
}

fn simulate(s: &ResolvedScenario) -> Result<RunRecord> {
    let cfg = &s.config;
    let dt = cfg.dt;
    let ticks = (s.duration / dt).round() as u64;
    let hover = cfg.plant.hover_thrust();

    let mut source = PoseSource::new(s.profile.clone(), cfg.seed)?;
    if !cfg.loop_closure_events.is_empty() {
        source = source.with_scripted_events(cfg.loop_closure_events.clone());
    }
    let mut smoother = StepSmoother::new(s.profile.smoothing_window);
    let mut imu = Imu::new(cfg.imu.clone(), cfg.seed)?;
    let mut controller = CascadeController::new(cfg.controller.clone());

    let start = s.plan.sample(0.0);
    let mut truth = VehicleState::at_rest(start.position);
    let mut truth_accel = Vector3::zeros();

    let mut meta = metadata(s);
    let mut rows = Vec::with_capacity(ticks as usize + 1);
    let mut in_flight: VecDeque<Delayed> = VecDeque::new();
    let mut filter: Option<FusionFilter> = None;
    let mut pending_pose: Option<PoseMeasurement> = None;
    let mut latest_raw = PoseMeasurement { timestamp: f64::NAN, position: Vector3::repeat(f64::NAN), yaw: 0.0 };
    let mut latest_smooth = latest_raw;
    let mut latest_imu = AccelMeasurement { timestamp: f64::NAN, acceleration: Vector3::repeat(f64::NAN) };
    let mut diverged = false;
    let mut cmd = AttitudeCommand::default();

    for k in 0..=ticks {
        let t = k as f64 * dt;
        let reference = s.plan.sample(t);

        source.set_noise_scale(if t < cfg.warmup { cfg.warmup_noise_scale } else { 1.0 });
        if let Some(event) = source.maybe_loop_close(t, truth.position) {
            smoother.push(event);
        }
        if let Some(raw) = source.sample_pose(t, truth.position, truth.yaw) {
            let smooth = if s.profile.smoothing_window > 0.0 { smoother.apply(raw) } else { raw };
            latest_raw = raw;
            latest_smooth = smooth;
            match filter {
                // The map exists before flight, so the first pose initializes
                // the estimate on the spot.
                None => filter = Some(FusionFilter::initialize(&smooth, cfg.filter.clone())?),
                Some(_) => in_flight.push_back(Delayed { due: t + s.profile.latency, pose: smooth }),
            }
        }
        while in_flight.front().is_some_and(|d| d.due <= t + TICK_EPS) {
            // Several deliveries between filter steps: the newest wins.
            pending_pose = in_flight.pop_front().map(|d| d.pose);
        }

        let filter_tick = k > 0 && k % s.filter_ratio == 0;
        let mut pose_stamp = f64::NAN;
        let mut imu_stamp = f64::NAN;
        if let (Some(f), true) = (filter.as_mut(), filter_tick) {
            latest_imu = imu.sample_imu(t, truth_accel);
            imu_stamp = t;
            let pose = pending_pose.take();
            pose_stamp = pose.map_or(f64::NAN, |p| p.timestamp);
            if let Err(e) = f.fuse_step(pose, Some(latest_imu)) {
                match e {
                    Error::NonFinite(_) | Error::SingularInnovation { .. } => diverged = true,
                    other => return Err(other),
                }
            }
        }

        // The controller runs on fresh estimates and holds its command between them.
        match &filter {
            Some(f) if !diverged && filter_tick => {
                cmd = controller.update(&reference, f.state(), f.yaw(), hover, cfg.filter.ts);
            }
            Some(_) if !diverged => {}
            _ => cmd = AttitudeCommand::default(),
        }

        rows.push(make_row(t, s.plan.phase(t), &truth, &latest_raw, &latest_smooth, pose_stamp, imu_stamp, &latest_imu, filter.as_ref(), &reference, &cmd));

        if diverged || k == ticks {
            break;
        }
        let next = vehicle::step(&truth, &cmd, &cfg.plant, dt)?;
        truth_accel = (next.velocity - truth.velocity) / dt;
        truth = next;
        if !truth.is_finite() || truth.position.norm() > SAFETY_BOUND {
            diverged = true;
            // Log the state that tripped the bound.
            let t = (k + 1) as f64 * dt;
            rows.push(make_row(t, s.plan.phase(t), &truth, &latest_raw, &latest_smooth, f64::NAN, f64::NAN, &latest_imu, filter.as_ref(), &s.plan.sample(t), &cmd));
            break;
        }
    }

    meta.push(("status", if diverged { "diverged" } else { "completed" }.to_string()));
    meta.push(("poses_published", source.published().to_string()));
    Ok(RunRecord { meta: meta.into_iter().map(|(k, v)| (k.to_string(), v)).collect(), rows })
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    t: f64,
    phase: crate::reference::Phase,
    truth: &VehicleState,
    raw: &PoseMeasurement,
    smooth: &PoseMeasurement,
    pose_stamp: f64,
    imu_stamp: f64,
    imu: &AccelMeasurement,
    filter: Option<&FusionFilter>,
    reference: &crate::reference::TrajectoryPoint,
    cmd: &AttitudeCommand,
) -> Row {
    let nan9 = [f64::NAN; 9];
    let (x, p, steps) = match filter {
        Some(f) => {
            let x: [f64; 9] = std::array::from_fn(|i| f.state().0[i]);
            (x, f.covariance().diagonal(), f.counters().predicts)
        }
        None => (nan9, nan9, 0),
    };
    Row {
        time: t,
        phase,
        truth_x: truth.position.x,
        truth_y: truth.position.y,
        truth_z: truth.position.z,
        truth_vx: truth.velocity.x,
        truth_vy: truth.velocity.y,
        truth_vz: truth.velocity.z,
        roll: truth.roll,
        pitch: truth.pitch,
        yaw: truth.yaw,
        meas_stamp: raw.timestamp,
        raw_x: raw.position.x,
        raw_y: raw.position.y,
        raw_z: raw.position.z,
        smooth_x: smooth.position.x,
        smooth_y: smooth.position.y,
        smooth_z: smooth.position.z,
        pose_stamp,
        imu_stamp,
        imu_ax: imu.acceleration.x,
        imu_ay: imu.acceleration.y,
        imu_az: imu.acceleration.z,
        est_x: x[0],
        est_vx: x[1],
        est_ax: x[2],
        est_y: x[3],
        est_vy: x[4],
        est_ay: x[5],
        est_z: x[6],
        est_vz: x[7],
        est_az: x[8],
        cov_x: p[0],
        cov_vx: p[1],
        cov_ax: p[2],
        cov_y: p[3],
        cov_vy: p[4],
        cov_ay: p[5],
        cov_z: p[6],
        cov_vz: p[7],
        cov_az: p[8],
        filter_steps: steps,
        ref_x: reference.position.x,
        ref_y: reference.position.y,
        ref_z: reference.position.z,
        ref_vx: reference.velocity.x,
        ref_vy: reference.velocity.y,
        ref_vz: reference.velocity.z,
        ref_ax: reference.acceleration.x,
        ref_ay: reference.acceleration.y,
        ref_az: reference.acceleration.z,
        ref_yaw: reference.yaw,
        cmd_roll: cmd.roll,
        cmd_pitch: cmd.pitch,
        cmd_yaw_rate: cmd.yaw_rate,
        cmd_thrust: cmd.thrust,
    }
}
