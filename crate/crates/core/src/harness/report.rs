//! Run-level metrics, computed from a [`RunRecord`] alone so that a saved log
//! reproduces the online report exactly.

use serde::{Deserialize, Serialize};

use super::record::{Row, RunRecord};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport, ResponseLog, StepMetrics};
use crate::reference::{Phase, StepEvent};
use crate::{Axis, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Diverged,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub axis: Axis,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub seed: u64,
    pub status: RunStatus,
    /// Time of the abort, for diverged runs.
    pub diverged_at: Option<f64>,
    pub axes: Vec<AxisReport>,
    /// Steps whose response never reached 90 % within the hold window.
    pub unsettled_steps: usize,
    pub hausdorff_rms: Option<f64>,
    pub hausdorff_max: Option<f64>,
    pub landing_error: Option<f64>,
    /// Peak tracking error above the degradation altitude over the peak
    /// below it, main phase only.
    pub degradation_ratio: Option<f64>,
    pub poses_published: u64,
    pub filter_steps: u64,
}

impl RunReport {
    pub fn axis(&self, axis: Axis) -> Option<&MetricsReport> {
        self.axes.iter().find(|a| a.axis == axis).map(|a| &a.metrics)
    }

    pub fn diverged(&self) -> bool {
        self.status == RunStatus::Diverged
    }

    /// `(key, value)` pairs for the metrics CSV.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("label".to_string(), self.label.clone()),
            ("seed".into(), self.seed.to_string()),
            ("status".into(), self.status.name().into()),
        ];
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        out.push(("diverged_at".into(), opt(self.diverged_at)));
        for a in &self.axes {
            let m = &a.metrics;
            for (name, v) in [
                ("iae", m.iae),
                ("ise", m.ise),
                ("itae", m.itae),
                ("itse", m.itse),
                ("po", m.overshoot),
                ("tr", m.rise_time),
            ] {
                out.push((format!("{}_{name}", a.axis), v.to_string()));
            }
        }
        out.push(("unsettled_steps".into(), self.unsettled_steps.to_string()));
        out.push(("hausdorff_rms".into(), opt(self.hausdorff_rms)));
        out.push(("hausdorff_max".into(), opt(self.hausdorff_max)));
        out.push(("landing_error".into(), opt(self.landing_error)));
        out.push(("degradation_ratio".into(), opt(self.degradation_ratio)));
        out.push(("poses_published".into(), self.poses_published.to_string()));
        out.push(("filter_steps".into(), self.filter_steps.to_string()));
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "value"])?;
        for (k, v) in self.entries() {
            w.write_record([k, v])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{} (seed {}): {}\n", self.label, self.seed, self.status.name());
        if !self.axes.is_empty() {
            s.push_str(&format!(
                "{:<5}{:>12}{:>12}{:>12}{:>12}{:>9}{:>9}\n",
                "axis", "IAE", "ISE", "ITAE", "ITSE", "PO[%]", "tr[s]"
            ));
            for a in &self.axes {
                let m = &a.metrics;
                s.push_str(&format!(
                    "{:<5}{:>12.4}{:>12.4}{:>12.3}{:>12.3}{:>9.2}{:>9.3}\n",
                    a.axis.name(),
                    m.iae,
                    m.ise,
                    m.itae,
                    m.itse,
                    m.overshoot,
                    m.rise_time
                ));
            }
        }
        let mut line = |name: &str, v: Option<f64>| {
            if let Some(v) = v {
                s.push_str(&format!("{name}: {v:.4}\n"));
            }
        };
        line("hausdorff rms [m]", self.hausdorff_rms);
        line("hausdorff max [m]", self.hausdorff_max);
        line("landing error [m]", self.landing_error);
        line("degradation ratio", self.degradation_ratio);
        if self.unsettled_steps > 0 {
            s.push_str(&format!("unsettled steps: {}\n", self.unsettled_steps));
        }
        s
    }
}

/// Steps recovered from the reference columns: a jump on one axis between
/// two rows where the reference is at rest.
pub fn detect_steps(rows: &[Row]) -> Vec<StepEvent> {
    let main: Vec<&Row> = rows.iter().filter(|r| r.phase == Phase::Main).collect();
    let Some(main_end) = main.last().map(|r| r.time) else { return Vec::new() };
    let at_rest = |r: &Row| r.ref_vx == 0.0 && r.ref_vy == 0.0 && r.ref_vz == 0.0;
    let mut steps: Vec<StepEvent> = Vec::new();
    for w in main.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(at_rest(a) && at_rest(b)) {
            continue;
        }
        for axis in Axis::ALL {
            let (from, to) = (a.reference_position()[axis.index()], b.reference_position()[axis.index()]);
            if from != to {
                if let Some(prev) = steps.last_mut() {
                    prev.end = b.time;
                }
                steps.push(StepEvent { axis, time: b.time, from, to, end: main_end });
            }
        }
    }
    steps
}

fn step_log(rows: &[Row], step: &StepEvent) -> Result<ResponseLog> {
    let i = step.axis.index();
    let window: Vec<&Row> =
        rows.iter().filter(|r| r.time >= step.time - 1e-9 && r.time < step.end - 1e-9).collect();
    ResponseLog::new(
        window.iter().map(|r| r.time).collect(),
        window.iter().map(|r| r.reference_position()[i]).collect(),
        window.iter().map(|r| r.truth_position()[i]).collect(),
    )
}

/// Per-step metrics, or the error that prevented them (e.g. unsettled).
pub fn step_results(record: &RunRecord) -> Vec<(StepEvent, Result<StepMetrics>)> {
    detect_steps(&record.rows)
        .into_iter()
        .map(|s| {
            let m = step_log(&record.rows, &s).and_then(|log| metrics::step_metrics(&log, s.time));
            (s, m)
        })
        .collect()
}

fn main_phase(rows: &[Row]) -> impl Iterator<Item = &Row> {
    rows.iter().filter(|r| r.phase == Phase::Main)
}

fn degradation_ratio(rows: &[Row], altitude: f64) -> Option<f64> {
    let (mut above, mut below) = (None::<f64>, None::<f64>);
    for r in main_phase(rows) {
        let e = (r.truth_position() - r.reference_position()).norm();
        let slot = if r.truth_z > altitude { &mut above } else { &mut below };
        *slot = Some(slot.map_or(e, |m| m.max(e)));
    }
    match (above, below) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    }
}

pub fn compute_report(record: &RunRecord) -> Result<RunReport> {
    let rows = &record.rows;
    let last = rows.last().ok_or(Error::EmptyInput("run record"))?;
    let status = match record.meta.get("status").map(String::as_str) {
        Some("diverged") => RunStatus::Diverged,
        _ => RunStatus::Completed,
    };
    let reference = record.meta.get("reference").map(String::as_str).unwrap_or("steps");

    let mut axes = Vec::new();
    let mut unsettled_steps = 0;
    if reference == "steps" {
        let results = step_results(record);
        for axis in Axis::ALL {
            let mut ok = Vec::new();
            for (s, m) in results.iter().filter(|(s, _)| s.axis == axis) {
                match m {
                    Ok(m) => ok.push(*m),
                    Err(Error::UnsettledResponse(_)) => unsettled_steps += 1,
                    Err(e) => {
                        return Err(Error::Precondition(format!("step at t = {}: {e}", s.time)));
                    }
                }
            }
            if let Some(metrics) = MetricsReport::from_steps(&ok) {
                axes.push(AxisReport { axis, metrics });
            }
        }
    }

    let (mut hausdorff_rms, mut hausdorff_max) = (None, None);
    if reference != "steps" {
        let planned: Vec<Vector3> = main_phase(rows).map(Row::reference_position).collect();
        let executed: Vec<Vector3> = main_phase(rows).map(Row::truth_position).collect();
        if !planned.is_empty() {
            hausdorff_rms = Some(metrics::hausdorff_rms(&planned, &executed)?);
            hausdorff_max = Some(metrics::hausdorff_max(&planned, &executed)?);
        }
    }

    let landing = metrics::landing_error(&last.reported_position(), &last.truth_position());
    let altitude = record.meta_f64("degradation_altitude").unwrap_or(4.0);
    Ok(RunReport {
        label: record.meta.get("label").cloned().unwrap_or_default(),
        seed: record.meta.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0),
        status,
        diverged_at: (status == RunStatus::Diverged).then_some(last.time),
        axes,
        unsettled_steps,
        hausdorff_rms,
        hausdorff_max,
        landing_error: landing.is_finite().then_some(landing),
        degradation_ratio: degradation_ratio(rows, altitude),
        poses_published: rows.iter().filter(|r| r.meas_stamp == r.time).count() as u64,
        filter_steps: last.filter_steps,
    })
}
