//! Multi-seed experiment suites and their comparison table.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::report::RunReport;
use super::{run_scenario, save_outcome};
use crate::error::{config, Result};
use crate::Axis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub scenarios: Vec<ScenarioConfig>,
    /// Seeds applied to every scenario; each scenario's own seed when absent.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    /// Per-run outputs go to `<output_dir>/<label>/seed-<seed>/`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Every (scenario index, config) pair the suite will run.
    fn jobs(&self) -> Vec<(usize, ScenarioConfig)> {
        let mut jobs = Vec::new();
        for (i, base) in self.scenarios.iter().enumerate() {
            match &self.seeds {
                Some(seeds) => {
                    jobs.extend(seeds.iter().map(|&seed| (i, ScenarioConfig { seed, output_dir: None, ..base.clone() })))
                }
                None => jobs.push((i, ScenarioConfig { output_dir: None, ..base.clone() })),
            }
        }
        jobs
    }
}

/// Sample mean and standard deviation (zero for a single sample).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

/// One profile × axis row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub label: String,
    pub axis: Axis,
    pub iae: Stat,
    pub ise: Stat,
    pub itae: Stat,
    pub itse: Stat,
    pub overshoot: Stat,
    pub rise_time: Stat,
}

/// Run-level aggregates for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub label: String,
    pub runs: usize,
    pub diverged: usize,
    pub unsettled_steps: usize,
    pub hausdorff_rms: Stat,
    pub landing_error: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
    pub summaries: Vec<SuiteSummary>,
    pub runs: Vec<RunReport>,
}

/// Runs every scenario for every seed. All configurations are validated
/// before the first run starts.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.scenarios.is_empty() {
        return Err(config("suite has no scenarios"));
    }
    for s in &cfg.scenarios {
        s.resolve()?;
    }
    let jobs = cfg.jobs();
    let results: Vec<(usize, RunReport)> = jobs
        .par_iter()
        .map(|(i, job)| {
            let outcome = run_scenario(job)?;
            if let Some(dir) = &cfg.output_dir {
                let run_dir = dir.join(sanitize(&job.label())).join(format!("seed-{}", job.seed));
                save_outcome(&outcome, &run_dir)?;
            }
            Ok((*i, outcome.report))
        })
        .collect::<Result<_>>()?;
    let report = aggregate(cfg.scenarios.len(), &results, |i| cfg.scenarios[i].label());
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
        report.write_csv(std::fs::File::create(dir.join("suite.csv"))?)?;
    }
    Ok(report)
}

fn sanitize(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn aggregate(n: usize, results: &[(usize, RunReport)], label: impl Fn(usize) -> String) -> SuiteReport {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for i in 0..n {
        let runs: Vec<&RunReport> = results.iter().filter(|(j, _)| *j == i).map(|(_, r)| r).collect();
        for axis in Axis::ALL {
            let per_axis: Vec<_> = runs.iter().filter_map(|r| r.axis(axis)).collect();
            if per_axis.is_empty() {
                continue;
            }
            let stat = |f: fn(&crate::metrics::MetricsReport) -> f64| {
                Stat::of(&per_axis.iter().map(|m| f(m)).collect::<Vec<_>>())
            };
            rows.push(SuiteRow {
                label: label(i),
                axis,
                iae: stat(|m| m.iae),
                ise: stat(|m| m.ise),
                itae: stat(|m| m.itae),
                itse: stat(|m| m.itse),
                overshoot: stat(|m| m.overshoot),
                rise_time: stat(|m| m.rise_time),
            });
        }
        let collect = |f: fn(&RunReport) -> Option<f64>| runs.iter().filter_map(|r| f(r)).collect::<Vec<_>>();
        summaries.push(SuiteSummary {
            label: label(i),
            runs: runs.len(),
            diverged: runs.iter().filter(|r| r.diverged()).count(),
            unsettled_steps: runs.iter().map(|r| r.unsettled_steps).sum(),
            hausdorff_rms: Stat::of(&collect(|r| r.hausdorff_rms)),
            landing_error: Stat::of(&collect(|r| r.landing_error)),
        });
    }
    SuiteReport { rows, summaries, runs: results.iter().map(|(_, r)| r.clone()).collect() }
}

impl SuiteReport {
    pub fn row(&self, label: &str, axis: Axis) -> Option<&SuiteRow> {
        self.rows.iter().find(|r| r.label == label && r.axis == axis)
    }

    pub fn summary(&self, label: &str) -> Option<&SuiteSummary> {
        self.summaries.iter().find(|s| s.label == label)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        if !self.rows.is_empty() {
            s.push_str(&format!(
                "{:<16}{:<5}{:>20}{:>20}{:>20}{:>20}{:>16}{:>16}\n",
                "profile", "axis", "IAE", "ISE", "ITAE", "ITSE", "PO[%]", "tr[s]"
            ));
            let cell = |st: &Stat| format!("{:.3}±{:.3}", st.mean, st.std);
            for r in &self.rows {
                s.push_str(&format!(
                    "{:<16}{:<5}{:>20}{:>20}{:>20}{:>20}{:>16}{:>16}\n",
                    r.label,
                    r.axis.name(),
                    cell(&r.iae),
                    cell(&r.ise),
                    cell(&r.itae),
                    cell(&r.itse),
                    cell(&r.overshoot),
                    cell(&r.rise_time),
                ));
            }
        }
        for m in &self.summaries {
            s.push_str(&format!("{}: {} runs, {} diverged", m.label, m.runs, m.diverged));
            if m.unsettled_steps > 0 {
                s.push_str(&format!(", {} unsettled steps", m.unsettled_steps));
            }
            if m.hausdorff_rms.n > 0 {
                s.push_str(&format!(", hausdorff rms {:.4}±{:.4} m", m.hausdorff_rms.mean, m.hausdorff_rms.std));
            }
            if m.landing_error.n > 0 {
                s.push_str(&format!(", landing error {:.4}±{:.4} m", m.landing_error.mean, m.landing_error.std));
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["profile", "axis", "metric", "mean", "std", "n"])?;
        for r in &self.rows {
            for (name, st) in [
                ("iae", r.iae),
                ("ise", r.ise),
                ("itae", r.itae),
                ("itse", r.itse),
                ("po", r.overshoot),
                ("tr", r.rise_time),
            ] {
                w.write_record([
                    r.label.clone(),
                    r.axis.name().into(),
                    name.into(),
                    st.mean.to_string(),
                    st.std.to_string(),
                    st.n.to_string(),
                ])?;
            }
        }
        for m in &self.summaries {
            for (name, st) in [("hausdorff_rms", m.hausdorff_rms), ("landing_error", m.landing_error)] {
                if st.n > 0 {
                    w.write_record([
                        m.label.clone(),
                        String::new(),
                        name.into(),
                        st.mean.to_string(),
                        st.std.to_string(),
                        st.n.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
