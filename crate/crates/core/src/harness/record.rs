//! Per-tick run log and its CSV form.
//!
//! A log file starts with `# key: value` metadata lines followed by a CSV
//! table whose columns are the fields of [`Row`] in declaration order.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reference::Phase;
use crate::Vector3;

/// One master tick. Measurement columns hold the latest sample and its stamp;
/// `pose_stamp` and `imu_stamp` are the inputs handed to the filter on this
/// tick (NaN when none).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub time: f64,
    pub phase: Phase,
    pub truth_x: f64,
    pub truth_y: f64,
    pub truth_z: f64,
    pub truth_vx: f64,
    pub truth_vy: f64,
    pub truth_vz: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub meas_stamp: f64,
    pub raw_x: f64,
    pub raw_y: f64,
    pub raw_z: f64,
    pub smooth_x: f64,
    pub smooth_y: f64,
    pub smooth_z: f64,
    pub pose_stamp: f64,
    pub imu_stamp: f64,
    pub imu_ax: f64,
    pub imu_ay: f64,
    pub imu_az: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_z: f64,
    pub est_vx: f64,
    pub est_vy: f64,
    pub est_vz: f64,
    pub est_ax: f64,
    pub est_ay: f64,
    pub est_az: f64,
    pub cov_x: f64,
    pub cov_vx: f64,
    pub cov_ax: f64,
    pub cov_y: f64,
    pub cov_vy: f64,
    pub cov_ay: f64,
    pub cov_z: f64,
    pub cov_vz: f64,
    pub cov_az: f64,
    pub filter_steps: u64,
    pub ref_x: f64,
    pub ref_y: f64,
    pub ref_z: f64,
    pub ref_vx: f64,
    pub ref_vy: f64,
    pub ref_vz: f64,
    pub ref_ax: f64,
    pub ref_ay: f64,
    pub ref_az: f64,
    pub ref_yaw: f64,
    pub cmd_roll: f64,
    pub cmd_pitch: f64,
    pub cmd_yaw_rate: f64,
    pub cmd_thrust: f64,
}

impl Row {
    pub fn truth_position(&self) -> Vector3 {
        Vector3::new(self.truth_x, self.truth_y, self.truth_z)
    }

    pub fn reported_position(&self) -> Vector3 {
        Vector3::new(self.smooth_x, self.smooth_y, self.smooth_z)
    }

    pub fn estimate_position(&self) -> Vector3 {
        Vector3::new(self.est_x, self.est_y, self.est_z)
    }

    pub fn reference_position(&self) -> Vector3 {
        Vector3::new(self.ref_x, self.ref_y, self.ref_z)
    }
}

/// Ordered run metadata plus all rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<Row>,
}

impl RunRecord {
    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta.get(key)?.parse().ok()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut line = String::new();
        let mut body = Vec::new();
        loop {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                break;
            }
            match line.strip_prefix('#') {
                Some(rest) => {
                    let (k, v) = rest
                        .split_once(':')
                        .ok_or_else(|| Error::Precondition(format!("bad metadata line {line:?}")))?;
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                None => {
                    body.extend_from_slice(line.as_bytes());
                    input.read_to_end(&mut body)?;
                    break;
                }
            }
        }
        let mut reader = csv::Reader::from_reader(body.as_slice());
        let rows = reader.deserialize().collect::<std::result::Result<Vec<Row>, _>>()?;
        Ok(Self { meta, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Writes the per-stream CSV files (truth, reference, poses, estimate,
    /// commands) next to the full log.
    pub fn write_stream_files(&self, dir: &Path) -> Result<()> {
        type Getter = fn(&Row) -> f64;
        let streams: [(&str, &[(&str, Getter)]); 5] = [
            ("truth", &[
                ("x", |r| r.truth_x), ("y", |r| r.truth_y), ("z", |r| r.truth_z),
                ("vx", |r| r.truth_vx), ("vy", |r| r.truth_vy), ("vz", |r| r.truth_vz),
                ("roll", |r| r.roll), ("pitch", |r| r.pitch), ("yaw", |r| r.yaw),
            ]),
            ("reference", &[
                ("x", |r| r.ref_x), ("y", |r| r.ref_y), ("z", |r| r.ref_z),
                ("vx", |r| r.ref_vx), ("vy", |r| r.ref_vy), ("vz", |r| r.ref_vz),
                ("ax", |r| r.ref_ax), ("ay", |r| r.ref_ay), ("az", |r| r.ref_az),
                ("yaw", |r| r.ref_yaw),
            ]),
            ("poses", &[
                ("raw_x", |r| r.raw_x), ("raw_y", |r| r.raw_y), ("raw_z", |r| r.raw_z),
                ("x", |r| r.smooth_x), ("y", |r| r.smooth_y), ("z", |r| r.smooth_z),
            ]),
            ("estimate", &[
                ("x", |r| r.est_x), ("y", |r| r.est_y), ("z", |r| r.est_z),
                ("vx", |r| r.est_vx), ("vy", |r| r.est_vy), ("vz", |r| r.est_vz),
                ("ax", |r| r.est_ax), ("ay", |r| r.est_ay), ("az", |r| r.est_az),
            ]),
            ("commands", &[
                ("roll", |r| r.cmd_roll), ("pitch", |r| r.cmd_pitch),
                ("yaw_rate", |r| r.cmd_yaw_rate), ("thrust", |r| r.cmd_thrust),
            ]),
        ];
        std::fs::create_dir_all(dir)?;
        for (name, columns) in streams {
            let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv")))?;
            let mut header = vec!["t"];
            header.extend(columns.iter().map(|(c, _)| *c));
            w.write_record(&header)?;
            // Poses are logged only on their publish ticks.
            let rows = self.rows.iter().filter(|r| name != "poses" || r.meas_stamp == r.time);
            for r in rows {
                let mut rec = vec![r.time.to_string()];
                rec.extend(columns.iter().map(|(_, get)| get(r).to_string()));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// Plot-ready series, one `(name, samples)` pair per file.
    pub fn plot_series(&self) -> Vec<(&'static str, Vec<(f64, f64)>)> {
        type Getter = fn(&Row) -> f64;
        let columns: [(&'static str, Getter); 14] = [
            ("truth_x", |r| r.truth_x),
            ("truth_y", |r| r.truth_y),
            ("truth_z", |r| r.truth_z),
            ("est_x", |r| r.est_x),
            ("est_y", |r| r.est_y),
            ("est_z", |r| r.est_z),
            ("ref_x", |r| r.ref_x),
            ("ref_y", |r| r.ref_y),
            ("ref_z", |r| r.ref_z),
            ("meas_x", |r| r.smooth_x),
            ("meas_y", |r| r.smooth_y),
            ("meas_z", |r| r.smooth_z),
            ("tracking_error", |r| (r.truth_position() - r.reference_position()).norm()),
            ("estimation_error", |r| (r.truth_position() - r.estimate_position()).norm()),
        ];
        columns
            .iter()
            .map(|(name, get)| (*name, self.rows.iter().map(|r| (r.time, get(r))).collect()))
            .collect()
    }

    /// Writes each plot series as `<dir>/<name>.dat` with `t value` lines.
    pub fn write_plot_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, series) in self.plot_series() {
            let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.dat")))?);
            writeln!(out, "# t {name}")?;
            for (t, v) in series {
                writeln!(out, "{t} {v}")?;
            }
            out.flush()?;
        }
        Ok(())
    }
}
