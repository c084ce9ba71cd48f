//! Step-response and trajectory-tracking metrics.
//!
//! Integral criteria use trapezoidal quadrature in SI units. Rise time is the
//! 10–90 % convention. The Hausdorff-based RMS is the directed
//! executed→planned nearest-point RMS; the classical (max, symmetric)
//! Hausdorff distance is reported next to it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vector3;

/// Allowed deviation of any sample interval from the nominal one, s.
pub const UNIFORM_DT_TOL: f64 = 1e-9;

/// Uniformly sampled reference/response pair for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseLog {
    times: Vec<f64>,
    reference: Vec<f64>,
    response: Vec<f64>,
    dt: f64,
}

impl ResponseLog {
    pub fn new(times: Vec<f64>, reference: Vec<f64>, response: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Precondition("response log needs at least two samples".into()));
        }
        if reference.len() != times.len() || response.len() != times.len() {
            return Err(Error::Precondition("response log columns differ in length".into()));
        }
        let all = times.iter().chain(&reference).chain(&response);
        if !all.clone().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("response log"));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > UNIFORM_DT_TOL) {
            return Err(Error::Precondition("response log is not uniformly sampled".into()));
        }
        Ok(Self { times, reference, response, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// First sample at or after `t0`.
    fn onset_index(&self, t0: f64) -> Result<usize> {
        let first = self.times[0];
        let last = self.times[self.times.len() - 1];
        if !(t0 >= first - UNIFORM_DT_TOL && t0 <= last + UNIFORM_DT_TOL) {
            return Err(Error::Precondition(format!(
                "step onset {t0} outside log span [{first}, {last}]"
            )));
        }
        let i = self.times.partition_point(|&t| t < t0 - UNIFORM_DT_TOL);
        Ok(i.min(self.times.len() - 1))
    }

    /// Step geometry: onset index, starting response value and signed amplitude.
    fn step(&self, t0: f64) -> Result<(usize, f64, f64)> {
        let i0 = self.onset_index(t0)?;
        let initial = self.response[i0];
        let amplitude = self.reference[self.reference.len() - 1] - initial;
        if amplitude == 0.0 {
            return Err(Error::Precondition("step amplitude is zero".into()));
        }
        Ok((i0, initial, amplitude))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegralCriteria {
    pub iae: f64,
    pub ise: f64,
    pub itae: f64,
    pub itse: f64,
}

impl IntegralCriteria {
    fn accumulate(&mut self, other: &IntegralCriteria) {
        self.iae += other.iae;
        self.ise += other.ise;
        self.itae += other.itae;
        self.itse += other.itse;
    }
}

pub fn integral_criteria(log: &ResponseLog, t0: f64) -> Result<IntegralCriteria> {
    let i0 = log.onset_index(t0)?;
    let mut out = IntegralCriteria::default();
    let terms = |i: usize| {
        let e = log.reference[i] - log.response[i];
        let tau = log.times[i] - t0;
        [e.abs(), e * e, tau * e.abs(), tau * e * e]
    };
    let mut prev = terms(i0);
    for i in i0 + 1..log.times.len() {
        let cur = terms(i);
        let h = 0.5 * (log.times[i] - log.times[i - 1]);
        out.iae += h * (prev[0] + cur[0]);
        out.ise += h * (prev[1] + cur[1]);
        out.itae += h * (prev[2] + cur[2]);
        out.itse += h * (prev[3] + cur[3]);
        prev = cur;
    }
    Ok(out)
}

/// Percent overshoot past the settled value, in the step direction.
///
/// The settled value is the mean of the last 10 % of the window after `t0`;
/// the peak is searched before that tail, so a response still creeping up
/// at the end of the window does not count as overshoot.
pub fn overshoot(log: &ResponseLog, t0: f64) -> Result<f64> {
    let (i0, initial, amplitude) = log.step(t0)?;
    let dir = amplitude.signum();
    let window = &log.response[i0..];
    let tail = (window.len() / 10).max(1);
    let final_value = window[window.len() - tail..].iter().sum::<f64>() / tail as f64;
    let head = &window[..window.len() - tail];
    let peak = head.iter().map(|&r| dir * (r - initial)).fold(f64::NEG_INFINITY, f64::max);
    let settled = dir * (final_value - initial);
    Ok(100.0 * ((peak - settled) / amplitude.abs()).max(0.0))
}

/// 10–90 % rise time with linear interpolation between samples.
pub fn rise_time(log: &ResponseLog, t0: f64) -> Result<f64> {
    let (i0, initial, amplitude) = log.step(t0)?;
    let dir = amplitude.signum();
    let progress = |i: usize| dir * (log.response[i] - initial) / amplitude.abs();
    let crossing = |level: f64| -> Option<f64> {
        if progress(i0) >= level {
            return Some(log.times[i0]);
        }
        (i0 + 1..log.times.len()).find(|&i| progress(i) >= level).map(|i| {
            let (p0, p1) = (progress(i - 1), progress(i));
            let (t0, t1) = (log.times[i - 1], log.times[i]);
            t0 + (level - p0) / (p1 - p0) * (t1 - t0)
        })
    };
    let t10 = crossing(0.1).ok_or_else(|| Error::UnsettledResponse("never reaches 10 %".into()))?;
    let t90 = crossing(0.9).ok_or_else(|| Error::UnsettledResponse("never reaches 90 %".into()))?;
    Ok(t90 - t10)
}

/// Axis-aligned k-d tree over 3-D points for nearest-neighbour queries.
///
/// Exact duplicates are stored once and every node keeps the bounding box of
/// its subtree; both matter for trajectories that dwell in one place.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vector3>,
    nodes: Vec<KdNode>,
    root: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct KdNode {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
    lo: Vector3,
    hi: Vector3,
}

impl KdTree {
    pub fn build(points: &[Vector3]) -> Self {
        let mut unique = points.to_vec();
        let key = |a: &Vector3, b: &Vector3| {
            a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
        };
        unique.sort_by(key);
        unique.dedup_by(|a, b| key(a, b).is_eq());
        let mut tree = Self { nodes: Vec::with_capacity(unique.len()), points: unique, root: None };
        let mut idx: Vec<usize> = (0..tree.points.len()).collect();
        tree.root = tree.build_rec(&mut idx, 0);
        tree
    }

    fn build_rec(&mut self, idx: &mut [usize], depth: usize) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let axis = depth % 3;
        let mid = idx.len() / 2;
        let pts = &self.points;
        let (mut lo, mut hi) = (pts[idx[0]], pts[idx[0]]);
        for &i in idx.iter() {
            lo = lo.inf(&pts[i]);
            hi = hi.sup(&pts[i]);
        }
        idx.select_nth_unstable_by(mid, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let point = idx[mid];
        let (left_idx, right_idx) = idx.split_at_mut(mid);
        let left = self.build_rec(left_idx, depth + 1);
        let right = self.build_rec(&mut right_idx[1..], depth + 1);
        self.nodes.push(KdNode { point, axis, left, right, lo, hi });
        Some(self.nodes.len() - 1)
    }

    /// Squared distance to the nearest stored point.
    pub fn nearest_distance_squared(&self, query: &Vector3) -> Option<f64> {
        let mut best = f64::INFINITY;
        self.search(self.root, query, &mut best);
        self.root.map(|_| best)
    }

    fn search(&self, node: Option<usize>, q: &Vector3, best: &mut f64) {
        let Some(n) = node.map(|i| self.nodes[i]) else { return };
        let outside = q.sup(&n.lo).inf(&n.hi) - q;
        if outside.norm_squared() >= *best {
            return;
        }
        let p = &self.points[n.point];
        let d2 = (p - q).norm_squared();
        if d2 < *best {
            *best = d2;
        }
        let diff = q[n.axis] - p[n.axis];
        let (near, far) = if diff < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.search(near, q, best);
        if diff * diff < *best {
            self.search(far, q, best);
        }
    }
}

fn check_nonempty(planned: &[Vector3], executed: &[Vector3]) -> Result<()> {
    if planned.is_empty() {
        return Err(Error::EmptyInput("planned trajectory"));
    }
    if executed.is_empty() {
        return Err(Error::EmptyInput("executed trajectory"));
    }
    Ok(())
}

fn rms(squared: impl Iterator<Item = f64>, n: usize) -> f64 {
    (squared.sum::<f64>() / n as f64).sqrt()
}

/// RMS over executed points of the distance to the nearest planned point.
pub fn hausdorff_rms(planned: &[Vector3], executed: &[Vector3]) -> Result<f64> {
    check_nonempty(planned, executed)?;
    let tree = KdTree::build(planned);
    Ok(rms(executed.iter().filter_map(|q| tree.nearest_distance_squared(q)), executed.len()))
}

/// Brute-force form of [`hausdorff_rms`].
pub fn hausdorff_rms_scan(planned: &[Vector3], executed: &[Vector3]) -> Result<f64> {
    check_nonempty(planned, executed)?;
    let nearest = |q: &Vector3| planned.iter().map(|p| (p - q).norm_squared()).fold(f64::INFINITY, f64::min);
    Ok(rms(executed.iter().map(nearest), executed.len()))
}

/// Classical symmetric Hausdorff distance.
pub fn hausdorff_max(planned: &[Vector3], executed: &[Vector3]) -> Result<f64> {
    check_nonempty(planned, executed)?;
    let directed = |from: &[Vector3], to: &[Vector3]| {
        let tree = KdTree::build(to);
        from.iter()
            .filter_map(|q| tree.nearest_distance_squared(q))
            .fold(0.0, f64::max)
            .sqrt()
    };
    Ok(directed(executed, planned).max(directed(planned, executed)))
}

pub fn landing_error(reported_final: &Vector3, truth_final: &Vector3) -> f64 {
    (reported_final - truth_final).norm()
}

/// Metrics for one step of a step response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub criteria: IntegralCriteria,
    pub overshoot: f64,
    pub rise_time: f64,
}

pub fn step_metrics(log: &ResponseLog, t0: f64) -> Result<StepMetrics> {
    Ok(StepMetrics {
        criteria: integral_criteria(log, t0)?,
        overshoot: overshoot(log, t0)?,
        rise_time: rise_time(log, t0)?,
    })
}

/// Per-axis summary over all steps on that axis: integral criteria are
/// summed, overshoot and rise time averaged.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iae: f64,
    pub ise: f64,
    pub itae: f64,
    pub itse: f64,
    pub overshoot: f64,
    pub rise_time: f64,
    pub steps: usize,
}

impl MetricsReport {
    pub fn from_steps(steps: &[StepMetrics]) -> Option<Self> {
        if steps.is_empty() {
            return None;
        }
        let mut total = IntegralCriteria::default();
        for s in steps {
            total.accumulate(&s.criteria);
        }
        let n = steps.len() as f64;
        Some(Self {
            iae: total.iae,
            ise: total.ise,
            itae: total.itae,
            itse: total.itse,
            overshoot: steps.iter().map(|s| s.overshoot).sum::<f64>() / n,
            rise_time: steps.iter().map(|s| s.rise_time).sum::<f64>() / n,
            steps: steps.len(),
        })
    }
}
