//! Deviation between two population traces on a common time grid.

use crate::propagate::PopulationTrace;
use crate::{Error, Result};

use super::output::render_csv;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDeviation {
    /// 1-based level.
    pub level: usize,
    pub max_abs: f64,
    pub rms: f64,
    /// Time of the largest deviation.
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub columns: Vec<ColumnDeviation>,
    pub times: Vec<f64>,
    /// `|a − b|` per time (rows) and level (columns).
    pub abs_diff: Vec<Vec<f64>>,
}

impl CompareReport {
    pub fn max_abs(&self) -> f64 {
        self.columns.iter().map(|c| c.max_abs).fold(0.0, f64::max)
    }

    pub fn column(&self, level: usize) -> Option<&ColumnDeviation> {
        self.columns.iter().find(|c| c.level == level)
    }

    pub fn per_time_csv(&self, metadata: &[String]) -> String {
        let names: Vec<String> = std::iter::once("t".to_string())
            .chain(self.columns.iter().map(|c| format!("dp{}", c.level)))
            .collect();
        let hdr: Vec<&str> = names.iter().map(String::as_str).collect();
        let rows = self.times.iter().zip(&self.abs_diff).map(|(&t, d)| {
            let mut r = vec![t];
            r.extend_from_slice(d);
            r
        });
        render_csv(metadata, &hdr, rows)
    }

    pub fn summary_csv(&self, metadata: &[String]) -> String {
        let rows = self.columns.iter().map(|c| vec![c.level as f64, c.max_abs, c.rms, c.t_max]);
        render_csv(metadata, &["level", "max_abs", "rms", "t_at_max"], rows)
    }
}

/// Linear interpolation of `(xs, ys)` at `x`; `xs` strictly increasing and
/// `x` inside its range.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = (x - x0) / (x1 - x0);
    ys[k - 1] + w * (ys[k] - ys[k - 1])
}

/// Compares the populations of `b` against those of `a` at every time of `a`
/// that lies inside the range of `b` (with `b` interpolated linearly).
/// When the traces have different dimensions only the leading common levels
/// are compared.
pub fn compare(a: &PopulationTrace, b: &PopulationTrace) -> Result<CompareReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("cannot compare empty traces".into()));
    }
    for tr in [a, b] {
        if tr.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("time axis must be strictly increasing".into()));
        }
    }
    let (lo, hi) = (b.times[0], b.times[b.len() - 1]);
    let eps = 1e-12 * (hi - lo).abs().max(1.0);
    let idx: Vec<usize> = (0..a.len()).filter(|&i| a.times[i] >= lo - eps && a.times[i] <= hi + eps).collect();
    if idx.is_empty() {
        return Err(Error::Domain("traces cover disjoint time ranges".into()));
    }
    let dim = a.dim().min(b.dim());
    let b_levels: Vec<Vec<f64>> = (0..dim).map(|k| b.level(k)).collect();
    let mut times = Vec::with_capacity(idx.len());
    let mut abs_diff = Vec::with_capacity(idx.len());
    let mut columns: Vec<ColumnDeviation> =
        (0..dim).map(|k| ColumnDeviation { level: k + 1, max_abs: 0.0, rms: 0.0, t_max: a.times[idx[0]] }).collect();
    for &i in &idx {
        let t = a.times[i];
        let row: Vec<f64> = (0..dim)
            .map(|k| (a.populations[i][k] - interpolate(&b.times, &b_levels[k], t)).abs())
            .collect();
        for (c, &d) in columns.iter_mut().zip(&row) {
            c.rms += d * d;
            if d > c.max_abs {
                c.max_abs = d;
                c.t_max = t;
            }
        }
        times.push(t);
        abs_diff.push(row);
    }
    for c in &mut columns {
        c.rms = (c.rms / idx.len() as f64).sqrt();
    }
    Ok(CompareReport { columns, times, abs_diff })
}
