//! Counting sustained population drops ("steps") in a trace.
//!
//! The trace is smoothed by a centred moving average, replaced by its best
//! non-increasing fit (pool-adjacent-violators), and the jumps of that fit are
//! grouped: jumps above a small noise floor and closer than the merge radius belong to one step. Groups
//! carrying at least `threshold` of the total drop are counted. The monotone
//! fit absorbs the Fresnel ringing that follows every crossing, which a raw
//! derivative-peak search would count as extra steps.

use crate::propagate::PopulationTrace;
use crate::{Error, Result};

use super::config::StepParams;

/// Total drops below this are treated as no transfer at all.
pub const DROP_FLOOR: f64 = 1e-8;

/// Fit jumps below this fraction of the total drop are tails, not transfer,
/// and neither start nor extend a step.
pub const JUMP_FLOOR: f64 = 1e-4;

/// One detected step, times in the units of the input axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t_first: f64,
    pub t_last: f64,
    /// Population lost across the step.
    pub drop: f64,
}

impl Step {
    pub fn center(&self) -> f64 {
        0.5 * (self.t_first + self.t_last)
    }
}

/// Steps of `values(times)`. `window` and `merge_radius` of `params` are in
/// units of `1/√α`, so `alpha` converts them to the time axis.
pub fn detect_steps(times: &[f64], values: &[f64], params: &StepParams, alpha: f64) -> Result<Vec<Step>> {
    params.validate()?;
    if times.len() != values.len() {
        return Err(Error::Domain("times and values differ in length".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("time axis must be strictly increasing".into()));
    }
    let n = values.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let total = hi - lo;
    if !(total >= DROP_FLOOR) {
        return Ok(Vec::new());
    }
    let unit = 1.0 / alpha.sqrt();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    let k = ((params.window * unit / dt).round() as usize).clamp(1, n);
    let smooth = moving_average(values, k);
    let fit = antitonic_fit(&smooth);

    let radius = params.merge_radius * unit;
    let mut steps: Vec<Step> = Vec::new();
    for i in 0..n - 1 {
        let d = fit[i] - fit[i + 1];
        if d <= JUMP_FLOOR * total {
            continue;
        }
        let t = times[i];
        match steps.last_mut() {
            Some(s) if t - s.t_last < radius => {
                s.t_last = t;
                s.drop += d;
            }
            _ => steps.push(Step { t_first: t, t_last: t, drop: d }),
        }
    }
    steps.retain(|s| s.drop >= params.threshold * total);
    Ok(steps)
}

/// Number of steps in the population of 0-based `level`.
pub fn count_steps(trace: &PopulationTrace, level: usize, params: &StepParams, alpha: f64) -> Result<usize> {
    if level >= trace.dim() {
        return Err(Error::Domain(format!("level {level} out of range for a {}-level trace", trace.dim())));
    }
    detect_steps(&trace.times, &trace.level(level), params, alpha).map(|s| s.len())
}

/// Centred moving average over `k` samples; edges take the nearest full window.
fn moving_average(v: &[f64], k: usize) -> Vec<f64> {
    let n = v.len();
    if k <= 1 {
        return v.to_vec();
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &x in v {
        prefix.push(prefix.last().unwrap() + x);
    }
    let half = k / 2;
    let last_start = n - k;
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(last_start);
            (prefix[start + k] - prefix[start]) / k as f64
        })
        .collect()
}

/// Least-squares non-increasing fit (pool adjacent violators).
fn antitonic_fit(v: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().unwrap() = ((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w);
        }
    }
    blocks.into_iter().flat_map(|(m, w)| std::iter::repeat_n(m, w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn staircase(drops: &[(f64, f64)], ripple: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..4001).map(|i| -20.0 + i as f64 * 0.01).collect();
        let v = t
            .iter()
            .map(|&x| {
                let base: f64 = 1.0 - drops.iter().map(|&(at, h)| h * 0.5 * (1.0 + ((x - at) * 8.0).tanh())).sum::<f64>();
                base + ripple * (7.0 * x).sin() * (-(x + 20.0) / 40.0).exp()
            })
            .collect();
        (t, v)
    }

    #[test]
    fn constant_trace_has_no_steps() {
        let t: Vec<f64> = (0..100).map(f64::from).collect();
        let s = detect_steps(&t, &vec![1.0; 100], &StepParams::default(), 1.0).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn tiny_drop_is_ignored() {
        let t: Vec<f64> = (0..100).map(f64::from).collect();
        let v: Vec<f64> = t.iter().map(|&x| 1.0 - 1e-10 * x).collect();
        assert!(detect_steps(&t, &v, &StepParams::default(), 1.0).unwrap().is_empty());
    }

    #[test]
    fn finds_separated_steps_under_ripple() {
        let (t, v) = staircase(&[(-10.0, 1e-4), (0.0, 2e-4), (9.0, 1e-4)], 2e-6);
        let s = detect_steps(&t, &v, &StepParams::default(), 1.0).unwrap();
        assert_eq!(s.len(), 3);
        for (st, at) in s.iter().zip([-10.0, 0.0, 9.0]) {
            assert!((st.center() - at).abs() < 1.0, "{st:?}");
        }
    }

    #[test]
    fn close_drops_merge() {
        let (t, v) = staircase(&[(0.0, 1e-4), (1.0, 1e-4)], 0.0);
        assert_eq!(detect_steps(&t, &v, &StepParams::default(), 1.0).unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_axis() {
        assert!(detect_steps(&[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0], &StepParams::default(), 1.0).is_err());
    }

    #[test]
    fn fit_is_monotone_and_mean_preserving() {
        let v = [3.0, 1.0, 2.0, 0.5, 0.7, 0.1];
        let f = antitonic_fit(&v);
        assert!(f.windows(2).all(|w| w[0] >= w[1]));
        let s: f64 = v.iter().sum::<f64>() - f.iter().sum::<f64>();
        assert!(s.abs() < 1e-12);
        for (a, b) in f.iter().zip([3.0, 1.5, 1.5, 0.6, 0.6, 0.1]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn moving_average_edges() {
        let m = moving_average(&[1.0, 2.0, 3.0, 4.0, 5.0], 3);
        assert_eq!(m, vec![2.0, 2.0, 3.0, 4.0, 4.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn shift_and_scale_invariant(
                shift in -50.0f64..50.0,
                scale in 0.01f64..100.0,
                a in -16.0f64..-8.0,
                b in -2.0f64..2.0,
                c in 8.0f64..16.0,
            ) {
                let (t, v) = staircase(&[(a, 1e-4), (b, 3e-4), (c, 2e-4)], 1e-6);
                let base = detect_steps(&t, &v, &StepParams::default(), 1.0).unwrap();
                let ts: Vec<f64> = t.iter().map(|x| x + shift).collect();
                let vs: Vec<f64> = v.iter().map(|x| x * scale).collect();
                let moved = detect_steps(&ts, &vs, &StepParams::default(), 1.0).unwrap();
                prop_assert_eq!(base.len(), 3);
                prop_assert_eq!(moved.len(), base.len());
                for (m, s) in moved.iter().zip(&base) {
                    prop_assert!((m.center() - shift - s.center()).abs() < 1e-9);
                }
            }
        }
    }
}
