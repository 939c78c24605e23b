//! Adaptive DOP853 stepper on complex state vectors with PI step control.

use super::tableau::{A, B, C, E3, E5};
use crate::{Error, Result, C64};

const STAGES: usize = 12;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
// Gustafsson PI gains for an order-8 error estimate
const K_I: f64 = 0.7 / 8.0;
const K_P: f64 = 0.4 / 8.0;

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Integrates `y' = rhs(t, y)` from `t` to `t_end`, calling `on_step` after
/// every accepted step. `on_step` may modify the state in place (used for
/// re-symmetrization) and may abort by returning an error.
pub struct Stepper<F> {
    rhs: F,
    ctl: StepControl,
    n: usize,
    k: Vec<Vec<C64>>,
    k_last: Vec<C64>,
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    h: f64,
    err_prev: f64,
    pub stats: StepStats,
}

impl<F> Stepper<F>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    pub fn new(rhs: F, n: usize, ctl: StepControl) -> Self {
        Self {
            rhs,
            ctl,
            n,
            k: vec![vec![C64::default(); n]; STAGES],
            k_last: vec![C64::default(); n],
            y_stage: vec![C64::default(); n],
            y_new: vec![C64::default(); n],
            h: 0.0,
            err_prev: 1e-4,
            stats: StepStats::default(),
        }
    }

    fn initial_step(&mut self, t: f64, y: &[C64]) -> f64 {
        // Hairer's starting-step heuristic, order 8
        let scale = |v: &C64| self.ctl.abs_tol + v.norm() * self.ctl.rel_tol;
        let d0 = rms(y.iter().map(|v| v.norm() / scale(v)), self.n);
        (self.rhs)(t, y, &mut self.k[0]);
        self.stats.rhs_evals += 1;
        let d1 = rms(
            self.k[0].iter().zip(y).map(|(f, v)| f.norm() / scale(v)),
            self.n,
        );
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.ctl.max_step);
        for i in 0..self.n {
            self.y_stage[i] = y[i] + self.k[0][i] * h0;
        }
        (self.rhs)(t + h0, &self.y_stage, &mut self.k_last);
        self.stats.rhs_evals += 1;
        let d2 = rms(
            self.k_last
                .iter()
                .zip(&self.k[0])
                .zip(y)
                .map(|((a, b), v)| (a - b).norm() / scale(v)),
            self.n,
        ) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(self.ctl.max_step)
    }

    /// Advances `y` from `t` to exactly `t_end`.
    pub fn advance<G>(&mut self, t: &mut f64, t_end: f64, y: &mut [C64], mut on_step: G) -> Result<()>
    where
        G: FnMut(f64, &mut [C64]) -> Result<()>,
    {
        if self.h == 0.0 {
            self.h = self.initial_step(*t, y);
        }
        while *t < t_end {
            let remaining = t_end - *t;
            let min_step = 10.0 * f64::EPSILON * t.abs().max(1.0);
            let mut h = self.h.min(self.ctl.max_step);
            let mut clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            loop {
                if h < min_step && !clipped {
                    return Err(Error::Integration {
                        t: *t,
                        reason: format!("step size underflow (h = {h:e})"),
                    });
                }
                let err = self.try_step(*t, h, y);
                if !err.is_finite() {
                    h *= MIN_FACTOR;
                    self.stats.rejected += 1;
                    if h < min_step {
                        return Err(Error::Integration { t: *t, reason: "non-finite state".into() });
                    }
                    continue;
                }
                if err <= 1.0 {
                    let err = err.max(1e-10);
                    let factor = (SAFETY * err.powf(-K_I) * self.err_prev.powf(K_P))
                        .clamp(MIN_FACTOR, MAX_FACTOR);
                    self.err_prev = err;
                    // a clipped step says nothing about the natural step size
                    if !clipped || h * factor > self.h {
                        self.h = h * factor;
                    }
                    *t = if clipped { t_end } else { *t + h };
                    y.copy_from_slice(&self.y_new);
                    self.stats.accepted += 1;
                    on_step(*t, y)?;
                    break;
                }
                self.stats.rejected += 1;
                let factor = (SAFETY * err.powf(-1.0 / 8.0)).clamp(MIN_FACTOR, 1.0);
                h *= factor;
                self.h = h;
                clipped = false;
            }
        }
        Ok(())
    }

    /// One DOP853 step of size `h`; writes the candidate into `y_new` and
    /// returns the scaled error norm.
    fn try_step(&mut self, t: f64, h: f64, y: &[C64]) -> f64 {
        let n = self.n;
        (self.rhs)(t, y, &mut self.k[0]);
        for s in 1..STAGES {
            for i in 0..n {
                let mut acc = C64::default();
                for (j, &a) in A[s][..s].iter().enumerate() {
                    if a != 0.0 {
                        acc += self.k[j][i] * a;
                    }
                }
                self.y_stage[i] = y[i] + acc * h;
            }
            (self.rhs)(t + C[s] * h, &self.y_stage, &mut self.k[s]);
        }
        for i in 0..n {
            let mut acc = C64::default();
            for (j, &b) in B.iter().enumerate() {
                if b != 0.0 {
                    acc += self.k[j][i] * b;
                }
            }
            self.y_new[i] = y[i] + acc * h;
        }
        (self.rhs)(t + h, &self.y_new, &mut self.k_last);
        self.stats.rhs_evals += STAGES + 1;

        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for i in 0..n {
            let scale = self.ctl.abs_tol + y[i].norm().max(self.y_new[i].norm()) * self.ctl.rel_tol;
            let mut a5 = self.k_last[i] * E5[STAGES];
            let mut a3 = self.k_last[i] * E3[STAGES];
            for j in 0..STAGES {
                a5 += self.k[j][i] * E5[j];
                a3 += self.k[j][i] * E3[j];
            }
            e5 += (a5 / scale).norm_sqr();
            e3 += (a3 / scale).norm_sqr();
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        h * e5 / ((e5 + 0.01 * e3) * n as f64).sqrt()
    }
}

fn rms(it: impl Iterator<Item = f64>, n: usize) -> f64 {
    (it.map(|x| x * x).sum::<f64>() / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl(tol: f64) -> StepControl {
        StepControl { rel_tol: tol, abs_tol: tol, max_step: 1.0 }
    }

    #[test]
    fn harmonic_phase() {
        // y' = -i w y  ->  y = e^{-i w t}
        let w = 3.0;
        let mut st = Stepper::new(|_t, y: &[C64], out: &mut [C64]| out[0] = C64::new(0.0, -w) * y[0], 1, ctl(1e-12));
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut t = 0.0;
        st.advance(&mut t, 10.0, &mut y, |_, _| Ok(())).unwrap();
        assert_eq!(t, 10.0);
        let exact = C64::from_polar(1.0, -w * 10.0);
        assert!((y[0] - exact).norm() < 1e-10, "{}", (y[0] - exact).norm());
    }

    #[test]
    fn lands_on_intermediate_targets() {
        let mut st = Stepper::new(|t, _y: &[C64], out: &mut [C64]| out[0] = C64::new(2.0 * t, 0.0), 1, ctl(1e-12));
        let mut y = vec![C64::default()];
        let mut t = 0.0;
        for k in 1..=7 {
            let target = 0.3 * k as f64;
            st.advance(&mut t, target, &mut y, |_, _| Ok(())).unwrap();
            assert_eq!(t, target);
            assert!((y[0].re - target * target).abs() < 1e-12);
        }
    }

    #[test]
    fn callback_abort_propagates() {
        let mut st = Stepper::new(|_t, _y: &[C64], out: &mut [C64]| out[0] = C64::new(1.0, 0.0), 1, ctl(1e-8));
        let mut y = vec![C64::default()];
        let mut t = 0.0;
        let r = st.advance(&mut t, 5.0, &mut y, |t, _| {
            if t > 1.0 {
                Err(Error::Conservation("stop".into()))
            } else {
                Ok(())
            }
        });
        assert!(matches!(r, Err(Error::Conservation(_))));
    }
}
