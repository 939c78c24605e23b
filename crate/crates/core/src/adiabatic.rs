//! Instantaneous eigenframe of the three-level model, non-adiabatic couplings,
//! dynamical phases and the strong-adiabatic transition formula
//! `P_{κ'→κ}(t) = Σₙⱼ p^{κ'}ₙⱼ(t₀)·p^κₙⱼ(t)·cos Λₙⱼ(t, t₀)`, `p^κₙⱼ = w_{κn}w_{κj}`.
//!
//! Adiabatic levels are labelled `0, 1, 2` in ascending energy; diabatic
//! levels `0, 1, 2` stand for `|1⟩, |2⟩, |3⟩`.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::models::{build_semiclassical_h, eigenenergies_closed, semiclassical_dh_dt, DriveSpec, ModelParams};
use crate::propagate::PopulationTrace;
use crate::{Error, Result, C64};

/// Relative gap below which two adiabatic levels count as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Eigen-decomposition of `H(t)` with a fixed sign gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticFrame {
    pub t: f64,
    /// Ascending.
    pub energies: [f64; 3],
    /// Column `n` is the `n`-th eigenvector; `w[(κ, n)] = ⟨κ|φₙ⟩`.
    pub w: Matrix3<f64>,
}

impl AdiabaticFrame {
    /// `p^κₙⱼ = w_{κn}·w_{κj}`.
    pub fn weight(&self, kappa: usize, n: usize, j: usize) -> f64 {
        self.w[(kappa, n)] * self.w[(kappa, j)]
    }

    /// Largest violation of `Σκ w_{κi}w_{κj} = δᵢⱼ` and of `Σ w² = 3`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.w.transpose() * self.w;
        let ortho = (g - Matrix3::identity()).abs().max();
        let total = (self.w.norm_squared() - 3.0).abs();
        ortho.max(total)
    }

    /// Smallest |overlap| of matching columns with another frame.
    pub fn min_overlap(&self, other: &AdiabaticFrame) -> f64 {
        (0..3)
            .map(|n| self.w.column(n).dot(&other.w.column(n)).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Eigenframe at `t`. Column signs follow `prev` (positive overlap) when given,
/// otherwise each column's largest-magnitude component is made positive.
pub fn adiabatic_frame(
    p: &ModelParams,
    drive: &DriveSpec,
    t: f64,
    prev: Option<&AdiabaticFrame>,
) -> Result<AdiabaticFrame> {
    let h = build_semiclassical_h(p, drive, t);
    if !h.iter().all(|x| x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite Hamiltonian at t = {t}")));
    }
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric(format!("eigensolver failed at t = {t}")))?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.map(|k| eig.eigenvalues[k]);
    let mut w = Matrix3::from_columns(&order.map(|k| eig.eigenvectors.column(k).into_owned()));
    for n in 0..3 {
        let flip = match prev {
            Some(f) => w.column(n).dot(&f.w.column(n)) < 0.0,
            None => {
                let c = w.column(n);
                let k = c.iamax();
                c[k] < 0.0
            }
        };
        if flip {
            w.column_mut(n).neg_mut();
        }
    }
    Ok(AdiabaticFrame { t, energies, w })
}

/// Tracks the frame continuously from `t0` to `t`, refining the step until
/// neighbouring frames overlap well.
pub fn transported_frame(
    p: &ModelParams,
    drive: &DriveSpec,
    start: &AdiabaticFrame,
    t: f64,
) -> Result<AdiabaticFrame> {
    let base = frame_step(p, drive);
    let mut cur = start.clone();
    let dir = if t >= start.t { 1.0 } else { -1.0 };
    let mut h = base;
    while (t - cur.t) * dir > 0.0 {
        let next_t = if (t - cur.t).abs() <= h { t } else { cur.t + dir * h };
        let next = adiabatic_frame(p, drive, next_t, Some(&cur))?;
        if next.min_overlap(&cur) < 0.9 {
            h *= 0.25;
            if h < 1e-12 * base {
                return Err(Error::Numeric(format!("cannot follow eigenframe near t = {}", cur.t)));
            }
            continue;
        }
        cur = next;
        h = (h * 2.0).min(base);
    }
    Ok(cur)
}

fn frame_step(p: &ModelParams, drive: &DriveSpec) -> f64 {
    let mut h = 0.02 / p.alpha.sqrt();
    let w = drive.max_frequency();
    if w > 0.0 {
        h = h.min(0.05 / w);
    }
    h
}

/// `ν_{κℓ} = −⟨φκ|∂ₜH|φℓ⟩/(Eκ − Eℓ)` in the gauge of `frame`.
pub fn nonadiabatic_coupling_in(
    frame: &AdiabaticFrame,
    p: &ModelParams,
    drive: &DriveSpec,
    kappa: usize,
    ell: usize,
) -> Result<f64> {
    check_labels(kappa, ell)?;
    if kappa == ell {
        return Err(Error::Domain("coupling needs two distinct levels".into()));
    }
    let gap = frame.energies[kappa] - frame.energies[ell];
    let scale = build_semiclassical_h(p, drive, frame.t).norm();
    if gap.abs() <= DEGENERACY_FLOOR * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateGap { kappa, ell, gap: gap.abs() });
    }
    let dh = semiclassical_dh_dt(p, drive, frame.t);
    let m = frame.w.column(kappa).dot(&(dh * frame.w.column(ell)));
    Ok(-m / gap)
}

/// `ν_{κℓ}` in the default gauge at `t`.
pub fn nonadiabatic_coupling(p: &ModelParams, drive: &DriveSpec, t: f64, kappa: usize, ell: usize) -> Result<f64> {
    let frame = adiabatic_frame(p, drive, t, None)?;
    nonadiabatic_coupling_in(&frame, p, drive, kappa, ell)
}

fn check_labels(kappa: usize, ell: usize) -> Result<()> {
    if kappa > 2 || ell > 2 {
        return Err(Error::Domain(format!("level labels must be 0..=2, got ({kappa}, {ell})")));
    }
    Ok(())
}

/// `Λ_{κℓ}(t, t0) = ∫_{t0}^{t} (Eκ − Eℓ) dt′` using the closed-form spectrum.
pub fn dynamical_phase(
    p: &ModelParams,
    drive: &DriveSpec,
    t0: f64,
    t: f64,
    kappa: usize,
    ell: usize,
) -> Result<f64> {
    check_labels(kappa, ell)?;
    if t < t0 {
        return Err(Error::Domain(format!("need t >= t0, got t = {t}, t0 = {t0}")));
    }
    if kappa == ell || t == t0 {
        return Ok(0.0);
    }
    let lam = phase_matrix(p, drive, t0, t)?;
    Ok(lam[(kappa, ell)])
}

/// Antisymmetric matrix of all `Λ_{nj}(t, t0)`.
pub fn phase_matrix(p: &ModelParams, drive: &DriveSpec, t0: f64, t: f64) -> Result<Matrix3<f64>> {
    if t == t0 {
        return Ok(Matrix3::zeros());
    }
    let scale = {
        let e = eigenenergies_closed(p, drive, t0)?;
        let e2 = eigenenergies_closed(p, drive, t)?;
        (e[2] - e[0]).abs().max((e2[2] - e2[0]).abs()).max(1.0)
    };
    let tol = 1e-13 * scale * (t - t0).abs().max(1.0);
    let mut err = None;
    let mut gap = |i: usize, j: usize| {
        let mut f = |s: f64| match eigenenergies_closed(p, drive, s) {
            Ok(e) => e[i] - e[j],
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        };
        quad::integrate(&mut f, t0, t, tol, frame_step(p, drive) * 50.0)
    };
    let l10 = gap(1, 0)?;
    let l21 = gap(2, 1)?;
    if let Some(e) = err {
        return Err(e);
    }
    let l20 = l21 + l10;
    Ok(Matrix3::new(0.0, -l10, -l20, l10, 0.0, -l21, l20, l21, 0.0))
}

/// `Σₙⱼ p^{κ'}ₙⱼ(t₀)·p^κₙⱼ(t)·cos Λₙⱼ` from precomputed frames and phases.
pub fn transition_from_frames(
    start: &AdiabaticFrame,
    end: &AdiabaticFrame,
    lambda: &Matrix3<f64>,
    kappa_init: usize,
    kappa_final: usize,
) -> f64 {
    let mut acc = 0.0;
    for n in 0..3 {
        for j in 0..3 {
            acc += start.weight(kappa_init, n, j) * end.weight(kappa_final, n, j) * lambda[(n, j)].cos();
        }
    }
    acc
}

/// Strong-adiabatic transition probability between diabatic levels.
pub fn adiabatic_transition_prob(
    p: &ModelParams,
    drive: &DriveSpec,
    t0: f64,
    t: f64,
    kappa_init: usize,
    kappa_final: usize,
) -> Result<f64> {
    check_labels(kappa_init, kappa_final)?;
    if t < t0 {
        return Err(Error::Domain(format!("need t >= t0, got t = {t}, t0 = {t0}")));
    }
    let start = adiabatic_frame(p, drive, t0, None)?;
    let end = transported_frame(p, drive, &start, t)?;
    let lambda = phase_matrix(p, drive, t0, t)?;
    Ok(transition_from_frames(&start, &end, &lambda, kappa_init, kappa_final))
}

/// Diabatic density matrix implied by perfect adiabatic following:
/// `ρ(t) = W(t)·ϱ(t)·W(t)ᵀ` with `ϱₙⱼ(t) = ϱₙⱼ(t₀)e^{−iΛₙⱼ}`.
pub fn adiabatic_density(
    start: &AdiabaticFrame,
    end: &AdiabaticFrame,
    lambda: &Matrix3<f64>,
    kappa_init: usize,
) -> Matrix3<C64> {
    let row = start.w.row(kappa_init);
    let rho_ad = Matrix3::from_fn(|n, j| C64::from_polar(row[n] * row[j], -lambda[(n, j)]));
    let w = end.w.map(|x| C64::new(x, 0.0));
    w * rho_ad * w.transpose()
}

/// Adiabatic populations `ϱₙₙ = (WᵀρW)ₙₙ` of a diabatic density matrix.
pub fn adiabatic_populations(frame: &AdiabaticFrame, rho: &Matrix3<C64>) -> Vector3<f64> {
    let w = frame.w.map(|x| C64::new(x, 0.0));
    let r = w.transpose() * rho * w;
    Vector3::new(r[(0, 0)].re, r[(1, 1)].re, r[(2, 2)].re)
}

/// Evaluates the strong-adiabatic formula on a time grid starting at
/// `times[0]`, carrying frame and phases along.
pub fn adiabatic_trace(
    p: &ModelParams,
    drive: &DriveSpec,
    times: &[f64],
    kappa_init: usize,
) -> Result<PopulationTrace> {
    check_labels(kappa_init, 0)?;
    let Some(&t0) = times.first() else {
        return Ok(PopulationTrace::default());
    };
    let start = adiabatic_frame(p, drive, t0, None)?;
    let mut frame = start.clone();
    let mut lambda = Matrix3::zeros();
    let mut rows = Vec::with_capacity(times.len());
    let mut prev_t = t0;
    for &t in times {
        if t < prev_t {
            return Err(Error::Domain("times must be non-decreasing".into()));
        }
        if t > prev_t {
            lambda += phase_matrix(p, drive, prev_t, t)?;
            frame = transported_frame(p, drive, &frame, t)?;
            prev_t = t;
        }
        rows.push((0..3).map(|k| transition_from_frames(&start, &frame, &lambda, kappa_init, k)).collect());
    }
    Ok(PopulationTrace::from_rows(times.to_vec(), rows))
}

mod quad {
    //! Adaptive Gauss-Kronrod (7, 15) quadrature.

    use crate::{Error, Result};

    const XGK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_4,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_5,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_22,
        0.063_092_092_629_978_55,
        0.104_790_010_322_250_2,
        0.140_653_259_715_525_9,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_727_8,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_7,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];

    fn kronrod(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = fc * WGK[7];
        let mut g = fc * WG[3];
        for i in 0..7 {
            let x = h * XGK[i];
            let s = f(c - x) + f(c + x);
            k += WGK[i] * s;
            if i % 2 == 1 {
                g += WG[i / 2] * s;
            }
        }
        (k * h, ((k - g) * h).abs())
    }

    /// Splits `[a, b]` into panels no wider than `panel`, then bisects
    /// adaptively until the Kronrod-Gauss difference is below `tol` overall.
    pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, panel: f64) -> Result<f64> {
        let n = (((b - a).abs() / panel).ceil() as usize).max(1);
        let mut stack: Vec<(f64, f64, f64, f64)> = (0..n)
            .map(|i| {
                let lo = a + (b - a) * i as f64 / n as f64;
                let hi = a + (b - a) * (i + 1) as f64 / n as f64;
                let (v, e) = kronrod(f, lo, hi);
                (lo, hi, v, e)
            })
            .collect();
        let mut done = 0.0;
        let width = (b - a).abs();
        let mut evals = 0usize;
        while let Some((lo, hi, v, e)) = stack.pop() {
            let share = tol * (hi - lo).abs() / width;
            if e <= share || (hi - lo).abs() < 1e-12 * width {
                done += v;
                continue;
            }
            evals += 1;
            if evals > 200_000 {
                return Err(Error::Numeric("quadrature did not converge".into()));
            }
            let mid = 0.5 * (lo + hi);
            let (v1, e1) = kronrod(f, lo, mid);
            let (v2, e2) = kronrod(f, mid, hi);
            stack.push((lo, mid, v1, e1));
            stack.push((mid, hi, v2, e2));
        }
        Ok(done)
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn polynomial_exact() {
            let v = integrate(&mut |x| 3.0 * x * x + 1.0, -1.0, 2.0, 1e-14, 10.0).unwrap();
            assert!((v - 12.0).abs() < 1e-13);
        }

        #[test]
        fn oscillatory() {
            let v = integrate(&mut |x: f64| (10.0 * x).cos(), 0.0, 3.0, 1e-13, 0.5).unwrap();
            assert!((v - (30.0f64).sin() / 10.0).abs() < 1e-12);
        }
    }
}
