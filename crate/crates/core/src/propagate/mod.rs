//! Exact time evolution: von Neumann equation for density matrices and
//! Schrödinger equation for state vectors, with conservation monitoring and
//! the Bloch-type diagnostics `R`, `Q`, `Ŵ` of the three-level problem.

mod rk;
mod tableau;

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::models::Hamiltonian;
use crate::{Error, Result, C64};

pub use rk::{StepControl, StepStats};

/// Tolerated drift of trace, norm and Hermiticity.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// Integration window, output spacing and integrator tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub output_stride: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    /// Overrides the default bound `min(0.05/ω_max, 0.05/√α)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, output_stride: f64) -> Result<Self> {
        let g = Self {
            t_start,
            t_end,
            output_stride,
            rel_tol: default_tol(),
            abs_tol: default_tol(),
            max_step: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_start < self.t_end) {
            return Err(Error::Domain(format!(
                "need finite t_start < t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if !(self.output_stride > 0.0 && self.output_stride.is_finite()) {
            return Err(Error::Domain("output stride must be > 0".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("tolerances must be > 0".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::Domain("max_step must be > 0".into()));
            }
        }
        Ok(())
    }

    /// Output times: `t_start + k·stride`, with `t_end` always last.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = ((self.t_end - self.t_start) / self.output_stride + 1e-9).floor() as usize;
        let mut ts: Vec<f64> = (0..=n).map(|k| self.t_start + k as f64 * self.output_stride).collect();
        if let Some(&last) = ts.last() {
            if self.t_end - last > 1e-9 * self.output_stride {
                ts.push(self.t_end);
            } else {
                *ts.last_mut().unwrap() = self.t_end;
            }
        }
        ts
    }

    fn max_step_for(&self, h: &dyn Hamiltonian) -> f64 {
        self.max_step.unwrap_or_else(|| default_max_step(h.max_frequency(), h.sweep_rate()))
    }
}

/// `min(0.05/ω_max, 0.05/√α)`.
pub fn default_max_step(omega_max: f64, alpha: f64) -> f64 {
    let mut h = 0.05 / alpha.sqrt();
    if omega_max > 0.0 {
        h = h.min(0.05 / omega_max);
    }
    h
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    /// `|k⟩⟨k|` (0-based `k`).
    pub fn pure_level(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::Domain(format!("level {k} out of range for dimension {dim}")));
        }
        let mut data = vec![C64::default(); dim * dim];
        data[k * dim + k] = C64::new(1.0, 0.0);
        Ok(Self { dim, data })
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn from_state(psi: &[C64]) -> Result<Self> {
        check_norm(psi)?;
        let dim = psi.len();
        let data = (0..dim * dim).map(|ij| psi[ij / dim] * psi[ij % dim].conj()).collect();
        Ok(Self { dim, data })
    }

    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Domain("data length must be dim²".into()));
        }
        let rho = Self { dim, data };
        if rho.hermiticity_defect() > 1e-12 {
            return Err(Error::Domain("density matrix is not Hermitian".into()));
        }
        if (rho.trace() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("trace {} != 1", rho.trace())));
        }
        let m = DMatrix::from_row_slice(dim, dim, &rho.data);
        let min_eig = SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 {
            return Err(Error::Domain(format!("density matrix has eigenvalue {min_eig}")));
        }
        Ok(rho)
    }

    /// `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut data = vec![C64::default(); dim * dim];
        for k in 0..dim {
            data[k * dim + k] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.data[k * self.dim + k].re).sum()
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data, self.dim)
    }
}

/// Level populations (diagonal real parts).
pub fn populations(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim).map(|k| rho.get(k, k).re).collect()
}

/// `R = ρ₁₁ − 2ρ₂₂ + ρ₃₃`, `Q = ρ₁₁ − ρ₃₃`, `Ŵ = 2√2·Re(ρ₁₂ − ρ₂₃)`.
pub fn rho_to_bloch(rho: &DensityMatrix) -> Result<(f64, f64, f64)> {
    if rho.dim != 3 {
        return Err(Error::Domain(format!("Bloch variables need dim 3, got {}", rho.dim)));
    }
    Ok(bloch_raw(&rho.data))
}

fn bloch_raw(d: &[C64]) -> (f64, f64, f64) {
    let (r11, r22, r33) = (d[0].re, d[4].re, d[8].re);
    (
        r11 - 2.0 * r22 + r33,
        r11 - r33,
        2.0 * SQRT_2 * (d[1] - d[5]).re,
    )
}

/// Inverse map back to `(ρ₁₁, ρ₂₂, ρ₃₃)` for unit trace.
pub fn bloch_to_populations(r: f64, q: f64) -> [f64; 3] {
    [
        (1.0 + r / 2.0 + 1.5 * q) / 3.0,
        (1.0 - r) / 3.0,
        (1.0 + r / 2.0 - 1.5 * q) / 3.0,
    ]
}

/// Conservation bookkeeping over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub max_norm_drift: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
}

/// Sampled populations plus optional Bloch diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub bloch: Option<Vec<[f64; 3]>>,
    pub diagnostics: Diagnostics,
}

impl PopulationTrace {
    pub fn dim(&self) -> usize {
        self.populations.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Time series of one level.
    pub fn level(&self, k: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[k]).collect()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.populations.last().map(Vec::as_slice)
    }

    /// A trace with populations only (no coherences, hence no Bloch data).
    pub fn from_rows(times: Vec<f64>, populations: Vec<Vec<f64>>) -> Self {
        Self { times, populations, bloch: None, diagnostics: Diagnostics::default() }
    }
}

/// A propagation that stopped early, with everything recorded so far.
#[derive(Debug)]
pub struct PartialRun {
    pub trace: PopulationTrace,
    pub error: Error,
}

fn hermiticity_defect(d: &[C64], n: usize) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            m = m.max((d[i * n + j] - d[j * n + i].conj()).norm());
        }
    }
    m
}

fn check_norm(psi: &[C64]) -> Result<()> {
    let n2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    if (n2.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("state norm {} != 1", n2.sqrt())));
    }
    Ok(())
}

fn check_dim(h: &dyn Hamiltonian, dim: usize) -> Result<()> {
    if h.dim() != dim {
        return Err(Error::Domain(format!(
            "Hamiltonian dimension {} does not match state dimension {dim}",
            h.dim()
        )));
    }
    Ok(())
}

/// Solves `iρ̇ = [H, ρ]`, sampling populations every `grid.output_stride`.
pub fn evolve_density<H: Hamiltonian>(h: &H, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<PopulationTrace> {
    evolve_density_partial(h, rho0, grid).map_err(|p| p.error)
}

/// As [`evolve_density`], but a failure still returns the samples recorded
/// before it.
pub fn evolve_density_partial<H: Hamiltonian>(
    h: &H,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> std::result::Result<PopulationTrace, PartialRun> {
    density_impl(h, rho0, grid, &mut |_, _| {})
}

/// As [`evolve_density`], additionally handing the full row-major `ρ` to
/// `observer` at every sample time.
pub fn evolve_density_observed<H: Hamiltonian>(
    h: &H,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observer: &mut dyn FnMut(f64, &[C64]),
) -> Result<PopulationTrace> {
    density_impl(h, rho0, grid, observer).map_err(|p| p.error)
}

fn density_impl<H: Hamiltonian>(
    h: &H,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observer: &mut dyn FnMut(f64, &[C64]),
) -> std::result::Result<PopulationTrace, PartialRun> {
    let fail = |error| PartialRun { trace: PopulationTrace::default(), error };
    grid.validate().map_err(fail)?;
    check_dim(h, rho0.dim).map_err(fail)?;
    let n = rho0.dim;
    let mut hbuf = vec![0.0; n * n];
    let mut mbuf = vec![C64::default(); n * n];
    let rhs = move |t: f64, rho: &[C64], out: &mut [C64]| {
        h.fill(t, &mut hbuf);
        // M = Hρ; then −i[H, ρ] = −i(M − M†) for Hermitian ρ
        for i in 0..n {
            let hrow = &hbuf[i * n..(i + 1) * n];
            for j in 0..n {
                let mut acc = C64::default();
                for (k, &hik) in hrow.iter().enumerate() {
                    if hik != 0.0 {
                        acc += rho[k * n + j] * hik;
                    }
                }
                mbuf[i * n + j] = acc;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let c = mbuf[i * n + j] - mbuf[j * n + i].conj();
                out[i * n + j] = C64::new(c.im, -c.re);
            }
        }
    };
    let sample = |t: f64, rho: &[C64]| -> (Vec<f64>, Option<[f64; 3]>) {
        observer(t, rho);
        let pops = (0..n).map(|k| rho[k * n + k].re).collect();
        let bloch = (n == 3).then(|| {
            let (r, q, w) = bloch_raw(rho);
            [r, q, w]
        });
        (pops, bloch)
    };
    let mut diag = Diagnostics::default();
    let on_step = |_t: f64, rho: &mut [C64], diag: &mut Diagnostics| -> Result<()> {
        diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(hermiticity_defect(rho, n));
        for i in 0..n {
            rho[i * n + i].im = 0.0;
            for j in i + 1..n {
                let avg = (rho[i * n + j] + rho[j * n + i].conj()) * 0.5;
                rho[i * n + j] = avg;
                rho[j * n + i] = avg.conj();
            }
        }
        let tr: f64 = (0..n).map(|k| rho[k * n + k].re).sum();
        let drift = (tr - 1.0).abs();
        diag.max_trace_drift = diag.max_trace_drift.max(drift);
        if !(drift <= 10.0 * CONSERVATION_TOL) {
            return Err(Error::Conservation(format!("trace drifted by {drift:e}")));
        }
        Ok(())
    };
    run(h, grid, rho0.data.clone(), rhs, sample, on_step, &mut diag)
}

/// Solves `iψ̇ = Hψ`.
pub fn evolve_state<H: Hamiltonian>(h: &H, psi0: &[C64], grid: &TimeGrid) -> Result<PopulationTrace> {
    evolve_state_partial(h, psi0, grid).map_err(|p| p.error)
}

/// As [`evolve_state`], but a failure still returns the samples recorded
/// before it.
pub fn evolve_state_partial<H: Hamiltonian>(
    h: &H,
    psi0: &[C64],
    grid: &TimeGrid,
) -> std::result::Result<PopulationTrace, PartialRun> {
    let fail = |error| PartialRun { trace: PopulationTrace::default(), error };
    grid.validate().map_err(fail)?;
    check_dim(h, psi0.len()).map_err(fail)?;
    check_norm(psi0).map_err(fail)?;
    let n = psi0.len();
    let mut hbuf = vec![0.0; n * n];
    let rhs = move |t: f64, psi: &[C64], out: &mut [C64]| {
        h.fill(t, &mut hbuf);
        for i in 0..n {
            let mut acc = C64::default();
            for (k, &hik) in hbuf[i * n..(i + 1) * n].iter().enumerate() {
                if hik != 0.0 {
                    acc += psi[k] * hik;
                }
            }
            out[i] = C64::new(acc.im, -acc.re);
        }
    };
    let sample = |_t: f64, psi: &[C64]| -> (Vec<f64>, Option<[f64; 3]>) {
        let pops: Vec<f64> = psi.iter().map(|c| c.norm_sqr()).collect();
        let bloch = (n == 3).then(|| {
            let rho12 = psi[0] * psi[1].conj();
            let rho23 = psi[1] * psi[2].conj();
            [pops[0] - 2.0 * pops[1] + pops[2], pops[0] - pops[2], 2.0 * SQRT_2 * (rho12 - rho23).re]
        });
        (pops, bloch)
    };
    let mut diag = Diagnostics::default();
    let on_step = |_t: f64, psi: &mut [C64], diag: &mut Diagnostics| -> Result<()> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - 1.0).abs();
        diag.max_norm_drift = diag.max_norm_drift.max(drift);
        if !(drift <= 10.0 * CONSERVATION_TOL) {
            return Err(Error::Conservation(format!("norm drifted by {drift:e}")));
        }
        Ok(())
    };
    run(h, grid, psi0.to_vec(), rhs, sample, on_step, &mut diag)
}

fn run<H, F, S, G>(
    h: &H,
    grid: &TimeGrid,
    mut y: Vec<C64>,
    rhs: F,
    mut sample: S,
    mut on_step: G,
    diag: &mut Diagnostics,
) -> std::result::Result<PopulationTrace, PartialRun>
where
    H: Hamiltonian,
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(f64, &[C64]) -> (Vec<f64>, Option<[f64; 3]>),
    G: FnMut(f64, &mut [C64], &mut Diagnostics) -> Result<()>,
{
    let ctl = StepControl {
        rel_tol: grid.rel_tol,
        abs_tol: grid.abs_tol,
        max_step: grid.max_step_for(h),
    };
    let times = grid.sample_times();
    let mut trace = PopulationTrace {
        times: Vec::with_capacity(times.len()),
        populations: Vec::with_capacity(times.len()),
        bloch: None,
        diagnostics: Diagnostics::default(),
    };
    let mut bloch = Vec::new();
    let mut record = |trace: &mut PopulationTrace, t: f64, y: &[C64]| {
        let (p, b) = sample(t, y);
        trace.times.push(t);
        trace.populations.push(p);
        if let Some(b) = b {
            bloch.push(b);
        }
    };
    record(&mut trace, times[0], &y);
    let mut stepper = rk::Stepper::new(rhs, y.len(), ctl);
    let mut t = grid.t_start;
    let mut failure = None;
    for &target in &times[1..] {
        let res = stepper.advance(&mut t, target, &mut y, |t, y| on_step(t, y, diag));
        if let Err(e) = res {
            failure = Some(e);
            break;
        }
        record(&mut trace, target, &y);
    }
    diag.steps_accepted = stepper.stats.accepted;
    diag.steps_rejected = stepper.stats.rejected;
    diag.rhs_evals = stepper.stats.rhs_evals;
    trace.diagnostics = *diag;
    if !bloch.is_empty() {
        trace.bloch = Some(bloch);
    }
    match failure {
        None => Ok(trace),
        Some(error) => Err(PartialRun { trace, error }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DriveSpec, LinearSweep, ModelParams, Semiclassical};

    #[test]
    fn bloch_examples() {
        let two = DensityMatrix::pure_level(3, 1).unwrap();
        assert_eq!(rho_to_bloch(&two).unwrap(), (-2.0, 0.0, 0.0));
        let mixed = DensityMatrix::maximally_mixed(3);
        let (r, q, w) = rho_to_bloch(&mixed).unwrap();
        assert!(r.abs() < 1e-15 && q.abs() < 1e-15 && w == 0.0);
        let one = DensityMatrix::pure_level(3, 0).unwrap();
        assert_eq!(rho_to_bloch(&one).unwrap(), (1.0, 1.0, 0.0));
        assert!(rho_to_bloch(&DensityMatrix::pure_level(4, 0).unwrap()).is_err());
    }

    #[test]
    fn populations_examples() {
        let p = populations(&DensityMatrix::maximally_mixed(3));
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-16));
        assert_eq!(populations(&DensityMatrix::pure_level(3, 1).unwrap()), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn bloch_round_trip() {
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.48), C64::new(0.64, 0.0)];
        let rho = DensityMatrix::from_state(&psi).unwrap();
        let (r, q, _) = rho_to_bloch(&rho).unwrap();
        let back = bloch_to_populations(r, q);
        for (a, b) in back.iter().zip(populations(&rho)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_density_rejected() {
        let mut d = vec![C64::default(); 4];
        d[0] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::from_row_major(2, d.clone()).is_err());
        d[3] = C64::new(0.5, 0.0);
        d[1] = C64::new(0.7, 0.0);
        d[2] = C64::new(0.7, 0.0);
        assert!(DensityMatrix::from_row_major(2, d).is_err());
    }

    #[test]
    fn sample_times_cover_window() {
        let g = TimeGrid::new(-1.0, 1.05, 0.5).unwrap();
        assert_eq!(g.sample_times(), vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.05]);
        let g = TimeGrid::new(0.0, 1.0, 0.25).unwrap();
        assert_eq!(*g.sample_times().last().unwrap(), 1.0);
        assert_eq!(g.sample_times().len(), 5);
        assert!(TimeGrid::new(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn diagonal_hamiltonian_keeps_populations() {
        let h = Semiclassical::new(ModelParams::new(1.0, 0.3).unwrap(), DriveSpec::zero());
        let rho0 = DensityMatrix::from_state(&[
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
        ])
        .unwrap();
        let tr = evolve_density(&h, &rho0, &TimeGrid::new(-5.0, 5.0, 0.5).unwrap()).unwrap();
        for p in &tr.populations {
            assert!((p[0] - 0.36).abs() < 1e-12 && (p[1] - 0.64).abs() < 1e-12 && p[2].abs() < 1e-12);
        }
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let h = LinearSweep::from_builder(1.0, |_| DMatrix::zeros(4, 4));
        let psi = [C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(0.5, 0.0)];
        let tr = evolve_state(&h, &psi, &TimeGrid::new(0.0, 3.0, 1.0).unwrap()).unwrap();
        for p in &tr.populations {
            assert_eq!(p, &vec![0.25; 4]);
        }
    }

    #[test]
    fn rabi_two_level_in_three() {
        // α → 0 leaves H = f·Sˣ, under which P₂ = cos²(ft)
        let h = Semiclassical::new(ModelParams::new(1e-12, 0.0).unwrap(), DriveSpec::constant(1.0));
        let psi = [C64::default(), C64::new(1.0, 0.0), C64::default()];
        let tr = evolve_state(&h, &psi, &TimeGrid::new(0.0, 2.0, 0.1).unwrap()).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.populations) {
            assert!((p[1] - t.cos().powi(2)).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let h = Semiclassical::new(ModelParams::new(1.0, 0.0).unwrap(), DriveSpec::zero());
        let rho = DensityMatrix::pure_level(4, 0).unwrap();
        assert!(evolve_density(&h, &rho, &TimeGrid::new(0.0, 1.0, 0.5).unwrap()).is_err());
    }
}
