//! Hamiltonians: the semiclassical spin-1 model with an arbitrary transverse
//! drive, its closed-form spectrum, and the photon-dressed 9-level model with
//! its 4- and 5-level blocks.
//!
//! All Hamiltonians in this crate are real symmetric in the diabatic basis.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Sweep rate `α > 0` and uniaxial anisotropy `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub d_aniso: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, d_aniso: f64) -> Result<Self> {
        let p = Self { alpha, d_aniso };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !self.d_aniso.is_finite() {
            return Err(Error::Domain("D must be finite".into()));
        }
        Ok(())
    }
}

/// One drive component `A·cos(ωt + φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amp: f64,
    pub freq: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Harmonic {
    pub fn new(amp: f64, freq: f64, phase: f64) -> Self {
        Self { amp, freq, phase }
    }
}

/// Transverse field `f(t) = Δ + Σₙ Aₙ cos(ωₙt + φₙ)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveSpec {
    #[serde(default)]
    pub static_delta: f64,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
}

impl DriveSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(delta: f64) -> Self {
        Self { static_delta: delta, harmonics: Vec::new() }
    }

    pub fn mono(amp: f64, freq: f64, phase: f64) -> Self {
        Self { static_delta: 0.0, harmonics: vec![Harmonic::new(amp, freq, phase)] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.static_delta.is_finite() && self.static_delta >= 0.0) {
            return Err(Error::Domain(format!(
                "static coupling must be finite and >= 0, got {}",
                self.static_delta
            )));
        }
        for h in &self.harmonics {
            if !(h.amp.is_finite() && h.freq.is_finite() && h.phase.is_finite()) || h.freq < 0.0 {
                return Err(Error::Domain(format!("invalid harmonic {h:?}")));
            }
        }
        Ok(())
    }

    /// `f(t)`.
    pub fn value(&self, t: f64) -> f64 {
        self.harmonics
            .iter()
            .fold(self.static_delta, |acc, h| acc + h.amp * (h.freq * t + h.phase).cos())
    }

    /// `f′(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        self.harmonics
            .iter()
            .map(|h| -h.amp * h.freq * (h.freq * t + h.phase).sin())
            .sum()
    }

    pub fn max_frequency(&self) -> f64 {
        self.harmonics.iter().map(|h| h.freq).fold(0.0, f64::max)
    }
}

/// `f(t)` for the given drive.
pub fn drive_value(drive: &DriveSpec, t: f64) -> f64 {
    drive.value(t)
}

/// Spin-1 matrices in the basis `{|1⟩, |2⟩, |3⟩} = {m = +1, 0, −1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub sx: Matrix3<C64>,
    pub sy: Matrix3<C64>,
    pub sz: Matrix3<C64>,
}

impl SpinOperators {
    pub fn spin_one() -> Self {
        let r = FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let re = |x: f64| C64::new(x, 0.0);
        let im = |x: f64| C64::new(0.0, x);
        Self {
            sx: Matrix3::new(z, re(r), z, re(r), z, re(r), z, re(r), z),
            sy: Matrix3::new(z, im(-r), z, im(r), z, im(-r), z, im(r), z),
            sz: Matrix3::new(re(1.0), z, z, z, z, z, z, z, re(-1.0)),
        }
    }
}

/// `H = αt·Sᶻ + f(t)·Sˣ + D·(Sᶻ)²`.
pub fn build_semiclassical_h(p: &ModelParams, drive: &DriveSpec, t: f64) -> Matrix3<f64> {
    let at = p.alpha * t;
    let g = drive.value(t) * FRAC_1_SQRT_2;
    Matrix3::new(
        at + p.d_aniso, g, 0.0,
        g, 0.0, g,
        0.0, g, -at + p.d_aniso,
    )
}

/// `∂ₜH = α·Sᶻ + f′(t)·Sˣ`.
pub fn semiclassical_dh_dt(p: &ModelParams, drive: &DriveSpec, t: f64) -> Matrix3<f64> {
    let g = drive.derivative(t) * FRAC_1_SQRT_2;
    Matrix3::new(p.alpha, g, 0.0, g, 0.0, g, 0.0, g, -p.alpha)
}

const ARCCOS_CLAMP: f64 = 1e-12;

/// Trigonometric (Cardano) roots of the characteristic cubic, returned
/// ascending. Branch offsets are applied in the order `{4π, 2π, 0}`.
pub fn eigenenergies_closed(p: &ModelParams, drive: &DriveSpec, t: f64) -> Result<[f64; 3]> {
    let d = p.d_aniso;
    let f = drive.value(t);
    let a2t2 = (p.alpha * t).powi(2);
    let pp = a2t2 + d * d / 3.0 + f * f;
    let qq = 2.0 * d * (a2t2 - d * d / 9.0 - f * f / 2.0) / 3.0;
    if !(pp.is_finite() && qq.is_finite()) {
        return Err(Error::Numeric(format!("non-finite cubic coefficients at t = {t}")));
    }
    if pp == 0.0 {
        return Ok([2.0 * d / 3.0; 3]);
    }
    let mut arg = 1.5 * qq / pp * (3.0 / pp).sqrt();
    if arg.abs() > 1.0 {
        if arg.abs() - 1.0 <= ARCCOS_CLAMP {
            arg = arg.clamp(-1.0, 1.0);
        } else {
            return Err(Error::Numeric(format!("arccos argument {arg} outside [-1, 1]")));
        }
    }
    let base = arg.acos();
    let amp = 2.0 * (pp / 3.0).sqrt();
    let mut e = [4.0 * PI, 2.0 * PI, 0.0].map(|off| 2.0 * d / 3.0 + amp * ((base - off) / 3.0).cos());
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite eigenenergy at t = {t}")));
    }
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Basis labels of the 9-level model, in matrix order. The last three follow
/// their diagonal energies `−αt + D + ω(n_a − n_b)`.
pub const NINE_LEVEL_LABELS: [&str; 9] =
    ["|1,w>", "|1>", "|1,-w>", "|2,w>", "|2>", "|2,-w>", "|3,-w>", "|3>", "|3,w>"];

/// Spin projection `m` and photon difference `n_a − n_b` of each 9-level state.
pub const NINE_LEVEL_QUANTA: [(i32, i32); 9] =
    [(1, 1), (1, 0), (1, -1), (0, 1), (0, 0), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

/// Upper-triangle (row, col) positions, 0-based, of the 9-level couplings.
pub const NINE_LEVEL_PATTERN: [(usize, usize); 8] =
    [(0, 4), (1, 3), (1, 5), (2, 4), (3, 7), (4, 6), (4, 8), (5, 7)];

/// Couplings of the photon-dressed model, keyed by 0-based 9-level matrix
/// position. Each stored value `λ` enters the matrix as `λ/√2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCouplings {
    lambda: BTreeMap<(usize, usize), f64>,
    pub omega: f64,
    pub n_a: u8,
    pub n_b: u8,
}

impl QuantizedCouplings {
    pub fn new(omega: f64, n_a: u8, n_b: u8) -> Result<Self> {
        for n in [n_a, n_b] {
            if !(1..=2).contains(&n) {
                return Err(Error::Domain(format!("photon number must be 1 or 2, got {n}")));
            }
        }
        Ok(Self { lambda: BTreeMap::new(), omega, n_a, n_b })
    }

    /// All eight couplings set to `lambda`.
    pub fn uniform(omega: f64, lambda: f64) -> Self {
        let mut q = Self { lambda: BTreeMap::new(), omega, n_a: 1, n_b: 1 };
        for key in NINE_LEVEL_PATTERN {
            q.lambda.insert(key, lambda);
        }
        q
    }

    /// Sets `λᵢⱼ = λⱼᵢ`; positions outside the sparsity pattern are rejected.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let key = (i.min(j), i.max(j));
        if !NINE_LEVEL_PATTERN.contains(&key) {
            return Err(Error::Structure(format!("({i}, {j}) is not a coupled pair")));
        }
        self.lambda.insert(key, value);
        Ok(())
    }

    pub fn with(mut self, i: usize, j: usize, value: f64) -> Result<Self> {
        self.set(i, j, value)?;
        Ok(self)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lambda.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.lambda.iter().map(|(&k, &v)| (k, v))
    }
}

/// The 9-level Hamiltonian in the basis of [`NINE_LEVEL_LABELS`].
pub fn build_nine_level_h(p: &ModelParams, q: &QuantizedCouplings, t: f64) -> Result<DMatrix<f64>> {
    let mut h = DMatrix::zeros(9, 9);
    for (i, &(m, dn)) in NINE_LEVEL_QUANTA.iter().enumerate() {
        let m = m as f64;
        h[(i, i)] = m * p.alpha * t + p.d_aniso * m * m + q.omega * dn as f64;
    }
    for ((i, j), v) in q.entries() {
        if !NINE_LEVEL_PATTERN.contains(&(i, j)) {
            return Err(Error::Structure(format!("({i}, {j}) is not a coupled pair")));
        }
        h[(i, j)] = v * FRAC_1_SQRT_2;
        h[(j, i)] = v * FRAC_1_SQRT_2;
    }
    Ok(h)
}

/// Column `k` of the rotation `U` has its single 1 in row `ROTATION[k]`, so
/// `(UᵀHU)ₖₗ = H[ROTATION[k], ROTATION[l]]`.
pub const ROTATION: [usize; 9] = [1, 3, 5, 7, 0, 2, 4, 6, 8];

/// Size of the upper block after rotation.
pub const UP_DIM: usize = 4;

/// The explicit permutation matrix `U` (rows as printed).
pub fn rotation_matrix() -> DMatrix<f64> {
    let mut u = DMatrix::zeros(9, 9);
    for (k, &r) in ROTATION.iter().enumerate() {
        u[(r, k)] = 1.0;
    }
    u
}

/// Splits a 9-level Hamiltonian into `(H_up, H_down)` by the permutation `U`.
/// Any nonzero entry coupling the two blocks is a structure error.
pub fn block_decompose(h9: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if h9.nrows() != 9 || h9.ncols() != 9 {
        return Err(Error::Structure(format!("expected 9x9, got {}x{}", h9.nrows(), h9.ncols())));
    }
    let rotated = DMatrix::from_fn(9, 9, |k, l| h9[(ROTATION[k], ROTATION[l])]);
    for k in 0..UP_DIM {
        for l in UP_DIM..9 {
            if rotated[(k, l)] != 0.0 || rotated[(l, k)] != 0.0 {
                return Err(Error::Structure(format!(
                    "off-block entry ({k}, {l}) = {} after rotation",
                    rotated[(k, l)]
                )));
            }
        }
    }
    let up = rotated.view((0, 0), (UP_DIM, UP_DIM)).into_owned();
    let down = rotated.view((UP_DIM, UP_DIM), (9 - UP_DIM, 9 - UP_DIM)).into_owned();
    Ok((up, down))
}

/// Couplings of the 4-level block, basis `[|1⟩, |2,ω⟩, |2,−ω⟩, |3⟩]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpCouplings {
    pub l_1_2w: f64,
    pub l_1_2mw: f64,
    pub l_2w_3: f64,
    pub l_2mw_3: f64,
}

impl UpCouplings {
    pub fn uniform(l: f64) -> Self {
        Self { l_1_2w: l, l_1_2mw: l, l_2w_3: l, l_2mw_3: l }
    }

    pub fn from_quantized(q: &QuantizedCouplings) -> Self {
        Self {
            l_1_2w: q.get(1, 3),
            l_1_2mw: q.get(1, 5),
            l_2w_3: q.get(3, 7),
            l_2mw_3: q.get(5, 7),
        }
    }
}

/// Couplings of the 5-level block, basis `[|1,ω⟩, |1,−ω⟩, |2⟩, |3,−ω⟩, |3,ω⟩]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownCouplings {
    pub l_1w_2: f64,
    pub l_1mw_2: f64,
    pub l_2_3mw: f64,
    pub l_2_3w: f64,
}

impl DownCouplings {
    pub fn uniform(l: f64) -> Self {
        Self { l_1w_2: l, l_1mw_2: l, l_2_3mw: l, l_2_3w: l }
    }

    pub fn from_quantized(q: &QuantizedCouplings) -> Self {
        Self {
            l_1w_2: q.get(0, 4),
            l_1mw_2: q.get(2, 4),
            l_2_3mw: q.get(4, 6),
            l_2_3w: q.get(4, 8),
        }
    }
}

/// 4-level block `H_up(t)`.
pub fn build_h_up(p: &ModelParams, omega: f64, c: &UpCouplings, t: f64) -> DMatrix<f64> {
    let at = p.alpha * t;
    let d = p.d_aniso;
    let r = FRAC_1_SQRT_2;
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![at + d, omega, -omega, -at + d]));
    for (i, j, v) in [(0, 1, c.l_1_2w), (0, 2, c.l_1_2mw), (1, 3, c.l_2w_3), (2, 3, c.l_2mw_3)] {
        h[(i, j)] = v * r;
        h[(j, i)] = v * r;
    }
    h
}

/// 5-level block `H_down(t)`; the truncated photon-dressed model.
pub fn build_h_down(p: &ModelParams, omega: f64, c: &DownCouplings, t: f64) -> DMatrix<f64> {
    let at = p.alpha * t;
    let d = p.d_aniso;
    let r = FRAC_1_SQRT_2;
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        at + d + omega,
        at + d - omega,
        0.0,
        -at + d - omega,
        -at + d + omega,
    ]));
    for (i, v) in [(0, c.l_1w_2), (1, c.l_1mw_2), (3, c.l_2_3mw), (4, c.l_2_3w)] {
        h[(i, 2)] = v * r;
        h[(2, i)] = v * r;
    }
    h
}

/// Coupling generated by a classical amplitude `A` with `n` photons: `A/√(4n)`.
pub fn coupling_from_amplitude(a: f64, n_photons: u8) -> Result<f64> {
    if !(1..=2).contains(&n_photons) {
        return Err(Error::Domain(format!("photon number must be 1 or 2, got {n_photons}")));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("amplitude must be finite and >= 0, got {a}")));
    }
    Ok(a / (4.0 * n_photons as f64).sqrt())
}

/// A time-dependent real symmetric Hamiltonian, evaluated on demand.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;

    /// Writes `H(t)` row-major into `out` (length `dim²`).
    fn fill(&self, t: f64, out: &mut [f64]);

    /// Fastest explicit angular frequency, used to bound the step size.
    fn max_frequency(&self) -> f64;

    /// Natural energy scale squared (typically `α`); sets `1/√α` time units.
    fn sweep_rate(&self) -> f64;

    fn matrix(&self, t: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut buf = vec![0.0; n * n];
        self.fill(t, &mut buf);
        DMatrix::from_row_slice(n, n, &buf)
    }
}

/// The driven spin-1 model as a [`Hamiltonian`].
#[derive(Debug, Clone)]
pub struct Semiclassical {
    pub params: ModelParams,
    pub drive: DriveSpec,
}

impl Semiclassical {
    pub fn new(params: ModelParams, drive: DriveSpec) -> Self {
        Self { params, drive }
    }
}

impl Hamiltonian for Semiclassical {
    fn dim(&self) -> usize {
        3
    }

    fn fill(&self, t: f64, out: &mut [f64]) {
        let at = self.params.alpha * t;
        let d = self.params.d_aniso;
        let g = self.drive.value(t) * FRAC_1_SQRT_2;
        out.copy_from_slice(&[at + d, g, 0.0, g, 0.0, g, 0.0, g, -at + d]);
    }

    fn max_frequency(&self) -> f64 {
        self.drive.max_frequency()
    }

    fn sweep_rate(&self) -> f64 {
        self.params.alpha
    }
}

/// Any Hamiltonian of the form `H(t) = H₀ + t·H₁`, as the photon-dressed
/// blocks are. Both parts are stored densely.
#[derive(Debug, Clone)]
pub struct LinearSweep {
    h0: Vec<f64>,
    h1: Vec<f64>,
    n: usize,
    alpha: f64,
}

impl LinearSweep {
    /// Samples `build` at `t = 0` and `t = 1` to recover `H₀`, `H₁`.
    pub fn from_builder(alpha: f64, build: impl Fn(f64) -> DMatrix<f64>) -> Self {
        let a = build(0.0);
        let b = build(1.0);
        let n = a.nrows();
        let h0: Vec<f64> = a.transpose().iter().copied().collect();
        let h1: Vec<f64> = (b - &a).transpose().iter().copied().collect();
        Self { h0, h1, n, alpha }
    }

    pub fn h_up(p: &ModelParams, omega: f64, c: &UpCouplings) -> Self {
        Self::from_builder(p.alpha, |t| build_h_up(p, omega, c, t))
    }

    pub fn h_down(p: &ModelParams, omega: f64, c: &DownCouplings) -> Self {
        Self::from_builder(p.alpha, |t| build_h_down(p, omega, c, t))
    }

    pub fn nine_level(p: &ModelParams, q: &QuantizedCouplings) -> Result<Self> {
        build_nine_level_h(p, q, 0.0)?;
        Ok(Self::from_builder(p.alpha, |t| {
            build_nine_level_h(p, q, t).expect("validated above")
        }))
    }
}

impl Hamiltonian for LinearSweep {
    fn dim(&self) -> usize {
        self.n
    }

    fn fill(&self, t: f64, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(&self.h0).zip(&self.h1) {
            *o = a + t * b;
        }
    }

    fn max_frequency(&self) -> f64 {
        0.0
    }

    fn sweep_rate(&self) -> f64 {
        self.alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, d: f64) -> ModelParams {
        ModelParams::new(alpha, d).unwrap()
    }

    #[test]
    fn drive_examples() {
        let d = DriveSpec::mono(1.0, 0.0, 0.0);
        assert_eq!(d.value(3.7), 1.0);
        assert_eq!(DriveSpec::constant(0.5).value(-2.0), 0.5);
    }

    #[test]
    fn spin_algebra() {
        let s = SpinOperators::spin_one();
        let i = C64::new(0.0, 1.0);
        let comm = |a: &Matrix3<C64>, b: &Matrix3<C64>| a * b - b * a;
        assert!((comm(&s.sx, &s.sy) - s.sz * i).norm() < 1e-15);
        assert!((comm(&s.sy, &s.sz) - s.sx * i).norm() < 1e-15);
        assert!((comm(&s.sz, &s.sx) - s.sy * i).norm() < 1e-15);
    }

    #[test]
    fn sx_ladder_action() {
        // Sˣ|m⟩ = ½(√(2−m(m+1))|m+1⟩ + √(2−m(m−1))|m−1⟩), basis index = 1 − m
        let s = SpinOperators::spin_one();
        for m in [-1i32, 0, 1] {
            let col = (1 - m) as usize;
            for target in [m + 1, m - 1] {
                if target.abs() > 1 {
                    continue;
                }
                let row = (1 - target) as usize;
                let coef = if target == m + 1 {
                    0.5 * ((2 - m * (m + 1)) as f64).sqrt()
                } else {
                    0.5 * ((2 - m * (m - 1)) as f64).sqrt()
                };
                assert!((s.sx[(row, col)].re - coef).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn semiclassical_structure() {
        let h = build_semiclassical_h(&p(1.0, 0.0), &DriveSpec::zero(), 2.0);
        assert_eq!(h, Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 0.0, -2.0)));
        let drive = DriveSpec::mono(0.7, 1.3, 0.2);
        let h = build_semiclassical_h(&p(2.0, 3.0), &drive, 0.4);
        assert_eq!(h[(0, 1)], drive.value(0.4) * FRAC_1_SQRT_2);
        assert_eq!(h[(0, 2)], 0.0);
        assert!((h.trace() - 6.0).abs() < 1e-15);
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn closed_form_trivial_spectrum() {
        let e = eigenenergies_closed(&p(1.5, 0.0), &DriveSpec::zero(), 2.0).unwrap();
        for (a, b) in e.iter().zip([-3.0, 0.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_at_zero_time() {
        let (d, a) = (1.7, 0.9);
        let e = eigenenergies_closed(&p(1.0, d), &DriveSpec::constant(a), 0.0).unwrap();
        let r = (d * d + 4.0 * a * a).sqrt();
        let mut want = [d, (d - r) / 2.0, (d + r) / 2.0];
        want.sort_by(f64::total_cmp);
        for (x, y) in e.iter().zip(want) {
            assert!((x - y).abs() < 1e-12, "{e:?} vs {want:?}");
        }
    }

    #[test]
    fn nine_level_zero_coupling_diagonal() {
        let (alpha, d, w, t) = (1.3, 0.4, 2.0, 0.7);
        let q = QuantizedCouplings::new(w, 1, 1).unwrap();
        let h = build_nine_level_h(&p(alpha, d), &q, t).unwrap();
        let at = alpha * t;
        let want = [at + d + w, at + d, at + d - w, w, 0.0, -w, -at + d - w, -at + d, -at + d + w];
        for i in 0..9 {
            assert!((h[(i, i)] - want[i]).abs() < 1e-14);
            for j in 0..9 {
                if i != j {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn rotation_matrix_rows_as_printed() {
        let u = rotation_matrix();
        let printed_cols = [4usize, 0, 5, 1, 6, 2, 7, 3, 8];
        for (row, &col) in printed_cols.iter().enumerate() {
            for c in 0..9 {
                assert_eq!(u[(row, c)], if c == col { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(&u * &u.transpose(), DMatrix::identity(9, 9));
    }

    #[test]
    fn bad_coupling_position() {
        let mut q = QuantizedCouplings::new(1.0, 1, 1).unwrap();
        assert!(matches!(q.set(0, 1, 1.0), Err(Error::Structure(_))));
        assert!(q.set(4, 0, 1.0).is_ok());
        assert!(QuantizedCouplings::new(1.0, 3, 1).is_err());
    }

    #[test]
    fn h_down_degeneracy_at_zero_detuning() {
        let h = build_h_down(&p(1.0, 0.0), 0.0, &DownCouplings::uniform(0.0), 3.0);
        assert_eq!(h[(0, 0)], h[(1, 1)]);
        assert_eq!(h[(3, 3)], h[(4, 4)]);
        assert_eq!(h[(0, 0)], 3.0);
        assert_eq!(h[(3, 3)], -3.0);
    }

    #[test]
    fn coupling_examples() {
        assert_eq!(coupling_from_amplitude(0.0, 2).unwrap(), 0.0);
        assert!((coupling_from_amplitude(0.005, 1).unwrap() - 0.0025).abs() < 1e-18);
        assert!((coupling_from_amplitude(0.005, 2).unwrap() - 0.005 / (2.0 * 2f64.sqrt())).abs() < 1e-18);
        assert!(coupling_from_amplitude(1.0, 0).is_err());
    }

    #[test]
    fn linear_sweep_reproduces_builder() {
        let pp = p(1.0, 2.0);
        let c = DownCouplings { l_1w_2: 0.3, l_1mw_2: 0.4, l_2_3mw: 0.5, l_2_3w: 0.6 };
        let lin = LinearSweep::h_down(&pp, 5.0, &c);
        for t in [-3.0, 0.0, 1.7] {
            assert!((lin.matrix(t) - build_h_down(&pp, 5.0, &c, t)).abs().max() < 1e-14);
        }
    }
}
