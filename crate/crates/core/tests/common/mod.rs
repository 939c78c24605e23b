//! Reference computations that share no code with the library: Fresnel
//! integrals by Gauss-Legendre quadrature, first-order transition
//! probabilities as a direct sum of amplitudes, and the photon-dressed
//! Hamiltonian assembled from Kronecker products.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

pub struct FresnelOracle {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl FresnelOracle {
    pub fn new() -> Self {
        let (x, w) = gauss_legendre(20);
        Self { x, w }
    }

    /// `(C(x), S(x))` as `∫₀ˣ (cos, sin)(πu²/2) du` over panels of width ≤ 0.05.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let ax = x.abs();
        let panels = (ax / 0.05).ceil().max(1.0) as usize;
        let h = ax / panels as f64;
        let (mut c, mut s) = (0.0, 0.0);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            let (mut pc, mut ps) = (0.0, 0.0);
            for (xi, wi) in self.x.iter().zip(&self.w) {
                let u = mid + 0.5 * h * xi;
                let (sn, cs) = (0.5 * PI * u * u).sin_cos();
                pc += wi * cs;
                ps += wi * sn;
            }
            c += 0.5 * h * pc;
            s += 0.5 * h * ps;
        }
        (c.copysign(x), s.copysign(x))
    }

    /// `𝒞 + i𝒮` of the argument `t + off`, opened at `t0 + off`.
    pub fn window(&self, alpha: f64, t: f64, t0: f64, off: f64) -> Complex64 {
        let k = (alpha / PI).sqrt();
        let (c1, s1) = self.eval(k * (t + off));
        let (c0, s0) = self.eval(k * (t0 + off));
        Complex64::new(c1 - c0, s1 - s0)
    }
}

/// First-order `(P₂→₁, P₂→₃)` for `f(t) = Σ Aₙcos(ωₙt + φₙ)` (a static part
/// is a harmonic with ω = 0), window opened at `t0`. Every term `A/2·e^{±i(ωt+φ)}`
/// of the drive contributes one Fresnel amplitude to each outer level.
pub fn amplitude_sum(
    fres: &FresnelOracle,
    alpha: f64,
    d: f64,
    harmonics: &[(f64, f64, f64)],
    t: f64,
    t0: f64,
) -> (f64, f64) {
    let k = (PI / alpha).sqrt();
    let mut up = Complex64::new(0.0, 0.0);
    let mut down = Complex64::new(0.0, 0.0);
    for &(a, w, ph) in harmonics {
        for sg in [1.0, -1.0] {
            let e = d + sg * w;
            let off = e / alpha;
            let pre = a / (2.0 * 2f64.sqrt()) * k;
            let phase_up = sg * ph - e * e / (2.0 * alpha);
            up += pre * Complex64::from_polar(1.0, phase_up) * fres.window(alpha, t, t0, off);
            let phase_down = sg * ph + e * e / (2.0 * alpha);
            down += pre * Complex64::from_polar(1.0, phase_down) * fres.window(alpha, t, t0, -off).conj();
        }
    }
    (up.norm_sqr(), down.norm_sqr())
}

/// `F = ½(𝒞ₓ𝒞ᵧ + 𝒮ₓ𝒮ᵧ)` with both windows opened at `t0`.
pub fn interference_f(fres: &FresnelOracle, alpha: f64, t: f64, t0: f64, x: f64, y: f64) -> f64 {
    let zx = fres.window(alpha, t, t0, x);
    let zy = fres.window(alpha, t, t0, y);
    0.5 * (zx.re * zy.re + zx.im * zy.im)
}

/// Spin projection `m` and photon difference of each basis state, in the
/// order the photon-dressed model is documented with.
pub const DRESSED_ORDER: [(i32, i32); 9] =
    [(1, 1), (1, 0), (1, -1), (0, 1), (0, 0), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

/// `αt·Sᶻ⊗1 + D·(Sᶻ)²⊗1 + ω·1⊗N + Σ λ_pair·(Sˣ⊗X)_pair` in [`DRESSED_ORDER`],
/// where `X` moves the photon difference by one and `coupling(i, j)` returns
/// the `λ` of the pair of dressed-order positions `i < j`.
pub fn dressed_hamiltonian(alpha: f64, d: f64, omega: f64, t: f64, coupling: &dyn Fn(usize, usize) -> f64) -> DMatrix<f64> {
    // product basis: spin m ∈ (1, 0, −1) outer, photon difference n ∈ (1, 0, −1) inner
    let sz = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, -1.0]));
    let r = FRAC_1_SQRT_2;
    let sx = DMatrix::from_row_slice(3, 3, &[0.0, r, 0.0, r, 0.0, r, 0.0, r, 0.0]);
    let nop = sz.clone();
    let x = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    let one = DMatrix::<f64>::identity(3, 3);
    let diag = sz.kronecker(&one) * (alpha * t) + (&sz * &sz).kronecker(&one) * d + one.kronecker(&nop) * omega;
    let hop = sx.kronecker(&x);
    let product_index = |(m, n): (i32, i32)| ((1 - m) * 3 + (1 - n)) as usize;
    DMatrix::from_fn(9, 9, |i, j| {
        let (pi, pj) = (product_index(DRESSED_ORDER[i]), product_index(DRESSED_ORDER[j]));
        let h = hop[(pi, pj)];
        let c = if h != 0.0 { h * coupling(i.min(j), i.max(j)) } else { 0.0 };
        diag[(pi, pj)] + c
    })
}
