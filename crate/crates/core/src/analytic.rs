//! Closed-form transition probabilities.
//!
//! * First-order (in `δ = A²/4α`) populations for the monochromatic,
//!   static-plus-periodic and polychromatic drives, assembled from the
//!   interference functions `F` and `G`. Every formula takes the initial time
//!   `t0` of the window explicitly (`−∞` allowed); exact propagation started at
//!   a finite time only agrees with the windowed form.
//! * The finite-time transition matrix.
//! * Asymptotic crossing-chain solutions of the photon-dressed 4- and 5-level
//!   blocks, and an incoherent composer that reproduces them from elementary
//!   crossings.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::models::{DriveSpec, Harmonic, ModelParams};
use crate::specfun::{fg, FresnelPair, Window};
use crate::{Error, Result};

/// Interference phases of a monochromatic drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSet {
    /// `ϑ⁻ = φ − Dω/α`, entering `p₊`.
    pub theta_minus: f64,
    /// `ϑ⁺ = φ + Dω/α`, entering `p₋`.
    pub theta_plus: f64,
    /// `Ψ± = φ + (D ± ω)²/2α`.
    pub psi_plus: f64,
    pub psi_minus: f64,
    /// `φ± = φ − (D ± ω)²/2α`.
    pub phi_plus: f64,
    pub phi_minus: f64,
    /// `χ∓ = D²/2α − Ψ∓`.
    pub chi_minus: f64,
    pub chi_plus: f64,
    /// `ξ∓ = D²/2α + φ∓`.
    pub xi_minus: f64,
    pub xi_plus: f64,
}

impl PhaseSet {
    pub fn new(p: &ModelParams, omega: f64, phi: f64) -> Self {
        let (a, d) = (p.alpha, p.d_aniso);
        let psi = |s: f64| phi + (d + s * omega).powi(2) / (2.0 * a);
        let vphi = |s: f64| phi - (d + s * omega).powi(2) / (2.0 * a);
        let base = d * d / (2.0 * a);
        Self {
            theta_minus: phi - d * omega / a,
            theta_plus: phi + d * omega / a,
            psi_plus: psi(1.0),
            psi_minus: psi(-1.0),
            phi_plus: vphi(1.0),
            phi_minus: vphi(-1.0),
            chi_minus: base - psi(-1.0),
            chi_plus: base - psi(1.0),
            xi_minus: base + vphi(-1.0),
            xi_plus: base + vphi(1.0),
        }
    }
}

/// Dimensionless level-crossing parameters `δ = A²/4α` and `η = Δ²/α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCrossingParams {
    pub delta: f64,
    pub eta: f64,
}

impl LevelCrossingParams {
    pub fn new(alpha: f64, amp: f64, static_delta: f64) -> Self {
        Self { delta: amp * amp / (4.0 * alpha), eta: static_delta * static_delta / alpha }
    }

    /// Uses the first harmonic as `A` (zero if there is none).
    pub fn from_drive(p: &ModelParams, drive: &DriveSpec) -> Self {
        let amp = drive.harmonics.first().map_or(0.0, |h| h.amp);
        Self::new(p.alpha, amp, drive.static_delta)
    }
}

fn window(p: &ModelParams, t0: f64) -> Window {
    Window::new(p.alpha, t0).unwrap_or_else(|e| panic!("invalid window: {e}"))
}

/// `(p₊, p₋)` for `f(t) = A cos(ωt + φ)` with the window opened at `t → −∞`.
pub fn p_mono(t: f64, p: &ModelParams, amp: f64, omega: f64, phi: f64) -> (f64, f64) {
    p_mono_from(t, f64::NEG_INFINITY, p, amp, omega, phi)
}

/// `(p₊, p₋)` for a monochromatic drive, window opened at `t0`:
/// `p± = πδ[F(x₁) + F(x₂) + 2F(x₂,x₁)cos2ϑ∓ + 2G(x₂,x₁)sin2ϑ∓]` with
/// `x₁ = t ± (D∓ω)/α`, `x₂ = t ± (D±ω)/α`.
pub fn p_mono_from(t: f64, t0: f64, p: &ModelParams, amp: f64, omega: f64, phi: f64) -> (f64, f64) {
    let w = window(p, t0);
    let (a, d) = (p.alpha, p.d_aniso);
    let delta = amp * amp / (4.0 * a);
    let ph = PhaseSet::new(p, omega, phi);
    let one = |s: f64, theta: f64| {
        let z1 = w.pair(t, s * (d - s * omega) / a);
        let z2 = w.pair(t, s * (d + s * omega) / a);
        let f11 = fg(z1, z1).0;
        let f22 = fg(z2, z2).0;
        let (f21, g21) = fg(z2, z1);
        PI * delta * (f11 + f22 + 2.0 * f21 * (2.0 * theta).cos() + 2.0 * g21 * (2.0 * theta).sin())
    };
    (one(1.0, ph.theta_minus), one(-1.0, ph.theta_plus))
}

/// The same populations from the squared-amplitude form
/// `p± = 2πδ[(G±cc)² + (G±cs)²]`.
pub fn p_mono_cc_cs(t: f64, t0: f64, p: &ModelParams, amp: f64, omega: f64, phi: f64) -> (f64, f64) {
    let w = window(p, t0);
    let (a, d) = (p.alpha, p.d_aniso);
    let delta = amp * amp / (4.0 * a);
    let ph = PhaseSet::new(p, omega, phi);
    let one = |s: f64, psi: f64, vphi: f64| {
        let z1 = w.pair(t, s * (d - s * omega) / a);
        let z2 = w.pair(t, s * (d + s * omega) / a);
        let gcc = 0.5 * (z1.c * psi.cos() + z2.c * vphi.cos() + z1.s * psi.sin() - z2.s * vphi.sin());
        let gcs = 0.5 * (z1.s * psi.cos() + z2.s * vphi.cos() - z1.c * psi.sin() + z2.c * vphi.sin());
        2.0 * PI * delta * (gcc * gcc + gcs * gcs)
    };
    (one(1.0, ph.psi_minus, ph.phi_plus), one(-1.0, ph.psi_plus, ph.phi_minus))
}

/// Rows `κ'` (initial level) and columns `κ` (final level) of the first-order
/// transition matrix; rows sum to one and the `1 ↔ 3` corners vanish.
pub fn transition_matrix(p_plus: f64, p_minus: f64) -> Matrix3<f64> {
    Matrix3::new(
        1.0 - p_plus, p_plus, 0.0,
        p_plus, 1.0 - p_plus - p_minus, p_minus,
        0.0, p_minus, 1.0 - p_minus,
    )
}

/// Finite-time transition matrix for a monochromatic drive between `t0` and
/// `t`, built from the squared-amplitude form.
pub fn transition_matrix_finite(t: f64, t0: f64, p: &ModelParams, amp: f64, omega: f64, phi: f64) -> Matrix3<f64> {
    let (pp, pm) = p_mono_cc_cs(t, t0, p, amp, omega, phi);
    transition_matrix(pp, pm)
}

/// `(p₊, p₋)` for `f(t) = Δ + A cos(ωt + φ)`, window opened at `−∞`.
pub fn p_static_ext(t: f64, p: &ModelParams, static_delta: f64, amp: f64, omega: f64, phi: f64) -> (f64, f64) {
    p_static_ext_from(t, f64::NEG_INFINITY, p, static_delta, amp, omega, phi)
}

/// `p± + q± + r±` with `r± = πηF(t ± D/α)` and
/// `q± = 2π√(δη)[F(x₀,x₁)cosχ∓ + F(x₀,x₂)cosξ± − G(x₀,x₁)sinχ∓ − G(x₀,x₂)sinξ±]`,
/// `x₀ = t ± D/α`.
pub fn p_static_ext_from(
    t: f64,
    t0: f64,
    p: &ModelParams,
    static_delta: f64,
    amp: f64,
    omega: f64,
    phi: f64,
) -> (f64, f64) {
    let (pp, pm) = p_mono_from(t, t0, p, amp, omega, phi);
    let w = window(p, t0);
    let (a, d) = (p.alpha, p.d_aniso);
    let lc = LevelCrossingParams::new(a, amp, static_delta);
    let ph = PhaseSet::new(p, omega, phi);
    let extra = |s: f64, chi: f64, xi: f64| {
        let z0 = w.pair(t, s * d / a);
        let z1 = w.pair(t, s * (d - s * omega) / a);
        let z2 = w.pair(t, s * (d + s * omega) / a);
        let r = PI * lc.eta * fg(z0, z0).0;
        let (fa, ga) = fg(z0, z1);
        let (fb, gb) = fg(z0, z2);
        let q = 2.0 * PI * (lc.delta * lc.eta).sqrt()
            * (fa * chi.cos() + fb * xi.cos() - ga * chi.sin() - gb * xi.sin());
        q + r
    };
    (pp + extra(1.0, ph.chi_minus, ph.xi_plus), pm + extra(-1.0, ph.chi_plus, ph.xi_minus))
}

/// `(p₊, p₋)` for `f(t) = Σₙ Aₙ cos(ωₙt + φₙ)`, window opened at `−∞`.
pub fn p_poly(t: f64, p: &ModelParams, harmonics: &[Harmonic]) -> (f64, f64) {
    p_poly_from(t, f64::NEG_INFINITY, p, harmonics)
}

/// Double sum over harmonic pairs with weights `δₙₘ = AₙAₘ/4α` and
/// per-harmonic phases `Ψ∓ₙ`, `φ±ₙ`; the phase differences record what is
/// accumulated between the crossings of different sidebands.
pub fn p_poly_from(t: f64, t0: f64, p: &ModelParams, harmonics: &[Harmonic]) -> (f64, f64) {
    let w = window(p, t0);
    let (a, d) = (p.alpha, p.d_aniso);
    let one = |s: f64| {
        // per harmonic: (Ψ∓ₙ, φ±ₙ, 𝒵 at t±(D∓ωₙ)/α, 𝒵 at t±(D±ωₙ)/α)
        let legs: Vec<(f64, f64, FresnelPair, FresnelPair)> = harmonics
            .iter()
            .map(|h| {
                let psi = h.phase + (d - s * h.freq).powi(2) / (2.0 * a);
                let vphi = h.phase - (d + s * h.freq).powi(2) / (2.0 * a);
                (psi, vphi, w.pair(t, s * (d - s * h.freq) / a), w.pair(t, s * (d + s * h.freq) / a))
            })
            .collect();
        let mut total = 0.0;
        for (hn, &(pn, vn, zn_m, zn_p)) in harmonics.iter().zip(&legs) {
            for (hm, &(pm, vm, zm_m, zm_p)) in harmonics.iter().zip(&legs) {
                let dnm = hn.amp * hm.amp / (4.0 * a);
                let (f1, g1) = fg(zn_m, zm_m);
                let (f2, g2) = fg(zn_m, zm_p);
                let (f3, g3) = fg(zn_p, zm_m);
                let (f4, g4) = fg(zn_p, zm_p);
                total += PI
                    * dnm
                    * ((pn - pm).cos() * f1 + (pn + vm).cos() * f2 + (vn + pm).cos() * f3 + (vn - vm).cos() * f4
                        - (pn - pm).sin() * g1
                        - (pn + vm).sin() * g2
                        + (vn + pm).sin() * g3
                        + (vn - vm).sin() * g4);
            }
        }
        total
    };
    (one(1.0), one(-1.0))
}

/// Harmonic list of a drive with the static part folded in as a zero-frequency
/// component.
pub fn drive_harmonics(drive: &DriveSpec) -> Vec<Harmonic> {
    let mut hs = Vec::with_capacity(drive.harmonics.len() + 1);
    if drive.static_delta != 0.0 {
        hs.push(Harmonic::new(drive.static_delta, 0.0, 0.0));
    }
    hs.extend_from_slice(&drive.harmonics);
    hs
}

/// Crossing geometry of the photon-dressed blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `D = 0`
    #[serde(rename = "D=0")]
    DZero,
    /// `D = ω`
    #[serde(rename = "D=w")]
    DEqualsOmega,
    /// `√α ≪ ω ≪ D`
    #[serde(rename = "w<<D")]
    OmegaBelowD,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::DZero, Regime::DEqualsOmega, Regime::OmegaBelowD];

    pub fn tag(self) -> &'static str {
        match self {
            Regime::DZero => "D=0",
            Regime::DEqualsOmega => "D=w",
            Regime::OmegaBelowD => "w<<D",
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(' ', "").as_str() {
            "d=0" | "d0" | "dzero" => Ok(Regime::DZero),
            "d=w" | "d=omega" | "dw" | "d=ω" => Ok(Regime::DEqualsOmega),
            "w<<d" | "omega<<d" | "ω≪d" | "w<d" => Ok(Regime::OmegaBelowD),
            other => Err(Error::Domain(format!("unknown regime tag '{other}'"))),
        }
    }
}

fn check_lambda(l: f64) -> Result<()> {
    if l >= 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("coupling must be finite and >= 0, got {l}")))
    }
}

/// Asymptotic populations of the 4-level block after starting in `|2,ω⟩`,
/// ordered `(|1⟩, |2,ω⟩, |2,−ω⟩, |3⟩)`. `λ` is in units of `√α`.
pub fn chain_up_asymptotic(lambda: f64, regime: Regime) -> Result<[f64; 4]> {
    check_lambda(lambda)?;
    let e = (-PI * lambda * lambda).exp();
    let q = (-PI * lambda * lambda / 2.0).exp();
    Ok(match regime {
        Regime::DZero => [e * (1.0 - e), e * e, (1.0 - e).powi(2), e * (1.0 - e)],
        Regime::DEqualsOmega => {
            let hub = 2.0 * (q - e);
            [hub, (2.0 * q - 1.0).powi(2), hub * (1.0 - e), hub * e]
        }
        Regime::OmegaBelowD => [1.0 - e, e * e, e * (1.0 - e).powi(2), e * e * (1.0 - e)],
    })
}

/// Asymptotic populations of the 5-level block after starting in `|2⟩`,
/// ordered `(|1,ω⟩, |1,−ω⟩, |2⟩, |3,−ω⟩, |3,ω⟩)`. `λ` is in units of `√α`.
pub fn chain_down_asymptotic(lambda: f64, regime: Regime) -> Result<[f64; 5]> {
    check_lambda(lambda)?;
    let e = (-PI * lambda * lambda).exp();
    let q = (-PI * lambda * lambda / 2.0).exp();
    let m = (2.0 * q - 1.0).powi(2);
    Ok(match regime {
        Regime::DZero => {
            let hub = 2.0 * (q - e);
            [hub, m * hub, m * m, hub, m * hub]
        }
        Regime::DEqualsOmega => {
            let side = 2.0 * e * (q - e);
            [1.0 - e, side, e * e * m, side, e * m * (1.0 - e)]
        }
        Regime::OmegaBelowD => [
            1.0 - e,
            e * (1.0 - e),
            e.powi(4),
            e * e * (1.0 - e),
            e.powi(3) * (1.0 - e),
        ],
    })
}

/// Landau-Zener survival probability `e^{−2πΔ²/|αᵢ − αⱼ|}` for a crossing
/// of two diabatic levels with slopes differing by `slope_diff` and coupled
/// by the matrix element `coupling`.
pub fn lz_survival(coupling: f64, slope_diff: f64) -> f64 {
    (-2.0 * PI * coupling * coupling / slope_diff.abs()).exp()
}

/// One elementary crossing in a chain. Level indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CrossingKind {
    /// Two levels exchange population.
    TwoLevel { a: usize, b: usize },
    /// Three levels (slopes +, 0, −) meet at one point; `middle` is the flat one.
    Hub { outer_a: usize, middle: usize, outer_b: usize },
}

impl CrossingKind {
    fn levels(&self) -> Vec<usize> {
        match *self {
            CrossingKind::TwoLevel { a, b } => vec![a, b],
            CrossingKind::Hub { outer_a, middle, outer_b } => vec![outer_a, middle, outer_b],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub time: f64,
    pub kind: CrossingKind,
    /// Pairwise survival probability `p` of the crossing.
    pub lz_probability: f64,
    /// When set, the coupling is divided by `√2`, i.e. `p → √p`.
    #[serde(default)]
    pub coupling_divided: bool,
}

impl CrossingEvent {
    pub fn effective_p(&self) -> f64 {
        if self.coupling_divided {
            self.lz_probability.sqrt()
        } else {
            self.lz_probability
        }
    }
}

/// Time-ordered crossings acting on `dim` levels. Events sharing a time must
/// touch disjoint levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingChain {
    pub dim: usize,
    pub events: Vec<CrossingEvent>,
}

impl CrossingChain {
    pub fn new(dim: usize, events: Vec<CrossingEvent>) -> Result<Self> {
        let chain = Self { dim, events };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, ev) in self.events.iter().enumerate() {
            if !(0.0..=1.0).contains(&ev.lz_probability) {
                return Err(Error::Domain(format!("event {k}: p = {} outside [0, 1]", ev.lz_probability)));
            }
            let lv = ev.kind.levels();
            if lv.iter().any(|&i| i >= self.dim) {
                return Err(Error::Domain(format!("event {k}: level index out of range")));
            }
            for i in 0..lv.len() {
                if lv[i + 1..].contains(&lv[i]) {
                    return Err(Error::Domain(format!("event {k}: repeated level")));
                }
            }
            if k > 0 {
                let prev = &self.events[k - 1];
                if ev.time < prev.time {
                    return Err(Error::Domain(format!("event {k}: times must be non-decreasing")));
                }
                if ev.time == prev.time {
                    let same_time = self.events[..k].iter().rev().take_while(|e| e.time == ev.time);
                    for other in same_time {
                        if other.kind.levels().iter().any(|i| lv.contains(i)) {
                            return Err(Error::Domain(format!(
                                "event {k}: simultaneous crossings share a level"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Propagates level populations through the chain, treating each crossing as
/// an independent stochastic map (phases between crossings are dropped).
pub fn chain_compose(chain: &CrossingChain, initial: usize) -> Result<Vec<f64>> {
    chain.validate()?;
    if initial >= chain.dim {
        return Err(Error::Domain(format!("initial level {initial} out of range")));
    }
    let mut v = vec![0.0; chain.dim];
    v[initial] = 1.0;
    for ev in &chain.events {
        let p = ev.effective_p();
        match ev.kind {
            CrossingKind::TwoLevel { a, b } => {
                let (va, vb) = (v[a], v[b]);
                v[a] = p * va + (1.0 - p) * vb;
                v[b] = (1.0 - p) * va + p * vb;
            }
            CrossingKind::Hub { outer_a, middle, outer_b } => {
                let (x, m, y) = (v[outer_a], v[middle], v[outer_b]);
                let stay_mid = (2.0 * p - 1.0).powi(2);
                let cross = 2.0 * (p - p * p);
                let far = (1.0 - p).powi(2);
                v[outer_a] = p * p * x + cross * m + far * y;
                v[middle] = cross * x + stay_mid * m + cross * y;
                v[outer_b] = far * x + cross * m + p * p * y;
            }
        }
    }
    Ok(v)
}

/// Crossing chain of the 4-level block for uniform couplings `λ√α`
/// (`λ` dimensionless), `α = 1` time units. Returns the chain and the index
/// of `|2,ω⟩`.
pub fn chain_for_up(lambda: f64, regime: Regime, d: f64, omega: f64) -> Result<(CrossingChain, usize)> {
    check_lambda(lambda)?;
    // matrix element λ/√2, slope difference α between a sloped and a flat level
    let p = lz_survival(lambda / 2f64.sqrt(), 1.0);
    let two = |time, a, b| CrossingEvent {
        time,
        kind: CrossingKind::TwoLevel { a, b },
        lz_probability: p,
        coupling_divided: false,
    };
    // basis [|1⟩, |2,ω⟩, |2,−ω⟩, |3⟩]
    let events = match regime {
        Regime::DZero => vec![
            two(-omega, 0, 2),
            two(-omega, 1, 3),
            two(omega, 0, 1),
            two(omega, 2, 3),
        ],
        Regime::DEqualsOmega => vec![
            two(-2.0 * omega, 0, 2),
            CrossingEvent {
                time: 0.0,
                kind: CrossingKind::Hub { outer_a: 0, middle: 1, outer_b: 3 },
                lz_probability: p,
                coupling_divided: true,
            },
            two(2.0 * omega, 2, 3),
        ],
        Regime::OmegaBelowD => vec![
            two(-d - omega, 0, 2),
            two(-d + omega, 0, 1),
            two(d - omega, 1, 3),
            two(d + omega, 2, 3),
        ],
    };
    Ok((CrossingChain::new(4, events)?, 1))
}

/// Crossing chain of the 5-level block for uniform couplings `λ√α`. Returns
/// the chain and the index of `|2⟩`.
pub fn chain_for_down(lambda: f64, regime: Regime, d: f64, omega: f64) -> Result<(CrossingChain, usize)> {
    check_lambda(lambda)?;
    let p = lz_survival(lambda / 2f64.sqrt(), 1.0);
    let two = |time, a, b| CrossingEvent {
        time,
        kind: CrossingKind::TwoLevel { a, b },
        lz_probability: p,
        coupling_divided: false,
    };
    let hub = |time, outer_a, outer_b| CrossingEvent {
        time,
        kind: CrossingKind::Hub { outer_a, middle: 2, outer_b },
        lz_probability: p,
        coupling_divided: true,
    };
    // basis [|1,ω⟩, |1,−ω⟩, |2⟩, |3,−ω⟩, |3,ω⟩]
    let events = match regime {
        Regime::DZero => vec![hub(-omega, 0, 3), hub(omega, 1, 4)],
        Regime::DEqualsOmega => vec![two(-2.0 * omega, 0, 2), hub(0.0, 1, 3), two(2.0 * omega, 2, 4)],
        Regime::OmegaBelowD => vec![
            two(-d - omega, 0, 2),
            two(-d + omega, 1, 2),
            two(d - omega, 2, 3),
            two(d + omega, 2, 4),
        ],
    };
    Ok((CrossingChain::new(5, events)?, 2))
}

/// `P₂→₂ ≈ 1 − (π/α)(A²/2n_a + A²/2n_b)`.
pub fn weak_coupling_p22(amp: f64, alpha: f64, n_a: u8, n_b: u8) -> Result<f64> {
    for n in [n_a, n_b] {
        if !(1..=2).contains(&n) {
            return Err(Error::Domain(format!("photon number must be 1 or 2, got {n}")));
        }
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be > 0, got {alpha}")));
    }
    let a2 = amp * amp;
    Ok(1.0 - PI / alpha * (a2 / (2.0 * n_a as f64) + a2 / (2.0 * n_b as f64)))
}
