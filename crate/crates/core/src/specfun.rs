//! Fresnel integrals and the two-vertex interference functions built on them.
//!
//! Convention: `C(x) = ∫₀ˣ cos(πu²/2) du`, `S(x) = ∫₀ˣ sin(πu²/2) du`.
//! Below |x| = 1.5 the Maclaurin series is summed directly; above it the
//! complementary error function of complex argument is evaluated by a modified
//! Lentz continued fraction, which stays accurate to ~1e-15 for all |x|.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::{Error, Result, C64};

const SERIES_LIMIT: f64 = 1.5;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 200;

/// Values of the cosine and sine Fresnel integrals (or of their windowed
/// differences).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FresnelPair {
    pub c: f64,
    pub s: f64,
}

impl FresnelPair {
    pub fn new(c: f64, s: f64) -> Self {
        Self { c, s }
    }

    /// `C + iS`.
    pub fn as_complex(self) -> C64 {
        C64::new(self.c, self.s)
    }
}

impl std::ops::Sub for FresnelPair {
    type Output = FresnelPair;
    fn sub(self, rhs: Self) -> Self {
        FresnelPair::new(self.c - rhs.c, self.s - rhs.s)
    }
}

/// `(C(x), S(x))` for any `x`, with `±∞ ↦ (±½, ±½)`. NaN propagates.
pub fn fresnel_unchecked(x: f64) -> FresnelPair {
    if x.is_nan() {
        return FresnelPair::new(f64::NAN, f64::NAN);
    }
    if x.is_infinite() {
        let h = 0.5f64.copysign(x);
        return FresnelPair::new(h, h);
    }
    let ax = x.abs();
    let (c, s) = if ax < SERIES_LIMIT {
        series(ax)
    } else {
        continued_fraction(ax)
    };
    FresnelPair::new(c.copysign(x), s.copysign(x))
}

/// `(C(x), S(x))`; non-finite input is a domain error.
pub fn fresnel(x: f64) -> Result<FresnelPair> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Fresnel argument must be finite, got {x}")));
    }
    Ok(fresnel_unchecked(x))
}

/// Cosine Fresnel integral `C(x)`.
pub fn fresnel_c(x: f64) -> Result<f64> {
    fresnel(x).map(|p| p.c)
}

/// Sine Fresnel integral `S(x)`.
pub fn fresnel_s(x: f64) -> Result<f64> {
    fresnel(x).map(|p| p.s)
}

fn series(x: f64) -> (f64, f64) {
    // term_k = (-1)^k (π/2)^(2k) x^(4k+1) / (2k)!  for C, next power for S
    let z = FRAC_PI_2 * x * x;
    let mut c = 0.0;
    let mut s = 0.0;
    let mut term = x; // z^n x / n!
    for n in 0..MAX_ITER {
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let contrib = sign * term / (2 * n + 1) as f64;
        if n % 2 == 0 {
            c += contrib;
        } else {
            s += contrib;
        }
        if term.abs() < EPS * (c.abs() + s.abs()) {
            break;
        }
        term *= z / (n + 1) as f64;
    }
    (c, s)
}

fn continued_fraction(x: f64) -> (f64, f64) {
    // C + iS = (1+i)/2 · [1 − e^{iπx²/2}·(x − ix)·h] with h the Lentz
    // evaluation of the erfc continued fraction at argument (1−i)√π x / 2.
    let pix2 = PI * x * x;
    let mut b = C64::new(1.0, -pix2);
    let mut cc = C64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut n = -1.0;
    for _ in 1..MAX_ITER {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += 4.0;
        d = (d * a + b).inv();
        cc = b + cc.inv() * a;
        let del = cc * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            break;
        }
    }
    h *= C64::new(x, -x);
    let phase = C64::from_polar(1.0, 0.5 * pix2);
    let cs = C64::new(0.5, 0.5) * (C64::new(1.0, 0.0) - phase * h);
    (cs.re, cs.im)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("sweep rate must be positive and finite, got {alpha}")))
    }
}

#[inline]
fn windowed_raw(scale: f64, x_t: f64, x_t0: f64) -> FresnelPair {
    fresnel_unchecked(scale * x_t) - fresnel_unchecked(scale * x_t0)
}

/// Windowed pair `(𝒞, 𝒮)` between the initial argument `x_t0` and the current
/// argument `x_t` (both physical times, scaled by `√(α/π)` here).
/// `x_t0 = −∞` is allowed and yields `(½ + C, ½ + S)`.
pub fn windowed_cs(x_t: f64, x_t0: f64, alpha: f64) -> Result<FresnelPair> {
    check_alpha(alpha)?;
    if x_t.is_nan() || x_t0.is_nan() {
        return Err(Error::Domain("window argument is NaN".into()));
    }
    Ok(windowed_raw((alpha / PI).sqrt(), x_t, x_t0))
}

/// `(F, G)` for two already windowed pairs.
#[inline]
pub fn fg(zx: FresnelPair, zy: FresnelPair) -> (f64, f64) {
    (
        0.5 * (zx.c * zy.c + zx.s * zy.s),
        0.5 * (zx.c * zy.s - zx.s * zy.c),
    )
}

/// Symmetric interference function `F(x, y)` with the window opened at −∞.
pub fn interf_f(x: f64, y: f64, alpha: f64) -> Result<f64> {
    let zx = windowed_cs(x, f64::NEG_INFINITY, alpha)?;
    let zy = windowed_cs(y, f64::NEG_INFINITY, alpha)?;
    Ok(fg(zx, zy).0)
}

/// Antisymmetric interference function `G(x, y)` with the window opened at −∞.
pub fn interf_g(x: f64, y: f64, alpha: f64) -> Result<f64> {
    let zx = windowed_cs(x, f64::NEG_INFINITY, alpha)?;
    let zy = windowed_cs(y, f64::NEG_INFINITY, alpha)?;
    Ok(fg(zx, zy).1)
}

/// Single-crossing Landau-Zener window `F(t) = F(t, t)`.
pub fn lz_window(t: f64, alpha: f64) -> Result<f64> {
    interf_f(t, t, alpha)
}

/// Precomputed `√(α/π)` scale plus window opening time; used in hot loops
/// where the `Result` plumbing of the public functions is unwanted.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    scale: f64,
    t0: f64,
}

impl Window {
    pub fn new(alpha: f64, t0: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if t0.is_nan() || t0 == f64::INFINITY {
            return Err(Error::Domain(format!("initial time must be < +∞, got {t0}")));
        }
        Ok(Self { scale: (alpha / PI).sqrt(), t0 })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `(𝒞, 𝒮)` for the argument `t + shift`, opened at `t0 + shift`.
    #[inline]
    pub fn pair(&self, t: f64, shift: f64) -> FresnelPair {
        windowed_raw(self.scale, t + shift, self.t0 + shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_and_limits() {
        assert_eq!(fresnel_c(0.0).unwrap(), 0.0);
        assert_eq!(fresnel_s(0.0).unwrap(), 0.0);
        assert!((fresnel_c(1e4).unwrap() - 0.5).abs() < 1e-4);
        assert!((fresnel_s(1e4).unwrap() - 0.5).abs() < 1e-4);
        assert!((fresnel_c(-1e4).unwrap() + 0.5).abs() < 1e-4);
    }

    #[test]
    fn non_finite_is_domain_error() {
        assert!(matches!(fresnel_c(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(fresnel_s(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn branches_join_continuously() {
        let lo = series(SERIES_LIMIT);
        let hi = continued_fraction(SERIES_LIMIT);
        assert!((lo.0 - hi.0).abs() < 1e-14);
        assert!((lo.1 - hi.1).abs() < 1e-14);
    }

    #[test]
    fn known_values() {
        // C(1), S(1) to 15 digits
        let p = fresnel(1.0).unwrap();
        assert!((p.c - 0.779_893_400_376_822_8).abs() < 1e-15);
        assert!((p.s - 0.438_259_147_390_354_8).abs() < 1e-15);
    }

    #[test]
    fn interference_basics() {
        assert!((interf_f(0.0, 0.0, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((interf_f(1e6, 1e6, 1.0).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(interf_g(0.7, 0.7, 1.0).unwrap(), 0.0);
        assert!((lz_window(0.0, 3.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(lz_window(-1e7, 1.0).unwrap() < 1e-7);
        assert!(interf_f(0.0, 0.0, 0.0).is_err());
        assert!(lz_window(1.0, -1.0).is_err());
    }

    #[test]
    fn g_limit_at_infinite_first_argument() {
        let y = 0.37;
        let p = fresnel(y).unwrap();
        let g = interf_g(1e9, y, PI).unwrap();
        assert!((g - (p.s - p.c) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn window_edges() {
        let w = windowed_cs(2.0, 2.0, 1.0).unwrap();
        assert_eq!(w, FresnelPair::default());
        let w = windowed_cs(f64::INFINITY, f64::NEG_INFINITY, 1.0).unwrap();
        assert_eq!(w, FresnelPair::new(1.0, 1.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn interference_symmetries(x in -30.0f64..30.0, y in -30.0f64..30.0, alpha in 0.2f64..5.0) {
                let f = interf_f(x, y, alpha).unwrap();
                let g = interf_g(x, y, alpha).unwrap();
                prop_assert!((f - interf_f(y, x, alpha).unwrap()).abs() < 1e-14);
                prop_assert!((g + interf_g(y, x, alpha).unwrap()).abs() < 1e-14);
                let lhs = f * f + g * g;
                let rhs = lz_window(x, alpha).unwrap() * lz_window(y, alpha).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-14);
            }

            #[test]
            fn odd_and_bounded(x in -1e3f64..1e3) {
                let p = fresnel_unchecked(x);
                let m = fresnel_unchecked(-x);
                prop_assert_eq!(p.c, -m.c);
                prop_assert_eq!(p.s, -m.s);
                prop_assert!(p.c.abs() < 0.78 && p.s.abs() < 0.72);
            }
        }
    }
}
