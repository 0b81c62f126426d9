//! Model call prices by two independent routes: a Lewis-type Fourier integral
//! along a shifted contour, and an expectation of Bachelier prices over the
//! subordinator `G`.
//!
//! Both work internally on the unit-scale variable `z` (so `f_t = σ_t√t·z`)
//! and return the normalized time value `E[(z − y)⁺] − max(−y, 0)` at the
//! moneyness degree `y = x/(σ_t√t)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bachelier;
use crate::chf::{AdditiveLaw, Alpha, SliceParams, SmileParams, VolOfVol};
use crate::error::{Error, Result};
use crate::quad::{self, TailPanels, Tolerance};
use crate::subordinator::{GDistribution, DEFAULT_DEPTH};

/// Choice of the Lewis contour `Im(u) = a` (normalized units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Contour {
    /// Minimizer of `y·a + ln E[exp(−a·z)]`, restricted to 90% of the strip
    /// and kept away from `a = 0`. This contour prices the out-of-the-money
    /// option, so far-wing prices keep their relative accuracy.
    Saddle,
    /// A fixed shift `a ∈ (−p⁻, p⁺)`, `a ≠ 0`.
    Fixed(f64),
    /// `a = f·p⁺` for `f > 0` and `a = f·p⁻` for `f < 0`, with `f ∈ (−1, 1)`.
    StripFraction(f64),
}

/// Settings shared by the Lewis and mixture pricers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub contour: Contour,
    /// Relative accuracy target.
    pub rel_tol: f64,
    /// Accepted error estimate relative to the price before
    /// [`Error::QuadratureNotConverged`] is raised.
    pub max_rel_error: f64,
    /// Panel budget of the adaptive integrators.
    pub max_panels: usize,
    /// Log-density depth of the `G` integration range.
    pub g_depth: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            contour: Contour::Saddle,
            rel_tol: 1e-12,
            max_rel_error: 1e-7,
            max_panels: 4000,
            g_depth: DEFAULT_DEPTH,
        }
    }
}

/// Real Laplace exponent and its derivative at `s` (argument of ψ).
fn psi_real(s: f64, vol_of_vol: VolOfVol, alpha: Alpha) -> Option<(f64, f64)> {
    let k = match vol_of_vol {
        VolOfVol::BachelierLimit => return Some((-s, -1.0)),
        VolOfVol::Value(k) => k,
    };
    let a = alpha.value();
    if a == 0.0 {
        let x = 1.0 + k * s;
        if x <= 0.0 {
            return None;
        }
        Some((-x.ln() / k, -1.0 / x))
    } else {
        let x = 1.0 + k * s / (1.0 - a);
        if x <= 0.0 {
            return None;
        }
        let p = x.powf(a);
        Some(((1.0 - a) / (a * k) * (1.0 - p), -p / x))
    }
}

/// `L(b) = ln E[exp(b·z)]` and `L'(b)` for real `b ∈ (−p⁺, p⁻)`.
pub(crate) fn log_mgf(smile: &SmileParams, b: f64) -> Option<(f64, f64)> {
    let eta = smile.eta;
    let s = b * eta - 0.5 * b * b;
    let (p, dp) = psi_real(s, smile.vol_of_vol, smile.alpha)?;
    Some((p + b * eta, dp * (eta - b) + eta))
}

/// Saddle shift `a*` and the exponent `y·a* + L(−a*)` (a Chernoff bound on
/// the log time value).
pub(crate) fn saddle(y: f64, smile: &SmileParams) -> (f64, f64) {
    let (pm, pp) = smile.strip();
    // b = −a ∈ [−0.9 p⁺, 0.9 p⁻]; L' is increasing with L'(0) = 0
    let b_hi = (0.9 * pm).min(1e3);
    let b_lo = -(0.9 * pp).min(1e3);
    let (mut lo, mut hi) = if y >= 0.0 { (0.0, b_hi) } else { (b_lo, 0.0) };
    let deriv = |b: f64| log_mgf(smile, b).map(|v| v.1).unwrap_or(f64::NAN);
    let b = if y >= 0.0 && deriv(hi) <= y {
        hi
    } else if y < 0.0 && deriv(lo) >= y {
        lo
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if deriv(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    // keep away from the 1/(iξ − a)² pole at the origin
    let floor = 0.25_f64.min(0.5 * if y >= 0.0 { pm } else { pp });
    let b = if y >= 0.0 { b.max(floor) } else { b.min(-floor) };
    let exponent = log_mgf(smile, b).map(|v| v.0).unwrap_or(0.0) - y * b;
    (-b, exponent)
}

fn contour_shift(y: f64, smile: &SmileParams, contour: Contour) -> Result<f64> {
    let (pm, pp) = smile.strip();
    let a = match contour {
        Contour::Saddle => saddle(y, smile).0,
        Contour::Fixed(a) => a,
        Contour::StripFraction(f) => {
            if !(f > -1.0 && f < 1.0) || f == 0.0 {
                return Err(Error::invalid("contour", format!("strip fraction must lie in (-1, 0) ∪ (0, 1), got {f}")));
            }
            if smile.vol_of_vol.is_bachelier_limit() {
                // the strip is the whole plane; scale with the moneyness
                2.0 * f * (1.0 + y.abs())
            } else if f > 0.0 {
                f * pp
            } else {
                f * pm
            }
        }
    };
    if !(a > -pm && a < pp) {
        return Err(Error::OutsideStrip {
            im: a,
            lower: -pm,
            upper: pp,
        });
    }
    if a == 0.0 {
        return Err(Error::invalid("contour", "a = 0 puts the pole on the contour"));
    }
    Ok(a)
}

/// Normalized time value by the Lewis integral.
///
/// `E[(z − y)⁺] = R_a + e^{ya}/(2π) ∫ φ(ξ + ia)·e^{−iξy}/(iξ − a)² dξ`, with
/// `R_a = 0` for `a < 0` and `R_a = −y` for `a > 0`; the integral over the
/// real line is folded onto `[0, ∞)` by conjugate symmetry.
pub fn lewis_time_value(y: f64, smile: &SmileParams, cfg: &QuadratureConfig) -> Result<f64> {
    let a = contour_shift(y, smile, cfg.contour)?;
    let ia = Complex64::new(0.0, a);
    let log_cf = |xi: f64| smile.log_cf_unchecked(ia + xi);
    // check once: the strip makes the branch cut unreachable along the line
    smile.log_cf(ia)?;
    let integrand = |xi: f64| -> f64 {
        let Ok(l) = log_cf(xi) else { return f64::NAN };
        let e = (l + Complex64::new(y * a, -xi * y)).exp();
        let d = Complex64::new(-a, xi);
        (e / (d * d)).re / PI
    };
    let envelope = |xi: f64| -> f64 {
        match log_cf(xi) {
            Ok(l) => (l.re + y * a).exp() / (xi * xi + a * a) / PI,
            Err(_) => f64::NAN,
        }
    };
    let f0 = envelope(0.0);
    let abs_tol = cfg.rel_tol * 1e-2 * f0;

    // body: up to where the envelope has dropped by 1e-6 (capped)
    let mut x0 = 0.5;
    while envelope(x0) > 1e-6 * f0 && x0 < 4096.0 {
        x0 *= 2.0;
    }
    let freq = (y - smile.eta).abs();
    let n_body = if freq > 0.0 {
        ((x0 * freq / PI).ceil() as usize).clamp(8, 2000)
    } else {
        8
    };
    let breaks: Vec<f64> = (0..=n_body).map(|i| x0 * i as f64 / n_body as f64).collect();
    let body = quad::adaptive(
        integrand,
        &breaks,
        Tolerance {
            abs: abs_tol,
            rel: cfg.rel_tol,
            max_panels: cfg.max_panels.max(2 * n_body),
        },
    );
    let mut value = body.value;
    let mut error = body.error;
    if envelope(x0) > abs_tol * 1e-3 {
        let panels = if freq * x0 > 1.0 {
            TailPanels::Periodic(PI / freq)
        } else {
            TailPanels::Geometric
        };
        let tail = quad::tail(integrand, x0, panels, abs_tol.max(cfg.rel_tol * body.value.abs() * 1e-2), 2000);
        value += tail.value;
        error += tail.error;
    }
    let residue = if a > 0.0 { -y } else { 0.0 };
    let tv = value + (residue - (-y).max(0.0));
    if !tv.is_finite() || error > cfg.max_rel_error * tv.abs().max(1e-3 * abs_tol) {
        return Err(Error::QuadratureNotConverged { estimate: error });
    }
    Ok(tv)
}

/// Normalized time value by the mixture formula
/// `E[cb(y + η(G−1), √G)] − max(−y, 0)`, evaluated without cancellation by
/// reflecting in-the-money strikes.
pub fn mixture_time_value(y: f64, smile: &SmileParams, cfg: &QuadratureConfig) -> Result<f64> {
    let k = match smile.vol_of_vol {
        VolOfVol::BachelierLimit => return Ok(bachelier::time_value(y, 1.0)),
        VolOfVol::Value(k) => k,
    };
    let dist = GDistribution::new(k, smile.alpha)?;
    let (ys, es) = if y < 0.0 { (-y, -smile.eta) } else { (y, smile.eta) };
    // the integrand's mass can sit far in the density tail for wing strikes
    let (_, exponent) = saddle(y, smile);
    let depth = cfg.g_depth + (-exponent).max(0.0);
    let r = dist.expectation(
        |g| {
            let sg = g.sqrt();
            sg * crate::normal::call_kernel((ys + es * (g - 1.0)) / sg)
        },
        depth,
        Tolerance {
            abs: 1e-300,
            rel: cfg.rel_tol,
            max_panels: cfg.max_panels,
        },
    )?;
    if !r.value.is_finite() || r.error > cfg.max_rel_error * r.value.abs() + 1e-300 {
        return Err(Error::QuadratureNotConverged { estimate: r.error });
    }
    Ok(r.value)
}

/// Normalized time value with the mixture route for `α ∈ {0, 1/2}` and the
/// Lewis route otherwise.
pub fn normalized_time_value(y: f64, smile: &SmileParams, cfg: &QuadratureConfig) -> Result<f64> {
    if smile.alpha.has_closed_form_density() || smile.vol_of_vol.is_bachelier_limit() {
        mixture_time_value(y, smile, cfg)
    } else {
        lewis_time_value(y, smile, cfg)
    }
}

fn slice_call(x: f64, discount: f64, slice: &SliceParams, tv: f64) -> f64 {
    discount * (slice.scale * tv + (-x).max(0.0))
}

fn check_inputs(t: f64, discount: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be positive, got {t}")));
    }
    if !(discount > 0.0 && discount.is_finite()) {
        return Err(Error::invalid("discount", format!("must be positive, got {discount}")));
    }
    Ok(())
}

/// Call price by the Lewis formula.
pub fn lewis_call<L: AdditiveLaw>(x: f64, t: f64, discount: f64, law: &L, cfg: &QuadratureConfig) -> Result<f64> {
    check_inputs(t, discount)?;
    let slice = law.slice(t);
    let tv = lewis_time_value(x / slice.scale, &slice.smile(), cfg)?;
    Ok(slice_call(x, discount, &slice, tv))
}

/// Call price by the mixture formula (`α ∈ {0, 1/2}` only).
pub fn mixture_call<L: AdditiveLaw>(x: f64, t: f64, discount: f64, law: &L, cfg: &QuadratureConfig) -> Result<f64> {
    check_inputs(t, discount)?;
    let slice = law.slice(t);
    if !slice.alpha.has_closed_form_density() && !slice.vol_of_vol.is_bachelier_limit() {
        return Err(Error::UnsupportedAlpha {
            alpha: slice.alpha.value(),
        });
    }
    let tv = mixture_time_value(x / slice.scale, &slice.smile(), cfg)?;
    Ok(slice_call(x, discount, &slice, tv))
}

/// Put price from a call price by parity: `P = C + B₀·x`.
pub fn put_from_call(call: f64, x: f64, discount: f64) -> f64 {
    call + discount * x
}

/// Lévy (normal tempered stable) benchmark expressed in the additive
/// parametrization: `σ_t = σ̂`, `η_t = η̂·√t`, `k_t = k̂/t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyParams {
    pub sigma_hat: f64,
    pub eta_hat: f64,
    pub k_hat: f64,
    pub alpha: Alpha,
}

pub fn levy_benchmark_params(sigma_hat: f64, eta_hat: f64, k_hat: f64, alpha: Alpha) -> Result<LevyParams> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(Error::invalid("sigma_hat", format!("must be positive, got {sigma_hat}")));
    }
    VolOfVol::new(k_hat)?;
    if !eta_hat.is_finite() {
        return Err(Error::invalid("eta_hat", "must be finite"));
    }
    Ok(LevyParams {
        sigma_hat,
        eta_hat,
        k_hat,
        alpha,
    })
}

impl AdditiveLaw for LevyParams {
    fn alpha(&self) -> Alpha {
        self.alpha
    }

    fn slice(&self, t: f64) -> SliceParams {
        SliceParams {
            scale: self.sigma_hat * t.sqrt(),
            eta: self.eta_hat * t.sqrt(),
            vol_of_vol: VolOfVol::Value(self.k_hat / t),
            alpha: self.alpha,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chf::{ModelParams, VolCurve};
    use approx::assert_relative_eq;

    fn model(eta: f64, k: f64, alpha: f64) -> ModelParams {
        ModelParams::new(VolCurve::flat(10.0).unwrap(), SmileParams::new(eta, k, alpha).unwrap())
    }

    #[test]
    fn time_values_match_reference() {
        // mpmath, 40 digits: normalized time values
        let cases = [
            (0.0, -0.5, 1.0, -1.0, 0.061_313_240_195_240_387),
            (0.0, -0.5, 1.0, 0.0, 0.404_353_773_141_755_62),
            (0.0, -0.5, 1.0, 2.5, 0.033_191_378_911_909_295),
            (0.0, 0.8, 0.25, 1.0, 0.078_349_934_058_210_006),
            (0.5, -0.5, 1.0, 1.0, 0.140_933_862_138_256_66),
            (0.5, 0.8, 0.25, -1.0, 0.120_611_948_876_124_78),
            (0.5, 0.8, 0.25, 2.5, 0.001_885_295_221_890_475_4),
        ];
        let cfg = QuadratureConfig::default();
        for (alpha, eta, k, y, expected) in cases {
            let s = SmileParams::new(eta, k, alpha).unwrap();
            let m = mixture_time_value(y, &s, &cfg).unwrap();
            let l = lewis_time_value(y, &s, &cfg).unwrap();
            assert_relative_eq!(m, expected, max_relative = 1e-11);
            assert_relative_eq!(l, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn contour_independence() {
        let s = SmileParams::new(-0.5, 1.0, 0.5).unwrap();
        for y in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            let lo = QuadratureConfig {
                contour: Contour::StripFraction(-0.5),
                ..Default::default()
            };
            let hi = QuadratureConfig {
                contour: Contour::StripFraction(0.5),
                ..Default::default()
            };
            let a = lewis_time_value(y, &s, &lo).unwrap();
            let b = lewis_time_value(y, &s, &hi).unwrap();
            assert!((a - b).abs() < 1e-9, "y={y}: {a} vs {b}");
        }
    }

    #[test]
    fn contour_outside_strip_is_rejected() {
        let s = SmileParams::new(0.0, 1.0, 0.5).unwrap();
        let cfg = QuadratureConfig {
            contour: Contour::Fixed(1.5),
            ..Default::default()
        };
        assert!(matches!(lewis_time_value(1.0, &s, &cfg), Err(Error::OutsideStrip { .. })));
    }

    #[test]
    fn bachelier_limit_matches_closed_form() {
        let m = ModelParams::new(VolCurve::flat(10.0).unwrap(), SmileParams::bachelier_limit(Alpha::INVERSE_GAUSSIAN));
        let cfg = QuadratureConfig::default();
        for x in [-30.0, -7.5, 0.0, 2.5, 30.0] {
            let p = lewis_call(x, 0.5, 0.98, &m, &cfg).unwrap();
            assert_relative_eq!(p, bachelier::bachelier_call(x, 0.5, 0.98, 10.0), max_relative = 1e-10);
        }
    }

    #[test]
    fn atm_price_with_zero_skew() {
        // η = 0, x = 0: B₀·σ√t·E[√G]·φ(0)
        let m = model(0.0, 0.8, 0.5);
        let dist = GDistribution::new(0.8, Alpha::INVERSE_GAUSSIAN).unwrap();
        let e_sqrt = dist.expectation(|g| g.sqrt(), 50.0, Tolerance::default()).unwrap().value;
        let expected = 0.9 * 10.0 * 0.5_f64.sqrt() * e_sqrt * crate::normal::pdf(0.0);
        let cfg = QuadratureConfig::default();
        assert_relative_eq!(mixture_call(0.0, 0.5, 0.9, &m, &cfg).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn general_alpha_only_by_lewis() {
        let m = model(-0.2, 0.6, 0.3);
        let cfg = QuadratureConfig::default();
        assert!(matches!(mixture_call(1.0, 1.0, 1.0, &m, &cfg), Err(Error::UnsupportedAlpha { .. })));
        let p = lewis_call(1.0, 1.0, 1.0, &m, &cfg).unwrap();
        assert!(p > 0.0 && p < 10.0);
    }

    #[test]
    fn payoff_limits() {
        let m = model(-0.5, 1.0, 0.5);
        let cfg = QuadratureConfig::default();
        let far_otm = lewis_call(400.0, 1.0, 0.95, &m, &cfg).unwrap();
        assert!(far_otm > 0.0 && far_otm < 1e-8);
        let far_itm = lewis_call(-400.0, 1.0, 0.95, &m, &cfg).unwrap();
        assert_relative_eq!(far_itm, 0.95 * 400.0, max_relative = 1e-12);
    }

    #[test]
    fn levy_mapping_is_linear_in_time() {
        let l = levy_benchmark_params(8.0, -0.4, 0.9, Alpha::INVERSE_GAUSSIAN).unwrap();
        let u = Complex64::new(0.03, -0.01);
        let a = l.log_cf(u, 0.7).unwrap();
        let b = l.log_cf(u, 1.4).unwrap();
        assert_relative_eq!(b.re, 2.0 * a.re, max_relative = 1e-12);
        assert_relative_eq!(b.im, 2.0 * a.im, max_relative = 1e-12);
        let at_one = l.slice(1.0);
        assert_eq!((at_one.scale, at_one.eta), (8.0, -0.4));
        assert_eq!(at_one.vol_of_vol, VolOfVol::Value(0.9));
    }
}
