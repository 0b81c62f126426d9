//! Closed-form Bachelier (normal model) pricing, Greeks and implied volatility.
//!
//! Prices are expressed through the normalized call
//! `cb(y, σ) = −y·Φ(−y/σ) + σ·φ(−y/σ)`, which is positively homogeneous of
//! degree one in `(y, σ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{call_kernel, cdf, ln_call_kernel, pdf};

/// `|y/σ|` beyond which implied volatilities are rejected; `h(37)` is close to
/// the smallest positive double.
pub const MAX_NORMALIZED_MONEYNESS: f64 = 37.0;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// An option quote in Bachelier units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    /// Moneyness `K − F₀` in price units.
    pub x: f64,
    /// Time to maturity in years.
    pub t: f64,
    /// Discount factor `B₀`.
    pub discount: f64,
    /// Call price.
    pub price: f64,
}

impl Quote {
    pub fn intrinsic(&self) -> f64 {
        self.discount * (-self.x).max(0.0)
    }
}

/// Normalized Bachelier call `cb(y, σ)`.
///
/// Computed as intrinsic plus time value so that the intrinsic part is exact
/// and the price stays monotone in `σ` deep in the money.
#[inline]
pub fn cb(y: f64, sigma: f64) -> f64 {
    (-y).max(0.0) + time_value(y, sigma)
}

/// Time value `cb(y, σ) − max(−y, 0)`, symmetric in `y`.
#[inline]
pub fn time_value(y: f64, sigma: f64) -> f64 {
    sigma * call_kernel(y.abs() / sigma)
}

/// Bachelier call price `B₀·√t·cb(x/√t, σ_b)`.
pub fn bachelier_call(x: f64, t: f64, discount: f64, sigma_b: f64) -> f64 {
    let s = sigma_b * t.sqrt();
    discount * ((-x).max(0.0) + s * call_kernel(x.abs() / s))
}

/// Sensitivities of `cb(y, σ)`.
///
/// `delta` and `gamma` are taken with respect to `−y` (equivalently the
/// forward), `vega` with respect to `σ`, and `vanna` is `∂delta/∂σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Greeks {
    pub delta: f64,
    pub vega: f64,
    pub gamma: f64,
    pub vanna: f64,
}

pub fn greeks(y: f64, sigma: f64) -> Greeks {
    let d = -y / sigma;
    let density = pdf(d);
    Greeks {
        delta: cdf(d),
        vega: density,
        gamma: density / sigma,
        vanna: y / (sigma * sigma) * density,
    }
}

/// Implied Bachelier volatility of a quote, in price units per √year.
pub fn implied_vol(q: &Quote) -> Result<f64> {
    if !(q.t > 0.0) {
        return Err(Error::invalid("t", format!("must be positive, got {}", q.t)));
    }
    if !(q.discount > 0.0) {
        return Err(Error::invalid("discount", format!("must be positive, got {}", q.discount)));
    }
    let sqrt_t = q.t.sqrt();
    let c = q.price / (q.discount * sqrt_t);
    let sigma = implied_vol_normalized(q.x / sqrt_t, c).map_err(|e| match e {
        Error::PriceBelowIntrinsic { .. } => Error::PriceBelowIntrinsic {
            price: q.price,
            intrinsic: q.intrinsic(),
        },
        other => other,
    })?;
    Ok(sigma)
}

/// Solves `cb(y, σ) = c` for `σ`.
pub fn implied_vol_normalized(y: f64, c: f64) -> Result<f64> {
    if !c.is_finite() || !y.is_finite() {
        return Err(Error::PriceNotFinite);
    }
    let intrinsic = (-y).max(0.0);
    let tv = c - intrinsic;
    if !(tv > 0.0) {
        return Err(Error::PriceBelowIntrinsic { price: c, intrinsic });
    }
    implied_vol_from_time_value(y.abs(), tv)
}

/// Solves `σ·h(a/σ) = tv` for `a ≥ 0`, `tv > 0`.
///
/// Newton iterations on `ln σ ↦ ln(σ·h(a/σ)) − ln tv`, which is increasing
/// and concave, with a bisection bracket that catches overshoots.
pub fn implied_vol_from_time_value(a: f64, tv: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(tv * SQRT_2PI);
    }
    let target = tv.ln();
    let g = |ls: f64| -> (f64, f64) {
        let sigma = ls.exp();
        let d = a / sigma;
        let ln_h = ln_call_kernel(d);
        // d/d(ln σ) ln(σ h(a/σ)) = φ(d)/h(d)
        let slope = (-0.5 * d * d - ln_h).exp() / SQRT_2PI;
        (ls + ln_h - target, slope)
    };
    let mut lo = (a / MAX_NORMALIZED_MONEYNESS).ln();
    let (g_lo, _) = g(lo);
    if g_lo > 0.0 {
        return Err(Error::OutOfNumericRange {
            limit: MAX_NORMALIZED_MONEYNESS,
        });
    }
    // h(d) ≥ φ(0) − d/2, so σ·h(a/σ) ≥ tv at σ = (tv + a/2)·√(2π)
    let mut hi = ((tv + 0.5 * a) * SQRT_2PI * (1.0 + 1e-12)).ln();
    let mut x = (tv * SQRT_2PI).ln().clamp(lo, hi);
    for _ in 0..200 {
        let (gx, slope) = g(x);
        if gx == 0.0 {
            return Ok(x.exp());
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - gx / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(next.exp());
        }
        x = next;
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Ok(x.exp());
        }
    }
    Ok(x.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normalized_call_reference_values() {
        // mpmath, 40 digits
        assert_relative_eq!(cb(0.0, 1.0), 0.398_942_280_401_432_68, max_relative = 1e-15);
        assert_relative_eq!(cb(0.3, 0.8), 0.191_335_005_097_632_29, max_relative = 1e-14);
        assert_relative_eq!(cb(2.5, 0.4), 1.253_487_095_761_886_3e-11, max_relative = 1e-13);
        assert_relative_eq!(cb(-1.5, 0.7), 1.504_019_327_902_889_7, max_relative = 1e-14);
    }

    #[test]
    fn parity_and_homogeneity() {
        let (y, s) = (0.3, 0.8);
        assert_relative_eq!(cb(-y, s) - cb(y, s), y, max_relative = 1e-14);
        assert_relative_eq!(cb(2.0 * y, 2.0 * s), 2.0 * cb(y, s), max_relative = 1e-15);
    }

    #[test]
    fn call_factorizations_agree() {
        for &x in &[-20.0, -3.0, 0.0, 1.5, 12.0] {
            for &t in &[0.1, 1.0, 2.0] {
                let a = bachelier_call(x, t, 0.97, 9.0);
                let b = 0.97 * t.sqrt() * cb(x / t.sqrt(), 9.0);
                assert_relative_eq!(a, b, max_relative = 1e-14);
            }
        }
        assert_relative_eq!(bachelier_call(0.0, 1.0, 1.0, 10.0), 3.989_422_804_014_327, max_relative = 1e-15);
    }

    #[test]
    fn zero_vol_limit_is_intrinsic() {
        assert_relative_eq!(bachelier_call(-5.0, 1.0, 0.9, 1e-9), 4.5, max_relative = 1e-14);
    }

    #[test]
    fn greeks_at_the_money() {
        let g = greeks(0.0, 2.0);
        assert_eq!(g.delta, 0.5);
        assert_relative_eq!(g.vega, pdf(0.0));
        assert_relative_eq!(g.gamma, pdf(0.0) / 2.0);
        assert_eq!(g.vanna, 0.0);
    }

    #[test]
    fn greeks_match_finite_differences() {
        let (y, s) = (0.7, 1.3);
        let g = greeks(y, s);
        let h = 1e-5;
        let vega_fd = (cb(y, s + h) - cb(y, s - h)) / (2.0 * h);
        assert!((g.vega - vega_fd).abs() < 1e-8);
        let h = 1e-4;
        let gamma_fd = (cb(y + h, s) - 2.0 * cb(y, s) + cb(y - h, s)) / (h * h);
        assert!((g.gamma - gamma_fd).abs() < 1e-6);
        let delta_fd = -(cb(y + h, s) - cb(y - h, s)) / (2.0 * h);
        assert!((g.delta - delta_fd).abs() < 1e-8);
        let vanna_fd = (greeks(y, s + h).delta - greeks(y, s - h).delta) / (2.0 * h);
        assert!((g.vanna - vanna_fd).abs() < 1e-7);
    }

    #[test]
    fn implied_vol_round_trip() {
        let (x, sigma, t) = (3.0, 12.0, 0.5);
        let price = bachelier_call(x, t, 0.95, sigma);
        let q = Quote { x, t, discount: 0.95, price };
        assert!((implied_vol(&q).unwrap() - sigma).abs() < 1e-10);
    }

    #[test]
    fn implied_vol_at_the_money_is_closed_form() {
        let q = Quote { x: 0.0, t: 2.0, discount: 0.9, price: 5.0 };
        assert_relative_eq!(implied_vol(&q).unwrap(), 5.0 * SQRT_2PI / (0.9 * 2f64.sqrt()), max_relative = 1e-15);
    }

    #[test]
    fn implied_vol_rejects_bad_prices() {
        let q = Quote { x: -4.0, t: 1.0, discount: 0.5, price: 2.0 };
        assert!(matches!(implied_vol(&q), Err(Error::PriceBelowIntrinsic { .. })));
        let q = Quote { x: 1.0, t: 1.0, discount: 1.0, price: f64::NAN };
        assert!(matches!(implied_vol(&q), Err(Error::PriceNotFinite)));
        let q = Quote { x: 1.0, t: 1.0, discount: 1.0, price: 1e-320 };
        assert!(matches!(implied_vol(&q), Err(Error::OutOfNumericRange { .. })));
    }

    #[test]
    fn implied_vol_in_the_far_wing() {
        // d = 30: time value about 1e-199
        let y = 30.0;
        let c = cb(y, 1.0);
        assert!(c > 0.0);
        assert_relative_eq!(implied_vol_normalized(y, c).unwrap(), 1.0, max_relative = 1e-13);
        let c = cb(-5.0, 1.0);
        assert_relative_eq!(implied_vol_normalized(-5.0, c).unwrap(), 1.0, max_relative = 1e-9);
    }
}
