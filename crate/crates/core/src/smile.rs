//! The maturity-free implied-volatility smile.
//!
//! For every maturity the Bachelier implied volatility factorizes as
//! `𝓘_t(x) = σ_t·I(x/(σ_t√t))` where `I` solves
//! `cb(y, I(y)) = E[cb(y + η(G−1), √G)]` and depends on `(η, k, α)` only.
//! Dividing by the at-the-money level `I₀ = I(0)` gives the normalized smile
//! `𝓘(χ) = I(χ·I₀)/I₀`, a function of the observable coordinate
//! `χ = x/(σ_t^ATM√t)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bachelier::implied_vol_from_time_value;
use crate::chf::{SmileParams, VolOfVol};
use crate::error::Result;
use crate::interp::Pchip;
use crate::normal::{cdf, erf_fn, pdf};
use crate::pricer::{normalized_time_value, QuadratureConfig};
use crate::quad::Tolerance;
use crate::subordinator::{GDistribution, DEFAULT_DEPTH};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

fn expectation_tol() -> Tolerance {
    Tolerance {
        abs: 1e-300,
        rel: 1e-13,
        max_panels: 4000,
    }
}

/// `I(y)`: the implied volatility in moneyness-degree units.
///
/// Priced first (mixture or Lewis at unit scale) and then inverted, so the
/// inversion always sees a price strictly above intrinsic.
pub fn smile_i(y: f64, smile: &SmileParams) -> Result<f64> {
    smile_i_with(y, smile, &QuadratureConfig::default())
}

pub fn smile_i_with(y: f64, smile: &SmileParams, cfg: &QuadratureConfig) -> Result<f64> {
    if smile.vol_of_vol.is_bachelier_limit() {
        return Ok(1.0);
    }
    let tv = normalized_time_value(y, smile, cfg)?;
    implied_vol_from_time_value(y.abs(), tv)
}

/// How the ATM coefficients were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionMethod {
    /// Closed-form expectations over the subordinator density.
    Analytic,
    /// Finite differences of [`smile_i`] (no closed-form density for `α`).
    FiniteDifference,
}

/// Second-order expansion `I(y) ≈ I₀ + I₀'·y + I₀''·y²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmExpansion {
    pub i0: f64,
    pub i0_prime: f64,
    pub i0_second: f64,
    pub method: ExpansionMethod,
}

/// ATM level, slope and curvature of `I`.
pub fn atm_expansion(smile: &SmileParams) -> Result<AtmExpansion> {
    let k = match smile.vol_of_vol {
        VolOfVol::BachelierLimit => {
            return Ok(AtmExpansion {
                i0: 1.0,
                i0_prime: 0.0,
                i0_second: 0.0,
                method: ExpansionMethod::Analytic,
            })
        }
        VolOfVol::Value(k) => k,
    };
    if !smile.alpha.has_closed_form_density() {
        let h = 1e-2;
        let f: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&j| smile_i(j * h, smile))
            .collect::<Result<_>>()?;
        return Ok(AtmExpansion {
            i0: f[2],
            i0_prime: (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h),
            i0_second: (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h),
            method: ExpansionMethod::FiniteDifference,
        });
    }
    let dist = GDistribution::new(k, smile.alpha)?;
    let eta = smile.eta;
    let i0 = atm_level(smile)?;
    let e_erf = dist
        .expectation(|g| erf_fn(eta * (1.0 - g) / (2.0 * g).sqrt()), DEFAULT_DEPTH, expectation_tol())?
        .value;
    let e_pdf = dist
        .expectation(|g| pdf(eta * (1.0 - g) / g.sqrt()) / g.sqrt(), DEFAULT_DEPTH, expectation_tol())?
        .value;
    Ok(AtmExpansion {
        i0,
        i0_prime: -(PI / 2.0).sqrt() * e_erf,
        i0_second: SQRT_2PI * e_pdf - 1.0 / i0,
        method: ExpansionMethod::Analytic,
    })
}

/// `I₀ = √(2π)·E[cb(η(G−1), √G)]`.
pub fn atm_level(smile: &SmileParams) -> Result<f64> {
    smile_i(0.0, smile)
}

/// Slope of the full implied-volatility surface at the money,
/// `∂𝓘_t/∂x (x = 0) = I₀'/√t`.
pub fn skew(t: f64, smile: &SmileParams) -> Result<f64> {
    Ok(atm_expansion(smile)?.i0_prime / t.sqrt())
}

/// `(I'(y), I''(y))` from the implicit-function formulas.
pub fn smile_derivatives(y: f64, smile: &SmileParams) -> Result<(f64, f64)> {
    let k = match smile.vol_of_vol {
        VolOfVol::BachelierLimit => return Ok((0.0, 0.0)),
        VolOfVol::Value(k) => k,
    };
    let dist = GDistribution::new(k, smile.alpha)?;
    let eta = smile.eta;
    let i = smile_i(y, smile)?;
    let d = y / i;
    // Φ(−d) − E[Φ(−w/√G)], or its complement when both terms are close to 1
    let numerator = if y >= 0.0 {
        let e = dist
            .expectation(|g| cdf(-(y + eta * (g - 1.0)) / g.sqrt()), DEFAULT_DEPTH, expectation_tol())?
            .value;
        cdf(-d) - e
    } else {
        let e = dist
            .expectation(|g| cdf((y + eta * (g - 1.0)) / g.sqrt()), DEFAULT_DEPTH, expectation_tol())?
            .value;
        e - cdf(d)
    };
    let i1 = numerator / pdf(d);
    let e2 = dist
        .expectation(|g| pdf((y + eta * (g - 1.0)) / g.sqrt()) / g.sqrt(), DEFAULT_DEPTH, expectation_tol())?
        .value;
    let i2 = e2 / pdf(d) - (1.0 / i - y * i1 / (i * i)) * (1.0 - d * i1);
    Ok((i1, i2))
}

/// Wing limits of `I(y)²/|y|`: `(y → +∞, y → −∞) = (1/(2p⁻), 1/(2p⁺))`.
pub fn wing_limits(smile: &SmileParams) -> (f64, f64) {
    let (pm, pp) = smile.strip();
    (0.5 / pm, 0.5 / pp)
}

/// Normalized smile `𝓘(χ) = I(χ·I₀)/I₀`.
pub fn normalized_smile(chi: f64, smile: &SmileParams) -> Result<f64> {
    let i0 = atm_level(smile)?;
    Ok(smile_i(chi * i0, smile)? / i0)
}

/// Smile with its ATM expansion and a tabulated copy of `I` for plotting.
#[derive(Debug, Clone)]
pub struct SmileFunction {
    pub params: SmileParams,
    pub expansion: AtmExpansion,
    table: Pchip,
}

/// Default plotting grid of the cache.
pub const CACHE_RANGE: f64 = 10.0;
const CACHE_POINTS: usize = 161;

impl SmileFunction {
    pub fn new(params: SmileParams) -> Result<Self> {
        let expansion = atm_expansion(&params)?;
        let ys: Vec<f64> = (0..CACHE_POINTS)
            .map(|i| -CACHE_RANGE + 2.0 * CACHE_RANGE * i as f64 / (CACHE_POINTS - 1) as f64)
            .collect();
        let vs: Vec<f64> = ys.iter().map(|&y| smile_i(y, &params)).collect::<Result<_>>()?;
        Ok(Self {
            params,
            expansion,
            table: Pchip::new(ys, vs)?,
        })
    }

    pub fn i0(&self) -> f64 {
        self.expansion.i0
    }

    /// Exact `I(y)`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        smile_i(y, &self.params)
    }

    /// Exact `𝓘(χ)`.
    pub fn normalized(&self, chi: f64) -> Result<f64> {
        Ok(smile_i(chi * self.i0(), &self.params)? / self.i0())
    }

    /// Interpolated `I(y)` from the cached table, clamped to its range.
    pub fn interpolated(&self, y: f64) -> f64 {
        self.table.eval(y)
    }
}
