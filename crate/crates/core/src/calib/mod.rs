//! Three-stage cascade calibration.
//!
//! 1. discount factors `B₀` and synthetic forwards `F₀` per expiry from
//!    put-call parity ([`parity`]);
//! 2. the ATM implied-volatility term structure `σ_t^ATM` ([`atm`]);
//! 3. `(η, k)` by least squares on normalized out-of-the-money prices, with
//!    `σ_t = σ_t^ATM/I₀(η, k)` so ATM quotes are matched exactly
//!    ([`smile_fit`]).
//!
//! Each stage only reads the frozen output of the previous ones.

pub mod atm;
pub mod optimizer;
pub mod parity;
pub mod smile_fit;
pub mod synth;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::chf::{Alpha, ModelParams, SmileParams, VolCurve, VolOfVol};
use crate::error::{Error, Result};
use crate::marketio::{OisCurve, OptionChain};

pub use atm::{fit_atm_vol, AtmPoint, AtmSource, AtmTermStructure};
pub use optimizer::NelderMeadOptions;
pub use parity::{
    apply_spread_filter, filter_first_expiry, fit_discount_forward, Couple, CouplesSet, ExpiryCouples, ExpiryCurve,
    MarketCurves,
};
pub use smile_fit::{
    evaluate, fit_levy, fit_levy_fixed_ttm, select_quotes, ExpiryQuotes, LevyFit, ObjectiveValue, OptimizerSummary,
    SliceFit,
};
pub use synth::{synthesize, NoiseSpec, SyntheticMarket, SyntheticSpec};

/// Cascade stage at which an expiry was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    DiscountForward,
    SpreadFilter,
    AtmVol,
    Smile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub expiry: NaiveDate,
    pub stage: Stage,
    pub code: String,
    pub reason: String,
}

impl Exclusion {
    pub fn new(expiry: NaiveDate, stage: Stage, err: &Error) -> Self {
        Self {
            expiry,
            stage,
            code: err.code().to_string(),
            reason: err.to_string(),
        }
    }
}

/// Residual weighting of the smile objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// Squared residuals divided by the squared normalized vega at the
    /// market implied volatility (floored at 0.01).
    Vega,
}

/// Search box, start grid and local-search settings of the smile fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub eta_bounds: (f64, f64),
    pub ln_k_bounds: (f64, f64),
    /// `(min, max, points)` of the start grid in `η`.
    pub eta_grid: (f64, f64, usize),
    /// `(min, max, points)` of the start grid in `ln k`.
    pub ln_k_grid: (f64, f64, usize),
    /// Number of best grid points used as Nelder–Mead starts.
    pub starts: usize,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta_bounds: (-5.0, 5.0),
            ln_k_bounds: (-6.0, 3.0),
            eta_grid: (-3.0, 3.0, 7),
            ln_k_grid: (-4.0, 2.0, 7),
            starts: 8,
            nelder_mead: NelderMeadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibConfig {
    pub alpha: Alpha,
    /// Largest `|K − F₀|` used in the smile fit, currency units.
    pub window: f64,
    pub spread_threshold_bps: f64,
    pub weighting: Weighting,
    pub optimizer: OptimizerConfig,
}

impl Default for CalibConfig {
    fn default() -> Self {
        Self {
            alpha: Alpha::INVERSE_GAUSSIAN,
            window: 30.0,
            spread_threshold_bps: 20.0,
            weighting: Weighting::Uniform,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Conditions worth a look in a calibration result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// `k` ended on the lower bound: the smile is indistinguishable from a
    /// flat Bachelier smile.
    KAtLowerBound,
    KAtUpperBound,
    EtaAtBound,
    /// `(σ_t^ATM)²·t` decreases between two included expiries.
    AtmVarianceDecreasing,
}

/// Fit diagnostics of one included expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpiryFit {
    /// Model `σ_t = σ_t^ATM/I₀`.
    pub sigma: f64,
    /// Mean squared normalized residual.
    pub mse: f64,
    /// Mean squared residual in currency units.
    pub mse_price: f64,
    pub quotes: ExpiryQuotes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub value_date: NaiveDate,
    pub alpha: Alpha,
    pub eta: f64,
    pub k: f64,
    pub i0: f64,
    /// `σ_t` knots at the included expiries.
    pub sigma: VolCurve,
    /// Objective value at the optimum.
    pub objective: f64,
    pub expiries: Vec<ExpiryFit>,
    pub excluded: Vec<Exclusion>,
    pub flags: Vec<Flag>,
    pub optimizer: OptimizerSummary,
    pub config: CalibConfig,
}

impl CalibrationResult {
    pub fn smile(&self) -> Result<SmileParams> {
        Ok(SmileParams {
            eta: self.eta,
            vol_of_vol: VolOfVol::new(self.k)?,
            alpha: self.alpha,
        })
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.sigma.clone(), self.smile()?))
    }

    /// `(mse, mse_price)` per expiry recomputed from the stored parameters
    /// and quotes.
    pub fn recompute_mse(&self) -> Result<Vec<(f64, f64)>> {
        let quotes: Vec<ExpiryQuotes> = self.expiries.iter().map(|e| e.quotes.clone()).collect();
        let v = evaluate(&quotes, self.alpha, |_| (self.eta, self.k))?;
        Ok(quotes
            .iter()
            .zip(v.mse)
            .map(|(q, m)| (m, m * q.price_unit() * q.price_unit()))
            .collect())
    }
}

/// Stage 3: fits `(η, k)` on the frozen stage-1 and stage-2 outputs.
pub fn fit_smile(
    chain: &OptionChain,
    curves: &MarketCurves,
    atm: &AtmTermStructure,
    cfg: &CalibConfig,
) -> Result<CalibrationResult> {
    let (quotes, empty) = select_quotes(chain, curves, atm, cfg.window, cfg.weighting);
    if quotes.is_empty() {
        return Err(Error::EmptyQuoteSet);
    }
    let (m, optimizer) = smile_fit::multistart(
        |eta, lk| {
            evaluate(&quotes, cfg.alpha, |_| (eta, lk.exp()))
                .map(|v| v.total)
                .unwrap_or(f64::INFINITY)
        },
        &cfg.optimizer,
    )?;
    let (eta, k) = (m.x[0], m.x[1].exp());
    let v = evaluate(&quotes, cfg.alpha, |_| (eta, k))?;
    let i0 = v.i0[0];
    let knots: Vec<(f64, f64)> = quotes.iter().map(|q| (q.t, q.sigma_atm / i0)).collect();
    let sigma = VolCurve::new_unchecked_variance(knots)?;

    let mut flags = Vec::new();
    let b = &cfg.optimizer;
    if m.x[1] <= b.ln_k_bounds.0 + 1e-3 {
        flags.push(Flag::KAtLowerBound);
    }
    if m.x[1] >= b.ln_k_bounds.1 - 1e-3 {
        flags.push(Flag::KAtUpperBound);
    }
    if m.x[0] <= b.eta_bounds.0 + 1e-3 || m.x[0] >= b.eta_bounds.1 - 1e-3 {
        flags.push(Flag::EtaAtBound);
    }
    if !sigma.is_variance_monotone() {
        flags.push(Flag::AtmVarianceDecreasing);
    }

    let mut excluded = curves.excluded.clone();
    excluded.extend(atm.excluded.iter().cloned());
    excluded.extend(empty);
    excluded.sort_by_key(|e| e.expiry);

    let expiries = quotes
        .into_iter()
        .zip(v.mse)
        .map(|(q, mse)| ExpiryFit {
            sigma: q.sigma_atm / i0,
            mse,
            mse_price: mse * q.price_unit() * q.price_unit(),
            quotes: q,
        })
        .collect();
    Ok(CalibrationResult {
        value_date: curves.value_date,
        alpha: cfg.alpha,
        eta,
        k,
        i0,
        sigma,
        objective: v.total,
        expiries,
        excluded,
        flags,
        optimizer,
        config: *cfg,
    })
}

/// Outputs of every cascade stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Stage-1 curves after the first-expiry filter.
    pub curves: MarketCurves,
    pub atm: AtmTermStructure,
    pub result: CalibrationResult,
}

/// Runs the full cascade. The OIS curve is required by the first-expiry
/// filter.
pub fn calibrate(chain: &OptionChain, ois: Option<&OisCurve>, cfg: &CalibConfig) -> Result<Calibration> {
    let ois = ois.ok_or(Error::MissingOisCurve)?;
    let couples = CouplesSet::from_chain(chain)?;
    let curves = apply_spread_filter(&fit_discount_forward(&couples, Some(ois)), cfg.spread_threshold_bps)?;
    let atm = fit_atm_vol(chain, &curves);
    let result = fit_smile(chain, &curves, &atm, cfg)?;
    Ok(Calibration { curves, atm, result })
}
