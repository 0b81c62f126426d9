//! Stage 3: the `(η, k)` smile fit and the per-expiry benchmark fits.
//!
//! Market out-of-the-money prices inside the moneyness window are normalized
//! as `𝒞 = price/(B₀·√t·σ_t^ATM)` at `χ = x/(σ_t^ATM·√t)`. With
//! `σ_t = σ_t^ATM/I₀` the model counterpart is `𝒞(χ) = TV(χ·I₀)/I₀`, where
//! `TV` is the unit-scale time value, so the fit never touches `σ_t`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::atm::{otm_quotes, AtmTermStructure};
use super::optimizer::{minimize, Minimum};
use super::{CalibConfig, Exclusion, MarketCurves, OptimizerConfig, Stage, Weighting};
use crate::bachelier::implied_vol_from_time_value;
use crate::chf::{Alpha, SmileParams, VolOfVol};
use crate::error::{Error, Result};
use crate::marketio::OptionChain;
use crate::normal::pdf;
use crate::pricer::{normalized_time_value, QuadratureConfig};
use crate::subordinator::{GDistribution, GRule};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Normalized market quotes of one expiry, sorted by strike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpiryQuotes {
    pub expiry: NaiveDate,
    pub t: f64,
    pub discount: f64,
    pub forward: f64,
    pub sigma_atm: f64,
    pub strikes: Vec<f64>,
    pub chi: Vec<f64>,
    /// `𝒞^mkt(χ)`.
    pub market: Vec<f64>,
    /// Residual weights (all ones unless vega weighting is on).
    pub weights: Vec<f64>,
}

impl ExpiryQuotes {
    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    /// Currency value of one unit of normalized price.
    pub fn price_unit(&self) -> f64 {
        self.discount * self.t.sqrt() * self.sigma_atm
    }
}

fn vega_weight(chi: f64, market: f64) -> f64 {
    // market implied vol relative to σ^ATM, then the normalized vega there
    match implied_vol_from_time_value(chi.abs(), market) {
        Ok(v) => 1.0 / pdf(chi / v).max(1e-2).powi(2),
        Err(_) => 1.0,
    }
}

/// Collects the stage-3 inputs. Expiries without quotes in the window are
/// returned as exclusions.
pub fn select_quotes(
    chain: &OptionChain,
    curves: &MarketCurves,
    atm: &AtmTermStructure,
    window: f64,
    weighting: Weighting,
) -> (Vec<ExpiryQuotes>, Vec<Exclusion>) {
    let mut out = Vec::new();
    let mut excluded = Vec::new();
    for c in &curves.expiries {
        let Some(p) = atm.get(c.expiry) else { continue };
        let unit = c.discount * c.t.sqrt() * p.sigma_atm;
        let mut q = ExpiryQuotes {
            expiry: c.expiry,
            t: c.t,
            discount: c.discount,
            forward: c.forward,
            sigma_atm: p.sigma_atm,
            strikes: vec![],
            chi: vec![],
            market: vec![],
            weights: vec![],
        };
        for o in otm_quotes(chain, c.expiry, c.forward, c.discount) {
            if o.x.abs() > window {
                continue;
            }
            let chi = o.x / (p.sigma_atm * c.t.sqrt());
            let market = o.price / unit;
            q.strikes.push(o.strike);
            q.chi.push(chi);
            q.market.push(market);
            q.weights.push(match weighting {
                Weighting::Uniform => 1.0,
                Weighting::Vega => vega_weight(chi, market),
            });
        }
        if q.is_empty() {
            excluded.push(Exclusion::new(c.expiry, Stage::Smile, &Error::EmptyQuoteSet));
        } else {
            out.push(q);
        }
    }
    (out, excluded)
}

/// Unit-scale time-value engine for one `(η, k, α)`.
enum Engine {
    Rule(GRule, f64),
    Generic(SmileParams, QuadratureConfig),
}

impl Engine {
    fn new(eta: f64, k: f64, alpha: Alpha) -> Result<Self> {
        if alpha.has_closed_form_density() {
            Ok(Engine::Rule(GRule::new(GDistribution::new(k, alpha)?)?, eta))
        } else {
            let s = SmileParams {
                eta,
                vol_of_vol: VolOfVol::new(k)?,
                alpha,
            };
            Ok(Engine::Generic(s, QuadratureConfig::default()))
        }
    }

    fn time_value(&self, y: f64) -> Result<f64> {
        match self {
            Engine::Rule(r, eta) => Ok(r.time_value(y, *eta)),
            Engine::Generic(s, cfg) => normalized_time_value(y, s, cfg),
        }
    }

    fn i0(&self) -> Result<f64> {
        Ok(SQRT_2PI * self.time_value(0.0)?)
    }
}

/// Objective breakdown at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    /// Weighted sum of squared normalized residuals.
    pub total: f64,
    /// `I₀` of each expiry's slice.
    pub i0: Vec<f64>,
    /// Unweighted mean squared normalized residual per expiry.
    pub mse: Vec<f64>,
}

/// Model normalized prices `𝒞(χ)` of one expiry for the slice `(η, k)`.
pub fn model_prices(q: &ExpiryQuotes, eta: f64, k: f64, alpha: Alpha) -> Result<(f64, Vec<f64>)> {
    let engine = Engine::new(eta, k, alpha)?;
    let i0 = engine.i0()?;
    let prices = q
        .chi
        .iter()
        .map(|&chi| Ok(engine.time_value(chi * i0)? / i0))
        .collect::<Result<_>>()?;
    Ok((i0, prices))
}

/// Evaluates the objective with slice parameters `(η_t, k_t) = slice(t)`.
pub fn evaluate(quotes: &[ExpiryQuotes], alpha: Alpha, slice: impl Fn(f64) -> (f64, f64)) -> Result<ObjectiveValue> {
    let mut total = 0.0;
    let mut i0s = Vec::with_capacity(quotes.len());
    let mut mse = Vec::with_capacity(quotes.len());
    for q in quotes {
        let (eta, k) = slice(q.t);
        let (i0, model) = model_prices(q, eta, k, alpha)?;
        let mut sse = 0.0;
        for j in 0..q.len() {
            let r = q.market[j] - model[j];
            total += q.weights[j] * r * r;
            sse += r * r;
        }
        i0s.push(i0);
        mse.push(sse / q.len() as f64);
    }
    Ok(ObjectiveValue {
        total,
        i0: i0s,
        mse,
    })
}

/// Summary of one optimizer start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    /// Start point `(η, ln k)`.
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub grid_evaluations: usize,
    pub starts: Vec<StartSummary>,
    pub best_start: usize,
    pub total_evaluations: usize,
}

fn linspace((lo, hi, n): (f64, f64, usize)) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Multi-start bounded Nelder–Mead over `(η, ln k)`.
pub fn multistart<F: FnMut(f64, f64) -> f64>(mut f: F, cfg: &OptimizerConfig) -> Result<(Minimum<2>, OptimizerSummary)> {
    let lower = [cfg.eta_bounds.0, cfg.ln_k_bounds.0];
    let upper = [cfg.eta_bounds.1, cfg.ln_k_bounds.1];
    let mut grid = Vec::new();
    for &e in &linspace(cfg.eta_grid) {
        for &l in &linspace(cfg.ln_k_grid) {
            grid.push(([e, l], f(e, l)));
        }
    }
    let grid_evaluations = grid.len();
    grid.retain(|g| g.1.is_finite());
    grid.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut starts = Vec::new();
    let mut best: Option<(usize, Minimum<2>)> = None;
    let mut total = grid_evaluations;
    for (i, (x0, _)) in grid.iter().take(cfg.starts).enumerate() {
        let m = minimize(|x| f(x[0], x[1]), *x0, lower, upper, &cfg.nelder_mead);
        total += m.evaluations;
        starts.push(StartSummary {
            start: *x0,
            end: m.x,
            value: m.value,
            evaluations: m.evaluations,
            converged: m.converged,
        });
        if m.converged && best.as_ref().is_none_or(|(_, b)| m.value < b.value) {
            best = Some((i, m));
        }
    }
    let (best_start, m) = best.ok_or(Error::OptimizerNotConverged { evaluations: total })?;
    Ok((
        m,
        OptimizerSummary {
            grid_evaluations,
            starts,
            best_start,
            total_evaluations: total,
        },
    ))
}

/// Per-expiry fit of the independent-slice benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceFit {
    pub expiry: NaiveDate,
    pub t: f64,
    pub eta: f64,
    pub k: f64,
    pub i0: f64,
    /// `σ_t^ATM/I₀`.
    pub sigma: f64,
    pub mse: f64,
    pub k_at_lower_bound: bool,
}

/// One `(η_t, k_t)` pair per expiry, each from the stage-3 objective
/// restricted to that expiry.
pub fn fit_levy_fixed_ttm(
    chain: &OptionChain,
    curves: &MarketCurves,
    atm: &AtmTermStructure,
    cfg: &CalibConfig,
) -> Result<Vec<SliceFit>> {
    let (quotes, _) = select_quotes(chain, curves, atm, cfg.window, cfg.weighting);
    if quotes.is_empty() {
        return Err(Error::EmptyQuoteSet);
    }
    let mut out = Vec::with_capacity(quotes.len());
    for q in &quotes {
        let one = std::slice::from_ref(q);
        let (m, _) = multistart(
            |eta, lk| {
                evaluate(one, cfg.alpha, |_| (eta, lk.exp()))
                    .map(|v| v.total)
                    .unwrap_or(f64::INFINITY)
            },
            &cfg.optimizer,
        )?;
        let (eta, k) = (m.x[0], m.x[1].exp());
        let v = evaluate(one, cfg.alpha, |_| (eta, k))?;
        out.push(SliceFit {
            expiry: q.expiry,
            t: q.t,
            eta,
            k,
            i0: v.i0[0],
            sigma: q.sigma_atm / v.i0[0],
            mse: v.mse[0],
            k_at_lower_bound: m.x[1] <= cfg.optimizer.ln_k_bounds.0 + 1e-3,
        });
    }
    Ok(out)
}

/// Fit of the Lévy benchmark `η_t = η̂·√t`, `k_t = k̂/t`, with `σ_t` set
/// from the ATM term structure as in the main fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyFit {
    pub eta_hat: f64,
    pub k_hat: f64,
    pub alpha: Alpha,
    pub objective: f64,
    pub slices: Vec<SliceFit>,
    pub optimizer: OptimizerSummary,
}

pub fn fit_levy(chain: &OptionChain, curves: &MarketCurves, atm: &AtmTermStructure, cfg: &CalibConfig) -> Result<LevyFit> {
    let (quotes, _) = select_quotes(chain, curves, atm, cfg.window, cfg.weighting);
    if quotes.is_empty() {
        return Err(Error::EmptyQuoteSet);
    }
    let slice = |eta_hat: f64, k_hat: f64| move |t: f64| (eta_hat * t.sqrt(), k_hat / t);
    let (m, summary) = multistart(
        |e, lk| {
            evaluate(&quotes, cfg.alpha, slice(e, lk.exp()))
                .map(|v| v.total)
                .unwrap_or(f64::INFINITY)
        },
        &cfg.optimizer,
    )?;
    let (eta_hat, k_hat) = (m.x[0], m.x[1].exp());
    let v = evaluate(&quotes, cfg.alpha, slice(eta_hat, k_hat))?;
    let slices = quotes
        .iter()
        .enumerate()
        .map(|(i, q)| SliceFit {
            expiry: q.expiry,
            t: q.t,
            eta: eta_hat * q.t.sqrt(),
            k: k_hat / q.t,
            i0: v.i0[i],
            sigma: q.sigma_atm / v.i0[i],
            mse: v.mse[i],
            k_at_lower_bound: m.x[1] <= cfg.optimizer.ln_k_bounds.0 + 1e-3,
        })
        .collect();
    Ok(LevyFit {
        eta_hat,
        k_hat,
        alpha: cfg.alpha,
        objective: v.total,
        slices,
        optimizer: summary,
    })
}
