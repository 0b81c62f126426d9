//! Stage 2: at-the-money implied-volatility term structure.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Exclusion, MarketCurves, Stage};
use crate::bachelier::implied_vol_from_time_value;
use crate::error::{Error, Result};
use crate::marketio::{OptionChain, OptionRecord};

/// `|x|` below which a strike counts as exactly at the money, relative to
/// `max(1, |F₀|)`.
const ATM_EPS: f64 = 1e-9;

/// An out-of-the-money quote: the call above the forward, the put below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtmQuote {
    pub strike: f64,
    /// Moneyness `K − F₀`.
    pub x: f64,
    /// Out-of-the-money price; a missing side is filled in by parity.
    pub price: f64,
}

/// Out-of-the-money price of a record, `None` when neither side gives a
/// positive value.
pub fn otm_quote(r: &OptionRecord, forward: f64, discount: f64) -> Option<OtmQuote> {
    let x = r.strike - forward;
    let price = if x >= 0.0 {
        r.call_mid.or_else(|| r.put_mid.map(|p| p - discount * x))
    } else {
        r.put_mid.or_else(|| r.call_mid.map(|c| c + discount * x))
    }?;
    (price > 0.0 && price.is_finite()).then_some(OtmQuote {
        strike: r.strike,
        x,
        price,
    })
}

/// Out-of-the-money quotes of one expiry, sorted by strike.
pub fn otm_quotes(chain: &OptionChain, expiry: NaiveDate, forward: f64, discount: f64) -> Vec<OtmQuote> {
    chain
        .records_for(expiry)
        .iter()
        .filter_map(|r| otm_quote(r, forward, discount))
        .collect()
}

/// Bachelier implied volatility of an out-of-the-money price, whose time value
/// is the whole price.
pub fn otm_implied_vol(q: &OtmQuote, t: f64, discount: f64) -> Result<f64> {
    let sqrt_t = t.sqrt();
    implied_vol_from_time_value(q.x.abs() / sqrt_t, q.price / (discount * sqrt_t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmLeg {
    pub strike: f64,
    pub x: f64,
    pub price: f64,
    pub vol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AtmSource {
    /// A strike at the forward.
    Exact(AtmLeg),
    /// Linear interpolation in `x` between the nearest put and call.
    Interpolated { lower: AtmLeg, upper: AtmLeg },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmPoint {
    pub expiry: NaiveDate,
    pub t: f64,
    /// `σ_t^ATM`, price units per √year.
    pub sigma_atm: f64,
    pub source: AtmSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtmTermStructure {
    pub points: Vec<AtmPoint>,
    pub excluded: Vec<Exclusion>,
    /// `false` when `(σ_t^ATM)²·t` decreases somewhere.
    pub variance_monotone: bool,
}

impl AtmTermStructure {
    pub fn get(&self, expiry: NaiveDate) -> Option<&AtmPoint> {
        self.points.iter().find(|p| p.expiry == expiry)
    }
}

fn leg(q: &OtmQuote, t: f64, discount: f64) -> Option<AtmLeg> {
    let vol = otm_implied_vol(q, t, discount).ok()?;
    Some(AtmLeg {
        strike: q.strike,
        x: q.x,
        price: q.price,
        vol,
    })
}

/// ATM volatility of one expiry.
pub fn atm_point(chain: &OptionChain, expiry: NaiveDate, t: f64, forward: f64, discount: f64) -> Result<AtmPoint> {
    let quotes = otm_quotes(chain, expiry, forward, discount);
    let eps = ATM_EPS * forward.abs().max(1.0);
    let no_bracket = || Error::NoBracketingQuotes {
        expiry: expiry.to_string(),
    };
    if let Some(q) = quotes.iter().filter(|q| q.x.abs() <= eps).min_by(|a, b| a.x.abs().total_cmp(&b.x.abs())) {
        let l = leg(q, t, discount).ok_or_else(no_bracket)?;
        return Ok(AtmPoint {
            expiry,
            t,
            sigma_atm: l.vol,
            source: AtmSource::Exact(l),
        });
    }
    let lower = quotes.iter().rev().filter(|q| q.x < 0.0).find_map(|q| leg(q, t, discount));
    let upper = quotes.iter().filter(|q| q.x > 0.0).find_map(|q| leg(q, t, discount));
    let (lower, upper) = match (lower, upper) {
        (Some(l), Some(u)) => (l, u),
        _ => return Err(no_bracket()),
    };
    let w = -lower.x / (upper.x - lower.x);
    Ok(AtmPoint {
        expiry,
        t,
        sigma_atm: lower.vol + w * (upper.vol - lower.vol),
        source: AtmSource::Interpolated { lower, upper },
    })
}

/// Stage 2 over every expiry that survived stage 1.
pub fn fit_atm_vol(chain: &OptionChain, curves: &MarketCurves) -> AtmTermStructure {
    let mut points: Vec<AtmPoint> = Vec::new();
    let mut excluded = Vec::new();
    for c in &curves.expiries {
        match atm_point(chain, c.expiry, c.t, c.forward, c.discount) {
            Ok(p) => points.push(p),
            Err(e) => excluded.push(Exclusion::new(c.expiry, Stage::AtmVol, &e)),
        }
    }
    let variance_monotone = points
        .windows(2)
        .all(|w| w[1].sigma_atm * w[1].sigma_atm * w[1].t >= w[0].sigma_atm * w[0].sigma_atm * w[0].t);
    AtmTermStructure {
        points,
        excluded,
        variance_monotone,
    }
}
