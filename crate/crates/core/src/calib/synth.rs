//! Synthetic option chains priced from known model parameters, used for
//! round-trip tests and shipped fixtures.

use chrono::{Days, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chf::{AdditiveLaw, ModelParams, SmileParams, VolCurve};
use crate::error::{Error, Result};
use crate::marketio::{year_fraction, OisCurve, OptionChain, OptionRecord};
use crate::pricer::{normalized_time_value, QuadratureConfig};

/// Independent multiplicative noise `price·(1 + relative·N(0,1))` on every
/// quoted mid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub relative: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub value_date: NaiveDate,
    pub expiries: Vec<NaiveDate>,
    /// Forward per expiry. Each should lie on the strike grid so the chain
    /// has an exactly at-the-money strike.
    pub forwards: Vec<f64>,
    pub params: ModelParams,
    pub strike_step: f64,
    /// Strikes span `F₀ ± strike_half_width`.
    pub strike_half_width: f64,
    /// Flat continuously compounded OIS zero rate.
    pub ois_rate: f64,
    /// Spread of the option-implied rate over OIS per expiry, in bps.
    pub spreads_bps: Vec<f64>,
    pub noise: Option<NoiseSpec>,
}

impl SyntheticSpec {
    /// Nine monthly expiries on a contango forward curve with strikes every
    /// $0.5, some of them negative.
    pub fn monthly(value_date: NaiveDate, smile: SmileParams, first_spread_bps: f64) -> Result<Self> {
        let offsets = [19_u64, 49, 78, 110, 141, 173, 202, 231, 322];
        let expiries: Vec<NaiveDate> = offsets
            .iter()
            .map(|&d| value_date.checked_add_days(Days::new(d)).expect("date in range"))
            .collect();
        let forwards: Vec<f64> = (0..expiries.len()).map(|i| 15.0 + 2.5 * i as f64).collect();
        // decreasing vol with increasing total variance
        let knots: Vec<(f64, f64)> = expiries
            .iter()
            .map(|&e| {
                let t = year_fraction(value_date, e)?;
                Ok((t, 12.0 * (t / 0.05).powf(-0.1)))
            })
            .collect::<Result<_>>()?;
        let mut spreads_bps = vec![2.0; expiries.len()];
        spreads_bps[0] = first_spread_bps;
        Ok(Self {
            value_date,
            expiries,
            forwards,
            params: ModelParams::new(VolCurve::new(knots)?, smile),
            strike_step: 0.5,
            strike_half_width: 40.0,
            ois_rate: 0.001,
            spreads_bps,
            noise: None,
        })
    }

    pub fn discount(&self, i: usize) -> Result<f64> {
        let t = year_fraction(self.value_date, self.expiries[i])?;
        Ok((-(self.ois_rate + self.spreads_bps[i] * 1e-4) * t).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub spec: SyntheticSpec,
    pub chain: OptionChain,
    pub ois: OisCurve,
    pub discounts: Vec<f64>,
}

/// Prices the chain described by `spec`.
pub fn synthesize(spec: &SyntheticSpec) -> Result<SyntheticMarket> {
    let n = spec.expiries.len();
    if spec.forwards.len() != n || spec.spreads_bps.len() != n {
        return Err(Error::invalid("spec", "one forward and one spread per expiry required"));
    }
    if !(spec.strike_step > 0.0) {
        return Err(Error::invalid("strike_step", "must be positive"));
    }
    let cfg = QuadratureConfig::default();
    let mut rng = spec.noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    let mut noisy = |p: f64| -> f64 {
        match (&mut rng, spec.noise) {
            (Some(r), Some(n)) => {
                let z: f64 = StandardNormal.sample(r);
                p * (1.0 + n.relative * z)
            }
            _ => p,
        }
    };
    let half = (spec.strike_half_width / spec.strike_step).round() as i64;
    let mut records = Vec::new();
    let mut discounts = Vec::with_capacity(n);
    for (i, &expiry) in spec.expiries.iter().enumerate() {
        let t = year_fraction(spec.value_date, expiry)?;
        let b0 = spec.discount(i)?;
        discounts.push(b0);
        let slice = spec.params.slice(t);
        let smile = slice.smile();
        for j in -half..=half {
            let x = j as f64 * spec.strike_step;
            let tv = slice.scale * normalized_time_value(x / slice.scale, &smile, &cfg)?;
            let call = b0 * (tv + (-x).max(0.0));
            let put = b0 * (tv + x.max(0.0));
            records.push(OptionRecord {
                expiry,
                strike: spec.forwards[i] + x,
                call_mid: Some(noisy(call)),
                put_mid: Some(noisy(put)),
            });
        }
    }
    let last = *spec.expiries.last().ok_or_else(|| Error::invalid("spec", "no expiries"))?;
    let ois = OisCurve::new(vec![
        (spec.value_date, spec.ois_rate),
        (last.checked_add_days(Days::new(365)).expect("date in range"), spec.ois_rate),
    ])?;
    Ok(SyntheticMarket {
        spec: spec.clone(),
        chain: OptionChain {
            value_date: spec.value_date,
            records,
        },
        ois,
        discounts,
    })
}
