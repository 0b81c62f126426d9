//! Stage 1: discount factors and synthetic forwards from put-call parity.
//!
//! For every expiry the call-minus-put mids of strikes quoted on both sides
//! are regressed on the strike, `C − P = B₀·F₀ − B₀·K`, by ordinary least
//! squares.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Exclusion, Stage};
use crate::error::{Error, Result};
use crate::marketio::{year_fraction, OisCurve, OptionChain};

/// A strike quoted on both the call and the put side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couple {
    pub strike: f64,
    pub call: f64,
    pub put: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpiryCouples {
    pub expiry: NaiveDate,
    pub t: f64,
    pub couples: Vec<Couple>,
}

/// Call/put couples grouped by expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplesSet {
    pub value_date: NaiveDate,
    pub expiries: Vec<ExpiryCouples>,
}

impl CouplesSet {
    pub fn from_chain(chain: &OptionChain) -> Result<Self> {
        let mut expiries = Vec::new();
        for expiry in chain.expiries() {
            let t = year_fraction(chain.value_date, expiry)?;
            let couples = chain
                .records_for(expiry)
                .into_iter()
                .filter_map(|r| match (r.call_mid, r.put_mid) {
                    (Some(call), Some(put)) => Some(Couple {
                        strike: r.strike,
                        call,
                        put,
                    }),
                    _ => None,
                })
                .collect();
            expiries.push(ExpiryCouples { expiry, t, couples });
        }
        Ok(Self {
            value_date: chain.value_date,
            expiries,
        })
    }
}

/// Stage-1 output for one expiry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpiryCurve {
    pub expiry: NaiveDate,
    pub t: f64,
    pub discount: f64,
    pub forward: f64,
    pub n_couples: usize,
    /// Root-mean-square regression residual, currency units.
    pub residual_rms: f64,
    pub residual_max: f64,
    /// OIS zero rate at the expiry, when a curve was supplied.
    pub ois_rate: Option<f64>,
    /// `(−ln B₀/t − r_OIS)·10⁴`.
    pub spread_bps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketCurves {
    pub value_date: NaiveDate,
    pub expiries: Vec<ExpiryCurve>,
    pub excluded: Vec<Exclusion>,
}

impl MarketCurves {
    pub fn get(&self, expiry: NaiveDate) -> Option<&ExpiryCurve> {
        self.expiries.iter().find(|e| e.expiry == expiry)
    }

    /// Moves the expiries whose mask entry is `false` to the exclusion list.
    pub fn retain(&self, mask: &[bool], reason: impl Fn(&ExpiryCurve) -> Exclusion) -> MarketCurves {
        let mut out = MarketCurves {
            value_date: self.value_date,
            expiries: Vec::new(),
            excluded: self.excluded.clone(),
        };
        for (e, &keep) in self.expiries.iter().zip(mask) {
            if keep {
                out.expiries.push(*e);
            } else {
                out.excluded.push(reason(e));
            }
        }
        out
    }
}

/// Least-squares fit of one expiry.
pub fn fit_expiry(e: &ExpiryCouples) -> Result<ExpiryCurve> {
    let label = e.expiry.to_string();
    let mut strikes: Vec<f64> = e.couples.iter().map(|c| c.strike).collect();
    strikes.sort_by(f64::total_cmp);
    strikes.dedup();
    if strikes.len() < 2 {
        return Err(Error::TooFewCouples {
            expiry: label,
            found: e.couples.len(),
        });
    }
    let n = e.couples.len() as f64;
    let k_mean = e.couples.iter().map(|c| c.strike).sum::<f64>() / n;
    let d_mean = e.couples.iter().map(|c| c.call - c.put).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for c in &e.couples {
        let dk = c.strike - k_mean;
        sxx += dk * dk;
        sxy += dk * (c.call - c.put - d_mean);
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::NonPositiveDiscount { expiry: label });
    }
    let discount = -slope;
    // intercept / B₀ rewritten around the strike mean
    let forward = k_mean + d_mean / discount;
    let (mut ss, mut worst) = (0.0_f64, 0.0_f64);
    for c in &e.couples {
        let r = (c.call - c.put) - discount * (forward - c.strike);
        ss += r * r;
        worst = worst.max(r.abs());
    }
    Ok(ExpiryCurve {
        expiry: e.expiry,
        t: e.t,
        discount,
        forward,
        n_couples: e.couples.len(),
        residual_rms: (ss / n).sqrt(),
        residual_max: worst,
        ois_rate: None,
        spread_bps: None,
    })
}

/// Stage 1 over every expiry. Expiries that cannot be fitted are listed in
/// [`MarketCurves::excluded`] with the error code.
pub fn fit_discount_forward(couples: &CouplesSet, ois: Option<&OisCurve>) -> MarketCurves {
    let mut expiries = Vec::new();
    let mut excluded = Vec::new();
    for e in &couples.expiries {
        match fit_expiry(e) {
            Ok(mut c) => {
                if let Some(curve) = ois {
                    let r = curve.zero_rate(c.expiry);
                    c.ois_rate = Some(r);
                    c.spread_bps = Some((-c.discount.ln() / c.t - r) * 1e4);
                }
                expiries.push(c);
            }
            Err(err) => excluded.push(Exclusion::new(e.expiry, Stage::DiscountForward, &err)),
        }
    }
    MarketCurves {
        value_date: couples.value_date,
        expiries,
        excluded,
    }
}

/// Inclusion mask for the fitted expiries: the first one is dropped when the
/// absolute spread of its implied rate over OIS reaches `threshold_bps`,
/// later expiries are always kept.
pub fn filter_first_expiry(curves: &MarketCurves, threshold_bps: f64) -> Result<Vec<bool>> {
    let mut mask = vec![true; curves.expiries.len()];
    if let Some(first) = curves.expiries.first() {
        let spread = first.spread_bps.ok_or(Error::MissingOisCurve)?;
        mask[0] = spread.abs() < threshold_bps;
    }
    Ok(mask)
}

/// Applies [`filter_first_expiry`] and records the exclusion.
pub fn apply_spread_filter(curves: &MarketCurves, threshold_bps: f64) -> Result<MarketCurves> {
    let mask = filter_first_expiry(curves, threshold_bps)?;
    Ok(curves.retain(&mask, |e| Exclusion {
        expiry: e.expiry,
        stage: Stage::SpreadFilter,
        code: "calib.SpreadFilter".into(),
        reason: format!(
            "spread {:.2} bps over OIS is not below {threshold_bps} bps",
            e.spread_bps.unwrap_or(f64::NAN)
        ),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expiry(couples: Vec<Couple>) -> ExpiryCouples {
        ExpiryCouples {
            expiry: NaiveDate::from_ymd_opt(2020, 6, 17).unwrap(),
            t: 0.13,
            couples,
        }
    }

    fn parity_couples(b0: f64, f0: f64, strikes: &[f64]) -> Vec<Couple> {
        strikes
            .iter()
            .map(|&k| {
                // any call level works as long as parity holds
                let call = 3.0 + 0.1 * (k - f0).abs();
                Couple {
                    strike: k,
                    call,
                    put: call - b0 * (f0 - k),
                }
            })
            .collect()
    }

    #[test]
    fn noiseless_chain_is_recovered() {
        let strikes: Vec<f64> = (0..81).map(|i| 20.0 + 0.5 * i as f64).collect();
        let c = fit_expiry(&expiry(parity_couples(0.99, 40.0, &strikes))).unwrap();
        assert!((c.discount - 0.99).abs() < 1e-12);
        assert!((c.forward - 40.0).abs() < 1e-12);
        assert!(c.residual_max < 1e-12);
    }

    #[test]
    fn two_couples_determine_the_line() {
        let c = fit_expiry(&expiry(parity_couples(0.97, -3.0, &[-5.0, 2.0]))).unwrap();
        assert!((c.discount - 0.97).abs() < 1e-14);
        assert!((c.forward + 3.0).abs() < 1e-13);
    }

    #[test]
    fn parity_violation_shows_in_the_residuals() {
        let mut couples = parity_couples(0.99, 40.0, &[35.0, 38.0, 40.0, 42.0, 45.0]);
        couples[2].call += 1.0;
        let c = fit_expiry(&expiry(couples)).unwrap();
        assert!(c.residual_max > 0.5);
        assert!(c.residual_rms > 0.1);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let one = parity_couples(0.99, 40.0, &[40.0, 40.0]);
        assert!(matches!(fit_expiry(&expiry(one)), Err(Error::TooFewCouples { .. })));
        let flat = vec![
            Couple { strike: 1.0, call: 2.0, put: 1.0 },
            Couple { strike: 2.0, call: 2.0, put: 1.0 },
        ];
        assert!(matches!(fit_expiry(&expiry(flat)), Err(Error::NonPositiveDiscount { .. })));
    }

    fn curves_with_first_spread(spread: Option<f64>) -> MarketCurves {
        let base = fit_expiry(&expiry(parity_couples(0.99, 40.0, &[35.0, 45.0]))).unwrap();
        let mut second = base;
        second.spread_bps = Some(300.0);
        MarketCurves {
            value_date: NaiveDate::from_ymd_opt(2020, 4, 29).unwrap(),
            expiries: vec![
                ExpiryCurve {
                    spread_bps: spread,
                    ..base
                },
                second,
            ],
            excluded: vec![],
        }
    }

    #[test]
    fn first_expiry_filter() {
        assert_eq!(filter_first_expiry(&curves_with_first_spread(Some(300.0)), 20.0).unwrap(), vec![false, true]);
        assert_eq!(filter_first_expiry(&curves_with_first_spread(Some(2.0)), 20.0).unwrap(), vec![true, true]);
        assert_eq!(filter_first_expiry(&curves_with_first_spread(Some(20.0)), 20.0).unwrap(), vec![false, true]);
        assert_eq!(filter_first_expiry(&curves_with_first_spread(Some(-300.0)), 20.0).unwrap(), vec![false, true]);
        assert!(matches!(
            filter_first_expiry(&curves_with_first_spread(None), 20.0),
            Err(Error::MissingOisCurve)
        ));
    }
}
