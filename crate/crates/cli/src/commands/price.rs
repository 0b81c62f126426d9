//! `abach price`: Lewis prices, implied volatilities and Greeks for a list of
//! strikes and maturities.
//!
//! The input CSV has the columns `t,strike` and optionally `forward`
//! (default 0, so that `strike` is the moneyness) and `discount`
//! (default 1).

use std::path::Path;

use additive_bachelier::bachelier::implied_vol_from_time_value;
use additive_bachelier::pricer::lewis_time_value;
use additive_bachelier::{greeks, put_from_call, AdditiveLaw, Error};
use serde::{Deserialize, Serialize};

use super::{cell, pretty_json, OutDir};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::law::Law;

#[derive(Debug, Deserialize)]
struct Row {
    t: f64,
    strike: f64,
    #[serde(default)]
    forward: Option<f64>,
    #[serde(default)]
    discount: Option<f64>,
}

/// One priced row; Greeks are those of the Bachelier formula at the implied
/// volatility, discounted, with vega taken per unit of `σ_B`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PricedRow {
    pub t: f64,
    pub strike: f64,
    pub forward: f64,
    pub discount: f64,
    pub x: f64,
    pub call: Option<f64>,
    pub put: Option<f64>,
    pub implied_vol: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub vega: Option<f64>,
    pub error: Option<String>,
}

fn check_inputs(t: f64, discount: f64) -> Result<(), Error> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be positive, got {t}"),
        });
    }
    if !(discount > 0.0 && discount.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "discount",
            reason: format!("must be positive, got {discount}"),
        });
    }
    Ok(())
}

pub fn price_row(law: &Law, t: f64, strike: f64, forward: f64, discount: f64, cfg: &RunConfig) -> PricedRow {
    let x = strike - forward;
    let mut row = PricedRow {
        t,
        strike,
        forward,
        discount,
        x,
        ..Default::default()
    };
    // the time value is inverted directly: deep in the money the call
    // price carries it only in its last digits
    let priced = check_inputs(t, discount).and_then(|()| {
        let slice = law.slice(t);
        let tv = slice.scale * lewis_time_value(x / slice.scale, &slice.smile(), &cfg.quadrature)?;
        Ok((discount * (tv + (-x).max(0.0)), tv))
    });
    let (call, tv) = match priced {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.code().to_string());
            return row;
        }
    };
    row.call = Some(call);
    row.put = Some(put_from_call(call, x, discount));
    match implied_vol_from_time_value(x.abs(), tv) {
        Ok(s) => {
            let iv = s / t.sqrt();
            let g = greeks(x, s);
            row.implied_vol = Some(iv);
            row.delta = Some(discount * g.delta);
            row.gamma = Some(discount * g.gamma);
            row.vega = Some(discount * t.sqrt() * g.vega);
        }
        Err(e) => row.error = Some(e.code().to_string()),
    }
    row
}

pub fn read_rows(path: &Path) -> CliResult<Vec<(f64, f64, f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| Error::SchemaError(e.to_string()))?.clone();
    for required in ["t", "strike"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::SchemaError(format!("price list needs a `{required}` column")).into());
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let r = rec.map_err(|e| Error::ValueError {
            row: i + 2,
            message: e.to_string(),
        })?;
        rows.push((r.t, r.strike, r.forward.unwrap_or(0.0), r.discount.unwrap_or(1.0)));
    }
    Ok(rows)
}

pub fn to_csv(rows: &[PricedRow], cfg: &RunConfig) -> String {
    let mut out = cfg.csv_comment();
    out.push_str("t,strike,forward,discount,x,call,put,implied_vol,delta,gamma,vega,error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.t,
            r.strike,
            r.forward,
            r.discount,
            r.x,
            cell(r.call),
            cell(r.put),
            cell(r.implied_vol),
            cell(r.delta),
            cell(r.gamma),
            cell(r.vega),
            r.error.as_deref().unwrap_or("")
        ));
    }
    out
}

#[derive(Debug, Serialize)]
pub struct PriceSummary {
    command: &'static str,
    config: RunConfig,
    law: Law,
    rows: usize,
    row_errors: usize,
    outputs: Vec<String>,
}

pub fn run(params: &Law, list: &Path, cfg: &RunConfig, out: &OutDir) -> CliResult<PriceSummary> {
    let rows: Vec<PricedRow> = read_rows(list)?
        .into_iter()
        .map(|(t, k, f, b)| price_row(params, t, k, f, b, cfg))
        .collect();
    out.write("prices.csv", &to_csv(&rows, cfg))?;
    Ok(PriceSummary {
        command: "price",
        config: cfg.clone(),
        law: params.clone(),
        rows: rows.len(),
        row_errors: rows.iter().filter(|r| r.error.is_some()).count(),
        outputs: vec!["prices.csv".to_string()],
    })
}

pub fn render(summary: &PriceSummary) -> String {
    pretty_json(summary)
}
