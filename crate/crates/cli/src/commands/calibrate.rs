//! `abach calibrate`: the three-stage cascade on a chain and an OIS curve.

use std::path::Path;

use additive_bachelier::bachelier::implied_vol_from_time_value;
use additive_bachelier::calib::smile_fit::model_prices;
use additive_bachelier::calib::{Exclusion, ExpiryFit, Flag};
use additive_bachelier::marketio::result_to_json;
use additive_bachelier::{calibrate, load_chain, load_ois, Error};
use chrono::NaiveDate;
use serde::Serialize;

use super::{cell, pretty_json, OutDir};
use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Serialize)]
struct ExpirySummary {
    expiry: NaiveDate,
    t: f64,
    discount: f64,
    forward: f64,
    sigma_atm: f64,
    sigma: f64,
    quotes: usize,
    mse: f64,
    mse_price: f64,
}

#[derive(Debug, Serialize)]
pub struct CalibrateSummary {
    command: &'static str,
    config: RunConfig,
    value_date: NaiveDate,
    alpha: f64,
    eta: f64,
    k: f64,
    i0: f64,
    objective: f64,
    flags: Vec<Flag>,
    expiries: Vec<ExpirySummary>,
    excluded: Vec<Exclusion>,
    evaluations: usize,
    outputs: Vec<String>,
}

fn smile_csv(fit: &ExpiryFit, eta: f64, k: f64, cfg: &RunConfig) -> CliResult<String> {
    let q = &fit.quotes;
    let alpha = additive_bachelier::Alpha::new(cfg.alpha)?;
    let (_, model) = model_prices(q, eta, k, alpha)?;
    let unit = q.price_unit();
    let mut out = cfg.csv_comment();
    out.push_str("strike,x,chi,market_price,model_price,market_iv,model_iv\n");
    for j in 0..q.len() {
        // 𝒞 is the out-of-the-money time value over B₀√t·σ^ATM, so its
        // implied vol comes out in units of σ^ATM
        let iv = |c: f64| implied_vol_from_time_value(q.chi[j].abs(), c).ok().map(|r| r * q.sigma_atm);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            q.strikes[j],
            q.strikes[j] - q.forward,
            q.chi[j],
            q.market[j] * unit,
            model[j] * unit,
            cell(iv(q.market[j])),
            cell(iv(model[j])),
        ));
    }
    Ok(out)
}

pub fn run(chain: &Path, ois: Option<&Path>, cfg: &RunConfig, out: &OutDir) -> CliResult<CalibrateSummary> {
    let chain = load_chain(chain)?;
    // an OIS path that does not exist counts as a missing curve
    let ois = match ois {
        Some(p) if p.exists() => Some(load_ois(p)?),
        _ => None,
    };
    let c = calibrate(&chain, ois.as_ref(), &cfg.calib_config()?)?;
    let r = &c.result;

    let mut outputs = vec![];
    out.write("result.json", &result_to_json(r)?)?;
    outputs.push("result.json".to_string());
    out.write("run_config.txt", &cfg.to_key_value())?;
    outputs.push("run_config.txt".to_string());

    let mut atm = cfg.csv_comment();
    atm.push_str("expiry,t,discount,forward,sigma_atm,sigma,atm_total_variance,included\n");
    for p in &c.atm.points {
        let curve = c.curves.get(p.expiry).ok_or(Error::EmptyQuoteSet)?;
        let fit = r.expiries.iter().find(|e| e.quotes.expiry == p.expiry);
        atm.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.expiry,
            p.t,
            curve.discount,
            curve.forward,
            p.sigma_atm,
            cell(fit.map(|f| f.sigma)),
            p.sigma_atm * p.sigma_atm * p.t,
            fit.is_some()
        ));
    }
    out.write("atm_term_structure.csv", &atm)?;
    outputs.push("atm_term_structure.csv".to_string());

    for fit in &r.expiries {
        let name = format!("smile_{}.csv", fit.quotes.expiry);
        out.write(&name, &smile_csv(fit, r.eta, r.k, cfg)?)?;
        outputs.push(name);
    }

    Ok(CalibrateSummary {
        command: "calibrate",
        config: cfg.clone(),
        value_date: r.value_date,
        alpha: r.alpha.value(),
        eta: r.eta,
        k: r.k,
        i0: r.i0,
        objective: r.objective,
        flags: r.flags.clone(),
        expiries: r
            .expiries
            .iter()
            .map(|e| ExpirySummary {
                expiry: e.quotes.expiry,
                t: e.quotes.t,
                discount: e.quotes.discount,
                forward: e.quotes.forward,
                sigma_atm: e.quotes.sigma_atm,
                sigma: e.sigma,
                quotes: e.quotes.len(),
                mse: e.mse,
                mse_price: e.mse_price,
            })
            .collect(),
        excluded: r.excluded.clone(),
        evaluations: r.optimizer.total_evaluations,
        outputs,
    })
}

pub fn render(summary: &CalibrateSummary) -> String {
    pretty_json(summary)
}
