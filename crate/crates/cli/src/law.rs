//! Model parameter files accepted by `price`, `simulate` and `validate`.
//!
//! Four JSON shapes are recognised:
//!
//! * a calibration result document (has `schema_version`);
//! * constant parameters `{"sigma": {"knots": [[t, σ], …]}, "eta": η, "k": k, "alpha": α}`,
//!   where `k` may be the string `"bachelier_limit"`;
//! * the Lévy benchmark `{"sigma_hat": σ̂, "eta_hat": η̂, "k_hat": k̂, "alpha": α}`;
//! * time-dependent curves, where `eta` and `k` are `{"knots": [[t, v], …]}`.

use std::path::Path;

use additive_bachelier::chf::SliceParams;
use additive_bachelier::marketio::result_from_json;
use additive_bachelier::{AdditiveLaw, Alpha, CurveParams, Error, LevyParams, ModelParams};
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "params")]
pub enum Law {
    Constant(ModelParams),
    Levy(LevyParams),
    Curves(CurveParams),
}

impl AdditiveLaw for Law {
    fn alpha(&self) -> Alpha {
        match self {
            Law::Constant(p) => p.alpha(),
            Law::Levy(p) => p.alpha(),
            Law::Curves(p) => p.alpha(),
        }
    }

    fn slice(&self, t: f64) -> SliceParams {
        match self {
            Law::Constant(p) => p.slice(t),
            Law::Levy(p) => p.slice(t),
            Law::Curves(p) => p.slice(t),
        }
    }
}

impl Law {
    /// Knot times of the parameter curves, used as default maturities.
    pub fn knot_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = match self {
            Law::Constant(p) => p.sigma.knots().iter().map(|k| k.0).collect(),
            Law::Levy(_) => Vec::new(),
            Law::Curves(p) => p
                .sigma
                .knots()
                .iter()
                .chain(&p.eta.knots)
                .chain(&p.k.knots)
                .map(|k| k.0)
                .collect(),
        };
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.dedup();
        ts
    }
}

fn schema(e: serde_json::Error) -> CliError {
    Error::SchemaError(e.to_string()).into()
}

pub fn parse_law(text: &str) -> CliResult<Law> {
    let v: Value = serde_json::from_str(text).map_err(schema)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::SchemaError("parameter file must hold a JSON object".into()))?;
    if obj.contains_key("schema_version") {
        return Ok(Law::Constant(result_from_json(text)?.model_params()?));
    }
    if obj.contains_key("sigma_hat") {
        let p: LevyParams = serde_json::from_value(v).map_err(schema)?;
        let p = additive_bachelier::levy_benchmark_params(p.sigma_hat, p.eta_hat, p.k_hat, p.alpha)?;
        return Ok(Law::Levy(p));
    }
    if obj.get("eta").is_some_and(Value::is_object) {
        let p: CurveParams = serde_json::from_value(v).map_err(schema)?;
        for (name, curve) in [("eta", &p.eta), ("k", &p.k)] {
            if curve.knots.is_empty() || curve.knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(CliError::InvalidInput(format!(
                    "{name} knots must be non-empty with increasing times"
                )));
            }
        }
        if p.k.knots.iter().any(|&(_, k)| !(k > 0.0 && k.is_finite())) {
            return Err(CliError::InvalidInput("k knots must be positive".into()));
        }
        return Ok(Law::Curves(p));
    }
    Ok(Law::Constant(serde_json::from_value(v).map_err(schema)?))
}

pub fn load_law(path: &Path) -> CliResult<Law> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    parse_law(&text)
}
