//! Run configuration and its key-value file format.
//!
//! A config file holds one `key = value` pair per line; blank lines and lines
//! starting with `#` are ignored. Pairs are written as `lo,hi` and grids as
//! `lo,hi,points`. [`RunConfig::to_key_value`] writes every setting, so its
//! output is itself a valid config file.

use std::path::Path;

use additive_bachelier::calib::{NelderMeadOptions, OptimizerConfig, Weighting};
use additive_bachelier::{Alpha, CalibConfig, Contour, QuadratureConfig};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub alpha: f64,
    /// Largest `|K − F₀|` used in the smile fit.
    pub window: f64,
    pub spread_threshold_bps: f64,
    pub seed: u64,
    pub weighting: Weighting,
    pub quadrature: QuadratureConfig,
    pub optimizer: OptimizerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let calib = CalibConfig::default();
        Self {
            alpha: calib.alpha.value(),
            window: calib.window,
            spread_threshold_bps: calib.spread_threshold_bps,
            seed: 1,
            weighting: calib.weighting,
            quadrature: QuadratureConfig::default(),
            optimizer: calib.optimizer,
        }
    }
}

/// Command-line overrides, applied after the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub window: Option<f64>,
    pub spread_threshold_bps: Option<f64>,
    pub seed: Option<u64>,
}

fn parse_f64(v: &str) -> Result<f64, String> {
    v.trim().parse().map_err(|_| format!("`{v}` is not a number"))
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.trim().parse().map_err(|_| format!("`{v}` is not a non-negative integer"))
}

fn parse_pair(v: &str) -> Result<(f64, f64), String> {
    match v.split(',').collect::<Vec<_>>()[..] {
        [a, b] => Ok((parse_f64(a)?, parse_f64(b)?)),
        _ => Err(format!("`{v}` is not a pair `lo,hi`")),
    }
}

fn parse_grid(v: &str) -> Result<(f64, f64, usize), String> {
    match v.split(',').collect::<Vec<_>>()[..] {
        [a, b, n] => Ok((parse_f64(a)?, parse_f64(b)?, parse_usize(n)?)),
        _ => Err(format!("`{v}` is not a grid `lo,hi,points`")),
    }
}

fn parse_contour(v: &str) -> Result<Contour, String> {
    let v = v.trim();
    if v == "saddle" {
        return Ok(Contour::Saddle);
    }
    match v.split_once(':') {
        Some(("fixed", a)) => Ok(Contour::Fixed(parse_f64(a)?)),
        Some(("strip_fraction", f)) => Ok(Contour::StripFraction(parse_f64(f)?)),
        _ => Err(format!("`{v}` is not `saddle`, `fixed:<a>` or `strip_fraction:<f>`")),
    }
}

/// Shortest round-tripping form, with an exponent for very small values.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn contour_text(c: Contour) -> String {
    match c {
        Contour::Saddle => "saddle".into(),
        Contour::Fixed(a) => format!("fixed:{}", num(a)),
        Contour::StripFraction(f) => format!("strip_fraction:{}", num(f)),
    }
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let q = &mut self.quadrature;
        let o = &mut self.optimizer;
        match key {
            "alpha" => self.alpha = parse_f64(value)?,
            "window" => self.window = parse_f64(value)?,
            "spread_threshold_bps" => self.spread_threshold_bps = parse_f64(value)?,
            "seed" => self.seed = value.trim().parse().map_err(|_| format!("`{value}` is not a seed"))?,
            "weighting" => {
                self.weighting = match value.trim() {
                    "uniform" => Weighting::Uniform,
                    "vega" => Weighting::Vega,
                    other => return Err(format!("`{other}` is not `uniform` or `vega`")),
                }
            }
            "quadrature.contour" => q.contour = parse_contour(value)?,
            "quadrature.rel_tol" => q.rel_tol = parse_f64(value)?,
            "quadrature.max_rel_error" => q.max_rel_error = parse_f64(value)?,
            "quadrature.max_panels" => q.max_panels = parse_usize(value)?,
            "quadrature.g_depth" => q.g_depth = parse_f64(value)?,
            "optimizer.eta_bounds" => o.eta_bounds = parse_pair(value)?,
            "optimizer.ln_k_bounds" => o.ln_k_bounds = parse_pair(value)?,
            "optimizer.eta_grid" => o.eta_grid = parse_grid(value)?,
            "optimizer.ln_k_grid" => o.ln_k_grid = parse_grid(value)?,
            "optimizer.starts" => o.starts = parse_usize(value)?,
            "optimizer.diameter_tol" => o.nelder_mead.diameter_tol = parse_f64(value)?,
            "optimizer.max_evaluations" => o.nelder_mead.max_evaluations = parse_usize(value)?,
            "optimizer.initial_step" => o.nelder_mead.initial_step = parse_f64(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies the pairs of a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> CliResult<()> {
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| CliError::Config {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            self.set(key, value).map_err(err)?;
            seen.push(key.to_string());
        }
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(a) = o.alpha {
            self.alpha = a;
        }
        if let Some(w) = o.window {
            self.window = w;
        }
        if let Some(s) = o.spread_threshold_bps {
            self.spread_threshold_bps = s;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
    }

    /// Checks ranges the library would otherwise reject deep inside a run.
    pub fn validate(&self) -> CliResult<()> {
        Alpha::new(self.alpha)?;
        let bad = |m: &str| Err(CliError::InvalidInput(m.to_string()));
        if !(self.window > 0.0 && self.window.is_finite()) {
            return bad("window must be positive");
        }
        if !(self.spread_threshold_bps >= 0.0) {
            return bad("spread_threshold_bps must be non-negative");
        }
        let o = &self.optimizer;
        if !(o.eta_bounds.0 < o.eta_bounds.1 && o.ln_k_bounds.0 < o.ln_k_bounds.1) {
            return bad("optimizer bounds must satisfy lo < hi");
        }
        if o.starts == 0 || o.eta_grid.2 == 0 || o.ln_k_grid.2 == 0 {
            return bad("optimizer starts and grid sizes must be positive");
        }
        Ok(())
    }

    pub fn calib_config(&self) -> CliResult<CalibConfig> {
        Ok(CalibConfig {
            alpha: Alpha::new(self.alpha)?,
            window: self.window,
            spread_threshold_bps: self.spread_threshold_bps,
            weighting: self.weighting,
            optimizer: self.optimizer,
        })
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let q = &self.quadrature;
        let o = &self.optimizer;
        let NelderMeadOptions {
            diameter_tol,
            max_evaluations,
            initial_step,
        } = o.nelder_mead;
        vec![
            ("alpha", num(self.alpha)),
            ("window", num(self.window)),
            ("spread_threshold_bps", num(self.spread_threshold_bps)),
            ("seed", self.seed.to_string()),
            (
                "weighting",
                match self.weighting {
                    Weighting::Uniform => "uniform".into(),
                    Weighting::Vega => "vega".into(),
                },
            ),
            ("quadrature.contour", contour_text(q.contour)),
            ("quadrature.rel_tol", num(q.rel_tol)),
            ("quadrature.max_rel_error", num(q.max_rel_error)),
            ("quadrature.max_panels", q.max_panels.to_string()),
            ("quadrature.g_depth", num(q.g_depth)),
            ("optimizer.eta_bounds", format!("{},{}", num(o.eta_bounds.0), num(o.eta_bounds.1))),
            ("optimizer.ln_k_bounds", format!("{},{}", num(o.ln_k_bounds.0), num(o.ln_k_bounds.1))),
            ("optimizer.eta_grid", format!("{},{},{}", num(o.eta_grid.0), num(o.eta_grid.1), o.eta_grid.2)),
            ("optimizer.ln_k_grid", format!("{},{},{}", num(o.ln_k_grid.0), num(o.ln_k_grid.1), o.ln_k_grid.2)),
            ("optimizer.starts", o.starts.to_string()),
            ("optimizer.diameter_tol", num(diameter_tol)),
            ("optimizer.max_evaluations", max_evaluations.to_string()),
            ("optimizer.initial_step", num(initial_step)),
        ]
    }

    pub fn to_key_value(&self) -> String {
        self.to_pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// One-line form used as the first line of CSV outputs.
    pub fn csv_comment(&self) -> String {
        let body: Vec<String> = self.to_pairs().iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# config: {}\n", body.join(" "))
    }
}
