//! `abach validate`: additivity conditions, analyticity strips and a
//! butterfly (strike convexity) scan of a parameter set.

use std::fmt::Write as _;

use additive_bachelier::chf::default_grid;
use additive_bachelier::{lewis_call, validate_law, AdditiveLaw, AdditivityReport, StripBounds};
use serde::Serialize;

use super::{pretty_json, OutDir};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::law::Law;

/// Maturities scanned when the parameters carry no knot times.
pub const DEFAULT_MATURITIES: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
/// Strike step of the butterfly scan.
pub const SCAN_STEP: f64 = 0.25;
/// Second differences below `−CONVEXITY_TOL·σ_t√t` are reported.
pub const CONVEXITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct StripRow {
    pub t: f64,
    #[serde(flatten)]
    pub bounds: StripBounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct ButterflyFinding {
    pub t: f64,
    pub x: f64,
    /// `C(x − h) − 2C(x) + C(x + h)`, or the pricing error code.
    pub second_difference: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ButterflyScan {
    pub maturities: Vec<f64>,
    pub x_range: (f64, f64),
    pub step: f64,
    pub min_second_difference: f64,
    pub findings: Vec<ButterflyFinding>,
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    command: &'static str,
    config: RunConfig,
    law: Law,
    pub clean: bool,
    pub additivity: AdditivityReport,
    pub strips: Vec<StripRow>,
    pub butterfly: ButterflyScan,
    pub notes: Vec<String>,
}

fn butterfly(law: &Law, maturities: &[f64], cfg: &RunConfig) -> ButterflyScan {
    let n = (cfg.window / SCAN_STEP).round() as i64;
    let mut findings = Vec::new();
    let mut min = f64::INFINITY;
    for &t in maturities {
        let unit = law.slice(t).scale;
        let prices: Vec<(f64, Result<f64, String>)> = (-n - 1..=n + 1)
            .map(|i| {
                let x = i as f64 * SCAN_STEP;
                (x, lewis_call(x, t, 1.0, law, &cfg.quadrature).map_err(|e| e.code().to_string()))
            })
            .collect();
        for w in prices.windows(3) {
            let x = w[1].0;
            match (&w[0].1, &w[1].1, &w[2].1) {
                (Ok(a), Ok(b), Ok(c)) => {
                    let d2 = a - 2.0 * b + c;
                    min = min.min(d2);
                    if d2 < -CONVEXITY_TOL * unit {
                        findings.push(ButterflyFinding {
                            t,
                            x,
                            second_difference: Some(d2),
                            error: None,
                        });
                    }
                }
                (_, Err(e), _) => findings.push(ButterflyFinding {
                    t,
                    x,
                    second_difference: None,
                    error: Some(e.clone()),
                }),
                _ => {}
            }
        }
    }
    ButterflyScan {
        maturities: maturities.to_vec(),
        x_range: (-(n as f64) * SCAN_STEP, n as f64 * SCAN_STEP),
        step: SCAN_STEP,
        min_second_difference: min,
        findings,
    }
}

pub fn run(law: &Law, maturities: Option<Vec<f64>>, cfg: &RunConfig, out: &OutDir) -> CliResult<ValidationReport> {
    let maturities = maturities.unwrap_or_else(|| {
        let knots = law.knot_times();
        if knots.is_empty() {
            DEFAULT_MATURITIES.to_vec()
        } else {
            knots
        }
    });
    let t_max = maturities.iter().copied().fold(0.0, f64::max);
    let grid = default_grid(t_max, &law.knot_times());
    let additivity = validate_law(law, &grid)?;
    let strips: Vec<StripRow> = maturities
        .iter()
        .map(|&t| StripRow {
            t,
            bounds: law.strip_bounds(t),
        })
        .collect();
    let butterfly = butterfly(law, &maturities, cfg);

    let mut notes = Vec::new();
    if additivity.strip_constant {
        notes.push("p+_t and p-_t are constant in time".to_string());
    }
    for (c, why) in &additivity.undetermined {
        notes.push(format!("{c:?} not evaluated: {why}"));
    }
    let report = ValidationReport {
        command: "validate",
        config: cfg.clone(),
        law: law.clone(),
        clean: additivity.is_clean() && butterfly.findings.is_empty(),
        additivity,
        strips,
        butterfly,
        notes,
    };
    out.write("validation.json", &pretty_json(&report))?;
    Ok(report)
}

pub fn render_json(report: &ValidationReport) -> String {
    pretty_json(report)
}

pub fn render_text(r: &ValidationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "validation: {}", if r.clean { "clean" } else { "findings" });
    let a = &r.additivity;
    let _ = writeln!(
        s,
        "additivity: {} violation(s) on {} grid points",
        a.violations.len(),
        a.grid_points
    );
    for v in &a.violations {
        let _ = writeln!(s, "  {:?} on [{}, {}]: {}", v.condition, v.t_from, v.t_to, v.detail);
    }
    let _ = writeln!(s, "strips:");
    for row in &r.strips {
        let b = row.bounds;
        let _ = writeln!(
            s,
            "  t = {}: p- = {}, p+ = {}, p-_t = {}, p+_t = {}",
            row.t, b.p_minus, b.p_plus, b.p_minus_t, b.p_plus_t
        );
    }
    let bf = &r.butterfly;
    let _ = writeln!(
        s,
        "butterfly: x in [{}, {}] step {} at {} maturities, min second difference {:e}, {} finding(s)",
        bf.x_range.0,
        bf.x_range.1,
        bf.step,
        bf.maturities.len(),
        bf.min_second_difference,
        bf.findings.len()
    );
    for f in &bf.findings {
        match (&f.second_difference, &f.error) {
            (Some(d), _) => {
                let _ = writeln!(s, "  t = {}, x = {}: second difference {:e}", f.t, f.x, d);
            }
            (_, Some(e)) => {
                let _ = writeln!(s, "  t = {}, x = {}: {}", f.t, f.x, e);
            }
            _ => {}
        }
    }
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}
