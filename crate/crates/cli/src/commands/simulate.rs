//! `abach simulate`: Monte Carlo price of a path-dependent payoff.

use additive_bachelier::{price_exotic, McOptions, PathGrid, Payoff, RngSpec};
use serde::Serialize;

use super::{pretty_json, OutDir};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::law::Law;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_paths: usize,
    pub price: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSpec {
    pub payoff: Payoff,
    pub maturity: f64,
    pub dates: usize,
    pub paths: usize,
    pub forward: f64,
    pub discount: f64,
    pub antithetic: bool,
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    command: &'static str,
    config: RunConfig,
    law: Law,
    simulation: SimulationSpec,
    pub price: f64,
    pub std_error: f64,
    /// Estimates on the first `n` paths of the same stream, `n` growing by
    /// factors of 4 up to the full count.
    pub convergence: Vec<ConvergenceRow>,
    outputs: Vec<String>,
}

fn path_counts(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..4).rev().map(|i| n >> (2 * i)).filter(|&m| m >= 2).collect();
    out.dedup();
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

pub fn run(law: &Law, spec: SimulationSpec, cfg: &RunConfig, out: &OutDir) -> CliResult<SimulateSummary> {
    let options = McOptions {
        antithetic: spec.antithetic,
    };
    let mut convergence = Vec::new();
    for n in path_counts(spec.paths) {
        let grid = PathGrid::uniform(spec.maturity, spec.dates, n)?;
        let e = price_exotic(
            &spec.payoff,
            &grid,
            law,
            spec.forward,
            spec.discount,
            RngSpec::new(cfg.seed),
            options,
        )?;
        convergence.push(ConvergenceRow {
            n_paths: n,
            price: e.mean,
            std_error: e.std_error,
        });
    }
    let last = convergence[convergence.len() - 1];

    let mut csv = cfg.csv_comment();
    csv.push_str("n_paths,price,std_error\n");
    for r in &convergence {
        csv.push_str(&format!("{},{},{}\n", r.n_paths, r.price, r.std_error));
    }
    out.write("convergence.csv", &csv)?;
    let summary = SimulateSummary {
        command: "simulate",
        config: cfg.clone(),
        law: law.clone(),
        simulation: spec,
        price: last.price,
        std_error: last.std_error,
        convergence,
        outputs: vec!["convergence.csv".to_string(), "simulation.json".to_string()],
    };
    out.write("simulation.json", &pretty_json(&summary))?;
    Ok(summary)
}

pub fn render(summary: &SimulateSummary) -> String {
    pretty_json(summary)
}

#[cfg(test)]
mod tests {
    use super::path_counts;

    #[test]
    fn path_counts_grow_by_four() {
        assert_eq!(path_counts(100_000), vec![1562, 6250, 25_000, 100_000]);
        assert_eq!(path_counts(5), vec![5]);
        assert_eq!(path_counts(1), vec![1]);
    }
}
