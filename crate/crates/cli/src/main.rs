use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use additive_bachelier::Payoff;
use additive_bachelier_cli::commands::{calibrate, price, simulate, validate, OutDir};
use additive_bachelier_cli::config::{Overrides, RunConfig};
use additive_bachelier_cli::error::{CliError, CliResult};
use additive_bachelier_cli::law::load_law;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Additive Bachelier calibration, pricing, simulation and validation.
#[derive(Debug, Parser)]
#[command(name = "abach", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Subordinator family: 0 (gamma) or 0.5 (inverse Gaussian).
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Moneyness window |K − F0| of the smile fit and the butterfly scan.
    #[arg(long, global = true)]
    window: Option<f64>,
    /// First-expiry discount spread threshold in basis points.
    #[arg(long, global = true)]
    spread_threshold_bps: Option<f64>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Key-value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum PayoffKind {
    EuropeanCall,
    AsianCall,
    BarrierKoCall,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the calibration cascade on an option chain.
    Calibrate {
        /// Option chain CSV.
        #[arg(long)]
        chain: PathBuf,
        /// OIS zero-rate CSV.
        #[arg(long)]
        ois: Option<PathBuf>,
    },
    /// Price a list of options with the Lewis formula.
    Price {
        /// Parameter JSON or calibration result.
        #[arg(long)]
        params: PathBuf,
        /// CSV with columns t,strike[,forward][,discount].
        #[arg(long)]
        list: PathBuf,
    },
    /// Monte Carlo price of a path-dependent payoff.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum)]
        payoff: PayoffKind,
        #[arg(long)]
        strike: f64,
        /// Knock-out level of barrier_ko_call; `-inf` disables it.
        #[arg(long, allow_hyphen_values = true)]
        barrier: Option<f64>,
        #[arg(long)]
        maturity: f64,
        /// Equally spaced monitoring dates.
        #[arg(long, default_value_t = 12)]
        dates: usize,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 0.0)]
        forward: f64,
        #[arg(long, default_value_t = 1.0)]
        discount: f64,
        #[arg(long)]
        antithetic: bool,
    },
    /// Check additivity, analyticity strips and strike convexity.
    Validate {
        #[arg(long)]
        params: PathBuf,
        /// Comma-separated maturities; defaults to the parameter knots.
        #[arg(long, value_delimiter = ',')]
        maturities: Option<Vec<f64>>,
        /// Print the JSON report instead of the text one.
        #[arg(long)]
        json: bool,
    },
}

fn run_config(g: &GlobalArgs) -> CliResult<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&Overrides {
        alpha: g.alpha,
        window: g.window,
        spread_threshold_bps: g.spread_threshold_bps,
        seed: g.seed,
    });
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<String> {
    let cfg = run_config(&cli.global)?;
    let out = OutDir(cli.global.out.clone());
    match cli.command {
        Command::Calibrate { chain, ois } => {
            calibrate::run(&chain, ois.as_deref(), &cfg, &out).map(|s| calibrate::render(&s))
        }
        Command::Price { params, list } => {
            let law = load_law(&params)?;
            price::run(&law, &list, &cfg, &out).map(|s| price::render(&s))
        }
        Command::Simulate {
            params,
            payoff,
            strike,
            barrier,
            maturity,
            dates,
            paths,
            forward,
            discount,
            antithetic,
        } => {
            let law = load_law(&params)?;
            let payoff = match (payoff, barrier) {
                (PayoffKind::EuropeanCall, _) => Payoff::EuropeanCall { strike },
                (PayoffKind::AsianCall, _) => Payoff::AsianCall { strike },
                (PayoffKind::BarrierKoCall, Some(barrier)) => Payoff::BarrierKoCall { strike, barrier },
                (PayoffKind::BarrierKoCall, None) => {
                    return Err(CliError::InvalidInput("barrier_ko_call needs --barrier".into()))
                }
            };
            let spec = simulate::SimulationSpec {
                payoff,
                maturity,
                dates,
                paths,
                forward,
                discount,
                antithetic,
            };
            simulate::run(&law, spec, &cfg, &out).map(|s| simulate::render(&s))
        }
        Command::Validate {
            params,
            maturities,
            json,
        } => {
            let law = load_law(&params)?;
            let report = validate::run(&law, maturities, &cfg, &out)?;
            Ok(if json {
                validate::render_json(&report)
            } else {
                validate::render_text(&report)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth an error report
            let _ = stdout.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
