use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fluct::montecarlo::SimConfig;
use fluct_cli::{CommandKind, GridSpec, RunConfig};

/// First-passage transforms, running-extremum factors and the perpetual
/// American put for phase-type jump diffusions, with an exact Monte Carlo
/// oracle.
#[derive(Parser)]
#[command(name = "fluct", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Monte Carlo path count.
    #[arg(long, default_value_t = 100_000)]
    paths: u64,
    /// RNG seed; identical (seed, shards, paths) runs are bit-identical.
    #[arg(long, default_value_t = 3_914_279_041)]
    seed: u64,
    /// Number of independent shards.
    #[arg(long, default_value_t = 8)]
    shards: u32,
    /// Truncation error budget for rate-0 runs.
    #[arg(long, default_value_t = 1e-6)]
    r0_epsilon: f64,
}

impl SimArgs {
    fn to_config(&self) -> SimConfig {
        SimConfig {
            n_paths: self.paths,
            seed: self.seed,
            shards: self.shards,
            r0_horizon_epsilon: self.r0_epsilon,
        }
    }
}

fn parse_grid(text: &str) -> Result<GridSpec, String> {
    GridSpec::parse(text)
}

#[derive(Subcommand)]
enum Command {
    /// Value-function grid: CSV of (x, v(x), payoff).
    Price {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        rate: f64,
        /// Evaluation grid lo:hi:n.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: GridSpec,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold, discount factor, pasting type and kink as JSON.
    Threshold {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Path-regularity report plus the pasting numbers as JSON.
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rate: f64,
        /// Optional strike; adds the threshold/derivative block.
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Root/pole set and infimum-mixture terms as CSV.
    Factors {
        #[arg(long)]
        model: PathBuf,
        /// Discount rate alpha.
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identity residual/z-score rows per (alpha, beta, x) as CSV.
    IdentityCheck {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rate: f64,
        /// Barrier/argument grid lo:hi:n (default 0.5:2:4).
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<GridSpec>,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-shard and merged extremum estimates as CSV.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rate: f64,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full cross-verification battery on the reference fleet.
    Verify {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn to_run_config(cmd: Command) -> RunConfig {
    let default_sim = SimConfig::default();
    match cmd {
        Command::Price {
            model,
            strike,
            rate,
            grid,
            out,
        } => RunConfig {
            command: CommandKind::Price,
            model_path: Some(model),
            strike: Some(strike),
            rate: Some(rate),
            grid: Some(grid),
            sim: default_sim,
            out,
        },
        Command::Threshold {
            model,
            strike,
            rate,
            out,
        } => RunConfig {
            command: CommandKind::Threshold,
            model_path: Some(model),
            strike: Some(strike),
            rate: Some(rate),
            grid: None,
            sim: default_sim,
            out,
        },
        Command::Diagnose {
            model,
            rate,
            strike,
            out,
        } => RunConfig {
            command: CommandKind::Diagnose,
            model_path: Some(model),
            strike,
            rate: Some(rate),
            grid: None,
            sim: default_sim,
            out,
        },
        Command::Factors { model, rate, out } => RunConfig {
            command: CommandKind::Factors,
            model_path: Some(model),
            strike: None,
            rate: Some(rate),
            grid: None,
            sim: default_sim,
            out,
        },
        Command::IdentityCheck {
            model,
            rate,
            grid,
            sim,
            out,
        } => RunConfig {
            command: CommandKind::IdentityCheck,
            model_path: Some(model),
            strike: None,
            rate: Some(rate),
            grid,
            sim: sim.to_config(),
            out,
        },
        Command::Simulate {
            model,
            rate,
            sim,
            out,
        } => RunConfig {
            command: CommandKind::Simulate,
            model_path: Some(model),
            strike: None,
            rate: Some(rate),
            grid: None,
            sim: sim.to_config(),
            out,
        },
        Command::Verify { sim, out } => RunConfig {
            command: CommandKind::Verify,
            model_path: None,
            strike: None,
            rate: None,
            grid: None,
            sim: sim.to_config(),
            out,
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems (unknown command, bad flags) print the usage
            // text and exit 64; explicit --help/--version keep exit 0.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cfg = to_run_config(cli.command);
    match fluct_cli::run(&cfg) {
        Ok(output) => {
            let write_result = match &cfg.out {
                Some(path) => std::fs::write(path, output.text.as_bytes()),
                None => std::io::stdout().write_all(output.text.as_bytes()),
            };
            if let Err(e) = write_result {
                eprintln!(
                    "{}",
                    serde_json::json!({"error": "io", "field": "out", "message": e.to_string()})
                );
                return ExitCode::from(2);
            }
            ExitCode::from(output.exit_code as u8)
        }
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::from(failure.exit_code as u8)
        }
    }
}
