use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use commands::CliError;

/// Covert communication over classical-quantum channels.
#[derive(Debug, Parser)]
#[command(name = "cqcovert", version, about)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Channel JSON file with `bob` and `willie` state lists.
    #[arg(long, global = true)]
    pub channel: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; `simulate` defaults to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated blocklengths.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Reliability target used to select the best code.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Covertness target; for `nogo` a single epsilon replacing the default grid.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Slack knobs `varsigma,mu,nu` of the code-size formulas.
    #[arg(long = "sigma-knobs", global = true, value_delimiter = ',', num_args = 1)]
    pub sigma_knobs: Vec<f64>,
    /// Comma-separated distribution over the non-innocent symbols.
    #[arg(long, global = true, value_delimiter = ',', conflicts_with = "optimize")]
    pub ptilde: Vec<f64>,
    /// max-message, min-key or tradeoff:<weight>.
    #[arg(long, global = true)]
    pub optimize: Option<String>,
    /// Report divergence quantities in bits.
    #[arg(long, global = true)]
    pub bits: bool,
    /// POVM JSON file fixing Bob's product measurement.
    #[arg(long, global = true)]
    pub povm: Option<PathBuf>,
    /// Verification suite name, or `all`.
    #[arg(long, global = true)]
    pub suite: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Classify the channel's covertness regime.
    Classify,
    /// Message and key scaling coefficients.
    Coefficients,
    /// Exact small-blocklength coding experiment.
    Simulate,
    /// Randomized property suites.
    Verify,
    /// Impossibility bound for channels whose Willie supports leak.
    Nogo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    let result = match cfg.command {
        Command::Classify => commands::classify(&cfg),
        Command::Coefficients => commands::coefficients(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Nogo => commands::nogo(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
