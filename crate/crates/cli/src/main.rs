// SPDX-License-Identifier: MIT OR Apache-2.0

//! `actsteer`: collect activations, estimate transport maps, apply and score them.
//!
//! Exit status is 0 on success, 2 on a usage error, 1 when a run fails.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use actsteer::{CanonicalConfig, Method, PoolingMode, SupportPolicy, TargetRefresh};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "actsteer",
    version,
    about = "Steer layered models with per-activation transport maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Record activations of an input set at chosen layers.
    Collect(CollectArgs),
    /// Fit transport maps from source to target activations.
    Estimate(EstimateArgs),
    /// Run inputs through the model with maps applied and save the outputs.
    Apply(ApplyArgs),
    /// Compare transported source activations with the target population.
    Eval(EvalArgs),
    /// Evaluate a map file over several strengths and write CSV.
    Sweep(SweepArgs),
    /// Write a built-in toy model with its two input populations.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
struct CollectArgs {
    #[arg(long)]
    model: PathBuf,
    /// Input set file.
    #[arg(long)]
    src: PathBuf,
    /// Comma-separated layer ids, ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    layers: Vec<usize>,
    #[arg(long, default_value = "mean")]
    pooling: PoolingMode,
    /// Output directory; one `layer<ID>.act` file per layer.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// linear, mean, gaussian, exact_oracle, actadd, caa, iti_c, aura, detzero.
    #[arg(long, default_value = "linear")]
    method: Method,
    /// observed, infinite, or q:LO,HI.
    #[arg(long, default_value = "observed")]
    support: SupportPolicy,
    #[arg(long, value_delimiter = ',', required = true)]
    layers: Vec<usize>,
    /// Fit layers in order, each on activations already steered upstream.
    #[arg(long)]
    causal: bool,
    /// Strength of the upstream maps during causal estimation.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Where causal estimation takes target activations from: base or intervened.
    #[arg(long, default_value = "base")]
    target_refresh: TargetRefresh,
    /// Average-precision threshold for detzero.
    #[arg(long, default_value_t = 0.6)]
    epsilon: f64,
    /// Recorded in the map file.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    maps: PathBuf,
    #[arg(long)]
    src: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Activation file with the final-layer outputs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    maps: PathBuf,
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// Layers to score. Defaults to the mapped layers plus the model's last layer.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    score: ScoreArgs,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// JSON report; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    score: ScoreArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    lambdas: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DemoArgs {
    /// identity-2-layer, tanh-3-layer, or wide-shallow.
    #[arg(long, default_value = "tanh-3-layer")]
    config: CanonicalConfig,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for model.json, src.txt, tgt.txt, config.json.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Collect(a) => commands::collect(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Apply(a) => commands::apply(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Demo(a) => commands::demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
