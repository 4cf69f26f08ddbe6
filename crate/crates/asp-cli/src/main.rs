//! `asp`: seeded system-identification experiments from the command line.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
//! failures, 1 on I/O trouble.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asp_core::harness::{
    compare_algorithms, comparison_to_csv, count_ops, curve_to_csv, run_experiment, Algorithm,
    ExperimentConfig,
};
use asp_core::Error;

#[derive(Parser)]
#[command(name = "asp", version, about = "Adaptive-filter learning curves as CSV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write its learning curve.
    Run(RunArgs),
    /// Run several algorithms over identical data and write a merged table.
    Compare(CompareArgs),
    /// Print the measured per-iteration MAC count of a streaming algorithm.
    Ops(OpsArgs),
}

#[derive(Args)]
struct SharedArgs {
    /// Filter length.
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Number of synthesized data rows (streamed cyclically).
    #[arg(long, default_value_t = 50)]
    m: usize,
    /// Iteration budget.
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Step size for lms and sd.
    #[arg(long, default_value_t = 0.05)]
    mu: f64,
    /// NLMS regulariser.
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    /// Ridge seed for rls and kalman.
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    /// Standard deviation of the observation noise.
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Base seed; trials use seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of averaged trials.
    #[arg(long, default_value_t = 32)]
    trials: usize,
}

impl SharedArgs {
    fn config(&self, algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            n: self.n,
            m: self.m,
            iters: self.iters,
            mu: self.mu,
            eps: self.eps,
            delta: self.delta,
            noise_std: self.noise,
            seed: self.seed,
            trials: self.trials,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Algorithm name (lms, nlms, kaczmarz, ap, rls, sd, kalman, wiener-ls,
    /// wiener-mmse, reduced-rank).
    #[arg(long)]
    alg: String,
    #[command(flatten)]
    shared: SharedArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',', required = true)]
    algs: Vec<String>,
    #[command(flatten)]
    shared: SharedArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OpsArgs {
    /// Streaming algorithm name (lms, nlms, kaczmarz, ap, rls).
    #[arg(long)]
    alg: String,
    /// Filter length.
    #[arg(long, default_value_t = 5)]
    n: usize,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ConfigMismatch(_) | Error::InvalidParameter(_) => 2,
        Error::AtIteration { source, .. } => exit_code_for(source),
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let fail = |e: Error| (exit_code_for(&e), e.to_string());
    let io_fail = |e: std::io::Error| (1u8, e.to_string());

    match cli.command {
        Command::Run(args) => {
            let algorithm: Algorithm = args.alg.parse().map_err(fail)?;
            let curve = run_experiment(&args.shared.config(algorithm)).map_err(fail)?;
            std::fs::write(&args.out, curve_to_csv(&curve)).map_err(io_fail)?;
            eprintln!("wrote {} rows to {}", curve.len(), args.out.display());
        }
        Command::Compare(args) => {
            let cfgs = args
                .algs
                .iter()
                .map(|name| Ok(args.shared.config(name.parse()?)))
                .collect::<Result<Vec<_>, Error>>()
                .map_err(fail)?;
            let results = compare_algorithms(&cfgs, args.shared.seed).map_err(fail)?;
            std::fs::write(&args.out, comparison_to_csv(&results)).map_err(io_fail)?;
            let rows: usize = results.iter().map(|(_, c)| c.len()).sum();
            eprintln!("wrote {} rows to {}", rows, args.out.display());
        }
        Command::Ops(args) => {
            let algorithm: Algorithm = args.alg.parse().map_err(fail)?;
            let macs = count_ops(algorithm, args.n).map_err(fail)?;
            println!("{macs}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
