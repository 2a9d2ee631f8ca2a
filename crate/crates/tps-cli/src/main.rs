//! `tps` — reliability-constrained design pipeline for a thermal-protection
//! film: high-fidelity solves, surrogate training and validation, posterior
//! sampling, cross-verification, and benchmarking.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tps_cli::config::{RunConfig, SamplerMethod};
use tps_cli::error::CliResult;
use tps_cli::{commands, error};

#[derive(Parser)]
#[command(name = "tps", version, about = "Bayesian design of a thermal-protection film")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; omitted fields take the documented defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps internal parallelism; 1 guarantees bit-reproducible output.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-difference solve of the nominal scenario.
    Solve(Common),
    /// Series-oracle solution on the same lattice.
    Analytic(Common),
    /// Train the physics-informed surrogate.
    Train(Common),
    /// Compare a trained surrogate against the finite-difference reference.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Trained model artifact from `tps train`.
        #[arg(long, default_value = "out/model.json")]
        model: PathBuf,
    },
    /// Sample the material-property posterior on the surrogate.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out/model.json")]
        model: PathBuf,
        /// Sampler: mh or smc (overrides the config).
        #[arg(long)]
        method: Option<String>,
        /// Posterior ∝ likelihood inside the truncation box.
        #[arg(long)]
        flat_prior: bool,
    },
    /// Re-verify a sampled chain through the finite-difference solver.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Chain CSV from `tps sample`.
        #[arg(long, default_value = "out/chain.csv")]
        chain: PathBuf,
    },
    /// Time surrogate posterior evaluations against full solves.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out/model.json")]
        model: PathBuf,
    },
}

fn load_config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = common.threads {
        cfg.threads = threads;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let common = match &cli.command {
        Command::Solve(c) | Command::Analytic(c) | Command::Train(c) => c,
        Command::Validate { common, .. }
        | Command::Sample { common, .. }
        | Command::Verify { common, .. }
        | Command::Bench { common, .. } => common,
    };
    let cfg = load_config(common)?;
    // Parallel sections (batched prediction, cross-verification) run on this
    // pool; chunked assembly keeps results independent of the thread count.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();

    let summary = match &cli.command {
        Command::Solve(c) => commands::cmd_solve(&cfg, &c.out)?,
        Command::Analytic(c) => commands::cmd_analytic(&cfg, &c.out)?,
        Command::Train(c) => commands::cmd_train(&cfg, &c.out)?,
        Command::Validate { common, model } => commands::cmd_validate(&cfg, model, &common.out)?,
        Command::Sample { common, model, method, flat_prior } => {
            let method = match method.as_deref() {
                None => cfg.sampler.method,
                Some("mh") => SamplerMethod::Mh,
                Some("smc") => SamplerMethod::Smc,
                Some(other) => {
                    return Err(error::CliError::Validation(format!(
                        "unknown sampler method `{other}` (expected mh or smc)"
                    )))
                }
            };
            commands::cmd_sample(&cfg, model, method, *flat_prior || cfg.sampler.flat_prior, &common.out)?
        }
        Command::Verify { common, chain } => commands::cmd_verify(&cfg, chain, &common.out)?,
        Command::Bench { common, model } => commands::cmd_bench(&cfg, model, &common.out)?,
    };
    eprintln!(
        "{}: done; {} artifact(s) in place",
        summary.command,
        summary.artifacts.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
