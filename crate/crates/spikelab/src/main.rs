//! Thin CLI over the spikelab harness.
//!
//! Exit codes: 0 success, 1 validation/run failure, 2 config error,
//! 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use spikelab::harness::{run_experiment, validate_suite, ExperimentConfig, RunOutcome};
use spikelab::Error;

#[derive(Parser)]
#[command(name = "spikelab", version, about = "Spiked-model representation learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run an experiment sweep from a config file and/or flags.
    Run(RunArgs),
    /// Run the cross-module property suite; exits 0 iff every property passes.
    Validate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment name: recover-sweep-d | recover-sweep-n |
    /// transfer-sweep-alpha | supcon-sweep-m | validate.
    #[arg(long)]
    experiment: Option<String>,
    /// Ambient dimension; a comma list sweeps d (recover-sweep-d).
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    /// Unlabeled sample count; a comma list sweeps n (recover-sweep-n).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Labeled samples per task/class; a comma list sweeps m (supcon-sweep-m).
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Number of source tasks (transfer).
    #[arg(long)]
    t: Option<usize>,
    /// Latent dimension r.
    #[arg(long)]
    r: Option<usize>,
    /// Signal scale ν.
    #[arg(long)]
    nu: Option<f64>,
    /// Largest noise level σ₍₁₎ of the heteroskedastic profile.
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma list of supervised weights α (raw values, not logs).
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for results.csv and summary.md.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&args.config, &args.experiment) {
        (Some(path), _) => ExperimentConfig::from_toml_file(path)?,
        (None, Some(_)) => ExperimentConfig::default(),
        (None, None) => {
            return Err(Error::Config("run needs --config or --experiment".into()));
        }
    };
    if let Some(name) = &args.experiment {
        cfg.experiment = Some(name.parse()?);
    }
    if let Some(values) = &args.d {
        match values.as_slice() {
            [single] => cfg.d = Some(*single),
            _ => cfg.d_grid = Some(values.clone()),
        }
    }
    if let Some(values) = &args.n {
        match values.as_slice() {
            [single] => cfg.n = Some(*single),
            _ => cfg.n_grid = Some(values.clone()),
        }
    }
    if let Some(values) = &args.m {
        match values.as_slice() {
            [single] => cfg.m = Some(*single),
            _ => cfg.m_grid = Some(values.clone()),
        }
    }
    if let Some(t) = args.t {
        cfg.t = Some(t);
    }
    if let Some(r) = args.r {
        cfg.r = Some(r);
    }
    if let Some(nu) = args.nu {
        cfg.nu = Some(nu);
    }
    if let Some(sigma) = args.sigma {
        cfg.sigma = Some(sigma);
    }
    if let Some(grid) = &args.alpha_grid {
        cfg.alpha_grid = Some(grid.clone());
    }
    if let Some(reps) = args.replicates {
        cfg.replicates = Some(reps);
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) => ExitCode::from(2),
        Error::Io(_) => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn run(args: &RunArgs) -> ExitCode {
    let cfg = match build_config(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let started = Instant::now();
    match run_experiment(&cfg) {
        Ok(RunOutcome::Sweep(rows)) => {
            let errors = rows.iter().filter(|r| !r.is_ok()).count();
            let elapsed = started.elapsed().as_secs_f64();
            let out = cfg.out.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
            println!(
                "wrote {} rows ({errors} errors) to {out}/results.csv in {elapsed:.1}s",
                rows.len()
            );
            if errors > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Ok(RunOutcome::Validation(report)) => {
            print!("{}", report.render());
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(&args),
        Command::Validate { seed } => {
            let report = validate_suite(seed);
            print!("{}", report.render());
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
