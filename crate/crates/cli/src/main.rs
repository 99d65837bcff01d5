//! revmix: experiment runner over random reversible circuits and their
//! k-tuple walk operators.
//!
//! Every subcommand resolves parameters, runs deterministically from
//! `--seed`, and writes self-describing records (JSON lines or CSV) to
//! `--out` or stdout. Exit codes: 0 success, 2 invalid parameters, 3 state
//! space over the cap, 4 numerical non-convergence.

mod job;
mod record;

use clap::{Args, Parser, Subcommand};
use job::{Arch, Dist, ExperimentConfig, Job, MapKind, Method, Settings};
use record::{write_records, OutFormat, ResultRecord};
use revmix_core::walk::DEFAULT_STATE_CAP;
use revmix_core::{Error, Result};
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "revmix", version, about = "Random reversible circuit walk experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Base seed; all randomness in the run derives from it
    #[arg(long)]
    seed: u64,
    /// Largest dense state dimension 2^(n*k) the run may materialize
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
    /// Worker threads (default: all cores); never changes result values
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Jsonl)]
    format: OutFormat,
}

#[derive(Args, Clone)]
struct StepArgs {
    /// Wires per string
    #[arg(long)]
    n: usize,
    /// Tuple size
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Arch::Generic)]
    arch: Arch,
    #[arg(long, value_enum, default_value_t = Dist::Alt)]
    dist: Dist,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spectral gap of one architecture step toward the full shuffle
    Gap {
        #[command(flatten)]
        step: StepArgs,
        #[arg(long, value_enum, default_value_t = Method::Dense)]
        method: Method,
        #[command(flatten)]
        common: Common,
    },
    /// Design error after t steps, directly and by telescoping
    Design {
        #[command(flatten)]
        step: StepArgs,
        /// Number of steps
        #[arg(long)]
        t: u32,
        #[arg(long, value_enum, default_value_t = Method::Dense)]
        method: Method,
        #[command(flatten)]
        common: Common,
    },
    /// Worst-case total variation to uniform distinct tuples after t steps
    Tv {
        #[command(flatten)]
        step: StepArgs,
        /// Number of steps
        #[arg(long)]
        t: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Structural checks over the standard operator family
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Character eigenstructure of the resampling difference
    Eigencheck {
        /// Wires per string
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Chain comparison via canonical path words and congestion
    Compare {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = MapKind::Nn)]
        map: MapKind,
        #[command(flatten)]
        common: Common,
    },
    /// Exact region escape probabilities against their ceilings
    Regioncheck {
        /// Wires per string
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        /// Suffix window length
        #[arg(long, default_value_t = 3)]
        ell: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Phase-1 cell collision frequency of the block network
    FeistelCollision {
        /// Bits per block
        #[arg(long)]
        n: usize,
        /// Blocks per row
        #[arg(long)]
        s: usize,
        /// Distinct rows
        #[arg(long)]
        q: usize,
        #[arg(long)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Marginal and pairwise uniformity of the block network output
    FeistelUniformity {
        /// Bits per block
        #[arg(long)]
        n: usize,
        /// Blocks per row
        #[arg(long)]
        s: usize,
        /// Distinct rows
        #[arg(long)]
        q: usize,
        #[arg(long)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a spectral query like "norm( R[nn] - R[full] )"
    Eval {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// norm(..), lambda2(..) or qform(chi(..), .., chi(..))
        #[arg(long)]
        query: String,
        #[arg(long, value_enum, default_value_t = Method::Dense)]
        method: Method,
        #[command(flatten)]
        common: Common,
    },
    /// Run an experiment described by a JSON config file
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a config file without running the experiment
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // quiet exit when a downstream pipe closes early
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SizeCap { .. } | Error::TooManyRows { .. } => 3,
        Error::NonConvergence { .. } => 4,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    let (job, settings, dry_run) = resolve(cmd)?;
    if let Some(workers) = settings.workers {
        // ignore failure: the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    let records =
        if dry_run { job::validate(&job, &settings)? } else { job::execute(&job, &settings)? };
    emit(&records, &settings)
}

fn resolve(cmd: Cmd) -> Result<(Job, Settings, bool)> {
    let flag_settings = |c: Common| Settings {
        seed: c.seed,
        cap: c.cap,
        workers: c.workers,
        out: c.out,
        format: c.format,
    };
    Ok(match cmd {
        Cmd::Gap { step, method, common } => (
            Job::Gap { n: step.n, k: step.k, arch: step.arch, dist: step.dist, method },
            flag_settings(common),
            false,
        ),
        Cmd::Design { step, t, method, common } => (
            Job::Design { n: step.n, k: step.k, arch: step.arch, dist: step.dist, t, method },
            flag_settings(common),
            false,
        ),
        Cmd::Tv { step, t, common } => (
            Job::Tv { n: step.n, k: step.k, arch: step.arch, dist: step.dist, t },
            flag_settings(common),
            false,
        ),
        Cmd::Verify { n, k, common } => (Job::Verify { n, k }, flag_settings(common), false),
        Cmd::Eigencheck { m, k, common } => {
            (Job::Eigencheck { m, k }, flag_settings(common), false)
        }
        Cmd::Compare { n, k, map, common } => {
            (Job::Compare { n, k, map }, flag_settings(common), false)
        }
        Cmd::Regioncheck { m, k, ell, common } => {
            (Job::Regioncheck { m, k, ell }, flag_settings(common), false)
        }
        Cmd::FeistelCollision { n, s, q, trials, common } => {
            (Job::FeistelCollision { n, s, q, trials }, flag_settings(common), false)
        }
        Cmd::FeistelUniformity { n, s, q, trials, common } => {
            (Job::FeistelUniformity { n, s, q, trials }, flag_settings(common), false)
        }
        Cmd::Eval { n, k, query, method, common } => {
            (Job::Eval { n, k, query, method }, flag_settings(common), false)
        }
        Cmd::Run { config } => {
            let (job, settings) = load_config(&config)?;
            (job, settings, false)
        }
        Cmd::Validate { config } => {
            let (job, settings) = load_config(&config)?;
            (job, settings, true)
        }
    })
}

fn load_config(path: &PathBuf) -> Result<(Job, Settings)> {
    let text = fs::read_to_string(path)?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config: {e}")))?;
    config.into_job_and_settings()
}

fn emit(records: &[ResultRecord], settings: &Settings) -> Result<()> {
    match &settings.out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            write_records(records, settings.format, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_records(records, settings.format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
