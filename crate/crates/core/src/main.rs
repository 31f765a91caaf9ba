use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tw_edge::harness::{self, Experiment, ExperimentConfig, THREADS_ENV};
use tw_edge::{Error, Result};

/// Edge statistics and Onatski ratio tests for sample covariance matrices.
#[derive(Debug, Parser)]
#[command(name = "tw-edge", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config replication count.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// CSV destination (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Edge location, scale and regularity margin per population model.
    EdgeParams,
    /// Empirical CDF of normalized largest eigenvalues at TW quantiles.
    QuantileTable,
    /// Simulated null distribution of the gap ratio.
    OnatskiNull,
    /// Tests a data matrix.
    Test {
        #[command(subcommand)]
        action: TestAction,
    },
    /// Rejection rates under the null or an alternative.
    SizePower,
    /// Rigidity, delocalization and trace-identity checks.
    Diagnostics,
}

#[derive(Debug, Subcommand)]
enum TestAction {
    /// Runs the gap-ratio test on an `M,N`-headed matrix file.
    Run { matrix_file: PathBuf },
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::EdgeParams => Experiment::EdgeParams,
            Command::QuantileTable => Experiment::QuantileTable,
            Command::OnatskiNull => Experiment::OnatskiNull,
            Command::Test { .. } => Experiment::TestRun,
            Command::SizePower => Experiment::SizePower,
            Command::Diagnostics => Experiment::Diagnostics,
        }
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let experiment = cli.command.experiment();
    let mut cfg = match &cli.global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(experiment),
    };
    if cfg.experiment != experiment {
        return Err(Error::Config(format!(
            "config describes {:?} but the command runs {experiment:?}",
            cfg.experiment
        )));
    }
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = cli.global.reps {
        cfg.replications = Some(reps);
    }
    if let Some(out) = &cli.global.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(cfg: &ExperimentConfig, csv: &str) -> Result<()> {
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| io_error(path, e))?;
            let meta = meta_path(path);
            std::fs::write(&meta, harness::metadata_json(cfg)?).map_err(|e| io_error(&meta, e))?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = config(cli)?;
    let matrix_file = match &cli.command {
        Command::Test {
            action: TestAction::Run { matrix_file },
        } => Some(matrix_file.as_path()),
        _ => None,
    };
    let csv = harness::execute(&cfg, matrix_file)?;
    write_output(&cfg, &csv)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
