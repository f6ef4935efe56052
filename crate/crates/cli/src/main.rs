use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circlezeros::stats::TestKind;
use circlezeros_cli::config::{CompareConfig, CompareInput, Experiment, RunConfig, DEFAULT_ALPHA};
use circlezeros_cli::{replay, run, CliError, Overrides, RunManifest, RunOutcome};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

const OUT_ENV: &str = "CIRCLEZEROS_OUT";
const DEFAULT_OUT: &str = "circlezeros-out";

/// Random self-reciprocal polynomials, circular ensembles and Epstein zeta
/// experiments.
#[derive(Debug, Parser)]
#[command(name = "circlezeros", version)]
struct Cli {
    /// Experiment config (JSON). Without a subcommand the config is run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism. Outputs do not
    /// depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory. The CIRCLEZEROS_OUT environment variable takes
    /// precedence.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// On-circle tolerance for every sampler.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Significance level for compare.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment in --config.
    Run,
    /// Rerun a manifest and check that every data file is byte-identical.
    Replay { manifest: PathBuf },
    /// Two-sample test on gaps read from two files (angles .jsonl or gap
    /// .csv). Exit code 0: not rejected, 1: rejected.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = TestArg::Ks)]
        test: TestArg,
        /// Bins for the chi-square test.
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TestArg {
    Ks,
    ChiSquare,
}

fn out_dir(flag: Option<&Path>, fallback: &Path) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .or_else(|| flag.map(Path::to_path_buf))
        .unwrap_or_else(|| fallback.to_path_buf())
}

fn execute(cli: Cli) -> Result<RunOutcome, CliError> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .map_err(|e| CliError::ConfigInvalid(format!("cannot start {w} workers: {e}")))?;
    }
    let overrides = Overrides {
        seed: cli.seed,
        tolerance: cli.tolerance,
        alpha: cli.alpha,
    };
    match cli.command {
        None | Some(Command::Run) => {
            let path = cli
                .config
                .ok_or_else(|| CliError::ConfigInvalid("--config is required".into()))?;
            let config = RunConfig::load(&path)?.resolve(overrides)?;
            run(&config, &out_dir(cli.out.as_deref(), Path::new(DEFAULT_OUT)))
        }
        Some(Command::Replay { manifest }) => {
            let m = RunManifest::load(&manifest)?;
            let fallback = manifest.parent().unwrap_or(Path::new(".")).join("replay");
            replay(&m, &out_dir(cli.out.as_deref(), &fallback))
        }
        Some(Command::Compare { a, b, test, bins }) => {
            let test = match test {
                TestArg::Ks => TestKind::Ks,
                TestArg::ChiSquare => TestKind::ChiSquare { bins },
            };
            let config = RunConfig {
                seed: 0,
                tolerance: None,
                alpha: DEFAULT_ALPHA,
                experiment: Experiment::Compare(CompareConfig {
                    a: CompareInput::File { file: a },
                    b: CompareInput::File { file: b },
                    test,
                }),
            }
            .resolve(overrides)?;
            run(&config, &out_dir(cli.out.as_deref(), Path::new(DEFAULT_OUT)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record = json!({ "error": "UsageError", "message": e.to_string().trim() });
            eprintln!("{record}");
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(outcome) => {
            for line in &outcome.report {
                println!("{line}");
            }
            match outcome.rejected {
                Some(true) => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(2)
        }
    }
}
