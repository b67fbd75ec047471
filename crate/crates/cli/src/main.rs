use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use secmimo_cli::commands::{run_mc, run_thresholds, Experiment};
use secmimo_cli::config::load;
use secmimo_cli::figures::run_figure;
use secmimo_cli::simulate::{run_simulate, SimulateOptions};
use secmimo_cli::verify::{run_verify, Suite, DEFAULT_TRIALS};
use secmimo_cli::{CliError, CliResult, ResultTable};

#[derive(Parser)]
#[command(name = "secmimo", version, about = "Physical-layer security laboratory for massive-MIMO downlink")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file (sections system, power, beamforming, attack, defense, mc).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. --set system.m=512. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Master seed; defaults to mc.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials (blocks); defaults to mc.trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads, 0 for one per core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the analytic sweep behind figure 2, 3, 4, 5 or 6.
    Figure {
        id: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Run the verification suites; exit code 1 if any check fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate blocks end to end; per-block and aggregate rows.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        /// Observed user.
        #[arg(long, default_value_t = 0)]
        user: usize,
        /// Add a passive-adversary run on the same seeds and the rate gap.
        #[arg(long)]
        baseline: bool,
    },
    /// Antenna thresholds S, V, G, S1, V1 and the optimal delta.
    Thresholds {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Target rate for every user.
        #[arg(long, default_value_t = 0.2)]
        rate: f64,
        /// Overrides beamforming.delta.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// One Monte-Carlo experiment: moments, sinr, leakage, lln, identity,
    /// end-to-end or waterfill.
    Mc {
        experiment: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn emit(table: &ResultTable, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write_csv(&mut lock)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Figure { id, common } => {
            let t = run_figure(id, common.config.as_deref(), &common.overrides)?;
            emit(&t, common.out.as_deref())
        }
        Command::Verify { suite, seed, trials, workers, out } => {
            let report = run_verify(suite.parse::<Suite>()?, seed, trials, workers)?;
            emit(&report.table, out.as_deref())?;
            if report.passed() {
                Ok(())
            } else {
                let names: Vec<String> = report.failures().iter().map(|c| c.name.clone()).collect();
                Err(CliError::CheckFailed(names.join(", ")))
            }
        }
        Command::Simulate { common, run, user, baseline } => {
            let resolved = load(common.config.as_deref(), &common.overrides)?.resolve()?;
            let seed = run.seed.unwrap_or(resolved.file.mc.seed);
            let blocks = run.trials.unwrap_or(resolved.file.mc.trials);
            let opts = SimulateOptions { user, baseline, workers: run.workers };
            if user >= resolved.system.k() {
                return Err(CliError::Invalid(format!("user {user} out of range")));
            }
            let (t, _) = run_simulate(&resolved, blocks, seed, opts)?;
            emit(&t, common.out.as_deref())
        }
        Command::Thresholds { common, epsilon, rate, delta } => {
            let resolved = load(common.config.as_deref(), &common.overrides)?.resolve()?;
            let t = run_thresholds(&resolved, epsilon, rate, delta)?;
            emit(&t, common.out.as_deref())
        }
        Command::Mc { experiment, common, run } => {
            let exp: Experiment = experiment.parse()?;
            let resolved = load(common.config.as_deref(), &common.overrides)?.resolve()?;
            let seed = run.seed.unwrap_or(resolved.file.mc.seed);
            let trials = run.trials.unwrap_or(resolved.file.mc.trials);
            let t = run_mc(exp, &resolved, seed, trials, run.workers)?;
            emit(&t, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
