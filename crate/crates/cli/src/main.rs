//! `gridsim` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gridsim_core::config::{load_config, parse_and_validate, Overrides};
use gridsim_core::mcs::Simulation;
use gridsim_core::report::run_and_emit;
use gridsim_core::{Error, Execution, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "gridsim",
    version,
    about = "Monte-Carlo PEV charging impact on distribution assets"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured penetration levels and write outputs.
    Run(RunArgs),
    /// Like `run`, but sweep an evenly spaced range of penetration levels.
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// Penetration levels as START:END:STEP (%).
        #[arg(long, default_value = "0:300:50")]
        range: String,
    },
    /// Write the feeder model as JSON.
    ExportFeeder {
        /// Take the feeder from this configuration instead of the built-in one.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Configuration (or manifest) JSON; defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "gridsim-out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: OverrideArgs,
    /// Worker threads.
    #[arg(long, env = "GRIDSIM_THREADS")]
    threads: Option<usize>,
    /// Run scenarios one after another on the calling thread.
    #[arg(long, conflicts_with = "threads")]
    sequential: bool,
}

#[derive(Args, Debug, Default)]
struct OverrideArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated penetration levels (%).
    #[arg(long, value_delimiter = ',')]
    pl: Option<Vec<f64>>,
    #[arg(long)]
    scenarios: Option<usize>,
    /// Time step (h).
    #[arg(long)]
    dt: Option<f64>,
    /// Write per-scenario traces.
    #[arg(long)]
    traces: bool,
}

impl OverrideArgs {
    fn to_overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            penetration_levels: self.pl.clone(),
            scenarios: self.scenarios,
            dt_h: self.dt,
            traces: self.traces.then_some(true),
        }
    }
}

fn resolve(config: Option<&Path>, overrides: &Overrides) -> gridsim_core::Result<RunConfig> {
    match config {
        Some(path) => load_config(path, overrides),
        None => parse_and_validate("", overrides, None),
    }
}

fn parse_range(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad range \"{s}\""))?;
    let [start, end, step] = parts[..] else {
        bail!("range must be START:END:STEP, got \"{s}\"");
    };
    if step.is_nan() || step <= 0.0 || end < start {
        bail!("range needs STEP > 0 and END >= START");
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn execute(args: &RunArgs, pl_range: Option<Vec<f64>>) -> anyhow::Result<i32> {
    let mut overrides = args.overrides.to_overrides();
    if let Some(levels) = pl_range {
        overrides.penetration_levels = Some(levels);
    }
    let config = resolve(args.config.as_deref(), &overrides)?;
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel {
            threads: args.threads,
        }
    };
    log::info!(
        "running {} levels x {} scenarios",
        config.run.penetration_levels.len(),
        config.run.scenarios
    );
    let report = run_and_emit(&config, &args.out, execution)?;
    for f in &report.aggregate.failures {
        eprintln!("scenario {} at PL {}% failed: {}", f.index, f.pl, f.message);
    }
    for l in &report.aggregate.levels {
        println!(
            "PL {:>5}%  daily LoL {:.4e}  T_x {:>8.2} y  T_v {}  TCO proposed {:>9.1}  conventional {:>9.1}",
            l.pl,
            l.daily_loss_of_life.mean,
            l.transformer_lifetime_years,
            l.vr_lifetime_years.map(|t| format!("{t:>8.2} y")).unwrap_or_else(|| "     inf  ".into()),
            l.proposed.total,
            l.conventional.total,
        );
    }
    log::info!(
        "wrote {} files to {} in {:.2} s",
        report.files.len(),
        args.out.display(),
        report.wall_time_s
    );
    Ok(report.exit_code())
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run(args) => execute(&args, None),
        Command::Sweep { args, range } => {
            let levels =
                parse_range(&range).map_err(|e| Error::Config(vec![format!("--range: {e}")]))?;
            execute(&args, Some(levels))
        }
        Command::ExportFeeder { config, out } => {
            let config = resolve(config.as_deref(), &Overrides::default())?;
            let sim = Simulation::new(config)?;
            let json = sim.model().to_json_string()?;
            match out {
                Some(path) => std::fs::write(&path, json + "\n")
                    .with_context(|| format!("cannot write {}", path.display()))?,
                None => println!("{json}"),
            }
            Ok(0)
        }
        Command::Validate { config, overrides } => {
            let config = resolve(config.as_deref(), &overrides.to_overrides())?;
            println!("{}", serde_json::to_string_pretty(&config)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Config(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
