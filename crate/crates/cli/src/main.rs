use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use nlvg_cli::config::TrajectoryKind;
use nlvg_cli::{commands, CliError, ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "nlvg",
    version,
    about = "Quadcopter NLVG-PID flight-control workbench"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config `out`, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured experiment and write logs, metrics and figures.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Learn NLVG schedules with extremum seeking.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Plan a detour through the configured scene.
    Plan {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare two configs on the same experiment; the first is the baseline.
    Compare {
        /// Baseline and candidate configs, as `--config A B` or repeated.
        #[arg(long, num_args = 1..=2, required = true, action = ArgAction::Append)]
        config: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Attitude step responses, fixed PID against NLVG.
    Step(Shortcut),
    /// Storm spiral, fixed PID against NLVG.
    Storm(Shortcut),
    /// Lissajous figure-eight, fixed PID against NLVG.
    Lissajous(Shortcut),
}

#[derive(Args)]
struct Shortcut {
    /// Config to use instead of the shipped defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn load(path: &Path, common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig, common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|p| cfg.resolve(p)))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn shortcut(s: &Shortcut, kind: TrajectoryKind) -> Result<String, CliError> {
    let mut cfg = match &s.config {
        Some(p) => load(p, &s.common)?,
        None => RunConfig::paper_defaults(),
    };
    if let Some(seed) = s.common.seed {
        cfg.seed = seed;
    }
    let out = out_dir(&cfg, &s.common);
    commands::experiment(&cfg, kind, &out)
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.cmd {
        Cmd::Simulate { config, common } => {
            let cfg = load(&config, &common)?;
            commands::simulate(&cfg, &out_dir(&cfg, &common))
        }
        Cmd::Tune { config, common } => {
            let cfg = load(&config, &common)?;
            commands::tune(&cfg, &out_dir(&cfg, &common))
        }
        Cmd::Plan { config, common } => {
            let cfg = load(&config, &common)?;
            commands::plan(&cfg, &out_dir(&cfg, &common))
        }
        Cmd::Compare { config, common } => {
            if config.len() != 2 {
                return Err(
                    ConfigError::Invalid("compare needs exactly two configs".into()).into(),
                );
            }
            let a = load(&config[0], &common)?;
            let b = load(&config[1], &common)?;
            commands::compare(&a, &b, &out_dir(&a, &common))
        }
        Cmd::Step(s) => shortcut(&s, TrajectoryKind::Step),
        Cmd::Storm(s) => shortcut(&s, TrajectoryKind::Storm),
        Cmd::Lissajous(s) => shortcut(&s, TrajectoryKind::Lissajous),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are config errors; 2 is reserved for divergence
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
