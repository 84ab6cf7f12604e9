use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pwsplit::cli::{exit_code, sweep, sweep_csv, Mode, RunConfig, SweepParameter, OUTPUT_DIR_ENV};
use pwsplit::{Error, Result};

#[derive(Parser)]
#[command(name = "pwsplit", version, about = "Split measured pulse waves and estimate the pulse wave velocity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize measurements and reconstruct them.
    Simulate(RunArgs),
    /// Reconstruct waveforms read from a CSV file.
    Ingest(RunArgs),
    /// Repeat a run over a list of values of one parameter.
    Sweep {
        #[arg(long, value_enum)]
        parameter: SweepParameter,
        /// Comma separated; may be empty.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: RunConfig,
}

impl RunArgs {
    fn merged(self, implied_mode: Option<Mode>) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let mut cfg = file.overlay(self.overrides);
        if let Some(mode) = implied_mode {
            match cfg.mode {
                Some(m) if m != mode => {
                    return Err(Error::Config(format!(
                        "configuration mode `{}` conflicts with the `{}` command",
                        m.as_str(),
                        mode.as_str()
                    )))
                }
                _ => cfg.mode = Some(mode),
            }
        }
        Ok(cfg)
    }
}

fn env_output_dir() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => single(args.merged(Some(Mode::Simulate))?),
        Command::Ingest(args) => single(args.merged(Some(Mode::Ingest))?),
        Command::Sweep { parameter, values, run } => {
            let base = run.merged(None)?;
            let rows = sweep(&base, parameter, &values)?;
            let dir = env_output_dir()
                .or_else(|| base.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(pwsplit::cli::DEFAULT_OUTPUT_DIR));
            fs::create_dir_all(&dir)?;
            let path = dir.join("sweep.csv");
            fs::write(&path, sweep_csv(parameter, &rows))?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!("{} rows ({failed} failed) -> {}", rows.len(), path.display());
            Ok(())
        }
    }
}

fn single(cfg: RunConfig) -> Result<()> {
    let experiment = cfg.resolve(env_output_dir())?;
    let (outcome, written) = experiment.run()?;
    let r = &outcome.report;
    print!("pwv = {:.6} m/s, e_res = {:.4e}", r.state.u.get(), r.e_res);
    if let Some(e) = r.e_fit {
        print!(", e_fit = {e:.4e}");
    }
    println!(", stop = {}", r.trace.stop.as_str());
    for event in &r.trace.events {
        eprintln!("note: {event}");
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
