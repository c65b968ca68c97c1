//! `sqkd`: run subspace QKD experiments from a config file.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sqkd_core::harness::{
    load_config, run_sweep, write_report, write_sweep_csv, OutputFormat, SweepSpec,
};
use sqkd_core::{execute, HarnessError};

#[derive(Parser)]
#[command(name = "sqkd", version, about = "Subspace QKD simulator under collective noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print or write its report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Report destination; defaults to the config's output.path, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Repeat the experiment at each θ and emit a CSV table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated angles in radians.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        theta: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Structured,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Structured => OutputFormat::Structured,
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            HarnessError::Io {
                path: p.to_path_buf(),
                source,
            }
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            format,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(f) = format {
                cfg.output.format = f.into();
            }
            if out.is_some() {
                cfg.output.path = out;
            }
            let report = execute(&cfg)?;
            let mut w = open_out(cfg.output.path.as_deref())?;
            write_report(&report, cfg.output.format, &mut w)?;
            w.flush().map_err(|source| HarnessError::Io {
                path: cfg.output.path.clone().unwrap_or_else(|| "<stdout>".into()),
                source,
            })?;
            if report.aborted {
                eprintln!(
                    "aborted: phase-flip estimate {:.4} exceeds {}",
                    report.run.estimate.t_p.value, cfg.abort_if_tp_above
                );
            }
        }
        Command::Sweep {
            config,
            theta,
            seed,
            out,
        } => {
            let mut base = load_config(&config)?;
            if let Some(s) = seed {
                base.seed = s;
            }
            let rows = run_sweep(&SweepSpec {
                base,
                values: theta,
            })?;
            let mut w = open_out(out.as_deref())?;
            write_sweep_csv(&rows, &mut w)?;
        }
    }
    Ok(())
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
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
