use std::path::PathBuf;
use std::process::ExitCode;

use bridgelab_cli::sweep::run_sweep;
use bridgelab_cli::{configure_threads, parse_config, run_experiment, CliError, OutputDir, DEFAULT_OUTPUT_DIR};
use clap::{Parser, Subcommand};

/// Spectral and dynamical experiments on a damped cable-deck bridge model.
#[derive(Parser)]
#[command(name = "bridgelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a config once per value of one parameter.
    Sweep {
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and report every violation.
    Validate { config: PathBuf },
}

fn output_root(cli: Option<PathBuf>, cfg: Option<PathBuf>) -> PathBuf {
    cli.or(cfg).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, out } => {
            let cfg = parse_config(&config)?;
            let root = output_root(out, cfg.output_dir.clone());
            let files = run_experiment(&cfg, OutputDir::create(&root)?)?;
            println!("{} files written to {}", files.len(), root.display());
        }
        Command::Sweep {
            param,
            values,
            config,
            out,
        } => {
            let cfg = parse_config(&config)?;
            let root = output_root(out, cfg.output_dir.clone());
            run_sweep(&cfg, &param, &values, &root)?;
            println!("{} runs written to {}", values.len(), root.display());
        }
        Command::Validate { config } => {
            parse_config(&config)?;
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
