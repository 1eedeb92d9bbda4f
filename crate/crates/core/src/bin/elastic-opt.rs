use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elastic_opt::cli::{exit_code, run, summarize_glob, ExperimentConfig, EXIT_VALIDATION};

/// Elastic averaging SGD workbench: simulator, stability lab and TCP runtime.
#[derive(Debug, Parser)]
#[command(name = "elastic-opt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a key=value config file.
    Run {
        /// Config file; `--config` may be used instead.
        config: Option<PathBuf>,
        #[arg(long = "config", value_name = "PATH")]
        config_flag: Option<PathBuf>,
        /// Center listen address (overrides `bind`).
        #[arg(long)]
        bind: Option<String>,
        /// Center address for a worker (overrides `connect`).
        #[arg(long)]
        connect: Option<String>,
        /// Problem dimension (overrides `dim`).
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Condense metrics CSVs into time-to-threshold and speedup columns.
    Summarize {
        /// Glob matching metrics CSV files.
        pattern: String,
        #[arg(long, allow_negative_numbers = true)]
        threshold: f64,
        /// Write the table here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn execute(command: Command) -> elastic_opt::Result<()> {
    match command {
        Command::Run { config, config_flag, bind, connect, dim } => {
            let path =
                config.or(config_flag).ok_or_else(|| elastic_opt::Error::Config("no config file given".into()))?;
            let text = std::fs::read_to_string(&path)?;
            let mut overrides = Vec::new();
            if let Ok(seed) = std::env::var("EAVG_SEED") {
                overrides.push(("seed", seed));
            }
            if let Some(b) = bind {
                overrides.push(("bind", b));
            }
            if let Some(c) = connect {
                overrides.push(("connect", c));
            }
            if let Some(d) = dim {
                overrides.push(("dim", d.to_string()));
            }
            let cfg = ExperimentConfig::parse_with(&text, &overrides)?;
            for written in run(&cfg)? {
                println!("{}", written.display());
            }
            Ok(())
        }
        Command::Summarize { pattern, threshold, output } => {
            let table = summarize_glob(&pattern, threshold)?;
            match output {
                Some(path) => std::fs::write(path, table)?,
                None => print!("{table}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EAVG_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
