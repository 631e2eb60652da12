use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use woldlab_cli::{output, run, validate_config, Command, Overrides};

/// Decompositions and coupling diagnostics for pairs of commuting isometries.
#[derive(Debug, Parser)]
#[command(name = "woldlab", version)]
struct Args {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random conjugations, samples and fixtures.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write decay.csv, moments.csv and boundary.csv.
    #[arg(long)]
    csv: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("woldlab: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(args: &Args) -> Result<u8, woldlab_cli::CliError> {
    let text = std::fs::read(&args.config).map_err(|source| woldlab_cli::CliError::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let overrides = Overrides {
        command: Some(args.command),
        output_dir: args.out.clone(),
        seed: args.seed,
        emit_csv: args.csv,
    };
    let config = validate_config(&text, &overrides)?;
    let out = run(&config)?;
    output::emit(&out, &config.output_dir, config.emit_csv)?;
    let code = out.exit_code();
    if let Some(v) = out.report.verdict {
        println!("{}: verdict {}", config.command.name(), v);
    }
    Ok(code)
}
