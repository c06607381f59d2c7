use std::path::PathBuf;
use std::process::ExitCode;

use bowen_cli::pipeline::{status_exit_code, EXIT_CONFIG};
use bowen_cli::{load_model, run_pipeline, Command, Params, PipelineError, RGrid};
use clap::error::ErrorKind;
use clap::Parser;

/// Pressure, Bowen roots and box-dimension bounds for subshift models.
#[derive(Debug, Parser)]
#[command(name = "bowen-dim", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Builtin model name (cantor3, golden3, baker34, scalar23) or a
    /// model config file.
    #[arg(long)]
    model: String,
    /// Singular-value exponent (for `stopping`, the weight t of h).
    #[arg(long)]
    s: Option<f64>,
    /// Word length (`pressure`, `root`) or minimum depth (`boxdim`).
    #[arg(long)]
    n: Option<usize>,
    /// Highest doubling level.
    #[arg(long)]
    lmax: Option<usize>,
    /// Stopping scales as start:ratio:count.
    #[arg(long = "r-grid")]
    r_grid: Option<RGrid>,
    /// Cover index k (0 <= k < u).
    #[arg(long)]
    k: Option<usize>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<i32, PipelineError> {
    let lm = load_model(&cli.model)?;
    let params = Params {
        s: cli.s,
        n: cli.n,
        lmax: cli.lmax,
        r_grid: cli.r_grid,
        k: cli.k,
    };
    let report = run_pipeline(&lm, cli.command, &params)?;
    for note in &report.notes {
        log::info!("{note}");
    }
    let body = if cli.json { report.to_json() } else { report.to_csv() };
    match &cli.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| PipelineError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    Ok(status_exit_code(report.status))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
