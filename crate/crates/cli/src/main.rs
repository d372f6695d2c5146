use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

use critgpc_cli::{run, set_threads, CliError, Experiment, RunConfig};

#[derive(Parser)]
#[command(
    version,
    about = "Critical-parameter experiments for delta-potential wave equations"
)]
struct Args {
    /// One of: kg-run, kg-critical, kg-gpc, sg-run, sg-bisect, sg-gpc-v,
    /// sg-gpc-hermite, sg-gpc-eps, convergence, mean-compare
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let experiment: Experiment = args.experiment.parse()?;
    if let Some(k) = args.threads {
        set_threads(k)?;
    }
    let config = RunConfig::load(&args.config)?;
    let report = run(experiment, &config, args.out.as_deref())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report.results).map_err(|e| CliError::Io(e.to_string()))?
    );
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(2),
            };
        }
    };
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
