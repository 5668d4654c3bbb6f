use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdwave_lab::{registry, LabError, LabResult, RunReport, Scenario};

#[derive(Parser)]
#[command(name = "sdwave", version, about = "Semi-discrete wave equation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Root directory for run outputs
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the integrator tolerance of the scenario
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario by name
    Run { config: String },
    /// List the built-in scenarios
    List,
    /// Check the speed hypotheses of a scenario only
    Verify { config: String },
}

fn load(config: &str, tol: Option<f64>) -> LabResult<Scenario> {
    let path = Path::new(config);
    let mut scenario = if path.exists() {
        Scenario::load(path)?
    } else {
        match registry::builtin(config) {
            Some(s) => s?,
            None => return Err(LabError::Config(format!("no file or built-in scenario named {config:?}"))),
        }
    };
    if let Some(tol) = tol {
        scenario.solver.tol = tol;
    }
    Ok(scenario)
}

fn print_report(report: &RunReport) {
    println!("scenario {} ({:?})", report.scenario, report.task);
    println!("output   {}", report.out_dir.display());
    for v in &report.verdicts {
        let status = match v.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "info",
        };
        if v.threshold.is_empty() {
            println!("  {status:4} {} = {}", v.check, v.value);
        } else {
            println!("  {status:4} {} = {} (threshold {})", v.check, v.value, v.threshold);
        }
    }
    println!("elapsed  {:.2?}", report.duration);
}

fn dispatch(cli: &Cli) -> LabResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::List => {
            for entry in registry::catalog()? {
                println!("{:24} [{}] {}", entry.name, entry.example, entry.description);
            }
        }
        Command::Run { config } => print_report(&sdwave_lab::run(&load(config, cli.tol)?, &cli.out)?),
        Command::Verify { config } => print_report(&sdwave_lab::verify(&load(config, cli.tol)?, &cli.out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
