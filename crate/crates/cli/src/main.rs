use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use et_cli::{load_config, run, Command, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "et", version, about = "Ergodic transport on Bernoulli shifts")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Value bracket, optimal plan, LP dual pair and its certificate.
    Solve(Args),
    /// Dual pair refined by the Lax-Oleinik operator.
    Dual(Args),
    /// Zeta-measure convergence sweep.
    Zeta(Args),
    /// Check a stored plan and dual pair.
    Certify(Args),
    /// Ergodic minimum over periodic orbits and Birkhoff deficiency scan.
    Eo(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the grid depth.
    #[arg(long, value_name = "K")]
    depth: Option<usize>,
    /// Worker threads for the zeta pair solves (default: all processors).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Seed of the random sample pairs drawn by `eo`.
    #[arg(long, value_name = "S", default_value_t = 0)]
    seed: u64,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Dual(a) => (Command::Dual, a),
        Cmd::Zeta(a) => (Command::Zeta, a),
        Cmd::Certify(a) => (Command::Certify, a),
        Cmd::Eo(a) => (Command::Eo, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command, args: Args) -> Result<(), RunError> {
    if let Some(n) = args.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| RunError::Output {
            path: PathBuf::from("--workers"),
            message: e.to_string(),
        })?;
    }
    let mut config = load_config(&args.config)?;
    if let Some(k) = args.depth {
        config = config.with_depth(k)?;
    }
    let base_dir = args.config.parent().map(|p| p.to_path_buf());
    let report_path = args.out.clone().or_else(|| config.output.report.as_ref().map(|p| et_cli::config::resolve(base_dir.as_deref(), p)));
    let opts = RunOptions { base_dir, report_path: report_path.clone(), seed: args.seed, timings: args.timings };
    let out = run(&config, command, &opts)?;
    let json = out.report.to_json();
    match &report_path {
        Some(p) => {
            std::fs::write(p, json).map_err(|e| RunError::Output { path: p.clone(), message: e.to_string() })?;
            eprintln!("report: {}", p.display());
        }
        None => print!("{json}"),
    }
    for line in &out.status {
        eprintln!("{line}");
    }
    Ok(())
}
