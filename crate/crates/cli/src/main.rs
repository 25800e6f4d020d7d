use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elliptic_cli::{load_plan, run_experiment, RunReport, Task};

#[derive(Parser)]
#[command(name = "elliptic", version, about = "Sparse elliptic random matrix experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw the sparse matrices and write them as triplet CSVs.
    Generate(CommonArgs),
    /// Write eigenvalues and singular values of the shifted matrices.
    Spectrum(CommonArgs),
    /// Compute the metrics, compare them with the thresholds and write metrics.json.
    Verify(CommonArgs),
    /// Solve the self-consistent equation at the plan's shifts and export densities.
    Stieltjes(CommonArgs),
    /// Draw an eigenvalue scatter plot with the limiting ellipse.
    Figure(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON plan or bare ensemble config.
    #[arg(long, value_name = "PATH", required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in plan, e.g. fig1b.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Master seed override.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Trial count override.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

fn fmt(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

fn summarize(report: &RunReport) {
    let label = report.name.as_deref().unwrap_or("plan");
    println!("{label}: n = {}, {} trial(s), rho_eff = {:.6} (limit {:.6})",
             report.n, report.trials.len(), report.sparsity.rho_effective, report.sparsity.rho_effective_limit);
    for t in report.trials.iter().filter(|t| t.error.is_some()) {
        println!("  trial {} failed: {}", t.index, t.error.as_deref().unwrap_or(""));
    }
    for s in &report.stieltjes {
        println!("  z = {}: stieltjes {:.6}, potential {:.6}", s.z, s.log_integral, s.log_potential);
    }
    for c in &report.checks {
        println!("  [{}] {} = {} (threshold {})", if c.passed { "pass" } else { "FAIL" }, c.name, fmt(c.value), fmt(c.threshold));
    }
    if report.exploratory {
        println!("  exploratory run: nothing asserted");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match cli.command {
        Command::Generate(a) => (Task::Generate, a),
        Command::Spectrum(a) => (Task::Spectrum, a),
        Command::Verify(a) => (Task::Verify, a),
        Command::Stieltjes(a) => (Task::Stieltjes, a),
        Command::Figure(a) => (Task::Figure, a),
    };
    let result = load_plan(args.config.as_deref(), args.preset.as_deref(), args.seed, args.trials)
        .and_then(|plan| Ok(run_experiment(&plan, task, Some(&args.out))?));
    match result {
        Ok(report) => {
            summarize(&report);
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
