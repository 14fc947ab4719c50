use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdvb_lab::experiment::{self, Command, ExperimentConfig, RunReport};

#[derive(Parser)]
#[command(
    name = "kdvb",
    version,
    about = "Experiment runner for the linearized KdV-Burgers laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Free evolution, dissipativity, scheme order and smoothing gains.
    Simulate(Common),
    /// Observability constants from Gramians.
    Observability(Common),
    /// Weight construction, coefficient algebra and Carleman ratios.
    Carleman(Common),
    /// Null, steering, cutoff and half-line control runs.
    Control(Common),
    /// Every configuration of a directory, with an aggregate summary.
    ReproduceAll(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file, or directory for `reproduce-all`.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn run_single(expected: Command, args: &Common) -> kdvb_lab::Result<bool> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.command != expected {
        return Err(kdvb_lab::Error::Config {
            path: "command".into(),
            message: format!(
                "configuration is for `{}`, not `{}`",
                cfg.command.name(),
                expected.name()
            ),
        });
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("results").join(&cfg.name));
    let report = experiment::run(&cfg)?;
    report.write(&out)?;
    print_report(&report);
    println!("report written to {}", out.display());
    Ok(report.passed)
}

fn print_report(report: &RunReport) {
    for c in &report.checks {
        println!(
            "{:<5} {}/{}: {:e} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            report.name,
            c.name,
            c.measured,
            c.limit
        );
    }
}

fn run_all(args: &Common) -> kdvb_lab::Result<bool> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let suite = experiment::reproduce_all(&args.config, &out, args.seed)?;
    for r in &suite.reports {
        print_report(r);
    }
    println!("summary written to {}", out.join("summary.json").display());
    Ok(suite.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Cmd::Simulate(a)
        | Cmd::Observability(a)
        | Cmd::Carleman(a)
        | Cmd::Control(a)
        | Cmd::ReproduceAll(a) => a,
    };
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Cmd::Simulate(a) => run_single(Command::Simulate, a),
        Cmd::Observability(a) => run_single(Command::Observability, a),
        Cmd::Carleman(a) => run_single(Command::Carleman, a),
        Cmd::Control(a) => run_single(Command::Control, a),
        Cmd::ReproduceAll(a) => run_all(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
