//! `mbsde`: run, study and benchmark manifold-valued BSDE experiments.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mbsde::experiment::{
    benchmark, convergence_study, default_output_dir, list_benchmarks, run_experiment, write_atomic, ExperimentConfig,
    RunReport, StudyAxis,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mbsde", version, about = "Manifold-valued BSDEs via penalized heat flow")]
struct Cli {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: runs/<name>-<hash>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML (or .json) config.
    Run { config: PathBuf },
    /// Refinement study along one axis: ε, dt or dx.
    Study {
        #[arg(long)]
        axis: StudyAxis,
        config: PathBuf,
    },
    /// Built-in benchmark configs.
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
}

#[derive(Subcommand)]
enum BenchAction {
    /// List the catalog.
    List,
    /// Run a catalog entry.
    Run { id: String },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli_out: &Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| default_output_dir(cfg))
}

fn print_report(report: &RunReport, dir: &Path) {
    println!("run {} ({})", report.name, &report.config_hash[..12]);
    for c in &report.criteria {
        let tag = match (c.asserted, c.passed) {
            (false, _) => "info",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        println!("  {tag:4}  {:28} {:<12.4e} {}", c.name, c.value, c.bound);
    }
    for s in &report.studies {
        let tag = if s.passed { "PASS" } else { "FAIL" };
        println!(
            "  {tag:4}  study {:22} order {:.3} expected [{}, {}]",
            s.axis.to_string(),
            s.fitted_order,
            s.expected[0],
            s.expected[1]
        );
    }
    println!("  output: {}", dir.display());
}

fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    let report = run_experiment(cfg, dir)?;
    print_report(&report, dir);
    Ok(report.passed())
}

fn study(cfg: &ExperimentConfig, axis: StudyAxis, dir: &Path) -> Result<bool> {
    let table = convergence_study(cfg, axis)?;
    std::fs::create_dir_all(dir)?;
    write_atomic(dir, &format!("study_{axis}.json"), (serde_json::to_string_pretty(&table)? + "\n").as_bytes())?;
    // Append to an existing report of the same config.
    let path = dir.join("report.json");
    if let Ok(mut report) = RunReport::load(&path) {
        if report.config_hash == cfg.hash() {
            report.studies.retain(|s| s.axis != axis);
            report.studies.push(table.clone());
            write_atomic(dir, "report.json", report.to_json()?.as_bytes())?;
        }
    }
    println!("study {axis}: {}", table.metric);
    for (l, v) in table.levels.iter().zip(&table.values) {
        println!("  {l:<12.4e} {v:.6e}");
    }
    let tag = if table.passed { "PASS" } else { "FAIL" };
    println!(
        "  {tag} fitted order {:.3}, expected [{}, {}]",
        table.fitted_order, table.expected[0], table.expected[1]
    );
    Ok(table.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Run { config } => load(config, cli.seed).and_then(|cfg| run(&cfg, &out_dir(&cli.out, &cfg))),
        Command::Study { axis, config } => {
            load(config, cli.seed).and_then(|cfg| study(&cfg, *axis, &out_dir(&cli.out, &cfg)))
        }
        Command::Bench { action: BenchAction::List } => {
            for b in list_benchmarks() {
                println!("{:30} {}", b.id, b.description);
            }
            Ok(true)
        }
        Command::Bench { action: BenchAction::Run { id } } => benchmark(id)
            .map_err(anyhow::Error::from)
            .map(|mut cfg| {
                if let Some(s) = cli.seed {
                    cfg.seed = s;
                }
                cfg
            })
            .and_then(|cfg| run(&cfg, &out_dir(&cli.out, &cfg))),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
