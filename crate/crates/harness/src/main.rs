use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sithpft_core::{compare_trees, TreeSnapshot};
use sithpft_harness::{bench_entropy, export_report, run_experiment, ExperimentSpec, RunOptions};

#[derive(Parser)]
#[command(name = "sithpft", version, about = "Paired SITH-PFT / PFT-DPW planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec and write report.csv / report.csv.json.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (defaults to the spec's `output`, then `results`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Compare trees and actions after every session.
        #[arg(long, overrides_with = "no_verify", default_value_t = true)]
        verify: bool,
        #[arg(long = "no-verify")]
        no_verify: bool,
        /// Also write every session's tree snapshots to this directory.
        #[arg(long)]
        dump_trees: Option<PathBuf>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Compare two tree snapshot files.
    DiffTrees { left: PathBuf, right: PathBuf },
    /// Time the entropy estimator for several particle counts.
    BenchEntropy {
        #[arg(long, value_delimiter = ',', default_values_t = vec![100, 200, 400, 800])]
        m: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Minimum measuring time per point, in seconds.
        #[arg(long, default_value_t = 0.5)]
        min_time: f64,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { spec, out, workers, verify, no_verify, dump_trees, quiet } => {
            let spec = ExperimentSpec::load(&spec)?;
            let out = out.or_else(|| spec.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let opts = RunOptions { workers, verify: verify && !no_verify, dump_trees, progress: !quiet };
            let report = run_experiment(&spec, &opts)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            export_report(&report, out.join("report.csv"))?;
            println!(
                "{:<18} {:>12} {:>12} {:>8} {:>10}",
                "config", "pft-dpw [s]", "sith-pft [s]", "speedup", "consistent"
            );
            for row in &report.rows {
                println!(
                    "{:<18} {:>5.3}±{:<6.3} {:>5.3}±{:<6.3} {:>8.3} {:>10}",
                    row.config.label(),
                    row.baseline.mean_s,
                    row.baseline.stderr_s,
                    row.sith.mean_s,
                    row.sith.stderr_s,
                    row.speedup,
                    row.consistent.map_or("unverified".to_string(), |c| c.to_string())
                );
            }
            println!("wrote {}", out.join("report.csv").display());
        }
        Command::DiffTrees { left, right } => {
            let a = TreeSnapshot::load(&left)?;
            let b = TreeSnapshot::load(&right)?;
            let cmp = compare_trees(&a, &b);
            if cmp.equal {
                println!("identical ({})", a.digest());
            } else {
                let path = cmp.first_divergence.unwrap_or_default();
                let steps: Vec<String> = path.iter().map(|s| format!("a{}/o{}", s.action, s.child)).collect();
                println!("trees differ at /{}", steps.join("/"));
                bail!("trees differ");
            }
        }
        Command::BenchEntropy { m, levels, seed, min_time } => {
            let rows = bench_entropy(&m, levels, seed, min_time)?;
            println!("{:>6} {:>14} {:>14} {:>8}", "m", "exact [s]", "refined [s]", "ratio");
            for r in rows {
                let ratio = r.ratio.map_or("-".to_string(), |v| format!("{v:.2}"));
                println!("{:>6} {:>14.6e} {:>14.6e} {:>8}", r.m, r.exact_s, r.refined_s, ratio);
            }
        }
    }
    Ok(())
}
