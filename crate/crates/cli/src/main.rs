//! Command-line front end for the BDFL simulator.
//!
//! Exit codes: 0 on success, 1 on runtime infeasibility, 2 on configuration
//! errors.

use bdfl_core::sim::{
    compare_baselines, emit_metrics, metrics_csv_string, run_simulation, sweep_v, SimConfig,
    SimError,
};
use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bdfl",
    about = "Blockchain-aided decentralized federated learning simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write metrics.csv plus ledger.jsonl.
    Run {
        /// TOML config; defaults apply for every omitted key.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the same seed under several V values and write sweep.csv and
    /// backlog.csv.
    SweepV {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated V values, e.g. 10,50,100.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the optimizing scheduler against the three baselines across
    /// seeds and write comparison.csv.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seeds as a comma list (1,2,3) or an inclusive range (1..10).
        #[arg(long, required = true)]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the convergence bound and the measured mean squared gradient
    /// for one run.
    Bound {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a small Python script that plots the emitted CSV files.
    PlotScript {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            if err.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<SimConfig, SimError> {
    let mut cfg = match path {
        Some(p) => SimConfig::from_toml_file(p)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<(), SimError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| SimError::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Parses "1,2,3" or "1..10" (inclusive).
fn parse_seeds(text: &str) -> Result<Vec<u64>, SimError> {
    let bad = |msg: String| SimError::Config(msg);
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|e| bad(format!("seed range start {lo:?}: {e}")))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|e| bad(format!("seed range end {hi:?}: {e}")))?;
        if hi < lo {
            return Err(bad(format!("seed range {text:?} is empty")));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| bad(format!("seed {s:?}: {e}")))
        })
        .collect()
}

fn dispatch(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let output = run_simulation(&cfg)?;
            for warning in &output.partition_warnings {
                eprintln!("warning: {warning}");
            }
            let label = output.run_label(&cfg);
            emit_metrics(
                &output.metrics,
                &label,
                cfg.clients,
                &out.join("metrics.csv"),
            )?;
            write_file(&out.join("ledger.jsonl"), &output.ledger.to_jsonl())?;
            if let Some(last) = output.metrics.last() {
                println!(
                    "{} rounds, scheduler {}: cumulative delay {:.4} s, final loss {:.4}, \
                     final accuracy {:.4}",
                    cfg.rounds,
                    label.scheduler,
                    last.cum_avg_delay * cfg.rounds as f64,
                    last.loss,
                    last.accuracy
                );
            } else {
                println!("0 rounds: wrote header-only metrics");
            }
            println!("wrote {}", out.join("metrics.csv").display());
            println!("wrote {}", out.join("ledger.jsonl").display());
            Ok(())
        }
        Command::SweepV {
            config,
            values,
            out,
        } => {
            let cfg = load_config(config.as_deref(), None)?;
            let entries = sweep_v(&cfg, &values)?;

            let mut all_rows = String::new();
            let mut backlog = String::from("v,round,mean_backlog\n");
            for (slot, entry) in entries.iter().enumerate() {
                let mut run_cfg = cfg.clone();
                run_cfg.tradeoff_v = entry.v;
                let label = entry.output.run_label(&run_cfg);
                let csv = metrics_csv_string(&entry.output.metrics, &label, cfg.clients);
                if slot == 0 {
                    all_rows.push_str(&csv);
                } else {
                    // Append without repeating the header.
                    all_rows.extend(csv.split_once('\n').map(|x| x.1).map(String::from));
                }
                for (round, z) in entry.mean_backlog_per_round.iter().enumerate() {
                    writeln!(backlog, "{},{round},{z}", entry.v).unwrap();
                }
                let steady = entry.mean_backlog_per_round.last().copied().unwrap_or(0.0);
                println!("V = {:>8}: final mean backlog {steady:.4}", entry.v);
            }
            write_file(&out.join("sweep.csv"), &all_rows)?;
            write_file(&out.join("backlog.csv"), &backlog)?;
            println!("wrote {}", out.join("sweep.csv").display());
            println!("wrote {}", out.join("backlog.csv").display());
            Ok(())
        }
        Command::Compare { config, seeds, out } => {
            let cfg = load_config(config.as_deref(), None)?;
            let seeds = parse_seeds(&seeds)?;
            let comparison = compare_baselines(&cfg, &seeds)?;
            write_file(&out.join("comparison.csv"), &comparison.to_csv())?;
            println!(
                "{:<14} {:>16} {:>12} {:>12} {:>14}",
                "scheduler", "cum delay (s)", "std", "final loss", "accuracy"
            );
            for s in std::iter::once(&comparison.reference).chain(&comparison.baselines) {
                println!(
                    "{:<14} {:>16.4} {:>12.4} {:>12.4} {:>14.4}",
                    s.scheduler.name(),
                    s.mean_cum_delay,
                    s.std_cum_delay,
                    s.mean_final_loss,
                    s.mean_final_accuracy
                );
            }
            println!(
                "delay reduction vs best baseline ({}): {:.2}%",
                comparison.best_baseline.name(),
                comparison.delay_reduction_pct
            );
            println!("wrote {}", out.join("comparison.csv").display());
            Ok(())
        }
        Command::Bound { config, seed } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let output = run_simulation(&cfg)?;
            let inputs = output.bound_inputs(&cfg);
            let bound = output.lemma1_bound(&cfg)?;
            let measured = output.bound_stats.mean_grad_sq();
            println!("smoothness L            = {:.6}", inputs.smoothness);
            println!("gradient bound G        = {:.6}", inputs.grad_bound);
            println!("initial gap             = {:.6}", inputs.initial_gap);
            println!("convergence bound       = {bound:.6}");
            println!("mean squared gradient   = {measured:.6}");
            println!(
                "bound holds             = {}",
                if measured <= bound { "yes" } else { "no" }
            );
            Ok(())
        }
        Command::PlotScript { out } => {
            write_file(&out.join("plot.py"), PLOT_SCRIPT)?;
            println!("wrote {}", out.join("plot.py").display());
            Ok(())
        }
    }
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plots the simulator's CSV outputs found in the current directory.

Usage: python3 plot.py [dir]
Reads backlog.csv, metrics.csv / sweep.csv, comparison.csv when present.
"""
import csv
import os
import sys

import matplotlib.pyplot as plt

base = sys.argv[1] if len(sys.argv) > 1 else "."


def rows(name):
    path = os.path.join(base, name)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        return list(csv.DictReader(fh))


backlog = rows("backlog.csv")
if backlog:
    plt.figure()
    by_v = {}
    for r in backlog:
        by_v.setdefault(r["v"], []).append((int(r["round"]), float(r["mean_backlog"])))
    for v, series in sorted(by_v.items(), key=lambda kv: float(kv[0])):
        series.sort()
        plt.plot([t for t, _ in series], [z for _, z in series], label=f"V={v}")
    plt.xlabel("round")
    plt.ylabel("mean virtual queue backlog")
    plt.legend()
    plt.savefig(os.path.join(base, "backlog.png"), dpi=150)

metrics = rows("metrics.csv") or rows("sweep.csv")
if metrics:
    plt.figure()
    by_run = {}
    for r in metrics:
        key = (r["scheduler"], r["seed"], r["v"])
        cum = float(r["cum_avg_delay_s"]) * (int(r["round"]) + 1)
        by_run.setdefault(key, []).append((int(r["round"]), cum))
    for key, series in by_run.items():
        series.sort()
        plt.plot([t for t, _ in series], [d for _, d in series],
                 label="%s seed=%s V=%s" % key)
    plt.xlabel("round")
    plt.ylabel("cumulative delay (s)")
    plt.legend(fontsize=6)
    plt.savefig(os.path.join(base, "delay.png"), dpi=150)

comparison = rows("comparison.csv")
if comparison:
    plt.figure()
    names = [r["scheduler"] for r in comparison]
    delays = [float(r["mean_cum_delay_s"]) for r in comparison]
    errs = [float(r["std_cum_delay_s"]) for r in comparison]
    plt.bar(names, delays, yerr=errs)
    plt.ylabel("mean cumulative delay (s)")
    plt.savefig(os.path.join(base, "comparison.png"), dpi=150)

print("plots written to", base)
"#;
