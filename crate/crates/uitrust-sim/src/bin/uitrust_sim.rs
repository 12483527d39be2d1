//! Command-line front end: single runs, seed sweeps and result re-export.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use uitrust_sim::harness::{
    export, run_scenario, run_sweep, Defense, HarnessError, MetricsReport, ScenarioConfig,
};
use uitrust_sim::sim::{trace, TraceSink};

#[derive(Parser)]
#[command(name = "uitrust-sim", version, about = "RPL Sybil-attack simulator with UID-based trust routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace, metrics and trust report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seed sweep over ratios and defenses.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Number of seeds (0..n).
        #[arg(long)]
        seeds: u64,
        /// Comma-separated Sybil ratios.
        #[arg(long, value_delimiter = ',')]
        ratios: Vec<f64>,
        /// Comma-separated defenses (uitrust, rssi-profile, id-count, none-mrhof).
        #[arg(long, value_delimiter = ',')]
        defenses: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-emit sweep results from a directory to stdout.
    Report {
        #[arg(long, name = "in")]
        input: PathBuf,
        #[arg(long, value_parser = ["csv", "jsonl"])]
        format: String,
    },
}

fn load_config(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_toml_str(&text)
}

fn cmd_run(config: &Path, seed: u64, out: &Path) -> Result<(), HarnessError> {
    let mut cfg = load_config(config)?;
    cfg.seed = seed;
    cfg.validate()?;
    let output = run_scenario(&cfg, TraceSink::Memory(Vec::new()))?;
    export::write_file(&out.join("trace.ndjson"), &trace::to_ndjson(&output.trace))?;
    export::write_file(
        &out.join("metrics.csv"),
        &export::to_csv(std::slice::from_ref(&output.metrics)),
    )?;
    let report_json = serde_json::to_string_pretty(&output.metrics)
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    export::write_file(&out.join("report.json"), &report_json)?;
    if let Some(trust) = &output.final_report {
        let trust_json =
            serde_json::to_string_pretty(trust).map_err(|e| HarnessError::Io(e.to_string()))?;
        export::write_file(&out.join("trust_report.json"), &trust_json)?;
    }
    println!(
        "run complete: misdetection={:.3} pdr={:.3} overhead={}B energy={:.3}J latency={}",
        output.metrics.misdetection_rate,
        output.metrics.pdr,
        output.metrics.overhead_bytes,
        output.metrics.energy_j,
        output
            .metrics
            .detection_latency_s
            .map(|l| format!("{l:.1}s"))
            .unwrap_or_else(|| "null".into()),
    );
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    seeds: u64,
    ratios: &[f64],
    defenses: &[String],
    out: &Path,
) -> Result<(), HarnessError> {
    let cfg = load_config(config)?;
    if seeds == 0 {
        return Err(HarnessError::Config("--seeds must be at least 1".into()));
    }
    let defenses = if defenses.is_empty() {
        Defense::ALL.to_vec()
    } else {
        defenses
            .iter()
            .map(|s| Defense::parse(s))
            .collect::<Result<Vec<_>, _>>()?
    };
    let ratios = if ratios.is_empty() {
        vec![cfg.sybil_ratio]
    } else {
        ratios.to_vec()
    };
    let reports = run_sweep(&cfg, &ratios, &defenses, seeds)?;
    export::write_file(&out.join("runs.csv"), &export::to_csv(&reports))?;
    export::write_file(&out.join("runs.jsonl"), &export::to_jsonl(&reports))?;
    println!("sweep complete: {} runs -> {}", reports.len(), out.display());
    Ok(())
}

fn cmd_report(input: &Path, format: &str) -> Result<(), HarnessError> {
    let path = input.join("runs.jsonl");
    let text = fs::read_to_string(&path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut reports = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let report: MetricsReport =
            serde_json::from_str(line).map_err(|e| HarnessError::Io(e.to_string()))?;
        reports.push(report);
    }
    match format {
        "csv" => print!("{}", export::to_csv(&reports)),
        _ => print!("{}", export::to_jsonl(&reports)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed, out } => cmd_run(config, *seed, out),
        Command::Sweep {
            config,
            seeds,
            ratios,
            defenses,
            out,
        } => cmd_sweep(config, *seeds, ratios, defenses, out),
        Command::Report { input, format } => cmd_report(input, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
