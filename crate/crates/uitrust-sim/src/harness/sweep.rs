//! Seed sweeps over the (ratio, defense) grid.

use crate::sim::TraceSink;

use super::config::{Defense, HarnessError, ScenarioConfig};
use super::metrics::MetricsReport;
use super::world::run_scenario;

/// Runs the full grid in deterministic order: ratios outermost, then
/// defenses, then seeds `0..seeds`.
pub fn run_sweep(
    base: &ScenarioConfig,
    ratios: &[f64],
    defenses: &[Defense],
    seeds: u64,
) -> Result<Vec<MetricsReport>, HarnessError> {
    let mut reports = Vec::new();
    for &ratio in ratios {
        for &defense in defenses {
            for seed in 0..seeds {
                let mut cfg = base.clone();
                cfg.sybil_ratio = ratio;
                cfg.defense = defense;
                cfg.seed = seed;
                cfg.validate()?;
                let out = run_scenario(&cfg, TraceSink::Null)?;
                reports.push(out.metrics);
            }
        }
    }
    Ok(reports)
}
