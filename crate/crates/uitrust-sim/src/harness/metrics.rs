//! Run metrics: misdetection, delivery ratio, detection latency, overhead
//! and energy.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ident::DeviceId;

use super::config::Defense;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario_id: String,
    pub seed: u64,
    pub defense: Defense,
    pub sybil_ratio: f64,
    /// (FP + FN) / physical devices, root excluded.
    pub misdetection_rate: f64,
    pub false_positives: u32,
    pub false_negatives: u32,
    /// Data packets at the root over data packets originated by honest nodes.
    pub pdr: f64,
    /// Seconds from attack start until every attacker device is flagged.
    pub detection_latency_s: Option<f64>,
    /// Control-plane bytes on air over the whole run.
    pub overhead_bytes: u64,
    pub energy_j: f64,
    /// (t_seconds, flagged attacker fraction) samples.
    pub detection_ratio_timeseries: Vec<(f64, f64)>,
    pub data_originated: u64,
    pub data_delivered: u64,
    pub pending_evictions: u64,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str =
        "scenario_id,seed,defense,sybil_ratio,misdetection_rate,pdr,detection_latency_s,overhead_bytes,energy_j";

    pub fn csv_row(&self) -> String {
        let latency = self
            .detection_latency_s
            .map(|l| format!("{l:.6}"))
            .unwrap_or_default();
        format!(
            "{},{},{},{:.3},{:.6},{:.6},{},{},{:.6}",
            self.scenario_id,
            self.seed,
            self.defense,
            self.sybil_ratio,
            self.misdetection_rate,
            self.pdr,
            latency,
            self.overhead_bytes,
            self.energy_j
        )
    }
}

/// Final per-device verdict mapping: a device counts as detected when any
/// identity it ever claimed is flagged.
pub fn misdetection_rate(
    devices: &[DeviceId],
    attackers: &BTreeSet<DeviceId>,
    flagged_devices: &BTreeSet<DeviceId>,
) -> (f64, u32, u32) {
    let mut fp = 0u32;
    let mut fn_ = 0u32;
    for d in devices {
        let is_attacker = attackers.contains(d);
        let is_flagged = flagged_devices.contains(d);
        match (is_attacker, is_flagged) {
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    let rate = f64::from(fp + fn_) / devices.len().max(1) as f64;
    (rate, fp, fn_)
}

/// First time every attacker device was flagged, relative to attack start.
pub fn detection_latency_s(
    attackers: &BTreeSet<DeviceId>,
    first_flagged: &BTreeMap<DeviceId, f64>,
    attack_start_s: f64,
) -> Option<f64> {
    if attackers.is_empty() {
        return None;
    }
    let mut latest: f64 = 0.0;
    for d in attackers {
        let t = first_flagged.get(d)?;
        latest = latest.max(*t);
    }
    Some(latest - attack_start_s)
}
