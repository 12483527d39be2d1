//! Baseline defenses: received-power profiling and per-identity message
//! counting. Both are deliberately simple reimplementations of the schemes
//! they stand in for, parameterized so each one catches its intended
//! non-adaptive attacker.

use std::collections::{BTreeMap, BTreeSet};

use crate::ident::MacAddr;
use crate::sim::SimTime;

use super::config::BaselineConfig;

/// Per-(observer, identity) received-power statistics over the current and
/// previous window, which together form the profile recency horizon.
#[derive(Debug, Default, Clone, Copy)]
struct PowerStats {
    sum: f64,
    count: u32,
}

#[derive(Debug)]
pub struct RssiProfiler {
    window: SimTime,
    epsilon_db: f64,
    min_frames: u32,
    epoch: u64,
    current: BTreeMap<(u16, MacAddr), PowerStats>,
    previous: BTreeMap<(u16, MacAddr), PowerStats>,
}

impl RssiProfiler {
    pub fn new(cfg: &BaselineConfig) -> Self {
        RssiProfiler {
            window: SimTime::from_secs_f64(cfg.rssi_window_s),
            epsilon_db: cfg.rssi_epsilon_db,
            min_frames: cfg.rssi_min_frames,
            epoch: 0,
            current: BTreeMap::new(),
            previous: BTreeMap::new(),
        }
    }

    fn roll(&mut self, t: SimTime) {
        let epoch = t.as_micros() / self.window.as_micros().max(1);
        if epoch != self.epoch {
            self.previous = if epoch == self.epoch + 1 {
                std::mem::take(&mut self.current)
            } else {
                BTreeMap::new()
            };
            self.current = BTreeMap::new();
            self.epoch = epoch;
        }
    }

    pub fn record(&mut self, observer: u16, src: MacAddr, rssi_dbm: f64, t: SimTime) {
        self.roll(t);
        let stats = self.current.entry((observer, src)).or_default();
        stats.sum += rssi_dbm;
        stats.count += 1;
    }

    /// Mean received power per identity at each observer over the recency
    /// horizon, keeping only identities with enough frames.
    fn profiles(&self) -> BTreeMap<u16, Vec<(MacAddr, f64)>> {
        let mut merged: BTreeMap<(u16, MacAddr), PowerStats> = self.previous.clone();
        for (k, s) in &self.current {
            let e = merged.entry(*k).or_default();
            e.sum += s.sum;
            e.count += s.count;
        }
        let mut out: BTreeMap<u16, Vec<(MacAddr, f64)>> = BTreeMap::new();
        for ((obs, mac), s) in merged {
            if s.count >= self.min_frames {
                out.entry(obs)
                    .or_default()
                    .push((mac, s.sum / f64::from(s.count)));
            }
        }
        out
    }

    /// Current suspicion set. Two identities merge as one suspected device
    /// when every observer that profiles both sees their mean received
    /// power within epsilon; merged groups of two or more are flagged.
    pub fn evaluate(&self) -> BTreeSet<MacAddr> {
        let profiles = self.profiles();
        rssi_profile_detect(&profiles, self.epsilon_db)
    }
}

/// Profile-merging core, exposed for direct testing: per-observer mean
/// received power per identity, merged by consistency across observers.
pub fn rssi_profile_detect(
    profiles: &BTreeMap<u16, Vec<(MacAddr, f64)>>,
    epsilon_db: f64,
) -> BTreeSet<MacAddr> {
    // Gather per-pair evidence: a pair can merge only if no common
    // observer separates it and at least one observer profiles both.
    let mut verdict: BTreeMap<(MacAddr, MacAddr), bool> = BTreeMap::new();
    for macs in profiles.values() {
        for i in 0..macs.len() {
            for j in (i + 1)..macs.len() {
                let (a, ra) = macs[i];
                let (b, rb) = macs[j];
                let key = if a < b { (a, b) } else { (b, a) };
                let close = (ra - rb).abs() < epsilon_db;
                verdict
                    .entry(key)
                    .and_modify(|v| *v &= close)
                    .or_insert(close);
            }
        }
    }

    // Union-find over merged pairs.
    let mut ids: BTreeMap<MacAddr, usize> = BTreeMap::new();
    for (a, b) in verdict.keys() {
        let next = ids.len();
        ids.entry(*a).or_insert(next);
        let next = ids.len();
        ids.entry(*b).or_insert(next);
    }
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for ((a, b), merged) in &verdict {
        if *merged {
            let ra = find(&mut parent, ids[a]);
            let rb = find(&mut parent, ids[b]);
            parent[ra] = rb;
        }
    }
    let mut sizes: BTreeMap<usize, u32> = BTreeMap::new();
    for mac in ids.keys() {
        *sizes.entry(find(&mut parent, ids[mac])).or_default() += 1;
    }
    ids.keys()
        .filter(|mac| sizes[&find(&mut parent, ids[mac])] >= 2)
        .copied()
        .collect()
}

/// Identity/message-count detector: flags identities whose DIS volume in a
/// window exceeds a multiple of the honest minimum-interval DIO rate.
/// Flags latch for the rest of the run.
#[derive(Debug)]
pub struct IdCountDetector {
    window: SimTime,
    threshold: f64,
    epoch: u64,
    counts: BTreeMap<MacAddr, u32>,
    flagged: BTreeSet<MacAddr>,
}

impl IdCountDetector {
    pub fn new(cfg: &BaselineConfig, trickle_i_min_s: f64) -> Self {
        let honest_rate = 1.0 / trickle_i_min_s.max(1e-6);
        IdCountDetector {
            window: SimTime::from_secs_f64(cfg.id_count_window_s),
            threshold: cfg.id_count_rate_factor * honest_rate * cfg.id_count_window_s,
            epoch: 0,
            counts: BTreeMap::new(),
            flagged: BTreeSet::new(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn record_dis(&mut self, src: MacAddr, t: SimTime) {
        let epoch = t.as_micros() / self.window.as_micros().max(1);
        if epoch != self.epoch {
            self.counts.clear();
            self.epoch = epoch;
        }
        let c = self.counts.entry(src).or_insert(0);
        *c += 1;
        if f64::from(*c) > self.threshold {
            self.flagged.insert(src);
        }
    }

    pub fn evaluate(&self) -> BTreeSet<MacAddr> {
        self.flagged.clone()
    }
}

/// Windowed-count core for direct testing.
pub fn id_count_detect(counts: &BTreeMap<MacAddr, u32>, threshold: f64) -> BTreeSet<MacAddr> {
    counts
        .iter()
        .filter(|(_, c)| f64::from(**c) > threshold)
        .map(|(m, _)| *m)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::DeviceId;

    fn mac(i: u16) -> MacAddr {
        MacAddr::device_default(DeviceId(i))
    }

    #[test]
    fn constant_power_sybil_identities_merge_and_flag() {
        // Two fake identities transmitting from the same position at the
        // same power look identical at every observer.
        let mut profiles = BTreeMap::new();
        profiles.insert(1u16, vec![(mac(10), -60.0), (mac(11), -60.4)]);
        profiles.insert(2u16, vec![(mac(10), -52.1), (mac(11), -52.0)]);
        let flagged = rssi_profile_detect(&profiles, 3.0);
        assert!(flagged.contains(&mac(10)) && flagged.contains(&mac(11)));
    }

    #[test]
    fn power_spread_defeats_profiling() {
        // 10 dB spread between identities exceeds epsilon everywhere.
        let mut profiles = BTreeMap::new();
        profiles.insert(1u16, vec![(mac(10), -60.0), (mac(11), -50.0)]);
        profiles.insert(2u16, vec![(mac(10), -55.0), (mac(11), -45.0)]);
        assert!(rssi_profile_detect(&profiles, 3.0).is_empty());
    }

    #[test]
    fn separated_honest_nodes_do_not_merge() {
        // 10 m vs 30 m from the observer: the log-distance gap is
        // 20*log10(3) = 9.5 dB, far over epsilon.
        let mut profiles = BTreeMap::new();
        profiles.insert(1u16, vec![(mac(1), -60.0), (mac(2), -69.5)]);
        assert!(rssi_profile_detect(&profiles, 3.0).is_empty());
    }

    #[test]
    fn one_separating_observer_vetoes_a_merge() {
        let mut profiles = BTreeMap::new();
        // Equidistant at observer 1, clearly separated at observer 2.
        profiles.insert(1u16, vec![(mac(1), -60.0), (mac(2), -60.5)]);
        profiles.insert(2u16, vec![(mac(1), -50.0), (mac(2), -66.0)]);
        assert!(rssi_profile_detect(&profiles, 3.0).is_empty());
    }

    #[test]
    fn profiler_window_expires_old_identities() {
        let cfg = BaselineConfig::default();
        let mut p = RssiProfiler::new(&cfg);
        for i in 0..5 {
            p.record(1, mac(10), -60.0, SimTime::from_secs(i));
            p.record(1, mac(11), -60.1, SimTime::from_secs(i));
        }
        assert_eq!(p.evaluate().len(), 2);
        // Two full windows later both profiles are gone.
        p.record(1, mac(12), -55.0, SimTime::from_secs(95));
        assert!(p.evaluate().is_empty());
    }

    #[test]
    fn flooding_mac_exceeds_threshold() {
        // One identity at 10x the honest rate: 10 * (1/4 s) * 60 s = 150
        // DIS in the window, over the 45-count threshold.
        let mut counts = BTreeMap::new();
        counts.insert(mac(10), 150u32);
        counts.insert(mac(1), 1u32);
        let flagged = id_count_detect(&counts, 45.0);
        assert!(flagged.contains(&mac(10)));
        assert!(!flagged.contains(&mac(1)));
    }

    #[test]
    fn rotating_identities_stay_under_threshold() {
        // Each identity lives 10 s at 1 DIS/s: 10 per window, under 45.
        let cfg = BaselineConfig::default();
        let mut d = IdCountDetector::new(&cfg, 4.0);
        assert_eq!(d.threshold(), 45.0);
        for ident in 0..6u16 {
            for s in 0..10u64 {
                d.record_dis(mac(100 + ident), SimTime::from_secs(u64::from(ident) * 10 + s));
            }
        }
        assert!(d.evaluate().is_empty());
    }

    #[test]
    fn single_mac_flooder_latches() {
        let cfg = BaselineConfig::default();
        let mut d = IdCountDetector::new(&cfg, 4.0);
        for s in 0..50u64 {
            d.record_dis(mac(100), SimTime::from_secs(s));
        }
        assert!(d.evaluate().contains(&mac(100)));
        // Still flagged after the window rolls.
        d.record_dis(mac(1), SimTime::from_secs(500));
        assert!(d.evaluate().contains(&mac(100)));
    }
}
