//! Per-observer evidence ledger.
//!
//! Each observer keeps, per claimed identity, the running totals of
//! positive and negative behaviors plus the identifier values it has seen.
//! Counts only ever grow; the local trust opinion is their ratio.

use std::collections::BTreeMap;

use crate::ident::{MacAddr, UidType, UidValue};
use crate::sim::SimTime;

use super::wire::LtoEntry;

/// `p / (p + n)`; no evidence yields no opinion rather than a made-up one.
pub fn compute_lto(p: u32, n: u32) -> Option<f64> {
    if p + n == 0 {
        None
    } else {
        Some(f64::from(p) / f64::from(p + n))
    }
}

#[derive(Debug, Clone, Default)]
pub struct SubjectEvidence {
    pub p: u32,
    pub n: u32,
    pub uid_seen: BTreeMap<UidType, UidValue>,
    pub last_query_t: Option<SimTime>,
    pub last_response_t: Option<SimTime>,
    /// Consecutive collective queries this identity has ignored.
    pub miss_streak: u32,
    shipped_p: u32,
    shipped_n: u32,
    touched: u64,
}

impl SubjectEvidence {
    pub fn lto(&self) -> Option<f64> {
        compute_lto(self.p, self.n)
    }
}

#[derive(Debug)]
pub struct EvidenceLedger {
    entries: BTreeMap<MacAddr, SubjectEvidence>,
    capacity: usize,
    clock: u64,
    pub evictions: u64,
}

impl EvidenceLedger {
    pub fn new(capacity: usize) -> Self {
        EvidenceLedger {
            entries: BTreeMap::new(),
            capacity: capacity.max(1),
            clock: 0,
            evictions: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, mac: MacAddr) -> Option<&SubjectEvidence> {
        self.entries.get(&mac)
    }

    pub fn iter(&self) -> impl Iterator<Item = (MacAddr, &SubjectEvidence)> {
        self.entries.iter().map(|(m, e)| (*m, e))
    }

    pub fn remove(&mut self, mac: MacAddr) {
        self.entries.remove(&mac);
    }

    fn touch(&mut self, mac: MacAddr) -> &mut SubjectEvidence {
        if !self.entries.contains_key(&mac) && self.entries.len() >= self.capacity {
            // Evict the least recently updated identity.
            if let Some(victim) = self
                .entries
                .iter()
                .min_by_key(|(m, e)| (e.touched, **m))
                .map(|(m, _)| *m)
            {
                self.entries.remove(&victim);
                self.evictions += 1;
            }
        }
        self.clock += 1;
        let clock = self.clock;
        let entry = self.entries.entry(mac).or_default();
        entry.touched = clock;
        entry
    }

    pub fn add_positive(&mut self, mac: MacAddr, amount: u32) {
        self.touch(mac).p += amount;
    }

    pub fn add_negative(&mut self, mac: MacAddr, amount: u32) {
        self.touch(mac).n += amount;
    }

    pub fn note_query(&mut self, mac: MacAddr, t: SimTime) {
        self.touch(mac).last_query_t = Some(t);
    }

    pub fn note_response(&mut self, mac: MacAddr, ty: UidType, uid: UidValue, t: SimTime) {
        let e = self.touch(mac);
        e.uid_seen.insert(ty, uid);
        e.last_response_t = Some(t);
    }

    /// Pairwise scoring over one round's on-time responders: a shared
    /// identifier across distinct identities is negative behavior (+3 to
    /// both sides), distinct identifiers are positive (+3 to both sides).
    /// Identities are never paired with themselves.
    pub fn score_pairs(&mut self, responders: &[(MacAddr, UidValue)]) -> bool {
        let mut changed = false;
        for i in 0..responders.len() {
            for j in (i + 1)..responders.len() {
                let (mac_u, uid_u) = responders[i];
                let (mac_k, uid_k) = responders[j];
                if mac_u == mac_k {
                    continue;
                }
                if uid_u == uid_k {
                    self.add_negative(mac_u, 3);
                    self.add_negative(mac_k, 3);
                } else {
                    self.add_positive(mac_u, 3);
                    self.add_positive(mac_k, 3);
                }
                changed = true;
            }
        }
        changed
    }

    /// Response arrived but beyond the response-time threshold.
    pub fn score_late(&mut self, mac: MacAddr) {
        let e = self.touch(mac);
        e.n += 1;
        e.miss_streak = 0;
    }

    /// No response at all this round: +1 on the first miss, +2 once the
    /// identity has ignored two or more consecutive queries.
    pub fn score_silent(&mut self, mac: MacAddr) {
        let e = self.touch(mac);
        e.miss_streak += 1;
        e.n += if e.miss_streak >= 2 { 2 } else { 1 };
    }

    pub fn clear_miss_streak(&mut self, mac: MacAddr) {
        self.touch(mac).miss_streak = 0;
    }

    /// Tallies not yet shipped toward the root, up to `limit`, marked as
    /// shipped. Counters saturate at the 16-bit wire width.
    pub fn take_unshipped(&mut self, limit: usize) -> Vec<LtoEntry> {
        let mut out = Vec::new();
        for (mac, e) in self.entries.iter_mut() {
            if out.len() >= limit {
                break;
            }
            if e.p != e.shipped_p || e.n != e.shipped_n {
                e.shipped_p = e.p;
                e.shipped_n = e.n;
                out.push(LtoEntry {
                    subject: *mac,
                    p: e.p.min(u32::from(u16::MAX)) as u16,
                    n: e.n.min(u32::from(u16::MAX)) as u16,
                });
            }
        }
        out
    }

    pub fn has_unshipped(&self) -> bool {
        self.entries
            .values()
            .any(|e| e.p != e.shipped_p || e.n != e.shipped_n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::DeviceId;

    fn mac(i: u16) -> MacAddr {
        MacAddr::device_default(DeviceId(i))
    }

    #[test]
    fn lto_ratio_and_null() {
        assert_eq!(compute_lto(3, 0), Some(1.0));
        assert_eq!(compute_lto(3, 3), Some(0.5));
        assert!((compute_lto(6, 3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(compute_lto(0, 0), None);
    }

    #[test]
    fn distinct_uids_earn_positive_evidence() {
        let mut ledger = EvidenceLedger::new(64);
        ledger.score_pairs(&[(mac(1), UidValue(10)), (mac(2), UidValue(20))]);
        assert_eq!(ledger.get(mac(1)).unwrap().p, 3);
        assert_eq!(ledger.get(mac(2)).unwrap().p, 3);
        assert_eq!(ledger.get(mac(1)).unwrap().n, 0);
    }

    #[test]
    fn shared_uid_earns_negative_evidence() {
        let mut ledger = EvidenceLedger::new(64);
        ledger.score_pairs(&[(mac(11), UidValue(7)), (mac(12), UidValue(7))]);
        assert_eq!(ledger.get(mac(11)).unwrap().n, 3);
        assert_eq!(ledger.get(mac(12)).unwrap().n, 3);
        assert_eq!(ledger.get(mac(11)).unwrap().p, 0);
    }

    #[test]
    fn identity_is_never_paired_with_itself() {
        let mut ledger = EvidenceLedger::new(64);
        ledger.score_pairs(&[(mac(1), UidValue(7)), (mac(1), UidValue(7))]);
        assert!(ledger.get(mac(1)).is_none());
    }

    #[test]
    fn three_way_shared_uid_matches_worked_example() {
        // Three fake identities reporting one identifier: each pair adds 3,
        // so every identity ends at n = 6.
        let mut ledger = EvidenceLedger::new(64);
        ledger.score_pairs(&[
            (mac(1), UidValue(7)),
            (mac(2), UidValue(7)),
            (mac(3), UidValue(7)),
        ]);
        for i in 1..=3 {
            assert_eq!(ledger.get(mac(i)).unwrap().n, 6);
        }
    }

    #[test]
    fn silence_escalates_after_two_rounds() {
        let mut ledger = EvidenceLedger::new(64);
        ledger.score_silent(mac(5));
        assert_eq!(ledger.get(mac(5)).unwrap().n, 1);
        ledger.score_silent(mac(5));
        assert_eq!(ledger.get(mac(5)).unwrap().n, 3);
        ledger.score_silent(mac(5));
        assert_eq!(ledger.get(mac(5)).unwrap().n, 5);
    }

    #[test]
    fn late_response_costs_one_and_resets_streak() {
        let mut ledger = EvidenceLedger::new(64);
        ledger.score_silent(mac(5));
        ledger.score_late(mac(5));
        assert_eq!(ledger.get(mac(5)).unwrap().n, 2);
        // Streak was reset, so the next miss is worth 1 again.
        ledger.score_silent(mac(5));
        assert_eq!(ledger.get(mac(5)).unwrap().n, 3);
    }

    #[test]
    fn counts_are_monotone() {
        let mut ledger = EvidenceLedger::new(64);
        let mut last = (0, 0);
        for round in 0..10 {
            if round % 2 == 0 {
                ledger.score_pairs(&[(mac(1), UidValue(1)), (mac(2), UidValue(1))]);
            } else {
                ledger.score_silent(mac(1));
            }
            let e = ledger.get(mac(1)).unwrap();
            assert!(e.p >= last.0 && e.n >= last.1);
            last = (e.p, e.n);
        }
    }

    #[test]
    fn capacity_evicts_least_recently_updated() {
        let mut ledger = EvidenceLedger::new(2);
        ledger.add_positive(mac(1), 3);
        ledger.add_positive(mac(2), 3);
        ledger.add_positive(mac(3), 3);
        assert_eq!(ledger.len(), 2);
        assert_eq!(ledger.evictions, 1);
        assert!(ledger.get(mac(1)).is_none());
    }

    #[test]
    fn shipping_marks_and_saturates() {
        let mut ledger = EvidenceLedger::new(64);
        ledger.add_positive(mac(1), 200_000);
        ledger.add_negative(mac(2), 4);
        let entries = ledger.take_unshipped(10);
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].p, u16::MAX);
        assert!(!ledger.has_unshipped());
        ledger.add_negative(mac(2), 1);
        assert!(ledger.has_unshipped());
        assert_eq!(ledger.take_unshipped(10).len(), 1);
    }
}
