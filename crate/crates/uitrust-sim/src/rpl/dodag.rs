//! Per-node DODAG state: candidates, pending table, MRHOF parent selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ident::MacAddr;

use super::trickle::TrickleConfig;

pub const ROOT_RANK: u16 = 128;
pub const RANK_INFINITE: u16 = u16::MAX;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RplConfig {
    #[serde(flatten)]
    pub trickle: TrickleConfig,
    pub rank_unit: u16,
    pub hysteresis: u16,
    pub pending_capacity: usize,
}

impl Default for RplConfig {
    fn default() -> Self {
        RplConfig {
            trickle: TrickleConfig::default(),
            rank_unit: 128,
            hysteresis: 64,
            pending_capacity: 64,
        }
    }
}

/// Whether the node runs normal RPL or the attack-detection procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeMode {
    Normal,
    AttackDetection,
}

/// DIS-sender identities awaiting a collective query, insertion-ordered
/// with bounded capacity.
#[derive(Debug, Clone)]
pub struct PendingTable {
    entries: Vec<MacAddr>,
    capacity: usize,
    pub evictions: u64,
}

impl PendingTable {
    pub fn new(capacity: usize) -> Self {
        PendingTable {
            entries: Vec::new(),
            capacity: capacity.max(1),
            evictions: 0,
        }
    }

    /// Set semantics: re-inserting an existing identity is a no-op.
    pub fn insert(&mut self, mac: MacAddr) -> bool {
        if self.entries.contains(&mac) {
            return false;
        }
        if self.entries.len() == self.capacity {
            self.entries.remove(0);
            self.evictions += 1;
        }
        self.entries.push(mac);
        true
    }

    pub fn remove(&mut self, mac: MacAddr) {
        self.entries.retain(|m| *m != mac);
    }

    pub fn contains(&self, mac: MacAddr) -> bool {
        self.entries.contains(&mac)
    }

    pub fn iter(&self) -> impl Iterator<Item = MacAddr> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Routing-relevant state of one node.
#[derive(Debug)]
pub struct DodagState {
    pub joined: bool,
    pub rank: u16,
    pub parent: Option<MacAddr>,
    /// Advertised rank per heard neighbor.
    pub candidates: BTreeMap<MacAddr, u16>,
    pub pending: PendingTable,
    pub mode: NodeMode,
}

impl DodagState {
    pub fn new(pending_capacity: usize) -> Self {
        DodagState {
            joined: false,
            rank: RANK_INFINITE,
            parent: None,
            candidates: BTreeMap::new(),
            pending: PendingTable::new(pending_capacity),
            mode: NodeMode::Normal,
        }
    }
}

/// Reaction to an incoming DIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisAction {
    TrickleReset,
    EmitDio,
}

/// In normal mode a DIS resets trickle and solicits a DIO; in
/// attack-detection mode the sender is parked in the pending table and no
/// DIO is produced.
pub fn handle_dis(state: &mut DodagState, src: MacAddr) -> Vec<DisAction> {
    if !state.joined {
        return Vec::new();
    }
    match state.mode {
        NodeMode::Normal => vec![DisAction::TrickleReset, DisAction::EmitDio],
        NodeMode::AttackDetection => {
            state.pending.insert(src);
            Vec::new()
        }
    }
}

/// One parent candidate as seen by the selecting node.
#[derive(Debug, Clone, Copy)]
pub struct CandidateView {
    pub mac: MacAddr,
    pub rank: u16,
    pub etx: f64,
}

pub fn path_rank(candidate_rank: u16, etx: f64, rank_unit: u16) -> f64 {
    f64::from(candidate_rank) + etx * f64::from(rank_unit)
}

/// MRHOF selection: minimize `rank + ETX * unit`, switch away from the
/// current parent only when the improvement beats the hysteresis, break
/// ties toward the lowest address.
pub fn mrhof_select_parent(
    candidates: &[CandidateView],
    current: Option<MacAddr>,
    rank_unit: u16,
    hysteresis: u16,
) -> Option<MacAddr> {
    let mut best: Option<(f64, MacAddr)> = None;
    let mut current_cost = None;
    for c in candidates {
        let cost = path_rank(c.rank, c.etx, rank_unit);
        if !cost.is_finite() {
            continue;
        }
        if Some(c.mac) == current {
            current_cost = Some(cost);
        }
        match best {
            None => best = Some((cost, c.mac)),
            Some((bc, bm)) => {
                if cost < bc || (cost == bc && c.mac < bm) {
                    best = Some((cost, c.mac));
                }
            }
        }
    }
    let (best_cost, best_mac) = best?;
    if let (Some(cur), Some(cur_cost)) = (current, current_cost) {
        if best_mac != cur && cur_cost - best_cost <= f64::from(hysteresis) {
            return Some(cur);
        }
    }
    Some(best_mac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::DeviceId;

    fn mac(i: u16) -> MacAddr {
        MacAddr::device_default(DeviceId(i))
    }

    fn joined_state() -> DodagState {
        let mut s = DodagState::new(64);
        s.joined = true;
        s.rank = 384;
        s
    }

    #[test]
    fn normal_mode_dis_resets_and_solicits() {
        let mut s = joined_state();
        let actions = handle_dis(&mut s, mac(9));
        assert_eq!(actions, vec![DisAction::TrickleReset, DisAction::EmitDio]);
        assert!(s.pending.is_empty());
    }

    #[test]
    fn attack_mode_dis_goes_to_pending_only() {
        let mut s = joined_state();
        s.mode = NodeMode::AttackDetection;
        let actions = handle_dis(&mut s, mac(9));
        assert!(actions.is_empty());
        assert!(s.pending.contains(mac(9)));
    }

    #[test]
    fn duplicate_dis_keeps_pending_set_semantics() {
        let mut s = joined_state();
        s.mode = NodeMode::AttackDetection;
        handle_dis(&mut s, mac(9));
        handle_dis(&mut s, mac(9));
        assert_eq!(s.pending.len(), 1);
    }

    #[test]
    fn pending_overflow_evicts_oldest() {
        let mut table = PendingTable::new(3);
        for i in 0..4 {
            table.insert(mac(i));
        }
        assert_eq!(table.evictions, 1);
        assert!(!table.contains(mac(0)));
        assert!(table.contains(mac(3)));
    }

    #[test]
    fn single_candidate_is_selected() {
        let cands = [CandidateView {
            mac: mac(1),
            rank: 256,
            etx: 1.0,
        }];
        assert_eq!(mrhof_select_parent(&cands, None, 128, 64), Some(mac(1)));
    }

    #[test]
    fn lower_path_rank_wins() {
        // A: 256 + 1*128 = 384; B: 128 + 3*128 = 512.
        let cands = [
            CandidateView {
                mac: mac(1),
                rank: 256,
                etx: 1.0,
            },
            CandidateView {
                mac: mac(2),
                rank: 128,
                etx: 3.0,
            },
        ];
        assert_eq!(mrhof_select_parent(&cands, None, 128, 64), Some(mac(1)));
    }

    #[test]
    fn hysteresis_keeps_current_parent() {
        // Current parent costs 384; challenger at 380 does not clear the
        // 64-unit hysteresis.
        let cands = [
            CandidateView {
                mac: mac(1),
                rank: 256,
                etx: 1.0,
            },
            CandidateView {
                mac: mac(2),
                rank: 252,
                etx: 1.0,
            },
        ];
        assert_eq!(
            mrhof_select_parent(&cands, Some(mac(1)), 128, 64),
            Some(mac(1))
        );
    }

    #[test]
    fn empty_candidate_set_leaves_dodag() {
        assert_eq!(mrhof_select_parent(&[], None, 128, 64), None);
    }

    #[test]
    fn unusable_links_are_skipped() {
        let cands = [
            CandidateView {
                mac: mac(1),
                rank: 128,
                etx: f64::INFINITY,
            },
            CandidateView {
                mac: mac(2),
                rank: 512,
                etx: 1.0,
            },
        ];
        assert_eq!(mrhof_select_parent(&cands, None, 128, 64), Some(mac(2)));
    }
}
