//! Collective query rounds.
//!
//! In attack-detection mode every node periodically multicasts one query
//! toward its pending and neighbor identities, collects the identifier
//! responses, then scores the round: pairwise identifier comparison over
//! on-time responders, lateness and silence penalties for the rest, and a
//! rotation to the next identifier family when over half the queried
//! identities stayed silent.

use std::collections::{BTreeMap, BTreeSet};

use crate::ident::{MacAddr, UidType, UidValue};
use crate::sim::SimTime;

use super::ledger::EvidenceLedger;
use super::wire::{QueryField, ResponseField};

#[derive(Debug)]
pub struct QueryState {
    uid_type: UidType,
    next_nonce: u16,
    interval: SimTime,
    last_issue: Option<SimTime>,
    open: Option<OpenRound>,
}

#[derive(Debug)]
struct OpenRound {
    nonce: u16,
    uid_type: UidType,
    issued_at: SimTime,
    queried: BTreeSet<MacAddr>,
    /// Earliest response per identity.
    responses: BTreeMap<MacAddr, (UidValue, SimTime)>,
}

/// Result of closing one round.
#[derive(Debug, Default, PartialEq)]
pub struct RoundSummary {
    pub ledger_changed: bool,
    pub rotated: bool,
    pub ontime: Vec<(MacAddr, UidValue)>,
    pub late: Vec<MacAddr>,
    pub silent: Vec<MacAddr>,
}

impl QueryState {
    pub fn new(interval: SimTime) -> Self {
        QueryState {
            uid_type: UidType::SiliconSerial,
            next_nonce: 1,
            interval,
            last_issue: None,
            open: None,
        }
    }

    pub fn uid_type(&self) -> UidType {
        self.uid_type
    }

    pub fn round_open(&self) -> bool {
        self.open.is_some()
    }

    /// Issues one collective query over the given identities. Returns
    /// `None` when there is nothing to query or the inter-query interval
    /// has not elapsed yet.
    pub fn issue(
        &mut self,
        now: SimTime,
        targets: &BTreeSet<MacAddr>,
        ledger: &mut EvidenceLedger,
    ) -> Option<QueryField> {
        if targets.is_empty() || self.open.is_some() {
            return None;
        }
        if let Some(last) = self.last_issue {
            if now < last + self.interval {
                return None;
            }
        }
        let nonce = self.next_nonce;
        self.next_nonce = self.next_nonce.wrapping_add(1).max(1);
        for mac in targets {
            ledger.note_query(*mac, now);
        }
        self.open = Some(OpenRound {
            nonce,
            uid_type: self.uid_type,
            issued_at: now,
            queried: targets.clone(),
            responses: BTreeMap::new(),
        });
        self.last_issue = Some(now);
        Some(QueryField {
            uid_type: self.uid_type,
            nonce,
        })
    }

    /// Accepts a response if its nonce echoes the open round.
    pub fn on_response(
        &mut self,
        src: MacAddr,
        field: &ResponseField,
        now: SimTime,
        ledger: &mut EvidenceLedger,
    ) -> bool {
        let Some(round) = self.open.as_mut() else {
            return false;
        };
        if field.nonce != round.nonce || field.uid_type != round.uid_type {
            return false;
        }
        ledger.note_response(src, field.uid_type, field.uid, now);
        round.responses.entry(src).or_insert((field.uid, now));
        true
    }

    /// Closes the round against the response-time threshold and applies all
    /// four scoring cases to the ledger.
    pub fn finalize(&mut self, th_r: SimTime, ledger: &mut EvidenceLedger) -> RoundSummary {
        let Some(round) = self.open.take() else {
            return RoundSummary::default();
        };
        let mut summary = RoundSummary::default();
        let deadline = round.issued_at + th_r;
        for (mac, (uid, t)) in &round.responses {
            if *t <= deadline {
                summary.ontime.push((*mac, *uid));
            } else {
                summary.late.push(*mac);
            }
        }
        for mac in &round.queried {
            if !round.responses.contains_key(mac) {
                summary.silent.push(*mac);
            }
        }

        if ledger.score_pairs(&summary.ontime) {
            summary.ledger_changed = true;
        }
        for (mac, _) in &summary.ontime {
            ledger.clear_miss_streak(*mac);
        }
        for mac in &summary.late {
            ledger.score_late(*mac);
            summary.ledger_changed = true;
        }
        for mac in &summary.silent {
            ledger.score_silent(*mac);
            summary.ledger_changed = true;
        }

        // Over half of the queried identities silent: ask for a different
        // identifier family next round.
        if 2 * summary.silent.len() > round.queried.len() {
            if let Some(next) = self.uid_type.next() {
                self.uid_type = next;
                summary.rotated = true;
            }
        }
        summary
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::DeviceId;

    fn mac(i: u16) -> MacAddr {
        MacAddr::device_default(DeviceId(i))
    }

    fn targets(ids: &[u16]) -> BTreeSet<MacAddr> {
        ids.iter().map(|i| mac(*i)).collect()
    }

    fn respond(qs: &mut QueryState, ledger: &mut EvidenceLedger, q: &QueryField, id: u16, uid: u64, t: SimTime) {
        assert!(qs.on_response(
            mac(id),
            &ResponseField {
                uid_type: q.uid_type,
                uid: UidValue(uid),
                nonce: q.nonce,
            },
            t,
            ledger,
        ));
    }

    #[test]
    fn query_opens_one_record_per_target() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let q = qs
            .issue(SimTime::from_secs(100), &targets(&[1, 2, 3]), &mut ledger)
            .unwrap();
        assert_eq!(q.uid_type, UidType::SiliconSerial);
        for i in 1..=3 {
            assert_eq!(
                ledger.get(mac(i)).unwrap().last_query_t,
                Some(SimTime::from_secs(100))
            );
        }
    }

    #[test]
    fn empty_target_set_emits_nothing() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        assert!(qs
            .issue(SimTime::from_secs(100), &targets(&[]), &mut ledger)
            .is_none());
    }

    #[test]
    fn second_query_defers_to_the_interval() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let t0 = SimTime::from_secs(100);
        qs.issue(t0, &targets(&[1]), &mut ledger).unwrap();
        qs.finalize(SimTime::from_secs(2), &mut ledger);
        // 10 s later is inside the interval; 30 s later is allowed.
        assert!(qs
            .issue(SimTime::from_secs(110), &targets(&[1]), &mut ledger)
            .is_none());
        assert!(qs
            .issue(SimTime::from_secs(130), &targets(&[1]), &mut ledger)
            .is_some());
    }

    #[test]
    fn on_time_distinct_and_shared_uids_score_both_ways() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let t0 = SimTime::from_secs(100);
        let q = qs
            .issue(t0, &targets(&[1, 2, 11, 12]), &mut ledger)
            .unwrap();
        // Two honest identities with distinct uids, two fake identities
        // sharing one uid.
        respond(&mut qs, &mut ledger, &q, 1, 100, t0 + SimTime::from_secs(1));
        respond(&mut qs, &mut ledger, &q, 2, 200, t0 + SimTime::from_secs(1));
        respond(&mut qs, &mut ledger, &q, 11, 777, t0 + SimTime::from_secs(1));
        respond(&mut qs, &mut ledger, &q, 12, 777, t0 + SimTime::from_secs(1));
        let summary = qs.finalize(SimTime::from_secs(2), &mut ledger);
        assert_eq!(summary.ontime.len(), 4);
        // Honest: 3 cross-pairs each (vs 2, 11, 12 for node 1).
        assert_eq!(ledger.get(mac(1)).unwrap().p, 9);
        assert_eq!(ledger.get(mac(1)).unwrap().n, 0);
        // Fakes: positive toward honest pairs, negative toward each other.
        assert_eq!(ledger.get(mac(11)).unwrap().p, 6);
        assert_eq!(ledger.get(mac(11)).unwrap().n, 3);
    }

    #[test]
    fn late_response_scores_one() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let t0 = SimTime::from_secs(100);
        let q = qs.issue(t0, &targets(&[5]), &mut ledger).unwrap();
        // 1.5x the threshold.
        respond(&mut qs, &mut ledger, &q, 5, 1, t0 + SimTime::from_secs(3));
        let summary = qs.finalize(SimTime::from_secs(2), &mut ledger);
        assert_eq!(summary.late, vec![mac(5)]);
        assert_eq!(ledger.get(mac(5)).unwrap().n, 1);
    }

    #[test]
    fn silence_for_two_rounds_escalates() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let mut t = SimTime::from_secs(100);
        for _ in 0..2 {
            qs.issue(t, &targets(&[5, 6]), &mut ledger).unwrap();
            let q = QueryField {
                uid_type: qs.uid_type(),
                nonce: 0,
            };
            let _ = q;
            // Node 6 answers on time; node 5 never does.
            let open_nonce = match qs.open.as_ref() {
                Some(r) => r.nonce,
                None => unreachable!(),
            };
            qs.on_response(
                mac(6),
                &ResponseField {
                    uid_type: qs.uid_type(),
                    uid: UidValue(6),
                    nonce: open_nonce,
                },
                t + SimTime::from_secs(1),
                &mut ledger,
            );
            qs.finalize(SimTime::from_secs(2), &mut ledger);
            t = t + SimTime::from_secs(30);
        }
        // +1 for the first silent round, +2 for the second.
        assert_eq!(ledger.get(mac(5)).unwrap().n, 3);
    }

    #[test]
    fn no_penalty_within_threshold() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let t0 = SimTime::from_secs(100);
        let q = qs.issue(t0, &targets(&[5]), &mut ledger).unwrap();
        respond(&mut qs, &mut ledger, &q, 5, 1, t0 + SimTime::from_secs(1));
        qs.finalize(SimTime::from_secs(2), &mut ledger);
        assert_eq!(ledger.get(mac(5)).unwrap().n, 0);
    }

    #[test]
    fn rotation_requires_strictly_over_half_silent() {
        // 3 of 4 silent: rotate.
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let t0 = SimTime::from_secs(100);
        let q = qs.issue(t0, &targets(&[1, 2, 3, 4]), &mut ledger).unwrap();
        respond(&mut qs, &mut ledger, &q, 1, 1, t0 + SimTime::from_secs(1));
        let summary = qs.finalize(SimTime::from_secs(2), &mut ledger);
        assert!(summary.rotated);
        assert_eq!(qs.uid_type(), UidType::RadioTransceiver);

        // Exactly half silent: stay.
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let q = qs.issue(t0, &targets(&[1, 2, 3, 4]), &mut ledger).unwrap();
        respond(&mut qs, &mut ledger, &q, 1, 1, t0 + SimTime::from_secs(1));
        respond(&mut qs, &mut ledger, &q, 2, 2, t0 + SimTime::from_secs(1));
        let summary = qs.finalize(SimTime::from_secs(2), &mut ledger);
        assert!(!summary.rotated);
        assert_eq!(qs.uid_type(), UidType::SiliconSerial);
    }

    #[test]
    fn rotation_exhausts_at_last_family() {
        let mut qs = QueryState::new(SimTime::from_secs(1));
        let mut ledger = EvidenceLedger::new(64);
        let mut t = SimTime::from_secs(100);
        for _ in 0..5 {
            qs.issue(t, &targets(&[1, 2]), &mut ledger).unwrap();
            qs.finalize(SimTime::from_secs(2), &mut ledger);
            t = t + SimTime::from_secs(10);
        }
        assert_eq!(qs.uid_type(), UidType::PartManufacturer);
    }

    #[test]
    fn all_respond_no_rotation() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let t0 = SimTime::from_secs(100);
        let q = qs.issue(t0, &targets(&[1, 2]), &mut ledger).unwrap();
        respond(&mut qs, &mut ledger, &q, 1, 1, t0 + SimTime::from_secs(1));
        respond(&mut qs, &mut ledger, &q, 2, 2, t0 + SimTime::from_secs(1));
        let summary = qs.finalize(SimTime::from_secs(2), &mut ledger);
        assert!(!summary.rotated);
        assert!(summary.silent.is_empty());
    }

    #[test]
    fn stale_nonce_is_rejected() {
        let mut qs = QueryState::new(SimTime::from_secs(30));
        let mut ledger = EvidenceLedger::new(64);
        let t0 = SimTime::from_secs(100);
        let q = qs.issue(t0, &targets(&[1]), &mut ledger).unwrap();
        let accepted = qs.on_response(
            mac(1),
            &ResponseField {
                uid_type: q.uid_type,
                uid: UidValue(1),
                nonce: q.nonce.wrapping_add(9),
            },
            t0 + SimTime::from_secs(1),
            &mut ledger,
        );
        assert!(!accepted);
    }
}
