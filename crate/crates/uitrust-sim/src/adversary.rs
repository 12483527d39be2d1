//! Power-controlled Sybil attacker.
//!
//! One compromised physical node floods DIS frames while cycling claimed
//! MAC addresses from a large pool and re-drawing its transmit power per
//! identity. Its hardware identifiers cannot be forged, so any truthful
//! response exposes the device; evasion is only possible by delaying or
//! ignoring queries.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detector::wire::QueryField;
use crate::ident::{DeviceId, DeviceUids, MacAddr, UidType, UidValue};
use crate::sim::SimTime;

/// The pair of hardware identifier set and claimed link-layer identity,
/// plus the transmit power currently in force.
#[derive(Debug, Clone, Copy)]
pub struct NodeIdentity {
    pub uid: UidValue,
    pub mac: MacAddr,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum QueryBehavior {
    /// Truthful identifier response for every recently used identity.
    Answer,
    /// Respond after `factor` times the response-time threshold.
    Delay(f64),
    /// Stay silent with the given probability, per identity per query.
    Ignore(f64),
    /// Answer silicon-serial queries, ignore rotated identifier families.
    AnswerThenIgnoreAltUid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackerConfig {
    pub dis_rate_hz: f64,
    pub mac_pool_size: u32,
    pub identity_switch_period_s: f64,
    pub power_levels_dbm: Vec<f64>,
    pub query_behavior: QueryBehavior,
    /// Identities used within this window still answer queries.
    pub respond_window_s: f64,
    /// Hard cap on identities answering one query.
    pub respond_identity_cap: usize,
}

impl Default for AttackerConfig {
    fn default() -> Self {
        AttackerConfig {
            dis_rate_hz: 1.0,
            mac_pool_size: 1 << 16,
            identity_switch_period_s: 10.0,
            power_levels_dbm: vec![-10.0, -5.0, 0.0],
            query_behavior: QueryBehavior::Answer,
            respond_window_s: 30.0,
            respond_identity_cap: 8,
        }
    }
}

impl AttackerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dis_rate_hz <= 0.0 {
            return Err("attacker.dis_rate_hz must be > 0".into());
        }
        if self.mac_pool_size < 1 {
            return Err("attacker.mac_pool_size must be >= 1".into());
        }
        if self.identity_switch_period_s <= 0.0 {
            return Err("attacker.identity_switch_period_s must be > 0".into());
        }
        if self.power_levels_dbm.is_empty() {
            return Err("attacker.power_levels_dbm must not be empty".into());
        }
        if let QueryBehavior::Ignore(p) = self.query_behavior {
            if !(0.0..=1.0).contains(&p) {
                return Err("attacker ignore probability must be in [0,1]".into());
            }
        }
        Ok(())
    }
}

/// A response the attacker has decided to send.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedResponse {
    pub src_mac: MacAddr,
    pub uid: UidValue,
    pub delay: SimTime,
}

#[derive(Debug)]
pub struct AttackerState {
    pub cfg: AttackerConfig,
    pub device: DeviceId,
    pub uids: DeviceUids,
    pub active: bool,
    pub current_power_dbm: f64,
    /// Claimed identities in order of first use with their transmit
    /// power; the last one is current.
    used: Vec<(MacAddr, SimTime, f64)>,
    used_pool_indices: BTreeSet<u32>,
    pub pool_reuse_count: u64,
}

impl AttackerState {
    pub fn new(
        cfg: AttackerConfig,
        device: DeviceId,
        uids: DeviceUids,
        boot_mac: MacAddr,
        boot_power_dbm: f64,
    ) -> Self {
        AttackerState {
            cfg,
            device,
            uids,
            active: false,
            current_power_dbm: boot_power_dbm,
            used: vec![(boot_mac, SimTime::ZERO, boot_power_dbm)],
            used_pool_indices: BTreeSet::new(),
            pool_reuse_count: 0,
        }
    }

    pub fn current_mac(&self) -> MacAddr {
        self.used.last().expect("boot identity").0
    }

    fn pool_mac(&self, index: u32) -> MacAddr {
        // Locally administered prefix, device id, pool index.
        MacAddr::new(0x0600_0000_0000 | (u64::from(self.device.0) << 16) | u64::from(index & 0xFFFF))
    }

    /// Draws a fresh identity from the unused pool plus a transmit power
    /// level. An exhausted pool falls back to uniform reuse.
    pub fn next_fake_identity(&mut self, now: SimTime, rng: &mut ChaCha8Rng) -> (MacAddr, f64) {
        let pool = self.cfg.mac_pool_size;
        let index = if (self.used_pool_indices.len() as u32) >= pool {
            self.pool_reuse_count += 1;
            rng.gen_range(0..pool)
        } else {
            loop {
                let candidate = rng.gen_range(0..pool);
                if !self.used_pool_indices.contains(&candidate) {
                    break candidate;
                }
            }
        };
        self.used_pool_indices.insert(index);
        let mac = self.pool_mac(index);
        let power_idx = rng.gen_range(0..self.cfg.power_levels_dbm.len());
        let power = self.cfg.power_levels_dbm[power_idx];
        self.current_power_dbm = power;
        self.used.push((mac, now, power));
        (mac, power)
    }

    pub fn owns(&self, mac: MacAddr) -> bool {
        self.used.iter().any(|(m, _, _)| *m == mac)
    }

    /// Transmit power the given identity was configured with.
    pub fn power_of(&self, mac: MacAddr) -> Option<f64> {
        self.used
            .iter()
            .rev()
            .find(|(m, _, _)| *m == mac)
            .map(|(_, _, p)| *p)
    }

    pub fn identities_used(&self) -> usize {
        self.used.len()
    }

    /// Identities that still answer queries: those first used within the
    /// response window, newest first, capped, always including the current
    /// identity.
    pub fn responding_identities(&self, now: SimTime) -> Vec<MacAddr> {
        let window = SimTime::from_secs_f64(self.cfg.respond_window_s);
        let horizon = now.saturating_sub(window);
        let mut out = Vec::new();
        for (mac, first_used, _) in self.used.iter().rev() {
            if out.len() >= self.cfg.respond_identity_cap.max(1) {
                break;
            }
            if out.is_empty() || *first_used >= horizon {
                out.push(*mac);
            }
        }
        out
    }

    /// Decides which response DAOs a received query produces.
    pub fn respond_to_query(
        &self,
        query: &QueryField,
        now: SimTime,
        th_r: SimTime,
        rng: &mut ChaCha8Rng,
    ) -> Vec<PlannedResponse> {
        if !self.active {
            // Before compromise the node answers truthfully like any other.
            return vec![PlannedResponse {
                src_mac: self.current_mac(),
                uid: self.uids.get(query.uid_type),
                delay: SimTime::ZERO,
            }];
        }
        let uid = self.uids.get(query.uid_type);
        let identities = self.responding_identities(now);
        match self.cfg.query_behavior {
            QueryBehavior::Answer => identities
                .into_iter()
                .map(|src_mac| PlannedResponse {
                    src_mac,
                    uid,
                    delay: SimTime::ZERO,
                })
                .collect(),
            QueryBehavior::Delay(factor) => {
                let delay = SimTime::from_secs_f64(factor * th_r.as_secs_f64());
                identities
                    .into_iter()
                    .map(|src_mac| PlannedResponse {
                        src_mac,
                        uid,
                        delay,
                    })
                    .collect()
            }
            QueryBehavior::Ignore(p) => identities
                .into_iter()
                .filter(|_| rng.gen::<f64>() >= p)
                .map(|src_mac| PlannedResponse {
                    src_mac,
                    uid,
                    delay: SimTime::ZERO,
                })
                .collect(),
            QueryBehavior::AnswerThenIgnoreAltUid => {
                if query.uid_type == UidType::SiliconSerial {
                    identities
                        .into_iter()
                        .map(|src_mac| PlannedResponse {
                            src_mac,
                            uid,
                            delay: SimTime::ZERO,
                        })
                        .collect()
                } else {
                    Vec::new()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn attacker(cfg: AttackerConfig) -> AttackerState {
        let device = DeviceId(9);
        AttackerState::new(
            cfg,
            device,
            DeviceUids::for_device(device, 1),
            MacAddr::device_default(device),
            0.0,
        )
    }

    fn q(ty: UidType) -> QueryField {
        QueryField { uid_type: ty, nonce: 42 }
    }

    #[test]
    fn pool_of_one_always_yields_the_same_mac() {
        let mut a = attacker(AttackerConfig {
            mac_pool_size: 1,
            ..AttackerConfig::default()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m1, _) = a.next_fake_identity(SimTime::from_secs(1), &mut rng);
        let (m2, _) = a.next_fake_identity(SimTime::from_secs(2), &mut rng);
        assert_eq!(m1, m2);
        assert_eq!(a.pool_reuse_count, 1);
    }

    #[test]
    fn single_power_level_reduces_to_plain_sybil() {
        let mut a = attacker(AttackerConfig {
            power_levels_dbm: vec![0.0],
            ..AttackerConfig::default()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for s in 1..20 {
            let (_, p) = a.next_fake_identity(SimTime::from_secs(s), &mut rng);
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn ten_draws_from_a_pool_of_1000_are_usually_distinct() {
        // Without replacement every draw is distinct by construction; the
        // birthday bound (~0.956 for replacement) is the lower bound we
        // check against the pool bookkeeping instead.
        let mut distinct_runs = 0;
        for seed in 0..200 {
            let mut a = attacker(AttackerConfig {
                mac_pool_size: 1000,
                ..AttackerConfig::default()
            });
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut macs = BTreeSet::new();
            for s in 1..=10 {
                let (m, _) = a.next_fake_identity(SimTime::from_secs(s), &mut rng);
                macs.insert(m);
            }
            if macs.len() == 10 {
                distinct_runs += 1;
            }
        }
        assert_eq!(distinct_runs, 200);
    }

    #[test]
    fn truthful_responses_share_one_uid_across_identities() {
        let mut a = attacker(AttackerConfig::default());
        a.active = true;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        a.next_fake_identity(SimTime::from_secs(100), &mut rng);
        a.next_fake_identity(SimTime::from_secs(110), &mut rng);
        let responses = a.respond_to_query(
            &q(UidType::SiliconSerial),
            SimTime::from_secs(111),
            SimTime::from_secs(2),
            &mut rng,
        );
        assert!(responses.len() >= 2);
        let uid = responses[0].uid;
        assert!(responses.iter().all(|r| r.uid == uid));
        assert_eq!(uid, a.uids.get(UidType::SiliconSerial));
        let macs: BTreeSet<_> = responses.iter().map(|r| r.src_mac).collect();
        assert_eq!(macs.len(), responses.len());
    }

    #[test]
    fn full_ignore_never_responds() {
        let mut a = attacker(AttackerConfig {
            query_behavior: QueryBehavior::Ignore(1.0),
            ..AttackerConfig::default()
        });
        a.active = true;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            assert!(a
                .respond_to_query(
                    &q(UidType::SiliconSerial),
                    SimTime::from_secs(200),
                    SimTime::from_secs(2),
                    &mut rng
                )
                .is_empty());
        }
    }

    #[test]
    fn delay_factor_multiplies_the_threshold() {
        let mut a = attacker(AttackerConfig {
            query_behavior: QueryBehavior::Delay(1.5),
            ..AttackerConfig::default()
        });
        a.active = true;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let responses = a.respond_to_query(
            &q(UidType::SiliconSerial),
            SimTime::from_secs(200),
            SimTime::from_secs(2),
            &mut rng,
        );
        assert!(!responses.is_empty());
        assert_eq!(responses[0].delay, SimTime::from_secs(3));
    }

    #[test]
    fn alt_uid_queries_are_ignored_in_rotating_mode() {
        let mut a = attacker(AttackerConfig {
            query_behavior: QueryBehavior::AnswerThenIgnoreAltUid,
            ..AttackerConfig::default()
        });
        a.active = true;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        assert!(!a
            .respond_to_query(
                &q(UidType::SiliconSerial),
                SimTime::from_secs(200),
                SimTime::from_secs(2),
                &mut rng
            )
            .is_empty());
        assert!(a
            .respond_to_query(
                &q(UidType::RadioTransceiver),
                SimTime::from_secs(200),
                SimTime::from_secs(2),
                &mut rng
            )
            .is_empty());
    }

    #[test]
    fn responding_identities_respect_window_and_cap() {
        let mut a = attacker(AttackerConfig {
            respond_window_s: 30.0,
            respond_identity_cap: 3,
            ..AttackerConfig::default()
        });
        a.active = true;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in [100u64, 110, 120, 130, 140] {
            a.next_fake_identity(SimTime::from_secs(s), &mut rng);
        }
        let ids = a.responding_identities(SimTime::from_secs(141));
        // 140, 130, 120 fit the cap; 110/100 are beyond it.
        assert_eq!(ids.len(), 3);
        assert_eq!(ids[0], a.current_mac());
    }
}
