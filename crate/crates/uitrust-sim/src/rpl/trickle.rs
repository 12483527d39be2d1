//! Trickle timer (RFC 6206 semantics).
//!
//! The interval doubles while the network is consistent and snaps back to
//! the minimum on inconsistency. Resets while already at the minimum are
//! no-ops, so a DIS flood pins DIO emission at the minimum rate instead of
//! starving it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrickleConfig {
    pub i_min_s: f64,
    pub doublings: u32,
    pub redundancy_k: u32,
}

impl Default for TrickleConfig {
    fn default() -> Self {
        TrickleConfig {
            i_min_s: 4.0,
            doublings: 8,
            redundancy_k: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrickleTimer {
    i_min_us: u64,
    i_max_us: u64,
    redundancy_k: u32,
    interval_us: u64,
    counter: u32,
    /// Bumped whenever pending fire/end events become stale.
    pub version: u64,
}

/// What the driver should schedule after a timer transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TricklePlan {
    pub fire_at: SimTime,
    pub interval_end: SimTime,
    pub version: u64,
}

impl TrickleTimer {
    pub fn new(cfg: &TrickleConfig) -> Self {
        let i_min_us = SimTime::from_secs_f64(cfg.i_min_s).as_micros().max(1);
        TrickleTimer {
            i_min_us,
            i_max_us: i_min_us << cfg.doublings,
            redundancy_k: cfg.redundancy_k,
            interval_us: i_min_us,
            counter: 0,
            version: 0,
        }
    }

    pub fn interval(&self) -> SimTime {
        SimTime::from_micros(self.interval_us)
    }

    pub fn i_min(&self) -> SimTime {
        SimTime::from_micros(self.i_min_us)
    }

    pub fn i_max(&self) -> SimTime {
        SimTime::from_micros(self.i_max_us)
    }

    fn begin_interval(&mut self, now: SimTime, rng: &mut ChaCha8Rng) -> TricklePlan {
        self.counter = 0;
        self.version += 1;
        let half = self.interval_us / 2;
        let offset = half + rng.gen_range(0..half.max(1));
        TricklePlan {
            fire_at: now + SimTime::from_micros(offset),
            interval_end: now + SimTime::from_micros(self.interval_us),
            version: self.version,
        }
    }

    /// Starts the timer at the minimum interval.
    pub fn start(&mut self, now: SimTime, rng: &mut ChaCha8Rng) -> TricklePlan {
        self.interval_us = self.i_min_us;
        self.begin_interval(now, rng)
    }

    /// Suppression: a redundant consistent transmission was heard.
    pub fn heard_consistent(&mut self) {
        self.counter = self.counter.saturating_add(1);
    }

    /// At the fire point; returns whether to actually transmit.
    pub fn should_transmit(&self) -> bool {
        self.counter < self.redundancy_k
    }

    /// Interval expired: double (capped) and start the next interval.
    pub fn on_interval_end(&mut self, now: SimTime, rng: &mut ChaCha8Rng) -> TricklePlan {
        self.interval_us = (self.interval_us * 2).min(self.i_max_us);
        self.begin_interval(now, rng)
    }

    /// Inconsistency heard. Returns a new plan when the timer actually
    /// reset; `None` when it was already at the minimum interval.
    pub fn on_inconsistent(&mut self, now: SimTime, rng: &mut ChaCha8Rng) -> Option<TricklePlan> {
        if self.interval_us > self.i_min_us {
            self.interval_us = self.i_min_us;
            Some(self.begin_interval(now, rng))
        } else {
            None
        }
    }
}
