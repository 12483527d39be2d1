//! The opinion matrix the root evaluates each epoch.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ident::MacAddr;

/// Parameters of the trust calculus.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustParams {
    /// Weight between behavioral and credibility reputation.
    pub gamma: f64,
    /// Classification threshold on global reputation.
    pub theta: f64,
    /// Weight between parent rank and trust-scaled link cost.
    pub lambda: f64,
    /// Dendrogram cut distance for the trusted quorum.
    pub cluster_cut: f64,
    pub cr_mode: CrMode,
}

/// Which behavioral reputation an observer's opinions are compared against
/// when computing credibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrMode {
    /// Compare the opinion about each subject to that subject's consensus.
    PeerConsensus,
    /// Compare every opinion to the reporter's own consensus value.
    SelfAnchor,
}

impl Default for TrustParams {
    fn default() -> Self {
        TrustParams {
            gamma: 0.5,
            theta: 0.5,
            lambda: 0.5,
            cluster_cut: 0.3,
            cr_mode: CrMode::PeerConsensus,
        }
    }
}

impl TrustParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("theta", self.theta),
            ("lambda", self.lambda),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must be in [0,1]"));
            }
        }
        if self.cluster_cut < 0.0 {
            return Err("cluster_cut must be >= 0".into());
        }
        Ok(())
    }
}

/// Local trust opinions indexed (observer, subject), plus the observer
/// weights and the one-hop relation used for directional trust.
#[derive(Debug, Clone)]
pub struct TrustMatrix {
    pub observers: Vec<MacAddr>,
    pub subjects: Vec<MacAddr>,
    lto: Vec<Option<f64>>,
    hr: Vec<f64>,
    onehop: Vec<bool>,
}

impl TrustMatrix {
    pub fn new(mut observers: Vec<MacAddr>, mut subjects: Vec<MacAddr>) -> Self {
        observers.sort_unstable();
        observers.dedup();
        subjects.sort_unstable();
        subjects.dedup();
        let lto = vec![None; observers.len() * subjects.len()];
        let onehop = vec![false; observers.len() * subjects.len()];
        let hr = vec![1.0; observers.len()];
        TrustMatrix {
            observers,
            subjects,
            lto,
            hr,
            onehop,
        }
    }

    /// Builds a matrix from raw (observer, subject) -> (p, n) tallies.
    pub fn from_tallies(
        tallies: &BTreeMap<(MacAddr, MacAddr), (u32, u32)>,
        hr: &BTreeMap<MacAddr, f64>,
        onehop: impl Fn(MacAddr, MacAddr) -> bool,
    ) -> Self {
        let mut observers: Vec<MacAddr> = tallies.keys().map(|(w, _)| *w).collect();
        let mut subjects: Vec<MacAddr> = tallies.keys().map(|(_, u)| *u).collect();
        observers.sort_unstable();
        observers.dedup();
        subjects.sort_unstable();
        subjects.dedup();
        let mut m = TrustMatrix::new(observers, subjects);
        for ((w, u), (p, n)) in tallies {
            if let Some(lto) = crate::detector::compute_lto(*p, *n) {
                m.set_lto(*w, *u, lto);
            }
        }
        for (i, w) in m.observers.clone().iter().enumerate() {
            m.hr[i] = hr.get(w).copied().unwrap_or(1.0);
        }
        for (wi, w) in m.observers.clone().iter().enumerate() {
            for (ui, u) in m.subjects.clone().iter().enumerate() {
                let idx = wi * m.subjects.len() + ui;
                m.onehop[idx] = onehop(*w, *u);
            }
        }
        m
    }

    pub fn observer_index(&self, mac: MacAddr) -> Option<usize> {
        self.observers.binary_search(&mac).ok()
    }

    pub fn subject_index(&self, mac: MacAddr) -> Option<usize> {
        self.subjects.binary_search(&mac).ok()
    }

    pub fn set_lto(&mut self, observer: MacAddr, subject: MacAddr, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value));
        let (w, u) = (
            self.observer_index(observer).expect("known observer"),
            self.subject_index(subject).expect("known subject"),
        );
        let cols = self.subjects.len();
        self.lto[w * cols + u] = Some(value);
    }

    pub fn set_hr(&mut self, observer: MacAddr, weight: f64) {
        debug_assert!(weight > 0.0);
        if let Some(w) = self.observer_index(observer) {
            self.hr[w] = weight;
        }
    }

    pub fn set_onehop(&mut self, observer: MacAddr, subject: MacAddr, value: bool) {
        if let (Some(w), Some(u)) = (self.observer_index(observer), self.subject_index(subject)) {
            let cols = self.subjects.len();
            self.onehop[w * cols + u] = value;
        }
    }

    #[inline]
    pub fn lto_at(&self, w: usize, u: usize) -> Option<f64> {
        self.lto[w * self.subjects.len() + u]
    }

    #[inline]
    pub fn hr_at(&self, w: usize) -> f64 {
        self.hr[w]
    }

    #[inline]
    pub fn onehop_at(&self, w: usize, u: usize) -> bool {
        self.onehop[w * self.subjects.len() + u]
    }

    /// Observer indices with a non-null opinion about subject `u`.
    pub fn raters_of(&self, u: usize) -> Vec<usize> {
        (0..self.observers.len())
            .filter(|w| self.lto_at(*w, u).is_some())
            .collect()
    }

    /// Full LTO row of one observer.
    pub fn row(&self, w: usize) -> &[Option<f64>] {
        let cols = self.subjects.len();
        &self.lto[w * cols..(w + 1) * cols]
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
    fn tallies_become_opinions() {
        let mut tallies = BTreeMap::new();
        tallies.insert((mac(1), mac(2)), (6u32, 3u32));
        tallies.insert((mac(1), mac(3)), (0u32, 0u32));
        let m = TrustMatrix::from_tallies(&tallies, &BTreeMap::new(), |_, _| true);
        let w = m.observer_index(mac(1)).unwrap();
        let u2 = m.subject_index(mac(2)).unwrap();
        let u3 = m.subject_index(mac(3)).unwrap();
        assert!((m.lto_at(w, u2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.lto_at(w, u3), None);
        assert_eq!(m.raters_of(u2), vec![w]);
        assert!(m.raters_of(u3).is_empty());
    }
}
