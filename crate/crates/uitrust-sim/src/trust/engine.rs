//! The trust calculus evaluated at the root each epoch.
//!
//! From the local trust opinions it derives, in order: opinion similarity
//! between observers, subjective reputation, the trusted quorum,
//! behavioral, credibility and global reputation, the honest/malicious
//! verdicts, and the directional trust chain down to per-link costs and
//! trust-weighted ranks.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ident::MacAddr;

use super::cluster::trusted_quorum;
use super::matrix::{CrMode, TrustMatrix, TrustParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Honest,
    Malicious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchDecision {
    Keep,
    Switch,
}

/// Cosine similarity of two opinion rows over the subjects both rated,
/// clamped below at zero. Fewer than two common subjects (or a zero norm)
/// is neutral similarity 1.
pub fn similarity(a: &[Option<f64>], b: &[Option<f64>], ops: &mut u64) -> f64 {
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    let mut common = 0u32;
    for (x, y) in a.iter().zip(b.iter()) {
        if let (Some(x), Some(y)) = (x, y) {
            dot += x * y;
            norm_a += x * x;
            norm_b += y * y;
            common += 1;
            *ops += 3;
        }
    }
    if common < 2 {
        return 1.0;
    }
    let denom = (norm_a * norm_b).sqrt();
    if denom <= 1e-12 {
        return 1.0;
    }
    (dot / denom).max(0.0)
}

/// Weighted mean of opinions about one subject; `opinions` carries
/// `(LTO_{j,u}, HR_j * Sim_{w,j})` pairs. Returns the value and whether the
/// degenerate all-zero-weight fallback (unweighted mean) was taken.
pub fn subjective_reputation(opinions: &[(f64, f64)], ops: &mut u64) -> Option<(f64, bool)> {
    if opinions.is_empty() {
        return None;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (lto, weight) in opinions {
        num += lto * weight;
        den += weight;
        *ops += 3;
    }
    if den <= 1e-12 {
        let mean = opinions.iter().map(|(l, _)| l).sum::<f64>() / opinions.len() as f64;
        return Some((mean, true));
    }
    Some(((num / den).clamp(0.0, 1.0), false))
}

/// Mean subjective reputation over the trusted quorum.
pub fn behavioral_reputation(srs: &[f64], ops: &mut u64) -> Option<f64> {
    if srs.is_empty() {
        return None;
    }
    *ops += srs.len() as u64;
    Some(srs.iter().sum::<f64>() / srs.len() as f64)
}

/// One minus the RMS deviation of a node's opinions from the consensus;
/// a node with no opinions gets the neutral 0.5.
pub fn credibility_reputation(pairs: &[(f64, f64)], ops: &mut u64) -> f64 {
    if pairs.is_empty() {
        return 0.5;
    }
    let mut sum = 0.0;
    for (lto, reference) in pairs {
        let d = lto - reference;
        sum += d * d;
        *ops += 2;
    }
    (1.0 - (sum / pairs.len() as f64).sqrt()).clamp(0.0, 1.0)
}

pub fn global_reputation(br: f64, cr: f64, gamma: f64) -> f64 {
    gamma * br + (1.0 - gamma) * cr
}

/// Malicious strictly below the threshold; the boundary stays honest.
pub fn classify(gr: f64, theta: f64) -> Verdict {
    if gr < theta {
        Verdict::Malicious
    } else {
        Verdict::Honest
    }
}

/// Population mean and standard deviation.
pub fn mean_and_std(values: &[f64], ops: &mut u64) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    *ops += 3 * values.len() as u64;
    (mean, var.sqrt())
}

/// Gaussian kernel of the deviation from the column mean; degenerate
/// spread means full weight.
pub fn directional_weight(sr_d: f64, mu: f64, sigma: f64) -> f64 {
    if sigma <= 1e-12 {
        return 1.0;
    }
    (-((sr_d - mu).powi(2)) / (2.0 * sigma * sigma)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalTrust {
    pub t_d: f64,
    pub t_dg: f64,
    pub link_cost: f64,
}

/// `T^D = SR^D * W`, `T^DG = T^D * GR_w`, `l = 1 - T^DG`.
pub fn directional_global_trust(sr_d: f64, weight: f64, gr_w: f64) -> DirectionalTrust {
    let t_d = sr_d * weight;
    let t_dg = t_d * gr_w;
    DirectionalTrust {
        t_d,
        t_dg,
        link_cost: 1.0 - t_dg,
    }
}

/// Trust-weighted rank: `lambda * R^P + (1 - lambda) * ETX * l`.
/// Unusable links propagate an infinite rank.
pub fn trust_rank(r_parent: f64, etx: f64, link_cost: f64, lambda: f64) -> f64 {
    if !etx.is_finite() || !r_parent.is_finite() {
        return f64::INFINITY;
    }
    lambda * r_parent + (1.0 - lambda) * etx * link_cost
}

/// Change parents only on a strict improvement.
pub fn maybe_switch_parent(r_existing: f64, r_candidate: f64) -> SwitchDecision {
    if r_existing > r_candidate {
        SwitchDecision::Switch
    } else {
        SwitchDecision::Keep
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectedEdge {
    pub from: MacAddr,
    pub to: MacAddr,
    pub sr_d: f64,
    pub weight: f64,
    pub t_d: f64,
    pub t_dg: f64,
    pub link_cost: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrustReport {
    pub observers: Vec<MacAddr>,
    pub subjects: Vec<MacAddr>,
    /// Subjective reputation rows, observer-major over subjects.
    pub sr: Vec<Vec<Option<f64>>>,
    pub quorum: Vec<MacAddr>,
    pub br: BTreeMap<MacAddr, f64>,
    pub cr: BTreeMap<MacAddr, f64>,
    pub gr: BTreeMap<MacAddr, f64>,
    pub verdicts: BTreeMap<MacAddr, Verdict>,
    pub directed: Vec<DirectedEdge>,
    pub ops: u64,
    pub sr_fallbacks: u64,
}

impl TrustReport {
    pub fn is_malicious(&self, mac: MacAddr) -> bool {
        matches!(self.verdicts.get(&mac), Some(Verdict::Malicious))
    }

    pub fn link_cost(&self, from: MacAddr, to: MacAddr) -> Option<f64> {
        self.directed
            .iter()
            .find(|e| e.from == from && e.to == to)
            .map(|e| e.link_cost)
    }
}

/// Full evaluation of the trust pipeline over one opinion matrix.
pub fn evaluate(
    matrix: &TrustMatrix,
    params: &TrustParams,
    prev_gr: &BTreeMap<MacAddr, f64>,
) -> TrustReport {
    let mut ops: u64 = 0;
    let mut sr_fallbacks: u64 = 0;
    let n_obs = matrix.observers.len();
    let n_sub = matrix.subjects.len();

    // Observer-pair opinion similarity.
    let mut sim = vec![1.0; n_obs * n_obs];
    for w in 0..n_obs {
        for j in (w + 1)..n_obs {
            let s = similarity(matrix.row(w), matrix.row(j), &mut ops);
            sim[w * n_obs + j] = s;
            sim[j * n_obs + w] = s;
        }
    }

    // Raters per subject; subjects nobody rated stay out of the calculus.
    let raters: Vec<Vec<usize>> = (0..n_sub).map(|u| matrix.raters_of(u)).collect();
    let valid: Vec<usize> = (0..n_sub).filter(|u| !raters[*u].is_empty()).collect();

    // Subjective reputation for every (observer, subject) pair.
    let mut sr: Vec<Vec<Option<f64>>> = vec![vec![None; n_sub]; n_obs];
    let mut opinions: Vec<(f64, f64)> = Vec::new();
    for w in 0..n_obs {
        for &u in &valid {
            opinions.clear();
            for &j in &raters[u] {
                let lto = matrix.lto_at(j, u).expect("rater has opinion");
                opinions.push((lto, matrix.hr_at(j) * sim[w * n_obs + j]));
                ops += 1;
            }
            if let Some((value, fellback)) = subjective_reputation(&opinions, &mut ops) {
                if fellback {
                    sr_fallbacks += 1;
                }
                sr[w][u] = Some(value);
            }
        }
    }

    // Trusted quorum over observer SR vectors restricted to rated subjects.
    let rows: Vec<Vec<f64>> = (0..n_obs)
        .map(|w| valid.iter().map(|u| sr[w][*u].unwrap_or(0.5)).collect())
        .collect();
    let prev_scores: Vec<f64> = matrix
        .observers
        .iter()
        .map(|m| prev_gr.get(m).copied().unwrap_or(0.5))
        .collect();
    let quorum_idx = trusted_quorum(&rows, params.cluster_cut, &prev_scores, &mut ops);
    let quorum: Vec<MacAddr> = quorum_idx.iter().map(|w| matrix.observers[*w]).collect();

    // Behavioral reputation: quorum consensus per subject.
    let mut br: BTreeMap<MacAddr, f64> = BTreeMap::new();
    for &u in &valid {
        let srs: Vec<f64> = quorum_idx.iter().filter_map(|w| sr[*w][u]).collect();
        if let Some(v) = behavioral_reputation(&srs, &mut ops) {
            br.insert(matrix.subjects[u], v);
        }
    }

    // Credibility of each observer's opinions.
    let mut cr: BTreeMap<MacAddr, f64> = BTreeMap::new();
    for (w, mac) in matrix.observers.iter().enumerate() {
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        match params.cr_mode {
            CrMode::PeerConsensus => {
                for &u in &valid {
                    if let (Some(lto), Some(reference)) =
                        (matrix.lto_at(w, u), br.get(&matrix.subjects[u]))
                    {
                        pairs.push((lto, *reference));
                    }
                }
            }
            CrMode::SelfAnchor => {
                if let Some(own_br) = br.get(mac) {
                    for &u in &valid {
                        if let Some(lto) = matrix.lto_at(w, u) {
                            pairs.push((lto, *own_br));
                        }
                    }
                }
            }
        }
        cr.insert(*mac, credibility_reputation(&pairs, &mut ops));
    }

    // Global reputation and verdicts for every subject with a consensus.
    let mut gr: BTreeMap<MacAddr, f64> = BTreeMap::new();
    let mut verdicts: BTreeMap<MacAddr, Verdict> = BTreeMap::new();
    for (mac, br_v) in &br {
        let cr_v = cr.get(mac).copied().unwrap_or(0.5);
        let g = global_reputation(*br_v, cr_v, params.gamma);
        gr.insert(*mac, g);
        verdicts.insert(*mac, classify(g, params.theta));
        ops += 2;
    }

    // Directional chain over one-hop receiver pairs.
    let mut directed = Vec::new();
    for &u in &valid {
        let receivers: Vec<usize> = (0..n_obs).filter(|w| matrix.onehop_at(*w, u)).collect();
        if receivers.is_empty() {
            continue;
        }
        let directional_raters: Vec<usize> = raters[u]
            .iter()
            .copied()
            .filter(|j| matrix.onehop_at(*j, u))
            .collect();
        if directional_raters.is_empty() {
            continue;
        }
        let mut sr_d: Vec<(usize, f64)> = Vec::new();
        for &w in &receivers {
            opinions.clear();
            for &j in &directional_raters {
                let lto = matrix.lto_at(j, u).expect("rater has opinion");
                opinions.push((lto, matrix.hr_at(j) * sim[w * n_obs + j]));
                ops += 1;
            }
            if let Some((value, _)) = subjective_reputation(&opinions, &mut ops) {
                sr_d.push((w, value));
            }
        }
        let column: Vec<f64> = sr_d.iter().map(|(_, v)| *v).collect();
        let (mu, sigma) = mean_and_std(&column, &mut ops);
        for (w, value) in sr_d {
            let weight = directional_weight(value, mu, sigma);
            let gr_w = gr
                .get(&matrix.observers[w])
                .copied()
                .unwrap_or(0.5);
            let d = directional_global_trust(value, weight, gr_w);
            ops += 4;
            directed.push(DirectedEdge {
                from: matrix.observers[w],
                to: matrix.subjects[u],
                sr_d: value,
                weight,
                t_d: d.t_d,
                t_dg: d.t_dg,
                link_cost: d.link_cost,
            });
        }
    }

    TrustReport {
        observers: matrix.observers.clone(),
        subjects: matrix.subjects.clone(),
        sr,
        quorum,
        br,
        cr,
        gr,
        verdicts,
        directed,
        ops,
        sr_fallbacks,
    }
}
