//! Trusted-quorum selection by agglomerative clustering.
//!
//! Observers whose subjective-reputation vectors agree end up in one
//! cluster; the largest cluster under the dendrogram cut is the quorum.

use kodama::{linkage, Method};

/// Returns the member indices of the quorum, sorted ascending.
///
/// Ties between equal-size clusters go to the cluster with higher mean
/// previous-round score, then to the one containing the lowest index.
pub fn trusted_quorum(
    rows: &[Vec<f64>],
    cut: f64,
    prev_score: &[f64],
    ops: &mut u64,
) -> Vec<usize> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![0];
    }

    let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sum = 0.0;
            for (a, b) in rows[i].iter().zip(rows[j].iter()) {
                let d = a - b;
                sum += d * d;
                *ops += 2;
            }
            condensed.push(sum.sqrt());
        }
    }

    let dendrogram = linkage(&mut condensed, n, Method::Average);

    // Union-find over leaves and merge nodes; apply merges under the cut.
    let total = n + dendrogram.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (step_idx, step) in dendrogram.steps().iter().enumerate() {
        *ops += 1;
        if step.dissimilarity <= cut {
            let merged = n + step_idx;
            let a = find(&mut parent, step.cluster1);
            let b = find(&mut parent, step.cluster2);
            parent[a] = merged;
            parent[b] = merged;
        }
    }

    let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        clusters.entry(root).or_default().push(leaf);
    }

    let mut best: Option<(usize, f64, usize, Vec<usize>)> = None;
    for members in clusters.into_values() {
        let size = members.len();
        let mean_score = members
            .iter()
            .map(|m| prev_score.get(*m).copied().unwrap_or(0.5))
            .sum::<f64>()
            / size as f64;
        let min_member = members[0];
        let better = match &best {
            None => true,
            Some((bs, bscore, bmin, _)) => {
                size > *bs
                    || (size == *bs && mean_score > *bscore)
                    || (size == *bs && mean_score == *bscore && min_member < *bmin)
            }
        };
        if better {
            best = Some((size, mean_score, min_member, members));
        }
    }
    best.map(|(_, _, _, members)| members).unwrap_or_default()
}
