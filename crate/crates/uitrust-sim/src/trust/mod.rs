//! Centralized trust calculus: similarity, reputations, quorum clustering,
//! classification, directional trust and trust-weighted ranking.

pub mod cluster;
pub mod engine;
pub mod matrix;
pub mod paths;

pub use cluster::trusted_quorum;
pub use engine::{
    behavioral_reputation, classify, credibility_reputation, directional_global_trust,
    directional_weight, evaluate, global_reputation, maybe_switch_parent, mean_and_std,
    similarity, subjective_reputation, trust_rank, DirectedEdge, DirectionalTrust, SwitchDecision,
    TrustReport, Verdict,
};
pub use matrix::{CrMode, TrustMatrix, TrustParams};
pub use paths::shortest_path_costs;
