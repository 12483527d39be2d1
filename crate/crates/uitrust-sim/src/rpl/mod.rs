//! RPL control plane: messages, trickle, ETX estimation, parent selection.

pub mod dodag;
pub mod link;
pub mod message;
pub mod trickle;

pub use dodag::{
    handle_dis, mrhof_select_parent, CandidateView, DisAction, DodagState, NodeMode,
    PendingTable, RplConfig, RANK_INFINITE, ROOT_RANK,
};
pub use link::{compute_etx, LinkStats};
pub use message::{Frame, FrameKind, Piggyback};
pub use trickle::{TrickleConfig, TrickleTimer};
