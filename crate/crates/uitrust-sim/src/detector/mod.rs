//! UID-based Sybil detection: root-side message counter, collective
//! query-response evidence collection, and the per-observer evidence ledger.

pub mod counter;
pub mod ledger;
pub mod query;
pub mod wire;

pub use counter::{CounterVerdict, MessageCounter};
pub use ledger::{compute_lto, EvidenceLedger, SubjectEvidence};
pub use query::{QueryState, RoundSummary};
pub use wire::{LtoEntry, QueryField, ResponseField};
