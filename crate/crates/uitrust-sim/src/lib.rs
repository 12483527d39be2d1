//! Deterministic discrete-event simulation of RPL sensor networks under
//! power-controlled Sybil attacks, with a unique-identifier trust defense,
//! RSSI-profiling and identity-count baselines, and a metrics harness.

pub mod adversary;
pub mod detector;
pub mod harness;
pub mod ident;
pub mod rpl;
pub mod sim;
pub mod trust;
