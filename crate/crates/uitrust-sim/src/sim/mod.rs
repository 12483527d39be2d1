//! Deterministic discrete-event engine: clock, queue, radio, energy, trace.

pub mod energy;
pub mod queue;
pub mod radio;
pub mod time;
pub mod trace;

pub use energy::{EnergyAccount, EnergyAction, EnergyModel};
pub use queue::{CausalityError, EventId, EventQueue};
pub use radio::{DeliveryOutcome, Radio, RadioConfig, RadioError};
pub use time::SimTime;
pub use trace::{TraceRecord, TraceSink};
