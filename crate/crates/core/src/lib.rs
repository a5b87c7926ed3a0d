//! Laminar transport data-path on an RMT-style pipeline substrate, with the
//! host library, control plane, and reference reassembler used to validate
//! it.
//!
//! Modules map onto the architecture: [`rmt`] is the pipeline execution
//! substrate and constraint checker, [`rx`]/[`tx`] are the stateful
//! receive/transmit blocks implemented as stage handlers, [`program`]
//! assembles them into the deployed pipeline program, [`control`] is the
//! slow path (connection setup, congestion policy, exception recovery), and
//! [`host`] is the host-side library and workload surface.

pub mod config;
pub mod control;
pub mod host;
pub mod interval;
pub mod program;
pub mod rmt;
pub mod rx;
pub mod seq;
pub mod time;
pub mod tx;

pub use config::TransportConfig;
pub use seq::SeqNum;
pub use time::SimTime;
