//! Multi-message broadcast in the radio network model.
//!
//! A round is a set of transmitting nodes; a listener receives a packet iff
//! exactly one of its neighbors transmits. On top of that collision engine the
//! crate provides bipartite and layered topologies, solitude transmission
//! schedules (STS) and their conversion to and from routing schedules, random
//! linear network coding over GF(2^8), routing and coded broadcast protocols,
//! and exact reception-probability analysis.
//!
//! Quantities that must be compared for equality (STS weights, throughputs,
//! probabilities) are exact [`Rational`]s; the generic [`Scalar`] trait lets the
//! same formulas be evaluated in `f32`/`f64`.

pub mod analysis;
pub mod coding;
pub mod error;
pub mod perm;
pub mod protocols;
pub mod radio_sim;
pub mod scalar;
pub mod schedule;
pub mod sts;
pub mod synthesis;
pub mod topology;

/// Exact arithmetic for weights, throughputs and probabilities.
pub type Rational = num_rational::BigRational;
/// Floating-point scalar used for bounds and estimates.
pub type Real = f64;

pub use error::{Error, Result};
pub use perm::Permutation;
pub use protocols::{run_protocol, ProtocolSpec, RunResult};
pub use radio_sim::{Packet, PacketBudget, Simulator};
pub use scalar::Scalar;
pub use schedule::{MessageId, TransmissionSchedule};
pub use sts::{Sts, StsRound};
pub use topology::{make_bipartite, BipartiteNetwork, RadioGraph, SenderSet};
