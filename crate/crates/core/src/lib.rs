//! Single-gateway LoRaWAN cell simulation with fairness-oriented SF and
//! transmit-power allocation.
//!
//! - [`radio`]: path loss, airtime, reachability
//! - [`collision`]: capture and cross-SF rejection at the gateway
//! - [`allocation`]: FADR, SN5 and Reynders-style allocators
//! - [`sim`]: Poisson traffic and per-frame adjudication
//! - [`metrics`]: DER, Jain fairness, energy, DER vs distance
//! - [`study`]: fixed allocation and interference regimes
//! - [`harness`]: sweeps, aggregation and CSV output

// `!(x > 0.0)` is used deliberately so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod collision;
mod error;
pub mod harness;
pub mod metrics;
pub mod radio;
pub mod sim;
pub mod study;

pub use allocation::{
    AllocationParams, AllocationResult, AllocatorKind, Assignment, NodeSnapshot, PowerLevelSet, SfDistribution,
    SfOrder,
};
pub use collision::{CirMatrix, Fate, Transmission};
pub use error::{Error, Result};
pub use harness::{ExperimentResults, ExperimentSpec, RunRecord};
pub use metrics::{EnergyModel, MetricsReport};
pub use radio::{ChannelGain, RadioConfig, SpreadingFactor};
pub use sim::{NodeState, RunOutput, SimConfig};
pub use study::Regime;
