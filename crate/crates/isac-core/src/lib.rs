//! Link-level model of a millimeter-wave reflecting-surface link that serves a
//! communication user and senses a nearby target with the same downlink signals.
//!
//! The crate covers the full chain:
//!
//! - [`scenario`]: validated system parameters and unit conversions
//! - [`array`]: ULA steering vectors, beam-gain kernel, direct-path cancellation
//! - [`channel`]: rank-one LoS channel blocks and path gains
//! - [`scan`]: DFT-codebook beam sweep, user feedback, echo collection
//! - [`estimate`]: grid-search maximum-likelihood angle estimation
//! - [`analytics`]: Fisher-information bounds, outlier probability, MSE
//!   prediction, and SNR thresholds
//! - [`strategy`]: data-phase reflection design (single beam vs. beam split)
//!   and element allocation
//!
//! Everything is `no_std` + `alloc`; IO, config parsing, and the Monte-Carlo
//! harness live in the companion `isac-sim` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod array;
pub mod channel;
pub mod estimate;
pub mod linalg;
pub mod rng;
pub mod scan;
pub mod scenario;
pub mod strategy;

pub use analytics::AnalyticsReport;
pub use array::{
    beam_kernel, steering, steering_derivative, CancellationProjector, SteeringVector,
};
pub use channel::{assemble_channels, path_gains, target_snr, ChannelSet, PathGains};
pub use estimate::{mle_phase1, mle_whole, EstimationResult, EstimatorConfig};
pub use linalg::{CMat, C64};
pub use scan::{achievable_rate, simulate_phase1, undetectable_region, Codebook, ScanRecord};
pub use scenario::{dbm_to_watts, watts_to_dbm, Scenario, ScenarioParams, SpatialDirection};
pub use strategy::{
    decide_strategy, element_allocation, simulate_phase2, split_gain, split_reflection,
    SplitReflection, StrategyDecision, StrategyKind,
};
