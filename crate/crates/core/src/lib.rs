//! Covert communication in IRS-assisted symbiotic radio: detection analysis,
//! transmission strategies, and phase-shift optimization.

pub mod channel;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod numerics;
pub mod optimizer;
pub mod rates;
pub mod sdp;
pub mod strategy;

pub use channel::{dbm_to_watts, watts_to_dbm, ChannelRealization, PhaseProfile, SystemConfig};
pub use detection::{DepReport, Threshold};
pub use error::{Error, Result};
pub use experiment::{ExperimentSpec, Table};
pub use optimizer::{OptimResult, OptimizerOptions};
pub use rates::Mode;
