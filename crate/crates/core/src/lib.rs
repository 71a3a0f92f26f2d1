//! Sequential quantum repeater chains with GHZ-encoded error detection.
//!
//! The analytic engine tracks GHZ-diagonal states through encoding, memory
//! decay, swaps and decoding, and turns them into key rates and costs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alt;
pub mod cli;
pub mod error;
pub mod ghz;
pub mod metrics;
pub mod noise;
pub mod oracle;
pub mod output;
pub mod seged;
pub mod stage;
pub mod timing;
pub mod validation;

pub use alt::{run_scheme, SchemeChain, SchemeId};
pub use error::{Error, Result};
pub use ghz::{BasisLabel, DiagonalState, Factor, TransferOperator};
pub use metrics::{evaluate, max_range, optimize_hop_length, PerformanceReport};
pub use noise::NoiseParams;
pub use seged::{run_chain, ChainResult};
pub use stage::{load_stage, HardwareParams};
pub use timing::{timing_profile, LinkParams, TimingProfile};
