//! Joint ADC bit allocation and hybrid analog/digital combining for
//! millimeter-wave MIMO receivers.
//!
//! The receiver combiner is factored as `W_RF Δ W_BB`: a unit-modulus analog
//! network, a diagonal matrix of per-ADC distortion gains (one per RF chain,
//! set by the ADC resolution) and a digital baseband matrix. [`admm`] fits
//! this factorization to the optimal digital combiner while penalizing ADC
//! power, [`baselines`] provides the comparison receivers and [`harness`]
//! runs seeded Monte-Carlo experiments over them.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod quantization;
pub mod random;

#[cfg(test)]
mod testutil;

pub use admm::{AdmmConfig, AdmmRun, HybridCombiner, TraceRecord};
pub use baselines::{BaselineResult, Scenario};
pub use channel::{ChannelParams, ChannelRealization};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, Scheme, SummaryRow, SweepSpec, SweepVar};
pub use metrics::{Evaluation, PowerModel};
pub use numerics::{CMatrix, C64};
pub use quantization::{BitVector, DistortionMatrix, QuantizationBounds};
