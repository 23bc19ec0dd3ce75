//! Pulsed-pump microring photon-pair simulation: classical pump, broadband
//! scattering matrix of signal and idler, modal structure and Gaussian-state
//! figures of merit.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod modal;
pub mod model;
pub mod oracle;
pub mod pair;
pub mod pump;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};

/// Run dense kernels single-threaded so results do not depend on the thread
/// count; sweeps parallelise across points instead.
pub fn set_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}
