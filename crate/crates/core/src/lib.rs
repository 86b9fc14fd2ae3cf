//! Simulation laboratory for intra-channel fiber nonlinearity compensation.
//!
//! The crate is organised along the signal path of a single-channel,
//! single-polarization coherent link:
//!
//! * [`signal`] holds units, alphabets and the sample/symbol containers.
//! * [`dsp`] does pulse shaping, matched filtering and linear dispersion (EDC).
//! * [`channel`] is the split-step Fourier truth model with EDFA noise.
//! * [`coeffs`] evaluates first- and second-order perturbation kernels and
//!   builds, prunes, quantizes and persists coefficient look-up tables.
//! * [`engines`] applies the compensators: FO/SO predistortion and DBP.
//! * [`metrics`] turns received symbols into BER, thresholds and reach.

pub mod channel;
pub mod coeffs;
pub mod dsp;
pub mod engines;
mod error;
pub mod fft;
pub mod metrics;
pub mod signal;

pub use error::{Error, Result};
pub use num_complex::Complex64;
