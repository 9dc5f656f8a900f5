//! Simulation and analysis core for impedance-modulated backscatter and
//! passive EM leakage from a shielded device.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: randomness is driven by explicit seeds through
//! counter-based ChaCha streams, so results never depend on evaluation order.
//!
//! - [`physics`]: reflection coefficient, device impedance, shield
//!   attenuation, probe voltage, leakage model, impedance randomization.
//! - [`synth`]: labeled trace-set synthesis over a frequency sweep.
//! - [`dsp`]: baseline removal, band selection, magnitude, standardization.
//! - [`analysis`]: frequency scoring, PCA, linear SVM, FastICA, metrics.
#![no_std]
// `!(a < b)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod dsp;
mod error;
pub mod linalg;
pub mod physics;
pub(crate) mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use physics::{ComplexValue, ProgramId};
pub use rng::derive_seed;
pub use synth::{Modality, TraceSet};
