//! Link-level library for a massive MIMO-OFDM uplink with low-resolution ADCs,
//! oversampling, and hybrid analog/digital combining.
//!
//! The library has two faces that are meant to check each other:
//!
//! * a brute-force time-domain simulation path ([`signal_chain`]): OFDM
//!   modulation, circular multipath propagation, analog combining, scalar
//!   quantization, and Monte Carlo estimators of distortion covariance and
//!   per-stream SINDR;
//! * a closed-form analysis path ([`analysis`]): a Bussgang-based
//!   quantization-distortion covariance approximation, the resulting effective
//!   noise covariance, SINDR, and spectral efficiency.
//!
//! On top of the analysis sits a sum-rate maximizing combiner designer
//! ([`optimizer`]): a fractional-programming reformulation with closed-form
//! auxiliary and digital-combiner updates and a projected gradient ascent
//! solver for the constant-modulus analog combiner. [`power`] adds receiver
//! power-consumption and energy-efficiency models.
//!
//! All randomness flows through [`rng::RngStream`], so every Monte Carlo
//! result is reproducible from a `(master_seed, stream_id)` pair.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod fft;
pub mod optimizer;
pub mod power;
pub mod quantizer;
pub mod rng;
pub mod signal_chain;
pub mod util;

pub use config::{DerivedScalars, Scenario, SystemConfig};
pub use rng::RngStream;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dynamically sized complex matrix (column-major).
pub type CMat = nalgebra::DMatrix<C64>;
/// Dynamically sized complex vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dynamically sized real matrix.
pub type RMat = nalgebra::DMatrix<f64>;
/// Dynamically sized real vector.
pub type RVec = nalgebra::DVector<f64>;
