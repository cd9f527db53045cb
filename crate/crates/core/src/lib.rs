//! Synthetic vibration benchmark and attention-based anomaly detection for
//! indirect structural health monitoring (iSHM).
//!
//! The crate has three layers:
//!
//! * data — [`rng`] seeded sampling, [`benchmark`] eight-stage signal
//!   generation with injected anomalies, [`dataset`] persistence and splits;
//! * models — [`numerics`] dense tensors with reverse-mode differentiation,
//!   [`models`] an attention-focused transformer and a convolutional
//!   autoencoder comparator;
//! * evaluation — [`eval`] ROC/AUC, threshold metrics, stage drop tables and
//!   inference timing.

pub mod benchmark;
pub mod dataset;
pub mod rng;

pub use rng::{DistError, DistKind, DistSpec, SeededRng};
