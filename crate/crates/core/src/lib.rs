//! Vibration shaping and analysis toolkit.
//!
//! The crate covers the full desk-scale pipeline for suppressing and
//! diagnosing residual vibration on a motion stage:
//!
//! - [`shaper`]: ZV / ZVD / ZVDD / EI impulse-sequence design, residual
//!   vibration and robustness (sensitivity curves, insensitivity width).
//! - [`motion`]: trapezoidal point-to-point commands and command shaping
//!   by convolution with an impulse sequence.
//! - [`plant`]: exact zero-order-hold simulation of a single underdamped
//!   endpoint mode, settling time and residual RMS.
//! - [`analysis`]: RMS / peak / crest factor and Hann-windowed FFT
//!   diagnosis of dominant vibration frequencies.
//! - [`doe`]: two-level full factorial designs and coded regression with
//!   interaction effects.
//! - [`monitor`]: streaming rolling-RMS monitor with warning/alarm levels
//!   and hysteresis.

pub mod analysis;
pub mod doe;
pub mod error;
pub mod format;
pub mod monitor;
pub mod motion;
pub mod plant;
pub mod shaper;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
