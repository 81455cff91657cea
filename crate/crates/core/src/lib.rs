//! Recurrence-based analysis of scalar time series.
//!
//! Series are reconstructed in phase space by delay embedding, turned into
//! recurrence matrices, and summarised by line-structure measures (DET, LAM)
//! and by measures of the associated recurrence network (clustering
//! coefficient, characteristic path length). Sliding-window pipelines and a
//! modified Mann-Kendall trend test support regime-shift detection.
//!
//! Numeric routines are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64` for everyday use.

pub mod analysis;
pub mod bits;
pub mod embedding;
pub mod error;
pub mod network;
pub mod preprocess;
pub mod recurrence;
pub mod scalar;
pub mod trend;
pub mod window;

pub use error::{Error, Result};
pub use scalar::{Fraction, Scalar};

pub type TimeSeries64 = preprocess::TimeSeries<f64>;
pub type RawSeries64 = preprocess::RawSeries<f64>;
pub type EmbeddedTrajectory64 = embedding::EmbeddedTrajectory<f64>;
pub type MeasureSeries = window::MeasureSeries;
