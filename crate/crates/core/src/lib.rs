//! Super-resolution of clustered spike trains from bandlimited Fourier
//! samples by decimation.

pub mod cli;
pub mod config;
pub mod dealias;
pub mod decimation;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod matching;
pub mod output;
pub mod pipeline;
pub mod signal_model;
pub mod spectral;
pub mod sr_methods;
pub mod stats;
pub mod validation;

pub use error::{Result, SrError, Stage};
pub use signal_model::{MeasurementOracle, NoiseKind, SpikeTrain};
