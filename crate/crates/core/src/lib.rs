//! Envelope-spectrum explanations for bearing-fault classifiers.
//!
//! A time signal `x` is mapped to an interpretable pair `(z, r)`: `z` is the
//! packed real spectrum of the Hilbert envelope and `r` the instantaneous
//! phase. Any model of `x` becomes a model of `z` via [`domain::augment`],
//! which lets standard attribution methods produce per-frequency relevance.
//! [`alignment`] then scores how much of that relevance sits at the expected
//! fault frequency and its harmonics.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod alignment;
pub mod attribution;
pub mod domain;
pub mod error;
pub mod models;
pub mod scalar;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
pub use models::{Differentiable, Model};
pub use scalar::Real;

pub type Signal = signal::TimeSignal<f64>;
pub type Spectrum = signal::ComplexSpectrum<f64>;
pub type PackedSpectrum = signal::PackedRealSpectrum<f64>;
pub type Representation = domain::EnvelopeRepresentation<f64>;
pub type Attribution = attribution::AttributionVector<f64>;
pub type Network = models::TrainedModel<f64>;
pub type Sample = sim::LabeledSignal<f64>;
