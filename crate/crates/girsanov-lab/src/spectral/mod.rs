//! Model specification, mode tables, spectral fields, Gaussian sampling.
//!
//! The central objects are [`ModelSpec`] (pure description of a truncated
//! model), [`OperatorSpectrum`] (the concrete mode table with eigenvalues,
//! drift rates and noise amplitudes in a fixed enumeration order), and
//! [`SpectralField`] (one complex amplitude per retained pair with an
//! equivalent real degree-of-freedom view).

mod field;
mod sampling;
mod spec;
mod spectrum;

pub use field::SpectralField;
pub use sampling::{sample_gaussian_field, Covariance, GaussianSampler};
pub use spec::{ModelKind, ModelSpec};
pub use spectrum::{build_spectrum, DofPhase, OperatorSpectrum, PairId, PairInfo};
