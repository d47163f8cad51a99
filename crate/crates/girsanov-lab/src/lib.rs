//! Spectral Galerkin laboratory for two stochastic PDEs: the damped
//! Kuramoto-Sivashinsky equation on a periodic interval and incompressible
//! Navier-Stokes with fractional dissipation on a 2-d or 3-d torus, both
//! driven by additive noise coloured by a power of the base operator.
//!
//! The crate is organized around one experimental programme: the law of the
//! nonlinear equation is compared against the law of its linearization by
//! explicit density reweighting.  That needs four ingredients, each its own
//! module:
//!
//! * [`spectral`] -- model specs, mode tables, fields, Gaussian sampling;
//! * [`operators`] -- dealiased pseudospectral nonlinearities and drift
//!   evaluations with growth diagnostics;
//! * [`linsim`] / [`nonlinsim`] -- exact Ornstein-Uhlenbeck sampling of the
//!   linearized dynamics and exponential time differencing for the full
//!   drift, sharing noise increments so paths can be coupled;
//! * [`girsanov`] -- truncated density exponents, normalization checks and
//!   importance-sampling estimators;
//! * [`ergodics`] -- invariant-measure statistics, ergodic averages and
//!   mixing diagnostics;
//! * [`regimes`] -- admissibility checks of the `(gamma, theta, alpha)`
//!   parameter regions, with independent numerical series probes.
//!
//! Everything is deterministic given a master seed: ensembles assign one
//! counter-derived ChaCha12 stream per path (see [`rng`]) and reduce in
//! fixed order, so identical configs give identical artifacts regardless of
//! thread count.

pub mod config;
pub mod ergodics;
pub mod error;
pub mod fft;
pub mod girsanov;
pub mod linsim;
pub mod nonlinsim;
pub mod operators;
pub mod output;
pub mod presets;
pub mod regimes;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use spectral::{
    build_spectrum, sample_gaussian_field, Covariance, GaussianSampler, ModelKind, ModelSpec,
    OperatorSpectrum, SpectralField,
};
