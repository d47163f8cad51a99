use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::rng;
use crate::spectral::field::SpectralField;
use crate::spectral::spectrum::OperatorSpectrum;

/// Diagonal Gaussian covariances on the retained modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Covariance {
    /// The invariant measure of the linearized dynamics: each real degree of
    /// freedom is `N(0, sigma^2 / (2 mu))` independently.
    Invariant,
    /// `N(0, lambda^(2 beta))` per degree of freedom, i.e. the law of
    /// `A^beta` applied to spatial white noise; `beta = 0` is white noise on
    /// the retained span.
    Scaled { beta: f64 },
}

/// Streaming sampler of independent Gaussian fields.
///
/// Draw order is fixed (one standard normal per degree of freedom, in dof
/// order), so a sampler seeded identically reproduces the same sequence of
/// fields regardless of platform or thread count.
pub struct GaussianSampler {
    spectrum: Arc<OperatorSpectrum>,
    /// Standard deviation per degree of freedom (constant within a pair).
    std_devs: Vec<f64>,
    rng: ChaCha12Rng,
}

impl GaussianSampler {
    pub fn new(spectrum: &Arc<OperatorSpectrum>, covariance: Covariance, seed: u64) -> Self {
        let std_devs = (0..spectrum.num_dofs())
            .map(|dof| {
                let p = spectrum.dof_pair(dof);
                match covariance {
                    Covariance::Invariant => p.stationary_variance().sqrt(),
                    Covariance::Scaled { beta } => p.lambda.powf(beta),
                }
            })
            .collect();
        GaussianSampler { spectrum: Arc::clone(spectrum), std_devs, rng: rng::stream(seed, 0) }
    }

    pub fn next_field(&mut self) -> SpectralField {
        let mut field = SpectralField::zero(&self.spectrum);
        for (dof, sd) in self.std_devs.iter().enumerate() {
            let xi: f64 = self.rng.sample(StandardNormal);
            field.set_dof(dof, sd * xi);
        }
        field
    }
}

/// One Gaussian field, deterministic in `(covariance, seed)`.
pub fn sample_gaussian_field(
    spectrum: &Arc<OperatorSpectrum>,
    covariance: Covariance,
    seed: u64,
) -> SpectralField {
    GaussianSampler::new(spectrum, covariance, seed).next_field()
}
