use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which stochastic PDE the spectrum describes.
///
/// Both models are driven by additive noise coloured by a power of the base
/// operator `A`: the covariance of the forcing is diagonal on the eigenbasis
/// of `A` with per-mode amplitude `lambda^gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Kuramoto-Sivashinsky on a periodic interval of length `L`, restricted
    /// to zero-mean fields.  With `A = -d^2/dxi^2` the drift of the
    /// linearized equation acts mode-wise as `mu = nu lambda^2 - lambda + a`,
    /// where `a` is an added damping shift that keeps every rate positive.
    Ks,
    /// Incompressible Navier-Stokes on the torus `[0, 2 pi]^d` (d = 2 or 3)
    /// with fractional dissipation `nu A^alpha` acting on divergence-free,
    /// zero-mean velocity fields.  The linearized per-mode rate is
    /// `mu = nu lambda^alpha`.
    FracNs,
}

/// Full description of a truncated spectral model.
///
/// A `ModelSpec` is pure data; [`build_spectrum`](crate::spectral::build_spectrum)
/// turns it into the concrete mode table used by the simulators.  The fields
/// `gamma` (noise colour) and `theta` (Sobolev index of the state space) are
/// carried here because the admissibility analysis and several norms depend
/// on them even before any field exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Viscosity `nu > 0`.
    pub nu: f64,
    /// Damping shift `a >= 0` added to the KS drift.  Ignored for `FracNs`.
    pub damping: f64,
    /// Noise colour: the forcing on a mode with eigenvalue `lambda` has
    /// amplitude `lambda^gamma`.
    pub gamma: f64,
    /// Sobolev index of the state space: sizes are measured in `|A^theta u|`.
    pub theta: f64,
    /// Fractional dissipation exponent `alpha >= 1`.  Ignored for `Ks`
    /// (whose dissipation is the fixed bi-Laplacian `nu A^2`).
    pub alpha: f64,
    /// Spatial dimension: 1 for `Ks`, 2 or 3 for `FracNs`.
    pub dim: usize,
    /// Period of the KS interval.  For `FracNs` this is fixed to `2 pi`.
    pub domain_length: f64,
    /// Spectral truncation: KS keeps wavenumbers `1..=cutoff`; `FracNs`
    /// keeps lattice vectors with `max_i |k_i| <= cutoff`.
    pub cutoff: usize,
}

impl ModelSpec {
    /// Kuramoto-Sivashinsky spec on the default period `2 pi`.
    pub fn ks(nu: f64, damping: f64, gamma: f64, theta: f64, cutoff: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Ks,
            nu,
            damping,
            gamma,
            theta,
            alpha: 2.0,
            dim: 1,
            domain_length: TAU,
            cutoff,
        }
    }

    /// Fractional Navier-Stokes spec on the torus `[0, 2 pi]^d`.
    pub fn frac_ns(dim: usize, nu: f64, alpha: f64, gamma: f64, theta: f64, cutoff: usize) -> Self {
        ModelSpec {
            kind: ModelKind::FracNs,
            nu,
            damping: 0.0,
            gamma,
            theta,
            alpha,
            dim,
            domain_length: TAU,
            cutoff,
        }
    }

    pub fn with_domain_length(mut self, length: f64) -> Self {
        self.domain_length = length;
        self
    }

    /// Structural validation; called by `build_spectrum` before any numerics.
    pub fn validate(&self) -> Result<()> {
        if !self.nu.is_finite() || self.nu <= 0.0 {
            return Err(Error::InvalidSpec(format!("nu must be positive, got {}", self.nu)));
        }
        if self.cutoff == 0 {
            return Err(Error::InvalidSpec("cutoff must be at least 1".into()));
        }
        for (name, v) in [("gamma", self.gamma), ("theta", self.theta)] {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be finite, got {v}")));
            }
        }
        match self.kind {
            ModelKind::Ks => {
                if self.dim != 1 {
                    return Err(Error::InvalidSpec(format!(
                        "Kuramoto-Sivashinsky is one-dimensional, got dim = {}",
                        self.dim
                    )));
                }
                if !self.domain_length.is_finite() || self.domain_length <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "domain_length must be positive, got {}",
                        self.domain_length
                    )));
                }
                if !self.damping.is_finite() || self.damping < 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "damping must be non-negative, got {}",
                        self.damping
                    )));
                }
            }
            ModelKind::FracNs => {
                if self.dim != 2 && self.dim != 3 {
                    return Err(Error::InvalidSpec(format!(
                        "fractional Navier-Stokes supports dim 2 or 3, got {}",
                        self.dim
                    )));
                }
                if !self.alpha.is_finite() || self.alpha < 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "alpha must be at least 1, got {}",
                        self.alpha
                    )));
                }
                if (self.domain_length - TAU).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(
                        "the Navier-Stokes torus is fixed to period 2 pi".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Eigenvalue of `A` for a KS wavenumber `j >= 1`: `(2 pi j / L)^2`.
    pub fn ks_eigenvalue(&self, j: usize) -> f64 {
        let k = TAU * j as f64 / self.domain_length;
        k * k
    }

    /// Per-mode drift rate of the linearized equation.
    pub fn drift_rate(&self, lambda: f64) -> f64 {
        match self.kind {
            ModelKind::Ks => self.nu * lambda * lambda - lambda + self.damping,
            ModelKind::FracNs => self.nu * lambda.powf(self.alpha),
        }
    }

    /// Noise amplitude on a mode with eigenvalue `lambda`.
    pub fn noise_amplitude(&self, lambda: f64) -> f64 {
        lambda.powf(self.gamma)
    }

    /// Volume of the spatial domain (`L` for KS, `(2 pi)^d` for the torus).
    pub fn volume(&self) -> f64 {
        match self.kind {
            ModelKind::Ks => self.domain_length,
            ModelKind::FracNs => TAU.powi(self.dim as i32),
        }
    }

    /// Polynomial growth exponent `p` in the drift bound
    /// `|A^{-gamma} F(u)| <= c (1 + |A^theta u|^p)`; the quadratic
    /// nonlinearity gives `p = 2` for both models.
    pub fn growth_exponent(&self) -> u32 {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_constructor_and_rates() {
        let spec = ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 32);
        spec.validate().unwrap();
        // On the 2 pi interval the eigenvalues are the squared integers.
        assert_eq!(spec.ks_eigenvalue(1), 1.0);
        assert_eq!(spec.ks_eigenvalue(3), 9.0);
        // mu_j = nu j^4 - j^2 + a.
        assert_eq!(spec.drift_rate(1.0), 2.0);
        assert_eq!(spec.drift_rate(9.0), 81.0 - 9.0 + 2.0);
        assert_eq!(spec.volume(), TAU);
    }

    #[test]
    fn ks_eigenvalue_scales_with_period() {
        let spec = ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 8).with_domain_length(2.0 * TAU);
        // Doubling the period quarters each eigenvalue.
        assert!((spec.ks_eigenvalue(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ns_constructor_and_rates() {
        let spec = ModelSpec::frac_ns(2, 0.5, 3.0, -0.5, 1.0, 8);
        spec.validate().unwrap();
        // mu = nu |k|^(2 alpha) with lambda = |k|^2.
        assert!((spec.drift_rate(4.0) - 0.5 * 64.0).abs() < 1e-12);
        assert!((spec.noise_amplitude(4.0) - 0.5).abs() < 1e-15);
        assert!((spec.volume() - TAU * TAU).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(ModelSpec::ks(0.0, 2.0, 0.0, 0.7, 32).validate().is_err());
        assert!(ModelSpec::ks(1.0, -1.0, 0.0, 0.7, 32).validate().is_err());
        assert!(ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 0).validate().is_err());
        assert!(ModelSpec::frac_ns(1, 1.0, 3.0, 0.0, 1.0, 4).validate().is_err());
        assert!(ModelSpec::frac_ns(2, 1.0, 0.5, 0.0, 1.0, 4).validate().is_err());
        let mut off_torus = ModelSpec::frac_ns(2, 1.0, 3.0, 0.0, 1.0, 4);
        off_torus.domain_length = 1.0;
        assert!(off_torus.validate().is_err());
    }
}
