//! How fast is the start forgotten?  Two diagnostics:
//!
//! * linear: an ensemble from one fixed (far-from-typical) start, marginals
//!   at time `t` tested against the invariant Gaussian.  Compared well
//!   before and well after the slowest relaxation time `1/mu_min`.
//! * nonlinear: ensembles from two distant starts, terminal marginals
//!   tested against *each other*.  No closed-form target exists, so
//!   indistinguishability of the two forests of paths is the criterion.
//!
//! The slowest linear mode sets `1/mu_min`; nonlinear mode coupling is what
//! actually carries energy out of the neutral first mode, so the nonlinear
//! horizon is set by experiment, not by that formula.

use girsanov_lab::ergodics::{linear_mixing_test, nonlinear_mixing_test};
use girsanov_lab::spectral::{sample_gaussian_field, Covariance};
use girsanov_lab::{build_spectrum, presets, SpectralField};

fn main() -> girsanov_lab::Result<()> {
    let spec = presets::ks_desk();
    let spectrum = build_spectrum(&spec)?;
    let relax = 1.0 / spectrum.min_drift_rate();

    // Start every dof at 3 invariant standard deviations.
    let mut far = SpectralField::zero(&spectrum);
    for dof in 0..spectrum.num_dofs() {
        far.set_dof(dof, 3.0 * spectrum.dof_pair(dof).stationary_variance().sqrt());
    }

    println!("slowest linear relaxation time 1/mu_min = {relax:.3}");
    // 0.1% significance: with 64 simultaneous marginal tests, a mixed
    // ensemble still rejects somewhere ~6% of the time at 1%.
    for (tag, horizon) in [("0.1x", 0.1 * relax), ("10x", 10.0 * relax)] {
        let report = linear_mixing_test(&far, horizon, 2000, 0.001, 56)?;
        let worst = report
            .rows
            .iter()
            .map(|r| r.ks_statistic / r.ks_critical)
            .fold(0.0f64, f64::max);
        println!(
            "linear at {tag:>5} relax (t = {horizon:.2}): {} of {} dofs reject \
             (worst stat {worst:.2}x critical) -> {}",
            report.failures,
            report.rows.len(),
            if report.mixed { "mixed" } else { "not mixed" }
        );
    }

    let x1 = sample_gaussian_field(&spectrum, Covariance::Invariant, 70);
    let mut x2 = x1.clone();
    for dof in 0..spectrum.num_dofs() {
        x2.set_dof(dof, -2.0 * x1.dof(dof));
    }
    let report = nonlinear_mixing_test(&x1, &x2, 20.0, 1.0 / 32.0, 300, 0.01, 71)?;
    println!(
        "nonlinear two-start test at t = {}: {} of {} dofs distinguish -> {}",
        report.horizon,
        report.failures,
        report.rows.len(),
        if report.mixed { "indistinguishable" } else { "still distinguishable" }
    );
    Ok(())
}
