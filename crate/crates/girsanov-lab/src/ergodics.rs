//! Invariant-measure statistics, time averages, and mixing diagnostics.
//!
//! The linearized dynamics have an explicit Gaussian invariant measure
//! (per-dof variance `sigma^2 / (2 mu)`), which gives every diagnostic in
//! this module a closed-form target: empirical variances get z-scores,
//! empirical marginals get Kolmogorov-Smirnov distances, and time averages
//! get exact references.  For the nonlinear dynamics no closed form exists;
//! there the tools compare ensembles started from different states against
//! each other (two-sample tests), which is the practical meaning of mixing
//! toward a unique invariant law.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::girsanov::Observable;
use crate::linsim::{step_count, LinearSim, PathRecord};
use crate::nonlinsim::{NonlinearSim, SimOptions};
use crate::rng;
use crate::spectral::{Covariance, GaussianSampler, OperatorSpectrum, SpectralField};
use crate::stats;

/// Per-dof comparison of empirical variance against the invariant law.
#[derive(Clone, Debug, Serialize)]
pub struct StationaryRow {
    pub label: String,
    pub var_theory: f64,
    pub var_empirical: f64,
    /// Normal-theory z-score of the variance discrepancy.
    pub z_score: f64,
    /// One-sample KS distance of the marginal against the Gaussian law.
    pub ks_statistic: f64,
    /// Asymptotic KS critical value at the chosen significance.
    pub ks_critical: f64,
}

/// How the stationary sample was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationarySource {
    /// Independent draws from the closed-form invariant measure.
    ExactSampler,
    /// Snapshots of one long exact path, subsampled far beyond the slowest
    /// relaxation time.
    LongPath,
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryStats {
    pub source: StationarySource,
    pub samples: usize,
    pub significance: f64,
    /// Per-dof rows (kept out of JSON summaries; the CSV artifact has them).
    #[serde(skip_serializing)]
    pub rows: Vec<StationaryRow>,
    /// Dofs whose |z| exceeds 4 or whose KS distance exceeds its critical
    /// value.
    pub flagged: usize,
}

fn stationary_stats_from_samples(
    spectrum: &Arc<OperatorSpectrum>,
    source: StationarySource,
    samples: &[Vec<f64>],
    significance: f64,
) -> StationaryStats {
    let n = samples.len();
    let nd = spectrum.num_dofs();
    let ks_critical = stats::ks_critical_one_sample(significance, n);
    let mut rows = Vec::with_capacity(nd);
    let mut flagged = 0;
    let mut column = vec![0.0; n];
    for dof in 0..nd {
        for (i, s) in samples.iter().enumerate() {
            column[i] = s[dof];
        }
        let var_theory = spectrum.dof_pair(dof).stationary_variance();
        let (_, var_empirical) = stats::mean_and_variance(&column);
        let z_score = stats::variance_z_score(var_empirical, var_theory, n);
        let sd = var_theory.sqrt();
        let ks_statistic = stats::one_sample_ks(&column, |x| stats::normal_cdf(x, 0.0, sd));
        if z_score.abs() > 4.0 || ks_statistic > ks_critical {
            flagged += 1;
        }
        rows.push(StationaryRow {
            label: spectrum.dof_label(dof),
            var_theory,
            var_empirical,
            z_score,
            ks_statistic,
            ks_critical,
        });
    }
    StationaryStats { source, samples: n, significance, rows, flagged }
}

/// Invariant-measure statistics from independent exact draws.
pub fn stationary_stats_exact(
    spectrum: &Arc<OperatorSpectrum>,
    samples: usize,
    significance: f64,
    seed: u64,
) -> Result<StationaryStats> {
    if samples < 10 {
        return Err(Error::InsufficientSamples { required: 10, got: samples });
    }
    let mut sampler = GaussianSampler::new(spectrum, Covariance::Invariant, seed);
    let rows: Vec<Vec<f64>> = (0..samples).map(|_| sampler.next_field().dofs()).collect();
    Ok(stationary_stats_from_samples(
        spectrum,
        StationarySource::ExactSampler,
        &rows,
        significance,
    ))
}

/// Invariant-measure statistics from one long exact path.
///
/// The path starts at zero, discards a burn-in of ten relaxation times of
/// the slowest mode, then records a snapshot every five relaxation times.
/// Because the linear sampler is exact at any step size, each gap is a
/// single step regardless of its length.
pub fn stationary_stats_path(
    spectrum: &Arc<OperatorSpectrum>,
    samples: usize,
    significance: f64,
    seed: u64,
) -> Result<StationaryStats> {
    if samples < 10 {
        return Err(Error::InsufficientSamples { required: 10, got: samples });
    }
    let relax = 1.0 / spectrum.min_drift_rate();
    let spacing = 5.0 * relax;
    let x = SpectralField::zero(spectrum);
    let mut sim = LinearSim::with_rng(&x, spacing, rng::stream(seed, 0), true)?;
    // Burn-in: 10 relaxation times = two spacing steps.
    sim.step();
    sim.step();
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        sim.step();
        rows.push(sim.state_dofs().to_vec());
    }
    Ok(stationary_stats_from_samples(
        spectrum,
        StationarySource::LongPath,
        &rows,
        significance,
    ))
}

/// Running time average of an observable along a recorded path.
#[derive(Clone, Debug, Serialize)]
pub struct ErgodicAverage {
    pub observable: Observable,
    pub times: Vec<f64>,
    /// `(1/t) int_0^t phi(u_s) ds` by trapezoid; at `t = 0` the integrand
    /// itself.
    pub running: Vec<f64>,
    /// Expectation under the linear invariant measure, when closed-form.
    pub reference: Option<f64>,
}

pub fn ergodic_average(record: &PathRecord, observable: &Observable) -> Result<ErgodicAverage> {
    let spectrum = record.spectrum();
    observable.validate(spectrum)?;
    let mut ufield = SpectralField::zero(spectrum);
    let values: Vec<f64> = record
        .states
        .iter()
        .map(|s| {
            ufield.set_from_dofs(s);
            observable.eval(&ufield)
        })
        .collect();
    let mut running = Vec::with_capacity(values.len());
    let mut integral = 0.0;
    running.push(values[0]);
    for m in 1..values.len() {
        integral += 0.5 * record.dt * (values[m - 1] + values[m]);
        running.push(integral / record.times[m]);
    }
    Ok(ErgodicAverage {
        observable: observable.clone(),
        times: record.times.clone(),
        running,
        reference: observable.invariant_expectation(spectrum),
    })
}

/// One dof's marginal-law comparison at a fixed horizon.
#[derive(Clone, Debug, Serialize)]
pub struct MixingRow {
    pub label: String,
    pub ks_statistic: f64,
    pub ks_critical: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingReport {
    pub horizon: f64,
    pub samples: usize,
    pub significance: f64,
    pub rows: Vec<MixingRow>,
    pub failures: usize,
    /// True when every per-dof marginal is statistically indistinguishable
    /// from its target.
    pub mixed: bool,
}

/// Linear mixing test: are the per-dof marginals at time `horizon`,
/// started from `x`, indistinguishable from the invariant law?
///
/// Exactness makes this cheap: each path is a single exact step of size
/// `horizon`.  At horizons short against the slowest relaxation time the
/// test must *fail* for a displaced start -- that failure is evidence the
/// test has power, and the acceptance checks exercise both directions.
pub fn linear_mixing_test(
    x: &SpectralField,
    horizon: f64,
    paths: usize,
    significance: f64,
    seed: u64,
) -> Result<MixingReport> {
    if paths < 10 {
        return Err(Error::InsufficientSamples { required: 10, got: paths });
    }
    let spectrum = Arc::clone(x.spectrum());
    let nd = spectrum.num_dofs();
    let mut columns = vec![vec![0.0; paths]; nd];
    for p in 0..paths {
        let mut sim = LinearSim::with_rng(x, horizon, rng::stream(seed, p as u64), true)?;
        sim.step();
        for (dof, v) in sim.state_dofs().iter().enumerate() {
            columns[dof][p] = *v;
        }
    }
    let ks_critical = stats::ks_critical_one_sample(significance, paths);
    let mut rows = Vec::with_capacity(nd);
    let mut failures = 0;
    for (dof, column) in columns.iter().enumerate() {
        let sd = spectrum.dof_pair(dof).stationary_variance().sqrt();
        let ks_statistic = stats::one_sample_ks(column, |v| stats::normal_cdf(v, 0.0, sd));
        let pass = ks_statistic <= ks_critical;
        if !pass {
            failures += 1;
        }
        rows.push(MixingRow { label: spectrum.dof_label(dof), ks_statistic, ks_critical, pass });
    }
    Ok(MixingReport {
        horizon,
        samples: paths,
        significance,
        rows,
        failures,
        mixed: failures == 0,
    })
}

/// Nonlinear mixing test: run ensembles from two starting states to the
/// horizon and compare the per-dof marginals with two-sample KS tests.
/// If the dynamics mix, the starting state is forgotten and every
/// comparison passes.
pub fn nonlinear_mixing_test(
    x1: &SpectralField,
    x2: &SpectralField,
    horizon: f64,
    dt: f64,
    paths: usize,
    significance: f64,
    seed: u64,
) -> Result<MixingReport> {
    x1.check_compatible(x2)?;
    if paths < 10 {
        return Err(Error::InsufficientSamples { required: 10, got: paths });
    }
    let steps = step_count(horizon, dt)?;
    let spectrum = Arc::clone(x1.spectrum());
    let nd = spectrum.num_dofs();
    let run_ensemble = |x: &SpectralField, stream_salt: u64| -> Result<Vec<Vec<f64>>> {
        (0..paths)
            .into_par_iter()
            .map(|p| -> Result<Vec<f64>> {
                let mut sim = NonlinearSim::with_options(
                    x,
                    dt,
                    rng::stream(seed, stream_salt + p as u64),
                    SimOptions::default(),
                )?;
                for _ in 0..steps {
                    sim.step()?;
                }
                Ok(sim.state_dofs().to_vec())
            })
            .collect()
    };
    // Disjoint stream ranges: the two ensembles must be independent.
    let a = run_ensemble(x1, 0)?;
    let b = run_ensemble(x2, paths as u64)?;
    let ks_critical = stats::ks_critical_two_sample(significance, paths, paths);
    let mut rows = Vec::with_capacity(nd);
    let mut failures = 0;
    let mut col_a = vec![0.0; paths];
    let mut col_b = vec![0.0; paths];
    for dof in 0..nd {
        for p in 0..paths {
            col_a[p] = a[p][dof];
            col_b[p] = b[p][dof];
        }
        let ks_statistic = stats::two_sample_ks(&col_a, &col_b);
        let pass = ks_statistic <= ks_critical;
        if !pass {
            failures += 1;
        }
        rows.push(MixingRow { label: spectrum.dof_label(dof), ks_statistic, ks_critical, pass });
    }
    Ok(MixingReport {
        horizon,
        samples: paths,
        significance,
        rows,
        failures,
        mixed: failures == 0,
    })
}
