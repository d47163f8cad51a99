//! Exponential time differencing for the full nonlinear dynamics.
//!
//! The equations split as `du = -[L u + F(u)] dt + sigma d beta` with `L`
//! the diagonal linearized drift and `F` the perturbation evaluated in
//! [`crate::operators`].  One step treats `L` and the noise *exactly* (same
//! joint draw as the linear sampler) and freezes `F` at the left endpoint
//! (first-order exponential integrator):
//!
//! ```text
//! u' = e^{-mu dt} u - (1 - e^{-mu dt}) / mu * F_dof(u) + sigma * conv .
//! ```
//!
//! With `F` switched off this is *bit for bit* the linear sampler, which is
//! the coupling the Girsanov experiments lean on: a linear and a nonlinear
//! path driven by the same stream share their noise realization exactly.

use std::sync::Arc;

use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linsim::{step_count, IncrementSampler, PathKind, PathRecord, StepIncrements};
use crate::operators::{DriftEvaluation, PseudoSpectral};
use crate::rng;
use crate::spectral::{OperatorSpectrum, SpectralField};

/// Switches for coupling experiments and runaway protection.
#[derive(Clone, Copy, Debug)]
pub struct SimOptions {
    /// Draw noise (`false`: deterministic dynamics, generator untouched).
    pub noise: bool,
    /// Apply the drift perturbation `F` (`false`: reduces to the exact
    /// linear sampler on the same stream).
    pub nonlinearity: bool,
    /// Abort when `|A^theta u|` exceeds `guard_factor * max(|A^theta x0|, 1)`.
    /// The floor at 1 keeps the guard meaningful for small or zero starts.
    pub guard_factor: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { noise: true, nonlinearity: true, guard_factor: 1e6 }
    }
}

/// Streaming nonlinear integrator.
pub struct NonlinearSim {
    spectrum: Arc<OperatorSpectrum>,
    ctx: PseudoSpectral,
    state: Vec<f64>,
    /// Spectral mirror of `state`, kept in sync after every step.
    field: SpectralField,
    sampler: IncrementSampler,
    dt: f64,
    time: f64,
    decay: Vec<f64>,
    /// ETD weight `(1 - e^{-mu dt}) / mu` per dof.
    phi: Vec<f64>,
    sigma: Vec<f64>,
    guard: f64,
    options: SimOptions,
    scratch: StepIncrements,
    f_dofs: Vec<f64>,
}

impl NonlinearSim {
    pub fn new(x: &SpectralField, dt: f64, seed: u64) -> Result<Self> {
        Self::with_options(x, dt, rng::stream(seed, 0), SimOptions::default())
    }

    pub fn with_options(
        x: &SpectralField,
        dt: f64,
        rng: ChaCha12Rng,
        options: SimOptions,
    ) -> Result<Self> {
        let spectrum = Arc::clone(x.spectrum());
        let sampler = IncrementSampler::new(&spectrum, dt, rng)?;
        let n = spectrum.num_dofs();
        let mut decay = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        for dof in 0..n {
            let p = spectrum.dof_pair(dof);
            decay.push((-p.mu * dt).exp());
            // -expm1 keeps full precision for small mu dt.
            phi.push(-(-p.mu * dt).exp_m1() / p.mu);
            sigma.push(p.sigma);
        }
        let theta = spectrum.spec().theta;
        let guard = options.guard_factor * x.sobolev_norm(theta).max(1.0);
        Ok(NonlinearSim {
            ctx: PseudoSpectral::new(&spectrum),
            state: x.dofs(),
            field: x.clone(),
            sampler,
            dt,
            time: 0.0,
            decay,
            phi,
            sigma,
            guard,
            options,
            scratch: StepIncrements::default(),
            f_dofs: vec![0.0; n],
            spectrum,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state_dofs(&self) -> &[f64] {
        &self.state
    }

    pub fn state_field(&self) -> SpectralField {
        self.field.clone()
    }

    /// Drift evaluation at the current state (left endpoint of the next
    /// step) -- exactly what a Girsanov ledger along this path needs.
    pub fn drift_eval(&mut self) -> Result<DriftEvaluation> {
        self.ctx.drift(&self.field)
    }

    /// Draws increments (or zeros with noise off) and advances one step.
    /// Returns a view of the increments that drove the step.
    pub fn step(&mut self) -> Result<&StepIncrements> {
        let mut inc = std::mem::take(&mut self.scratch);
        let n = self.state.len();
        if self.options.noise {
            self.sampler.draw_into(&mut inc);
        } else {
            inc.dbeta.clear();
            inc.dbeta.resize(n, 0.0);
            inc.conv.clear();
            inc.conv.resize(n, 0.0);
        }
        let result = self.apply_step(&inc);
        self.scratch = inc;
        result?;
        Ok(&self.scratch)
    }

    /// Advances one step with externally supplied increments (twin-path
    /// coupling, record replay).
    pub fn apply_step(&mut self, inc: &StepIncrements) -> Result<()> {
        let n = self.state.len();
        if inc.dbeta.len() != n || inc.conv.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "increments carry {} dofs, state has {n}",
                inc.dbeta.len()
            )));
        }
        if self.options.nonlinearity {
            let eval = self.ctx.drift(&self.field)?;
            eval.field.write_dofs(&mut self.f_dofs);
        } else {
            self.f_dofs.fill(0.0);
        }
        for i in 0..n {
            self.state[i] = self.decay[i] * self.state[i] - self.phi[i] * self.f_dofs[i]
                + self.sigma[i] * inc.conv[i];
        }
        self.field.set_from_dofs(&self.state);
        self.time += self.dt;
        let norm = self.field.sobolev_norm(self.spectrum.spec().theta);
        if !norm.is_finite() || norm > self.guard {
            return Err(Error::BlowUp { time: self.time, norm, guard: self.guard });
        }
        Ok(())
    }
}

/// One ETD step from an explicit state; convenience wrapper over a
/// throwaway simulator so that replay code shares the exact arithmetic of
/// the streaming stepper.
pub fn step_nonlinear(
    state: &SpectralField,
    dt: f64,
    inc: &StepIncrements,
) -> Result<SpectralField> {
    let mut sim =
        NonlinearSim::with_options(state, dt, rng::stream(0, 0), SimOptions::default())?;
    sim.apply_step(inc)?;
    Ok(sim.state_field())
}

/// Simulates the nonlinear dynamics from `x` to `t_final`, recording every
/// state and increment.
pub fn simulate_nonlinear(
    x: &SpectralField,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<PathRecord> {
    let steps = step_count(t_final, dt)?;
    let mut sim = NonlinearSim::new(x, dt, seed)?;
    let mut record = PathRecord {
        kind: PathKind::Nonlinear,
        seed,
        dt,
        times: vec![0.0],
        states: vec![sim.state_dofs().to_vec()],
        increments: Vec::with_capacity(steps),
        spectrum: Arc::clone(x.spectrum()),
    };
    for m in 1..=steps {
        let inc = sim.step()?.clone();
        record.increments.push(inc);
        record.times.push(m as f64 * dt);
        record.states.push(sim.state_dofs().to_vec());
    }
    Ok(record)
}

/// Two nonlinear paths driven by one noise realization, with the running
/// pathwise-uniqueness budget.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TwinPathResult {
    pub times: Vec<f64>,
    /// `|A (u1 - u2)|` at each grid time.
    pub divergence: Vec<f64>,
    /// Trapezoid running integral of `|A u1|^2 + |A u2|^2`.
    pub budget: Vec<f64>,
}

impl TwinPathResult {
    /// Empirical exponential rate `ln(div_T^2 / div_0^2) / budget_T`.
    ///
    /// The uniqueness estimate bounds the squared divergence by
    /// `div_0^2 exp(C * budget)`, so this ratio is bounded by the constant
    /// `C` of the estimate; `None` when the paths start identical.
    pub fn gronwall_ratio(&self) -> Option<f64> {
        let d0 = *self.divergence.first()?;
        let dt = *self.divergence.last()?;
        let b = *self.budget.last()?;
        if d0 == 0.0 || b == 0.0 {
            return None;
        }
        Some(2.0 * (dt / d0).ln() / b)
    }
}

/// Runs twin paths from `x1` and `x2` under one shared noise stream.
pub fn twin_path_divergence(
    x1: &SpectralField,
    x2: &SpectralField,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<TwinPathResult> {
    x1.check_compatible(x2)?;
    let steps = step_count(t_final, dt)?;
    let spectrum = Arc::clone(x1.spectrum());
    // One sampler owns the stream; the two simulators only ever apply.
    let mut sampler = IncrementSampler::new(&spectrum, dt, rng::stream(seed, 0))?;
    let options = SimOptions::default();
    let mut sim1 = NonlinearSim::with_options(x1, dt, rng::stream(seed, 1), options)?;
    let mut sim2 = NonlinearSim::with_options(x2, dt, rng::stream(seed, 1), options)?;
    let seminorm = |a: &SpectralField, b: &SpectralField| -> f64 {
        let mut d = a.clone();
        d.add_scaled(-1.0, b).expect("twin fields share a spectrum");
        d.sobolev_norm(1.0)
    };
    let energy = |sim: &NonlinearSim| {
        let n = sim.field.sobolev_norm(1.0);
        n * n
    };
    let mut result = TwinPathResult {
        times: vec![0.0],
        divergence: vec![seminorm(&sim1.field, &sim2.field)],
        budget: vec![0.0],
    };
    let mut inc = StepIncrements::default();
    let mut load = energy(&sim1) + energy(&sim2);
    for m in 1..=steps {
        sampler.draw_into(&mut inc);
        sim1.apply_step(&inc)?;
        sim2.apply_step(&inc)?;
        let load_next = energy(&sim1) + energy(&sim2);
        result.times.push(m as f64 * dt);
        result.divergence.push(seminorm(&sim1.field, &sim2.field));
        result.budget.push(result.budget[m - 1] + 0.5 * dt * (load + load_next));
        load = load_next;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsim::simulate_linear;
    use crate::operators::PseudoSpectral;
    use crate::spectral::{build_spectrum, sample_gaussian_field, Covariance, ModelSpec};

    fn ks_spectrum(cutoff: usize) -> Arc<OperatorSpectrum> {
        build_spectrum(&ModelSpec::ks(1.0, 2.0, 0.0, 0.7, cutoff)).unwrap()
    }

    fn small_field(spectrum: &Arc<OperatorSpectrum>, seed: u64, scale: f64) -> SpectralField {
        let mut f = sample_gaussian_field(spectrum, Covariance::Scaled { beta: -1.0 }, seed);
        f.scale(scale);
        f
    }

    /// Independent deterministic reference: classical RK4 on
    /// `du/dt = -mu u - F(u)` with a much finer step.
    fn rk4_reference(x: &SpectralField, t_final: f64, dt: f64) -> SpectralField {
        let spectrum = Arc::clone(x.spectrum());
        let mut ctx = PseudoSpectral::new(&spectrum);
        let n = spectrum.num_dofs();
        let mu: Vec<f64> = (0..n).map(|d| spectrum.dof_pair(d).mu).collect();
        let rhs = |ctx: &mut PseudoSpectral, dofs: &[f64]| -> Vec<f64> {
            let u = SpectralField::from_dofs(&spectrum, dofs).unwrap();
            let f = ctx.drift(&u).unwrap().field.dofs();
            (0..n).map(|i| -mu[i] * dofs[i] - f[i]).collect()
        };
        let steps = (t_final / dt).round() as usize;
        let mut y = x.dofs();
        for _ in 0..steps {
            let k1 = rhs(&mut ctx, &y);
            let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * dt * k1[i]).collect();
            let k2 = rhs(&mut ctx, &y2);
            let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * dt * k2[i]).collect();
            let k3 = rhs(&mut ctx, &y3);
            let y4: Vec<f64> = (0..n).map(|i| y[i] + dt * k3[i]).collect();
            let k4 = rhs(&mut ctx, &y4);
            for i in 0..n {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        SpectralField::from_dofs(&spectrum, &y).unwrap()
    }

    #[test]
    fn deterministic_etd_converges_first_order_to_rk4_reference() {
        let spectrum = ks_spectrum(8);
        let x = small_field(&spectrum, 2, 0.5);
        // A horizon every ladder step divides exactly, so all runs integrate
        // to the same endpoint.
        let t = 0.125;
        let reference = rk4_reference(&x, t, 1e-4);
        let run = |dt: f64| -> f64 {
            let mut sim = NonlinearSim::with_options(
                &x,
                dt,
                rng::stream(0, 0),
                SimOptions { noise: false, ..SimOptions::default() },
            )
            .unwrap();
            let steps = (t / dt).round() as usize;
            for _ in 0..steps {
                sim.step().unwrap();
            }
            let mut d = sim.state_field();
            d.add_scaled(-1.0, &reference).unwrap();
            d.l2_norm()
        };
        let e1 = run(1.0 / 256.0);
        let e2 = run(1.0 / 512.0);
        let e3 = run(1.0 / 1024.0);
        assert!(e1 > 0.0 && e1 < 1e-2, "coarse error implausible: {e1}");
        for ratio in [e1 / e2, e2 / e3] {
            assert!(
                (1.6..=2.4).contains(&ratio),
                "error halving is not first order: {e1} {e2} {e3}"
            );
        }
    }

    #[test]
    fn nonlinearity_off_is_bitwise_the_linear_sampler() {
        let spectrum = ks_spectrum(6);
        let x = small_field(&spectrum, 3, 1.0);
        let (t, dt, seed) = (0.5, 0.05, 31u64);
        let linear = simulate_linear(&x, t, dt, seed).unwrap();
        let mut sim = NonlinearSim::with_options(
            &x,
            dt,
            rng::stream(seed, 0),
            SimOptions { nonlinearity: false, ..SimOptions::default() },
        )
        .unwrap();
        for _ in 0..10 {
            sim.step().unwrap();
        }
        for (a, b) in sim.state_dofs().iter().zip(linear.terminal()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn record_replays_through_apply_step() {
        let spectrum = ks_spectrum(6);
        let x = small_field(&spectrum, 4, 0.5);
        let record = simulate_nonlinear(&x, 0.25, 1.0 / 64.0, 9).unwrap();
        assert_eq!(record.kind, PathKind::Nonlinear);
        let mut sim = NonlinearSim::with_options(
            &x,
            record.dt,
            rng::stream(1234, 0), // stream irrelevant: increments are fed in
            SimOptions::default(),
        )
        .unwrap();
        for (m, inc) in record.increments.iter().enumerate() {
            sim.apply_step(inc).unwrap();
            for (a, b) in sim.state_dofs().iter().zip(&record.states[m + 1]) {
                assert_eq!(a.to_bits(), b.to_bits(), "step {m}");
            }
        }
    }

    #[test]
    fn one_shot_step_matches_streaming_step() {
        let spectrum = ks_spectrum(5);
        let x = small_field(&spectrum, 8, 0.7);
        let record = simulate_nonlinear(&x, 0.1, 0.02, 21).unwrap();
        let next = step_nonlinear(&x, 0.02, &record.increments[0]).unwrap();
        let stored = record.state_field(1).dofs();
        for (a, b) in next.dofs().iter().zip(&stored) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn blow_up_guard_trips_on_runaway_states() {
        let spectrum = ks_spectrum(8);
        let mut x = sample_gaussian_field(&spectrum, Covariance::Scaled { beta: 0.0 }, 5);
        x.scale(1e5);
        // Large state + sizable step: the quadratic term drives the norm
        // past guard_factor * |A^theta x| within a few steps.
        let result = simulate_nonlinear(&x, 1.0, 0.05, 2);
        match result {
            Err(Error::BlowUp { norm, guard, .. }) => {
                assert!(norm > guard);
            }
            other => panic!("expected blow-up, got {:?}", other.map(|r| r.times.len())),
        }
    }

    #[test]
    fn twin_paths_with_identical_starts_stay_identical() {
        let spectrum = ks_spectrum(6);
        let x = small_field(&spectrum, 6, 0.8);
        let twin = twin_path_divergence(&x, &x, 0.25, 1.0 / 64.0, 11).unwrap();
        assert!(twin.divergence.iter().all(|&d| d == 0.0));
        assert!(twin.budget.windows(2).all(|w| w[1] >= w[0]));
        assert!(twin.gronwall_ratio().is_none());
    }

    #[test]
    fn twin_paths_track_perturbation_scale() {
        let spectrum = ks_spectrum(6);
        let x1 = small_field(&spectrum, 7, 0.8);
        let run = |delta: f64| {
            let mut x2 = x1.clone();
            x2.set_dof(0, x2.dof(0) + delta);
            twin_path_divergence(&x1, &x2, 0.25, 1.0 / 64.0, 13).unwrap()
        };
        let a = run(1e-4);
        let b = run(1e-5);
        // Initial divergence is |A e_0| * delta exactly.
        assert!((a.divergence[0] / 1e-4 - 1.0).abs() < 1e-9);
        // Linearized growth: terminal divergences scale like delta.
        let ratio = a.divergence.last().unwrap() / b.divergence.last().unwrap();
        assert!((ratio / 10.0 - 1.0).abs() < 0.05, "scaling ratio {ratio}");
        // And the empirical exponential rate exists and is finite.
        assert!(a.gronwall_ratio().unwrap().is_finite());
    }

    #[test]
    fn twin_runs_are_deterministic() {
        let spectrum = ks_spectrum(5);
        let x1 = small_field(&spectrum, 14, 0.6);
        let mut x2 = x1.clone();
        x2.set_dof(2, x2.dof(2) + 1e-3);
        let a = twin_path_divergence(&x1, &x2, 0.2, 0.02, 3).unwrap();
        let b = twin_path_divergence(&x1, &x2, 0.2, 0.02, 3).unwrap();
        assert_eq!(a.divergence, b.divergence);
        assert_eq!(a.budget, b.budget);
    }

    #[test]
    fn ns_nonlinear_paths_run_and_conserve_under_pure_advection() {
        // Smoke test in dimension two: short run stays finite and the
        // divergence-free structure is preserved (norms stay bounded).
        let spectrum = build_spectrum(&ModelSpec::frac_ns(2, 1.0, 3.0, -0.5, 1.0, 3)).unwrap();
        let x = small_field(&spectrum, 15, 0.5);
        let record = simulate_nonlinear(&x, 0.125, 1.0 / 64.0, 4).unwrap();
        for m in 0..record.states.len() {
            assert!(record.state_field(m).l2_norm().is_finite());
        }
    }
}
