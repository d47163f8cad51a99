//! Time averages along one path against space averages under the invariant
//! measure.  For the *linear* dynamics the invariant measure is the
//! explicit Gaussian, so the running average of `u_0^2` along a long exact
//! path must settle onto `sigma^2 / (2 mu)` at the usual `1/sqrt(t)` Monte
//! Carlo rate.  The same estimator along a *nonlinear* path stabilizes
//! too, but onto a different number -- the measure the Girsanov programme
//! reweights toward.

use girsanov_lab::ergodics::ergodic_average;
use girsanov_lab::girsanov::Observable;
use girsanov_lab::linsim::simulate_linear;
use girsanov_lab::nonlinsim::simulate_nonlinear;
use girsanov_lab::spectral::{sample_gaussian_field, Covariance};
use girsanov_lab::{build_spectrum, presets};

fn main() -> girsanov_lab::Result<()> {
    let spec = presets::ks_desk();
    let spectrum = build_spectrum(&spec)?;
    let x = sample_gaussian_field(&spectrum, Covariance::Invariant, 44);
    // Dof 0 is the first cosine mode: the slowest to relax, hence the
    // hardest test of the time average.
    let obs = Observable::DofMoment { dof: 0, power: 2 };
    let (t, dt) = (2000.0, 1.0 / 32.0);

    let linear = ergodic_average(&simulate_linear(&x, t, dt, 45)?, &obs)?;
    let nonlinear = ergodic_average(&simulate_nonlinear(&x, t, dt, 45)?, &obs)?;
    let reference = linear.reference.unwrap();

    println!("running time averages of {} (T = {t}):", obs.label());
    println!("{:>8} {:>12} {:>12}", "time", "linear", "nonlinear");
    for frac in [0.05, 0.1, 0.25, 0.5, 1.0] {
        let i = ((linear.times.len() - 1) as f64 * frac) as usize;
        println!(
            "{:>8.1} {:>12.5} {:>12.5}",
            linear.times[i], linear.running[i], nonlinear.running[i]
        );
    }
    println!("linear invariant expectation: {reference:.5}");
    let err = (linear.running.last().unwrap() - reference).abs();
    println!(
        "linear terminal error {err:.5} ({:.2}x the 1/sqrt(T) scale {:.5})",
        err / (reference / t.sqrt()),
        reference / t.sqrt()
    );
    println!("the nonlinear average converges to its own (non-Gaussian) measure");
    Ok(())
}
