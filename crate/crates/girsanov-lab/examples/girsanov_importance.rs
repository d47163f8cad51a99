//! Estimates a nonlinear-law observable two ways: the direct way (integrate
//! the nonlinear equation, average at the terminal time) and by importance
//! sampling (simulate only the *linear* equation and reweight each path by
//! its truncated Girsanov density).
//!
//! Agreement within error bars is the operational meaning of the two laws
//! being mutually absolutely continuous -- and is also the one check that
//! can tell a correct exponent sign from a wrong one, since both signs pass
//! the normalization test.

use girsanov_lab::girsanov::{
    direct_estimate, importance_estimate, pilot_truncation_level, Observable,
};
use girsanov_lab::{build_spectrum, presets, SpectralField};

fn main() -> girsanov_lab::Result<()> {
    let desk = presets::ks_desk_girsanov();
    let spectrum = build_spectrum(&desk.spec)?;
    let x = SpectralField::zero(&spectrum);
    let (t, dt) = (desk.t_final, desk.dt);
    let obs = Observable::DofMoment { dof: 0, power: 2 };

    let level = pilot_truncation_level(&x, t, dt, 500, 0.99, 8)?;
    let imp = importance_estimate(&x, &obs, t, dt, 4000, level, 8)?;
    let (direct, direct_se) = direct_estimate(&x, &obs, t, dt, 1500, 8)?;

    println!("observable {} at T = {t}, dt = {dt:.6}", obs.label());
    println!(
        "importance (4000 linear paths, level {:.4}): {:.6} +- {:.6}",
        level, imp.estimate, imp.std_error
    );
    println!("direct (1500 nonlinear paths):              {direct:.6} +- {direct_se:.6}");
    let gap = imp.estimate - direct;
    let se = imp.std_error + direct_se;
    println!(
        "difference {gap:+.6} = {:.2} combined SE (ESS {:.0}, truncated {:.3})",
        gap.abs() / se,
        imp.ess,
        imp.truncation_frequency
    );
    for w in &imp.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
