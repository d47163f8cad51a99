//! Two independent routes to the invariant measure of the linearized
//! dynamics must agree: direct draws from the closed-form Gaussian, and
//! snapshots of one long exact path subsampled far apart.  This example
//! runs both and prints the per-dof variance agreement summary for the 2-d
//! Navier-Stokes desk model, where the invariant dof variance is
//! `lambda^(2 gamma - alpha) / (2 nu)`.

use girsanov_lab::{build_spectrum, ergodics, presets};

fn main() -> girsanov_lab::Result<()> {
    let spec = presets::ns_desk_2d();
    let spectrum = build_spectrum(&spec)?;
    let samples = 4000;
    let significance = 0.01;

    let exact = ergodics::stationary_stats_exact(&spectrum, samples, significance, 5)?;
    let path = ergodics::stationary_stats_path(&spectrum, samples, significance, 6)?;

    for (name, stats) in [("exact sampler", &exact), ("long path", &path)] {
        let worst = stats
            .rows
            .iter()
            .max_by(|a, b| a.z_score.abs().total_cmp(&b.z_score.abs()))
            .unwrap();
        println!(
            "{name}: {} samples over {} dofs, {} flagged",
            stats.samples,
            stats.rows.len(),
            stats.flagged
        );
        println!(
            "  worst variance z-score {:+.3} at {} (theory {:.4e}, empirical {:.4e})",
            worst.z_score, worst.label, worst.var_theory, worst.var_empirical
        );
        let ks_worst = stats
            .rows
            .iter()
            .max_by(|a, b| a.ks_statistic.total_cmp(&b.ks_statistic))
            .unwrap();
        println!(
            "  worst KS distance {:.4} at {} (critical {:.4} at {:.0}% significance)",
            ks_worst.ks_statistic,
            ks_worst.label,
            ks_worst.ks_critical,
            100.0 * significance
        );
    }
    Ok(())
}
