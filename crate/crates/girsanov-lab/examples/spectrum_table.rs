//! Prints the full mode table for the three desk models: eigenvalue,
//! linearized drift rate, noise amplitude and invariant variance per
//! retained complex pair.
//!
//! Every other artifact in the crate (CSV columns, ledger dofs, path dumps)
//! uses exactly this enumeration order, so this table is the key for
//! reading all of them.

use girsanov_lab::{build_spectrum, presets};

fn main() -> girsanov_lab::Result<()> {
    for spec in [presets::ks_desk(), presets::ns_desk_2d(), presets::ns_desk_3d()] {
        let spectrum = build_spectrum(&spec)?;
        println!(
            "== {:?}, dim {}, cutoff {}: {} pairs / {} real dofs",
            spec.kind,
            spec.dim,
            spec.cutoff,
            spectrum.num_pairs(),
            spectrum.num_dofs()
        );
        for w in spectrum.warnings() {
            println!("   warning: {w}");
        }
        println!("{:<18} {:>12} {:>12} {:>10} {:>14}", "pair", "lambda", "mu", "sigma", "inv var");
        for pair in spectrum.pairs().iter().take(8) {
            println!(
                "{:<18} {:>12.4} {:>12.4} {:>10.4} {:>14.6}",
                pair.label(),
                pair.lambda,
                pair.mu,
                pair.sigma,
                pair.stationary_variance()
            );
        }
        if spectrum.num_pairs() > 8 {
            println!("... ({} more pairs)", spectrum.num_pairs() - 8);
        }
        println!();
    }
    Ok(())
}
