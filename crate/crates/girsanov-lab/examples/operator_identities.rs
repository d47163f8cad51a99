//! Structural identities of the dealiased pseudospectral nonlinearities,
//! evaluated on random fields.  These are the properties the whole density
//! programme silently relies on:
//!
//! * bilinearity: `B(u + v, w) = B(u, w) + B(v, w)` to rounding;
//! * energy conservation: the nonlinearity moves energy between modes but
//!   creates none.  For KS that is the cubic identity `<B(u, u), u> = 0`;
//!   for Navier-Stokes the stronger skew-symmetry `<B(u, v), v> = 0` holds
//!   for every divergence-free advecting field `u`;
//! * incompressibility (Navier-Stokes): amplitudes live on tangent frames,
//!   so `k . u_k = 0` holds exactly by construction.
//!
//! Dealiasing matters here: with a too-small transform grid the products
//! would fold high wavenumbers back onto retained ones and these inner
//! products would not vanish.

use girsanov_lab::operators::PseudoSpectral;
use girsanov_lab::spectral::{sample_gaussian_field, Covariance, PairId};
use girsanov_lab::{build_spectrum, presets, SpectralField};

fn dot(a: &SpectralField, b: &SpectralField) -> f64 {
    a.dofs().iter().zip(b.dofs()).map(|(x, y)| x * y).sum()
}

fn main() -> girsanov_lab::Result<()> {
    for (name, spec) in [("KS desk", presets::ks_desk()), ("NS 2-d desk", presets::ns_desk_2d())] {
        let spectrum = build_spectrum(&spec)?;
        let mut ctx = PseudoSpectral::new(&spectrum);
        let mut worst_linearity = 0.0f64;
        let mut worst_energy = 0.0f64;
        let mut energy_label = "";
        for trial in 0..20 {
            let u = sample_gaussian_field(&spectrum, Covariance::Invariant, 100 + trial);
            let v = sample_gaussian_field(&spectrum, Covariance::Invariant, 200 + trial);
            let w = sample_gaussian_field(&spectrum, Covariance::Invariant, 300 + trial);

            let mut upv = u.clone();
            for (c, cv) in upv.coeffs_mut().iter_mut().zip(v.coeffs()) {
                *c += cv;
            }
            let lhs = ctx.bilinear(&upv, &w)?;
            let bu = ctx.bilinear(&u, &w)?;
            let bv = ctx.bilinear(&v, &w)?;
            for i in 0..spectrum.num_dofs() {
                worst_linearity =
                    worst_linearity.max((lhs.dof(i) - bu.dof(i) - bv.dof(i)).abs());
            }

            let (energy, label) = if spec.dim > 1 {
                let buv = ctx.bilinear(&u, &v)?;
                (dot(&buv, &v).abs() / v.l2_norm().powi(2), "|<B(u,v),v>| / |v|^2")
            } else {
                let buu = ctx.bilinear(&u, &u)?;
                (dot(&buu, &u).abs() / u.l2_norm().powi(3), "|<B(u,u),u>| / |u|^3")
            };
            worst_energy = worst_energy.max(energy);
            energy_label = label;
        }
        println!("{name} over 20 random triples:");
        println!("  worst bilinearity defect     {worst_linearity:.3e}");
        println!("  worst {energy_label}   {worst_energy:.3e}");
        if spec.dim > 1 {
            let worst_div = spectrum
                .pairs()
                .iter()
                .map(|p| {
                    let PairId::NsMode { k, .. } = p.id else { unreachable!() };
                    (0..3).map(|i| k[i] as f64 * p.tangent[i]).sum::<f64>().abs()
                })
                .fold(0.0f64, f64::max);
            println!("  worst |k . tangent|          {worst_div:.3e}  (incompressibility)");
        }
    }
    Ok(())
}
