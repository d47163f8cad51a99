use std::io::Write as IoWrite;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::output::{csv_field, g17};
use crate::spectral::spec::{ModelKind, ModelSpec};

/// Identity of one retained complex amplitude.
///
/// KS keeps one amplitude per wavenumber `j`; Navier-Stokes keeps one per
/// half-lattice vector `k` and tangent direction `t`.  The conjugate mode
/// `-k` is implied by reality of the field and never stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairId {
    KsMode { j: usize },
    /// `k` is padded with a trailing zero in dimension two.
    NsMode { k: [i64; 3], tangent: usize },
}

/// Which real degree of freedom of a complex pair: the coefficient of the
/// normalized cosine wave or of the normalized sine wave.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofPhase {
    Cos,
    Sin,
}

/// One retained complex amplitude with its operator data.
#[derive(Clone, Debug)]
pub struct PairInfo {
    pub id: PairId,
    /// Eigenvalue of `A` on this mode.
    pub lambda: f64,
    /// Linearized drift rate `mu` (strictly positive by construction).
    pub mu: f64,
    /// Noise amplitude `sigma = lambda^gamma`.
    pub sigma: f64,
    /// Unit tangent direction of the velocity amplitude (Navier-Stokes
    /// only; zero for KS).  Orthogonal to `k`, which enforces
    /// incompressibility structurally.
    pub tangent: [f64; 3],
}

impl PairInfo {
    /// Variance of each real degree of freedom under the invariant measure
    /// of the linearized dynamics: `sigma^2 / (2 mu)`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.mu)
    }

    pub fn label(&self) -> String {
        match self.id {
            PairId::KsMode { j } => format!("j={j}"),
            PairId::NsMode { k, tangent } => {
                format!("k=({},{},{}),t={tangent}", k[0], k[1], k[2])
            }
        }
    }
}

/// The complete mode table of a truncated model: every retained complex
/// amplitude together with its eigenvalue, drift rate and noise amplitude.
///
/// Real degrees of freedom are numbered `0..num_dofs()` in a fixed order:
/// pairs in enumeration order, and within each pair the cosine coefficient
/// before the sine coefficient.  Every simulator, ledger and CSV column in
/// the crate uses this single numbering, so outputs are comparable across
/// runs and versions.
#[derive(Debug)]
pub struct OperatorSpectrum {
    spec: ModelSpec,
    pairs: Vec<PairInfo>,
    warnings: Vec<String>,
}

/// Builds the mode table for a validated spec.
///
/// Enumeration order is deterministic:
/// * KS: wavenumbers `j = 1..=cutoff` ascending;
/// * Navier-Stokes: half-lattice vectors (first nonzero component positive)
///   with `max_i |k_i| <= cutoff`, sorted lexicographically, then tangent
///   index.  Tangents are `(-k_2, k_1)/|k|` in dimension two and the
///   normalized pair `k x r`, `k x (k x r)` with `r = e_3` (falling back to
///   `r = e_1` when `k` is parallel to `e_3`) in dimension three.
///
/// Fails if any retained drift rate is non-positive; warns (but proceeds)
/// when the KS damping is at or below `1/(4 nu)`, where the continuum rate
/// `nu x^2 - x + a` dips non-positive between lattice eigenvalues.
pub fn build_spectrum(spec: &ModelSpec) -> Result<Arc<OperatorSpectrum>> {
    spec.validate()?;
    let mut warnings = Vec::new();
    let mut pairs = Vec::new();
    match spec.kind {
        ModelKind::Ks => {
            if spec.damping <= 1.0 / (4.0 * spec.nu) {
                warnings.push(format!(
                    "damping a = {} is at or below 1/(4 nu) = {}; the continuum drift rate \
                     nu x^2 - x + a is non-positive near x = 1/(2 nu), so positivity of the \
                     retained rates depends on where the lattice eigenvalues fall",
                    spec.damping,
                    1.0 / (4.0 * spec.nu)
                ));
            }
            for j in 1..=spec.cutoff {
                let lambda = spec.ks_eigenvalue(j);
                pairs.push(make_pair(spec, PairId::KsMode { j }, lambda, [0.0; 3])?);
            }
        }
        ModelKind::FracNs => {
            for k in half_lattice(spec.dim, spec.cutoff) {
                let lambda = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                for (t, tangent) in tangent_frame(spec.dim, k).into_iter().enumerate() {
                    pairs.push(make_pair(spec, PairId::NsMode { k, tangent: t }, lambda, tangent)?);
                }
            }
        }
    }
    Ok(Arc::new(OperatorSpectrum { spec: spec.clone(), pairs, warnings }))
}

fn make_pair(spec: &ModelSpec, id: PairId, lambda: f64, tangent: [f64; 3]) -> Result<PairInfo> {
    let mu = spec.drift_rate(lambda);
    let pair = PairInfo { id, lambda, mu, sigma: spec.noise_amplitude(lambda), tangent };
    if mu <= 0.0 || !mu.is_finite() {
        return Err(Error::NonPositiveDrift { label: pair.label(), mu });
    }
    Ok(pair)
}

/// Lattice vectors with `0 < max_i |k_i| <= cutoff` whose first nonzero
/// component is positive, in lexicographic order.
fn half_lattice(dim: usize, cutoff: usize) -> Vec<[i64; 3]> {
    let r = cutoff as i64;
    let mut out = Vec::new();
    let third = if dim == 3 { -r..=r } else { 0..=0 };
    for k1 in -r..=r {
        for k2 in -r..=r {
            for k3 in third.clone() {
                let k = [k1, k2, k3];
                let first_nonzero = k.iter().copied().find(|&c| c != 0);
                if first_nonzero.map(|c| c > 0).unwrap_or(false) {
                    out.push(k);
                }
            }
        }
    }
    out.sort();
    out
}

/// Orthonormal basis of the plane orthogonal to `k`.
fn tangent_frame(dim: usize, k: [i64; 3]) -> Vec<[f64; 3]> {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    if dim == 2 {
        let norm = (kf[0] * kf[0] + kf[1] * kf[1]).sqrt();
        return vec![[-kf[1] / norm, kf[0] / norm, 0.0]];
    }
    let r = if k[0] == 0 && k[1] == 0 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
    let t1 = normalize(cross(kf, r));
    let t2 = normalize(cross(kf, cross(kf, r)));
    vec![t1, t2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

impl OperatorSpectrum {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Number of real degrees of freedom (two per complex pair).
    pub fn num_dofs(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn pair(&self, index: usize) -> &PairInfo {
        &self.pairs[index]
    }

    pub fn pairs(&self) -> &[PairInfo] {
        &self.pairs
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn volume(&self) -> f64 {
        self.spec.volume()
    }

    pub fn dof_pair(&self, dof: usize) -> &PairInfo {
        &self.pairs[dof / 2]
    }

    pub fn dof_phase(&self, dof: usize) -> DofPhase {
        if dof % 2 == 0 {
            DofPhase::Cos
        } else {
            DofPhase::Sin
        }
    }

    /// Label of one complex pair, with dimension-aware wavevector printing.
    pub fn pair_label(&self, pair: usize) -> String {
        match self.pairs[pair].id {
            PairId::KsMode { j } => format!("j={j}"),
            PairId::NsMode { k, tangent } => {
                if self.spec.dim == 2 {
                    format!("k=({},{}),t={tangent}", k[0], k[1])
                } else {
                    format!("k=({},{},{}),t={tangent}", k[0], k[1], k[2])
                }
            }
        }
    }

    pub fn dof_label(&self, dof: usize) -> String {
        let phase = match self.dof_phase(dof) {
            DofPhase::Cos => "cos",
            DofPhase::Sin => "sin",
        };
        format!("{},{phase}", self.pair_label(dof / 2))
    }

    /// Smallest retained drift rate; `1 / min_drift_rate()` is the slowest
    /// relaxation time and sets mixing horizons.
    pub fn min_drift_rate(&self) -> f64 {
        self.pairs.iter().map(|p| p.mu).fold(f64::INFINITY, f64::min)
    }

    /// Writes the diagnostic mode table: one row per real degree of freedom,
    /// columns `mode_label,lambda,mu,sigma,stationary_variance`, values with
    /// 17 significant digits.  Labels contain commas and are quoted.
    pub fn write_modes_csv<W: IoWrite>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mode_label,lambda,mu,sigma,stationary_variance")?;
        for dof in 0..self.num_dofs() {
            let p = self.dof_pair(dof);
            writeln!(
                w,
                "{},{},{},{},{}",
                csv_field(&self.dof_label(dof)),
                g17(p.lambda),
                g17(p.mu),
                g17(p.sigma),
                g17(p.stationary_variance())
            )?;
        }
        Ok(())
    }
}
