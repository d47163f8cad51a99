use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::spectrum::OperatorSpectrum;

/// A truncated spectral field: one complex amplitude per retained pair.
///
/// Two equivalent views are exposed.  The *complex* view stores, for each
/// pair, the coefficient `c` of the complex exponential `e^{i k.x}` (the
/// conjugate mode carries `conj(c)` implicitly, so the physical field is
/// real by construction).  The *real* view lists degrees of freedom in the
/// spectrum's fixed order; dof `2m` is the coefficient of the normalized
/// cosine wave of pair `m` and dof `2m+1` of the normalized sine wave.  With
/// `V` the domain volume the two are related by
///
/// ```text
/// dof_cos = sqrt(2 V) * Re(c),      dof_sin = -sqrt(2 V) * Im(c),
/// ```
///
/// and the `L^2` norm (plain integral, no volume averaging) satisfies
/// `|u|^2 = sum_m 2 V |c_m|^2 = sum_i dof_i^2`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    spectrum: Arc<OperatorSpectrum>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(spectrum: &Arc<OperatorSpectrum>) -> Self {
        SpectralField {
            spectrum: Arc::clone(spectrum),
            coeffs: vec![Complex64::new(0.0, 0.0); spectrum.num_pairs()],
        }
    }

    pub fn from_pairs(spectrum: &Arc<OperatorSpectrum>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spectrum.num_pairs() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} pair coefficients, got {}",
                spectrum.num_pairs(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { spectrum: Arc::clone(spectrum), coeffs })
    }

    pub fn from_dofs(spectrum: &Arc<OperatorSpectrum>, dofs: &[f64]) -> Result<Self> {
        if dofs.len() != spectrum.num_dofs() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} degrees of freedom, got {}",
                spectrum.num_dofs(),
                dofs.len()
            )));
        }
        let mut field = SpectralField::zero(spectrum);
        field.set_from_dofs(dofs);
        Ok(field)
    }

    pub fn spectrum(&self) -> &Arc<OperatorSpectrum> {
        &self.spectrum
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, pair: usize) -> Complex64 {
        self.coeffs[pair]
    }

    fn dof_scale(&self) -> f64 {
        (2.0 * self.spectrum.volume()).sqrt()
    }

    pub fn dof(&self, dof: usize) -> f64 {
        let c = self.coeffs[dof / 2];
        let s = self.dof_scale();
        if dof % 2 == 0 {
            s * c.re
        } else {
            -s * c.im
        }
    }

    pub fn set_dof(&mut self, dof: usize, value: f64) {
        let s = self.dof_scale();
        let c = &mut self.coeffs[dof / 2];
        if dof % 2 == 0 {
            c.re = value / s;
        } else {
            c.im = -value / s;
        }
    }

    pub fn dofs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.spectrum.num_dofs()];
        self.write_dofs(&mut out);
        out
    }

    pub fn write_dofs(&self, out: &mut [f64]) {
        let s = self.dof_scale();
        for (m, c) in self.coeffs.iter().enumerate() {
            out[2 * m] = s * c.re;
            out[2 * m + 1] = -s * c.im;
        }
    }

    pub fn set_from_dofs(&mut self, dofs: &[f64]) {
        let s = self.dof_scale();
        for (m, c) in self.coeffs.iter_mut().enumerate() {
            *c = Complex64::new(dofs[2 * m] / s, -dofs[2 * m + 1] / s);
        }
    }

    /// Applies the diagonal operator `A^s`: multiplies each pair by
    /// `lambda^s`.  Negative powers are fine because every retained
    /// eigenvalue is strictly positive.
    pub fn apply_power(&self, s: f64) -> Self {
        let mut out = self.clone();
        for (m, c) in out.coeffs.iter_mut().enumerate() {
            *c *= self.spectrum.pair(m).lambda.powf(s);
        }
        out
    }

    /// `|A^theta u|` in the plain-integral `L^2` normalization.
    pub fn sobolev_norm(&self, theta: f64) -> f64 {
        let two_v = 2.0 * self.spectrum.volume();
        let mut sum = 0.0;
        for (m, c) in self.coeffs.iter().enumerate() {
            sum += self.spectrum.pair(m).lambda.powf(2.0 * theta) * c.norm_sqr();
        }
        (two_v * sum).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// `L^2` inner product; equals the Euclidean dot product of the dof
    /// vectors.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let two_v = 2.0 * self.spectrum.volume();
        let mut sum = 0.0;
        for (c, d) in self.coeffs.iter().zip(&other.coeffs) {
            sum += c.re * d.re + c.im * d.im;
        }
        Ok(two_v * sum)
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (c, d) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * d;
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.spectrum, &other.spectrum)
            || self.spectrum.spec() == other.spectrum.spec()
        {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spec::ModelSpec;
    use crate::spectral::spectrum::{build_spectrum, PairId};
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    /// Direct physical-space evaluation of a KS field at `xi` by naive
    /// summation over pairs -- deliberately independent of any FFT code.
    fn eval_ks(field: &SpectralField, xi: f64) -> f64 {
        let spec = field.spectrum().spec();
        let mut u = 0.0;
        for (m, pair) in field.spectrum().pairs().iter().enumerate() {
            let PairId::KsMode { j } = pair.id else { unreachable!() };
            let k = TAU * j as f64 / spec.domain_length;
            let c = field.coeff(m);
            u += 2.0 * (c * Complex64::new(0.0, k * xi).exp()).re;
        }
        u
    }

    /// Direct physical-space velocity of an NS field at `x`.
    fn eval_ns(field: &SpectralField, x: [f64; 3]) -> [f64; 3] {
        let mut u = [0.0; 3];
        for (m, pair) in field.spectrum().pairs().iter().enumerate() {
            let PairId::NsMode { k, .. } = pair.id else { unreachable!() };
            let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
            let wave = field.coeff(m) * Complex64::new(0.0, phase).exp();
            for comp in 0..3 {
                u[comp] += 2.0 * (wave * pair.tangent[comp]).re;
            }
        }
        u
    }

    #[test]
    fn sine_wave_norm_is_sqrt_pi() {
        // u = sin(xi) on the 2 pi interval: |u|^2 = int sin^2 = pi.
        let spectrum = build_spectrum(&ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 4)).unwrap();
        let mut u = SpectralField::zero(&spectrum);
        u.set_dof(1, PI.sqrt());
        assert_relative_eq!(u.l2_norm(), PI.sqrt(), epsilon = 1e-14);
        // The complex amplitude of e^{i xi} in sin(xi) is -i/2.
        assert_relative_eq!(u.coeff(0).re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(u.coeff(0).im, -0.5, epsilon = 1e-14);
        // And the field really is sin(xi).
        for xi in [0.0, 0.3, 1.7, 4.0] {
            assert_relative_eq!(eval_ks(&u, xi), xi.sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn dof_round_trip_is_exact() {
        let spectrum = build_spectrum(&ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 6)).unwrap();
        let dofs: Vec<f64> = (0..spectrum.num_dofs()).map(|i| (i as f64 * 0.37).sin()).collect();
        let field = SpectralField::from_dofs(&spectrum, &dofs).unwrap();
        let back = field.dofs();
        for (a, b) in dofs.iter().zip(&back) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        // Norm identity: |u|^2 = sum of squared dofs.
        let sum_sq: f64 = dofs.iter().map(|d| d * d).sum();
        assert_relative_eq!(field.l2_norm(), sum_sq.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn ks_norm_matches_trapezoid_quadrature() {
        // Periodic trapezoid quadrature is exact for trig polynomials once
        // the grid resolves twice the top frequency.
        let spec = ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 5).with_domain_length(3.0);
        let spectrum = build_spectrum(&spec).unwrap();
        let dofs: Vec<f64> = (0..spectrum.num_dofs()).map(|i| ((i + 1) as f64).cos()).collect();
        let u = SpectralField::from_dofs(&spectrum, &dofs).unwrap();
        let n = 64;
        let h = spec.domain_length / n as f64;
        let quad: f64 = (0..n).map(|i| eval_ks(&u, i as f64 * h).powi(2) * h).sum();
        assert_relative_eq!(u.l2_norm(), quad.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn ns_norm_matches_grid_quadrature() {
        let spectrum = build_spectrum(&ModelSpec::frac_ns(2, 1.0, 3.0, 0.0, 1.0, 2)).unwrap();
        let dofs: Vec<f64> = (0..spectrum.num_dofs()).map(|i| (0.1 + i as f64 * 0.21).sin()).collect();
        let u = SpectralField::from_dofs(&spectrum, &dofs).unwrap();
        let n = 8;
        let h = TAU / n as f64;
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = eval_ns(&u, [i as f64 * h, j as f64 * h, 0.0]);
                quad += (v[0] * v[0] + v[1] * v[1]) * h * h;
            }
        }
        assert_relative_eq!(u.l2_norm(), quad.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn ns_field_is_divergence_free_pointwise() {
        let spectrum = build_spectrum(&ModelSpec::frac_ns(2, 1.0, 3.0, 0.0, 1.0, 3)).unwrap();
        let dofs: Vec<f64> = (0..spectrum.num_dofs()).map(|i| (i as f64 * 0.13).cos()).collect();
        let u = SpectralField::from_dofs(&spectrum, &dofs).unwrap();
        // Central-difference divergence at scattered points.
        let h = 1e-5;
        for &(x, y) in &[(0.4, 1.1), (2.0, 5.5), (3.3, 0.2)] {
            let dux = (eval_ns(&u, [x + h, y, 0.0])[0] - eval_ns(&u, [x - h, y, 0.0])[0]) / (2.0 * h);
            let dvy = (eval_ns(&u, [x, y + h, 0.0])[1] - eval_ns(&u, [x, y - h, 0.0])[1]) / (2.0 * h);
            assert!((dux + dvy).abs() < 1e-6, "divergence {} at ({x},{y})", dux + dvy);
        }
    }

    #[test]
    fn apply_power_and_sobolev_norm_agree() {
        let spectrum = build_spectrum(&ModelSpec::ks(1.0, 2.0, 0.5, 0.7, 8)).unwrap();
        let dofs: Vec<f64> = (0..spectrum.num_dofs()).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let u = SpectralField::from_dofs(&spectrum, &dofs).unwrap();
        for theta in [-0.5, 0.0, 0.7, 1.0] {
            assert_relative_eq!(
                u.sobolev_norm(theta),
                u.apply_power(theta).l2_norm(),
                epsilon = 1e-12
            );
        }
        // A^s A^{-s} = identity.
        let round = u.apply_power(0.8).apply_power(-0.8);
        for (a, b) in round.coeffs().iter().zip(u.coeffs()) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-13);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-13);
        }
    }

    #[test]
    fn inner_product_matches_dof_dot() {
        let spectrum = build_spectrum(&ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 5)).unwrap();
        let a: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5).cos()).collect();
        let ua = SpectralField::from_dofs(&spectrum, &a).unwrap();
        let ub = SpectralField::from_dofs(&spectrum, &b).unwrap();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_relative_eq!(ua.inner(&ub).unwrap(), dot, epsilon = 1e-13);
    }

    #[test]
    fn mismatched_spectra_are_rejected() {
        let s1 = build_spectrum(&ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 4)).unwrap();
        let s2 = build_spectrum(&ModelSpec::ks(1.0, 2.0, 0.0, 0.7, 5)).unwrap();
        let u = SpectralField::zero(&s1);
        let v = SpectralField::zero(&s2);
        assert!(matches!(u.inner(&v), Err(Error::SpecMismatch)));
    }
}
