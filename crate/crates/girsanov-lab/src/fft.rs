//! Thin multi-dimensional wrapper over `rustfft`.
//!
//! The pseudospectral kernels need unnormalized forward/inverse complex
//! transforms on small power-of-two grids in one to three dimensions.
//! `rustfft` provides fast one-dimensional plans; this module applies them
//! axis by axis with a gather/scatter for the strided axes.  Conventions:
//!
//! * `inverse` synthesizes physical samples from wave amplitudes,
//!   `f(x_m) = sum_k c_k e^{+i k x_m}`, with no scale factor;
//! * `forward` analyzes, and carries the usual `1/n` per axis *left to the
//!   caller* (the kernels fold it into their gather step).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct FftGrid {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Line buffer for strided axes, sized to the largest dimension.
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl FftGrid {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse: Vec<_> = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let max_dim = dims.iter().copied().max().unwrap_or(0);
        let max_scratch = forward
            .iter()
            .chain(&inverse)
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        FftGrid {
            dims: dims.to_vec(),
            forward,
            inverse,
            line: vec![Complex64::new(0.0, 0.0); max_dim],
            scratch: vec![Complex64::new(0.0, 0.0); max_scratch],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, false)
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, true)
    }

    fn transform(&mut self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.len(), "grid buffer has wrong length");
        let ndim = self.dims.len();
        for axis in 0..ndim {
            let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
            let n = self.dims[axis];
            // Row-major layout: stride of `axis` is the product of the
            // dimensions after it.
            let stride: usize = self.dims[axis + 1..].iter().product();
            if stride == 1 {
                // Contiguous lines: transform in place, chunk by chunk.
                for chunk in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(chunk, &mut self.scratch);
                }
            } else {
                let block = n * stride;
                for base in (0..data.len()).step_by(block) {
                    for offset in 0..stride {
                        for i in 0..n {
                            self.line[i] = data[base + offset + i * stride];
                        }
                        plan.process_with_scratch(&mut self.line[..n], &mut self.scratch);
                        for i in 0..n {
                            data[base + offset + i * stride] = self.line[i];
                        }
                    }
                }
            }
        }
    }
}

/// Smallest power of two not below `n`.
pub fn next_power_of_two(n: usize) -> usize {
    n.next_power_of_two()
}
