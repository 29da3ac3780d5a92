//! Thin 2-D FFT layer over `rustfft` with cached plans.
//!
//! Transforms are circular by construction; the scattering module relies on
//! that for exact shift covariance. Forward is unnormalized, inverse divides
//! by `width * height`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// FFT plans for one image size, shareable across threads.
pub struct Fft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

/// Reusable scratch buffers for one caller; not thread-shareable.
pub struct FftScratch {
    column: Vec<Complex64>,
    inner: Vec<Complex64>,
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft(width, FftDirection::Forward),
            row_inv: planner.plan_fft(width, FftDirection::Inverse),
            col_fwd: planner.plan_fft(height, FftDirection::Forward),
            col_inv: planner.plan_fft(height, FftDirection::Inverse),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn make_scratch(&self) -> FftScratch {
        let inner_len = [&self.row_fwd, &self.row_inv, &self.col_fwd, &self.col_inv]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        FftScratch {
            column: vec![Complex64::default(); self.height],
            inner: vec![Complex64::default(); inner_len],
        }
    }

    /// In-place forward 2-D FFT of a row-major `width x height` buffer.
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut FftScratch) {
        self.transform(data, scratch, true);
    }

    /// In-place inverse 2-D FFT, normalized by `1 / (width * height)`.
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut FftScratch) {
        self.transform(data, scratch, false);
        let norm = 1.0 / (self.width * self.height) as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }

    fn transform(&self, data: &mut [Complex64], scratch: &mut FftScratch, forward: bool) {
        assert_eq!(data.len(), self.width * self.height, "buffer size mismatch");
        let (row, col) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        for r in data.chunks_exact_mut(self.width) {
            row.process_with_scratch(r, &mut scratch.inner);
        }
        for x in 0..self.width {
            for y in 0..self.height {
                scratch.column[y] = data[y * self.width + x];
            }
            col.process_with_scratch(&mut scratch.column, &mut scratch.inner);
            for y in 0..self.height {
                data[y * self.width + x] = scratch.column[y];
            }
        }
    }
}

/// Lifts real samples into a complex buffer.
pub fn to_complex(data: &[f64]) -> Vec<Complex64> {
    data.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
