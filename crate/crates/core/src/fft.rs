//! Thin wrapper over `rustfft` with cached plans and unitary scaling helpers.
//!
//! Convention: forward transform `X[k] = Σ x[n]·exp(-2πikn/N)`, so a field
//! `x(t) = Σ X(ω)·exp(+jωt)` and `∂²/∂t²` maps to `-ω²`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    len: usize,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        FftPair {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse transform including the 1/N factor.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let k = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= k;
        }
    }

    /// `x ← IFFT(FFT(x) · h)`.
    pub fn filter(&mut self, buf: &mut [Complex64], response: &[Complex64]) {
        self.forward(buf);
        for (v, h) in buf.iter_mut().zip(response) {
            *v *= h;
        }
        self.inverse(buf);
    }
}

/// Angular frequency of each FFT bin, rad/s, in natural FFT order.
pub fn angular_frequencies(len: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / len as f64;
    (0..len)
        .map(|k| {
            let k = if k <= (len - 1) / 2 { k as f64 } else { k as f64 - len as f64 };
            2.0 * PI * k * df
        })
        .collect()
}
