//! FFT plumbing for periodic grids.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward/inverse transforms and wavenumbers for one periodic grid.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.points;
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        });
        let base = std::f64::consts::PI / grid.half_length;
        let wavenumbers = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                m * base
            })
            .collect();
        Self {
            n,
            forward,
            inverse,
            wavenumbers,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Signed wavenumbers in FFT order; the Nyquist entry is stored positive.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the Nyquist mode when `N` is even.
    pub fn nyquist(&self) -> Option<usize> {
        (self.n % 2 == 0).then_some(self.n / 2)
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform, normalised, keeping the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut spectrum);
        let scale = 1.0 / self.n as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Multiplier of `d^order/dx^order` for mode `j`.
    pub fn derivative_multiplier(&self, j: usize, order: u32) -> Complex64 {
        if order == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if order % 2 == 1 && Some(j) == self.nyquist() {
            return Complex64::new(0.0, 0.0);
        }
        let k = self.wavenumbers[j];
        Complex64::new(0.0, k).powu(order)
    }

    pub fn apply_derivative(&self, spectrum: &mut [Complex64], order: u32) {
        if order == 0 {
            return;
        }
        for (j, c) in spectrum.iter_mut().enumerate() {
            *c *= self.derivative_multiplier(j, order);
        }
    }

    pub fn derivative(&self, values: &[f64], order: u32) -> Vec<f64> {
        if order == 0 {
            return values.to_vec();
        }
        let mut hat = self.forward(values);
        self.apply_derivative(&mut hat, order);
        self.inverse(hat)
    }

    /// Several derivatives of the same data from one forward transform.
    pub fn derivatives(&self, values: &[f64], orders: &[u32]) -> Vec<Vec<f64>> {
        let hat = self.forward(values);
        orders
            .iter()
            .map(|&order| {
                if order == 0 {
                    return values.to_vec();
                }
                let mut h = hat.clone();
                self.apply_derivative(&mut h, order);
                self.inverse(h)
            })
            .collect()
    }

    /// Zero-mean antiderivative (the mean of `values` is discarded).
    pub fn antiderivative(&self, values: &[f64]) -> Vec<f64> {
        let mut hat = self.forward(values);
        for (j, c) in hat.iter_mut().enumerate() {
            let k = self.wavenumbers[j];
            if j == 0 || Some(j) == self.nyquist() {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, k);
            }
        }
        self.inverse(hat)
    }
}
