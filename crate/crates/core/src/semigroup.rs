//! The biharmonic heat kernel and the semigroup `exp(-t d^4/dx^4)`.
//!
//! The similarity profile is
//! `bbar(y) = (1/pi) int_0^inf exp(-xi^4) cos(y xi) dxi`
//! and `b(x, t) = t^{-1/4} bbar(t^{-1/4} x)`. All kernel quantities are
//! evaluated by adaptive Gauss-Kronrod quadrature on the Fourier side,
//! truncated where the Gaussian-like factor drops below `tol / 100`.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::central_derivative;
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, GridKind, GridSpec};
use crate::quadrature::integrate;
use crate::spectral::Spectral;

/// Default absolute tolerance for kernel quadratures.
pub const KERNEL_TOL: f64 = 1e-13;

/// Upper integration limit where `xi^power exp(-xi^4) < tol / 100`.
fn cutoff(tol: f64, power: u32) -> f64 {
    let target = (100.0 / tol).ln();
    let mut xi = target.powf(0.25);
    for _ in 0..4 {
        xi = (target + power as f64 * xi.max(1.0).ln()).powf(0.25);
    }
    xi
}

fn pieces_for(frequency: f64, upper: f64) -> usize {
    ((frequency.abs() * upper / PI).ceil() as usize + 1).min(2000)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("tolerance must be positive, got {tol}")))
    }
}

/// `bbar(y)` to absolute accuracy `tol`.
pub fn kernel_profile(y: f64, tol: f64) -> Result<f64> {
    kernel_profile_derivative(y, 0, tol)
}

/// `d^l bbar / dy^l (y)`, using
/// `(1/pi) int_0^inf xi^l exp(-xi^4) cos(y xi + l pi / 2) dxi`.
pub fn kernel_profile_derivative(y: f64, order: u32, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let upper = cutoff(tol, order);
    let phase = order as f64 * 0.5 * PI;
    let q = integrate(
        |xi| xi.powi(order as i32) * (-xi.powi(4)).exp() * (y * xi + phase).cos(),
        0.0,
        upper,
        0.5 * PI * tol,
        pieces_for(y, upper),
    )?;
    Ok(q.value / PI)
}

/// `b(x, t) = t^{-1/4} bbar(t^{-1/4} x)`.
pub fn kernel(x: f64, t: f64, tol: f64) -> Result<f64> {
    kernel_derivative(x, t, 0, tol)
}

/// `d^l b / dx^l (x, t) = t^{-(l+1)/4} bbar^{(l)}(t^{-1/4} x)`.
pub fn kernel_derivative(x: f64, t: f64, order: u32, tol: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("kernel time must be positive, got {t}")));
    }
    let s = t.powf(0.25);
    let scale = s.powi(order as i32 + 1);
    Ok(kernel_profile_derivative(x / s, order, tol * scale)? / scale)
}

/// Cumulative profile `int_{-inf}^z bbar`, via
/// `1/2 + (1/pi) int_0^inf exp(-xi^4) sin(z xi) / xi dxi`.
pub fn kernel_cdf(z: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let upper = cutoff(tol, 0);
    let q = integrate(
        |xi| (-xi.powi(4)).exp() * sinc(z * xi) * z,
        0.0,
        upper,
        0.5 * PI * tol,
        pieces_for(z, upper),
    )?;
    Ok(0.5 + q.value / PI)
}

/// `[exp(-d^4) |.|](y) = (2/pi) int_0^inf (1 - exp(-xi^4) cos(y xi)) / xi^2 dxi`,
/// the unit-time response to the absolute-value ramp.
pub fn abs_ramp_response(y: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let upper = cutoff(tol, 0).max(4.0);
    let q = integrate(
        |xi| {
            let s = (0.5 * y * xi).sin();
            let c = (y * xi).cos();
            (2.0 * s * s - (-xi.powi(4)).exp_m1() * c) / (xi * xi)
        },
        0.0,
        upper,
        0.25 * PI * tol,
        pieces_for(y, upper),
    )?;
    // beyond `upper` the integrand is 1/xi^2 up to tol-sized terms
    Ok(2.0 / PI * (q.value + 1.0 / upper))
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// A symmetric tabulation of `bbar` on `[-y_max, y_max]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelTable {
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub tolerance: f64,
}

impl KernelTable {
    pub fn tabulate(y_max: f64, step: f64, tol: f64) -> Result<Self> {
        if !(y_max > 0.0 && step > 0.0) {
            return Err(invalid("kernel table needs positive range and step"));
        }
        let half = (y_max / step).round() as i64;
        let ys: Vec<f64> = (-half..=half).map(|i| i as f64 * step).collect();
        let values = ys
            .par_iter()
            .map(|&y| kernel_profile(y, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ys,
            values,
            tolerance: tol,
        })
    }

    /// Composite trapezoid integral over the tabulated range.
    pub fn trapezoid_mass(&self) -> f64 {
        self.ys
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(y, v)| 0.5 * (y[1] - y[0]) * (v[0] + v[1]))
            .sum()
    }

    /// `max |bbar(y) - bbar(-y)|` over the table.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.values.len();
        (0..n / 2)
            .map(|i| (self.values[i] - self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn min(&self) -> (f64, f64) {
        self.ys
            .iter()
            .zip(&self.values)
            .fold((f64::NAN, f64::INFINITY), |acc, (&y, &v)| if v < acc.1 { (y, v) } else { acc })
    }
}

/// Fitted pointwise bound `|d^l bbar(y)| <= C exp(-omega |y|^{4/3})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub order: u32,
    pub c: f64,
    pub omega: f64,
    /// RMS misfit of `ln` peak heights against the fitted envelope.
    pub residual: f64,
    pub peaks: usize,
}

impl KernelBoundReport {
    pub fn envelope(&self, y: f64) -> f64 {
        self.c * (-self.omega * y.abs().powf(4.0 / 3.0)).exp()
    }

    /// Bound on `|d^l b/dx^l (x, t)|` implied by the profile bound.
    pub fn rescaled_bound(&self, x: f64, t: f64) -> f64 {
        self.c * t.powf(-(self.order as f64 + 1.0) / 4.0)
            * (-self.omega * x.abs().powf(4.0 / 3.0) / t.powf(1.0 / 3.0)).exp()
    }
}

/// Residual above which the envelope fit is rejected.
pub const KERNEL_FIT_MAX_RESIDUAL: f64 = 2.0;

/// Fit the envelope of `|d^l bbar|` on `y in [0, 12]`.
pub fn fit_kernel_bound(order: u32) -> Result<KernelBoundReport> {
    if order > 4 {
        return Err(invalid(format!("kernel bound order must be in 0..=4, got {order}")));
    }
    let step = 0.01;
    let n = 1200;
    let ys: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let abs: Vec<f64> = ys
        .par_iter()
        .map(|&y| kernel_profile_derivative(y, order, 1e-14).map(f64::abs))
        .collect::<Result<_>>()?;

    // local maxima of |d^l bbar|, including the origin when it is one
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    if abs[0] > abs[1] {
        peaks.push((ys[0], abs[0]));
    }
    for i in 1..n {
        if abs[i] > abs[i - 1] && abs[i] >= abs[i + 1] && abs[i] > 1e-12 {
            peaks.push((ys[i], abs[i]));
        }
    }
    if peaks.len() < 2 {
        return Err(Error::Insufficient(format!(
            "only {} envelope peaks for order {order}",
            peaks.len()
        )));
    }
    let xs: Vec<f64> = peaks.iter().map(|(y, _)| y.powf(4.0 / 3.0)).collect();
    let ls: Vec<f64> = peaks.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ls);
    let omega = -slope;
    let residual = (xs
        .iter()
        .zip(&ls)
        .map(|(x, l)| (l - (intercept + slope * x)).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    if !(omega > 0.0) || residual > KERNEL_FIT_MAX_RESIDUAL {
        return Err(Error::Insufficient(format!(
            "kernel envelope fit failed for order {order}: omega = {omega}, residual = {residual}"
        )));
    }
    // lift C until the envelope dominates every tabulated value
    let c = ys
        .iter()
        .zip(&abs)
        .map(|(y, v)| v * (omega * y.powf(4.0 / 3.0)).exp())
        .fold(intercept.exp(), f64::max);
    Ok(KernelBoundReport {
        order,
        c,
        omega,
        residual,
        peaks: peaks.len(),
    })
}

pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Convolution weights of `exp(-t d^4)` on a truncated grid.
///
/// Samples are interpolated band-limited (Whittaker-Shannon) and extended
/// by their boundary values, so
/// `w_d = (1/pi) int_0^pi exp(-t (theta/dx)^4) cos(d theta) dtheta`
/// and the far-field tails collapse to closed-form Dirichlet-kernel sums.
/// For a kernel resolved by the grid, `w_d = dx b(d dx, t)`.
#[derive(Clone, Debug)]
pub struct ConvolutionWeights {
    pub t: f64,
    weights: Vec<f64>,
    // tails[k] = sum_{d >= k} w_d for k = 0..=n
    tails: Vec<f64>,
}

impl ConvolutionWeights {
    pub fn new(grid: &GridSpec, t: f64, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        if t < 0.0 {
            return Err(invalid(format!("semigroup time must be nonnegative, got {t}")));
        }
        let n = grid.points;
        let dx = grid.dx();
        if t == 0.0 {
            let mut weights = vec![0.0; n];
            weights[0] = 1.0;
            let mut tails = vec![0.0; n + 1];
            tails[0] = 1.0;
            return Ok(Self { t, weights, tails });
        }
        let upper = (dx * ((100.0 / tol).ln() / t).powf(0.25)).min(PI);
        let damp = move |theta: f64| (-t * (theta / dx).powi(4)).exp();
        let weights = (0..n)
            .into_par_iter()
            .map(|d| {
                let d = d as f64;
                integrate(|th| damp(th) * (d * th).cos(), 0.0, upper, 0.5 * PI * tol, pieces_for(d, upper))
                    .map(|q| q.value / PI)
            })
            .collect::<Result<Vec<_>>>()?;
        let tails = (0..=n)
            .into_par_iter()
            .map(|k| {
                let m = k as f64 - 0.5;
                integrate(
                    |th| damp(th) * dirichlet(m, th),
                    0.0,
                    upper,
                    0.5 * PI * tol,
                    pieces_for(m, upper),
                )
                .map(|q| 0.5 - q.value / PI)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { t, weights, tails })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        let (left, right) = (values[0], values[n - 1]);
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for (j, v) in values.iter().enumerate() {
                    s += self.weights[i.abs_diff(j)] * v;
                }
                s + left * self.tails[i + 1] + right * self.tails[n - i]
            })
            .collect()
    }
}

// sin(m theta) / (2 sin(theta / 2)), continuous at theta = 0
#[inline]
fn dirichlet(m: f64, theta: f64) -> f64 {
    let h = 0.5 * theta;
    if h.abs() < 1e-8 {
        m
    } else {
        (m * theta).sin() / (2.0 * h.sin())
    }
}

/// `exp(-t d^4) field`.
///
/// Periodic grids multiply each resolved mode by `exp(-t k^4)`; truncated
/// grids convolve with the kernel using a constant far-field extension.
pub fn apply_semigroup(field: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return Err(invalid(format!("semigroup time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(field.clone());
    }
    let grid = field.grid();
    let values = match grid.kind {
        GridKind::Periodic => {
            let sp = Spectral::new(grid);
            let mut hat = sp.forward(field.values());
            for (c, k) in hat.iter_mut().zip(sp.wavenumbers()) {
                *c *= (-t * k.powi(4)).exp();
            }
            sp.inverse(hat)
        }
        GridKind::Truncated => ConvolutionWeights::new(grid, t, KERNEL_TOL)?.apply(field.values()),
    };
    field.with_values(values, field.label())
}

// h * phi1(z), h * psi(z) with phi1 = (1 - e^{-z})/z, psi = (1 - e^{-z} - z e^{-z})/z^2
pub(crate) fn product_weights(z: f64) -> (f64, f64) {
    if z < 1e-4 {
        (1.0 - z / 2.0 + z * z / 6.0, 0.5 - z / 3.0 + z * z / 8.0)
    } else {
        let e = (-z).exp();
        let em1 = -(-z).exp_m1();
        (em1 / z, (em1 - z * e) / (z * z))
    }
}

/// Duhamel integral `d^deriv int_0^t exp(-(t-s) d^4) g(s) ds` from samples
/// `(s_j, g(s_j))` spanning `[0, t]`.
///
/// Periodic grids integrate the piecewise-linear interpolant of the forcing
/// exactly mode by mode; truncated grids use the composite trapezoid rule
/// on propagated samples. The spatial derivative is applied to the
/// integrated field.
pub fn duhamel(forcing: &[(f64, Field)], t: f64, deriv: u32) -> Result<Field> {
    if deriv > 2 {
        return Err(invalid(format!("duhamel derivative must be in 0..=2, got {deriv}")));
    }
    let Some((first, first_field)) = forcing.first() else {
        return Err(Error::Insufficient("duhamel needs forcing samples".into()));
    };
    let span_tol = 1e-12 * t.abs().max(1.0);
    if first.abs() > span_tol {
        return Err(invalid(format!("forcing samples must start at 0, got {first}")));
    }
    for w in forcing.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(invalid("forcing samples must be strictly increasing in time"));
        }
        w[0].1.ensure_same_grid(&w[1].1)?;
    }
    let last = forcing.last().expect("non-empty").0;
    if (last - t).abs() > span_tol {
        return Err(Error::Insufficient(format!(
            "forcing samples end at {last}, integral requested to {t}"
        )));
    }
    let grid = *first_field.grid();
    let integrated = if forcing.len() == 1 {
        vec![0.0; grid.points]
    } else {
        match grid.kind {
            GridKind::Periodic => {
                let sp = Spectral::new(&grid);
                let lambda: Vec<f64> = sp.wavenumbers().iter().map(|k| k.powi(4)).collect();
                let mut acc = vec![Complex64::new(0.0, 0.0); grid.points];
                let mut prev = sp.forward(forcing[0].1.values());
                for j in 0..forcing.len() - 1 {
                    let (s0, s1) = (forcing[j].0, forcing[j + 1].0);
                    let next = sp.forward(forcing[j + 1].1.values());
                    let h = s1 - s0;
                    let tau = t - s1;
                    for m in 0..grid.points {
                        let (p1, ps) = product_weights(h * lambda[m]);
                        let decay = (-tau * lambda[m]).exp();
                        acc[m] += decay * h * (next[m] * p1 - (next[m] - prev[m]) * ps);
                    }
                    prev = next;
                }
                // differentiate in Fourier space, skip the central pass below
                sp.apply_derivative(&mut acc, deriv);
                let values = sp.inverse(acc);
                return first_field.with_values(values, format!("duhamel_d{deriv}"))?.with_time(t);
            }
            GridKind::Truncated => {
                let m = forcing.len();
                let mut acc = vec![0.0; grid.points];
                for j in 0..m {
                    let w = match j {
                        0 => 0.5 * (forcing[1].0 - forcing[0].0),
                        _ if j == m - 1 => 0.5 * (forcing[j].0 - forcing[j - 1].0),
                        _ => 0.5 * (forcing[j + 1].0 - forcing[j - 1].0),
                    };
                    let propagated = apply_semigroup(&forcing[j].1, t - forcing[j].0)?;
                    for (a, v) in acc.iter_mut().zip(propagated.values()) {
                        *a += w * v;
                    }
                }
                acc
            }
        }
    };
    let values = match deriv {
        0 => integrated,
        d => central_derivative(&integrated, grid.dx(), d, grid.is_periodic()),
    };
    first_field.with_values(values, format!("duhamel_d{deriv}"))?.with_time(t)
}
