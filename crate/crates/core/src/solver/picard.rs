use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::perturbation_spectral;
use crate::grid::{sup_norm, Field};
use crate::model::CurvatureModel;
use crate::semigroup::product_weights;
use crate::spectral::Spectral;

/// Outcome of the fixed-point iteration for the mild slope equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub horizon: f64,
    /// `sup_{s, x} |v^{n+1} - v^n|` for `n = 0, 1, ...`.
    pub distances: Vec<f64>,
    /// `distances[n] / distances[n-1]`, only where the denominator exceeds
    /// ten machine epsilons.
    pub factors: Vec<f64>,
    pub converged: bool,
    /// Three consecutive factors at or above one.
    pub diverged: bool,
}

impl PicardReport {
    pub fn max_factor(&self) -> f64 {
        self.factors.iter().copied().fold(0.0, f64::max)
    }
}

/// Time samples used on `[0, T]` by [`picard_local`].
pub const PICARD_TIME_STEPS: usize = 64;

/// Iterate `v^{n+1}(t) = e^{-t d^4} v0 + int_0^t e^{-(t-s) d^4} (alpha v_xx + F)[v^n](s)_xx ds`
/// on a periodic grid, starting from `v^0(t) = e^{-t d^4} v0`.
pub fn picard_local(v0: &Field, horizon: f64, max_iters: usize, model: &CurvatureModel) -> Result<PicardReport> {
    picard_local_with(v0, horizon, max_iters, model, PICARD_TIME_STEPS)
}

pub fn picard_local_with(
    v0: &Field,
    horizon: f64,
    max_iters: usize,
    model: &CurvatureModel,
    time_steps: usize,
) -> Result<PicardReport> {
    let grid = *v0.grid();
    if !grid.is_periodic() {
        return Err(Error::SchemeMismatch {
            scheme: "picard",
            required: "periodic",
        });
    }
    if !(horizon > 0.0 && horizon.is_finite()) || time_steps == 0 {
        return Err(invalid("picard needs a positive horizon and at least one time step"));
    }
    let sp = Spectral::new(&grid);
    let n = grid.points;
    let h = horizon / time_steps as f64;
    let lambda: Vec<f64> = sp.wavenumbers().iter().map(|k| k.powi(4)).collect();
    let k2: Vec<f64> = sp.wavenumbers().iter().map(|k| k * k).collect();
    let decay: Vec<f64> = lambda.iter().map(|l| (-h * l).exp()).collect();
    let weights: Vec<(f64, f64)> = lambda.iter().map(|l| product_weights(h * l)).collect();

    let v0_hat = sp.forward(v0.values());
    let linear: Vec<Vec<f64>> = (0..=time_steps)
        .map(|i| {
            let s = i as f64 * h;
            let hat = v0_hat
                .iter()
                .zip(&lambda)
                .map(|(c, l)| c * (-s * l).exp())
                .collect();
            sp.inverse(hat)
        })
        .collect();

    let scale = v0.sup_norm().max(1.0);
    let mut current = linear.clone();
    let mut distances = Vec::new();
    let mut factors = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut streak = 0;
    for _ in 0..max_iters {
        let forcing: Vec<Vec<Complex64>> = current
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let (a, f, vxx) = perturbation_spectral(&sp, v, model, i as f64 * h)?;
                let g: Vec<f64> = a.iter().zip(&vxx).zip(&f).map(|((a, w), f)| a * w + f).collect();
                Ok(sp.forward(&g))
            })
            .collect::<Result<_>>()?;
        let mut next = Vec::with_capacity(time_steps + 1);
        next.push(linear[0].clone());
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..time_steps {
            let (g0, g1) = (&forcing[i], &forcing[i + 1]);
            for m in 0..n {
                let (p1, ps) = weights[m];
                acc[m] = acc[m] * decay[m] + h * (g1[m] * p1 - (g1[m] - g0[m]) * ps);
            }
            let hat: Vec<Complex64> = acc.iter().zip(&k2).map(|(c, k)| c * -k).collect();
            let duh = sp.inverse(hat);
            next.push(linear[i + 1].iter().zip(duh).map(|(l, d)| l + d).collect());
        }
        let d = current
            .iter()
            .zip(&next)
            .map(|(a, b)| sup_norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        if !d.is_finite() {
            diverged = true;
            distances.push(d);
            break;
        }
        if let Some(&prev) = distances.last() {
            if prev > 10.0 * f64::EPSILON {
                let f: f64 = d / prev;
                factors.push(f);
                streak = if f >= 1.0 { streak + 1 } else { 0 };
            }
        }
        distances.push(d);
        current = next;
        if d <= 10.0 * f64::EPSILON * scale {
            converged = true;
            break;
        }
        if streak >= 3 {
            diverged = true;
            break;
        }
    }
    Ok(PicardReport {
        horizon,
        distances,
        factors,
        converged,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};
    use std::f64::consts::PI;

    #[test]
    fn zero_data_converges_immediately() {
        let g = build_grid(GridKind::Periodic, PI, 32).unwrap();
        let r = picard_local(&Field::zeros(g, 0.0, "v"), 0.1, 10, &CurvatureModel::exponential()).unwrap();
        assert!(r.converged);
        assert_eq!(r.distances, vec![0.0]);
        assert!(r.factors.is_empty());
    }

    #[test]
    fn small_data_contracts() {
        let g = build_grid(GridKind::Periodic, PI, 64).unwrap();
        let v0 = Field::from_fn(g, 0.0, "v", |x| 0.025 * x.sin()).unwrap();
        let r = picard_local(&v0, 0.1, 30, &CurvatureModel::exponential()).unwrap();
        assert!(r.converged && !r.diverged);
        assert!(r.max_factor() <= 0.5, "{:?}", r.factors);
    }
}
