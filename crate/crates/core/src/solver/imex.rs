use rustfft::num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::flow::perturbation_spectral;
use crate::grid::{Field, GridSpec};
use crate::model::CurvatureModel;
use crate::spectral::Spectral;

/// `(1 - e^{-z}) / z`, accurate near zero.
#[inline]
pub(crate) fn phi1(z: f64) -> f64 {
    if z < 1e-5 {
        1.0 - 0.5 * z + z * z / 6.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// Exponential-integrator stepper for `v_t = -v_xxxx + (alpha v_xx + F)_xx`.
#[derive(Clone, Debug)]
pub struct ImexStepper {
    sp: Spectral,
    lambda: Vec<f64>,
    k2: Vec<f64>,
    model: CurvatureModel,
}

impl ImexStepper {
    pub fn new(grid: &GridSpec, model: CurvatureModel) -> Self {
        let sp = Spectral::new(grid);
        let lambda = sp.wavenumbers().iter().map(|k| k.powi(4)).collect();
        let k2 = sp.wavenumbers().iter().map(|k| k * k).collect();
        Self { sp, lambda, k2, model }
    }

    /// `e^{-dt d^4} v + int_0^dt e^{-(dt-s) d^4} ds (g(v))_xx` with
    /// `g = alpha v_xx + F` frozen at the start of the step.
    pub fn step(&self, v: &[f64], dt: f64, time: f64) -> Result<Vec<f64>> {
        if dt == 0.0 {
            return Ok(v.to_vec());
        }
        let (a, f, vxx) = perturbation_spectral(&self.sp, v, &self.model, time)?;
        let g: Vec<f64> = a.iter().zip(&vxx).zip(&f).map(|((a, w), f)| a * w + f).collect();
        let g_hat = self.sp.forward(&g);
        let mut v_hat = self.sp.forward(v);
        for m in 0..v_hat.len() {
            let z = dt * self.lambda[m];
            let forcing: Complex64 = g_hat[m] * (-self.k2[m] * dt * phi1(z));
            v_hat[m] = v_hat[m] * (-z).exp() + forcing;
        }
        let out = self.sp.inverse(v_hat);
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::BlowUp {
                time: time + dt,
                reason: "non-finite state".into(),
            });
        }
        Ok(out)
    }
}

/// One exponential-integrator step of the slope equation on a periodic grid.
pub fn step_if_imex(v: &Field, dt: f64, model: &CurvatureModel) -> Result<Field> {
    if !v.grid().is_periodic() {
        return Err(Error::SchemeMismatch {
            scheme: "if_imex_spectral",
            required: "periodic",
        });
    }
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be nonnegative, got {dt}")));
    }
    let next = ImexStepper::new(v.grid(), model.clone()).step(v.values(), dt, v.time())?;
    v.with_values(next, v.label())?.with_time(v.time() + dt)
}
