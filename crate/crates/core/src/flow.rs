//! Nonlinear spatial operators of the flow.
//!
//! Sign convention: `kappa = u_xx / (1 + u_x^2)^{3/2}` (the negative of the
//! geometric curvature of the graph), so the flow reads
//! `u_t = ((1 + u_x^2)^{-1/2} (f(-kappa))_x)_x`. With `v = u_x` this becomes
//! `v_t = -v_xxxx + (alpha v_xx + F)_xx` where
//! `alpha = 1 - (1 + v^2)^{-2} f'(-kappa)` and `F = 3 v v_x^2 (1 + v^2)^{-3} f'(-kappa)`.

use serde::{Deserialize, Serialize};

use crate::calculus::{default_scheme, derivative_stack, Scheme};
use crate::error::{Error, Result};
use crate::grid::{sup_norm, Field};
use crate::model::CurvatureModel;
use crate::spectral::Spectral;

/// Default smallness threshold for `max(sup|v|, sup|v_x|)`.
pub const DEFAULT_EPS0: f64 = 0.1;
/// Default threshold for `sup|alpha|`.
pub const DEFAULT_DELTA0: f64 = 0.1;

#[inline]
pub fn curvature_at(q: f64, r: f64) -> f64 {
    r / (1.0 + q * q).powf(1.5)
}

#[inline]
pub fn alpha_at(q: f64, r: f64, model: &CurvatureModel) -> f64 {
    let w = 1.0 + q * q;
    1.0 - model.fp(-curvature_at(q, r)) / (w * w)
}

#[inline]
pub fn f_pert_at(q: f64, r: f64, model: &CurvatureModel) -> f64 {
    3.0 * q * r * r / (1.0 + q * q).powi(3) * model.fp(-curvature_at(q, r))
}

/// `A(q, r) = (1 + q^2)^{-2} f'(-r / (1 + q^2)^{3/2})`.
pub fn coeff_a(q: f64, r: f64, model: &CurvatureModel) -> f64 {
    let w = 1.0 + q * q;
    model.fp(-curvature_at(q, r)) / (w * w)
}

/// Lower-order part of the expanded operator, `u_t = -A u_xxxx + B`.
pub fn coeff_b(q: f64, r: f64, s: f64, model: &CurvatureModel) -> f64 {
    let w = 1.0 + q * q;
    let arg = -curvature_at(q, r);
    let first = (10.0 * q * r * s + 3.0 * r.powi(3)) / w.powi(3) - 18.0 * q * q * r.powi(3) / w.powi(4);
    let dk = s / w.powf(1.5) - 3.0 * q * r * r / w.powf(2.5);
    first * model.fp(arg) + dk * dk / w.sqrt() * model.fpp(arg)
}

fn guard(kappa: &[f64], model: &CurvatureModel, time: f64) -> Result<()> {
    if let Some(limit) = model.kappa_limit() {
        let k = sup_norm(kappa);
        if k > limit {
            return Err(Error::BlowUp {
                time,
                reason: format!("|kappa| = {k:.3e} exceeds {limit} under the {} model", model.name()),
            });
        }
    }
    Ok(())
}

fn pointwise(
    v: &Field,
    v_x: &Field,
    model: &CurvatureModel,
    label: &str,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Field> {
    v.ensure_compatible(v_x)?;
    let kappa: Vec<f64> = v.values().iter().zip(v_x.values()).map(|(&q, &r)| curvature_at(q, r)).collect();
    guard(&kappa, model, v.time())?;
    let values = v.values().iter().zip(v_x.values()).map(|(&q, &r)| f(q, r)).collect();
    v.with_values(values, label)
}

/// `v_x / (1 + v^2)^{3/2}`.
pub fn curvature(v: &Field, v_x: &Field) -> Result<Field> {
    v.ensure_compatible(v_x)?;
    let values = v.values().iter().zip(v_x.values()).map(|(&q, &r)| curvature_at(q, r)).collect();
    v.with_values(values, "kappa")
}

pub fn alpha(v: &Field, v_x: &Field, model: &CurvatureModel) -> Result<Field> {
    pointwise(v, v_x, model, "alpha", |q, r| alpha_at(q, r, model))
}

pub fn f_pert(v: &Field, v_x: &Field, model: &CurvatureModel) -> Result<Field> {
    pointwise(v, v_x, model, "F", |q, r| f_pert_at(q, r, model))
}

fn check_finite(values: &[f64], time: f64, what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp {
            time,
            reason: format!("non-finite {what}"),
        })
    }
}

/// Divergence-form right side evaluated from the slope `v = u_x`:
/// `u_t = ((1 + v^2)^{-1/2} (f(-kappa))_x)_x`.
pub fn ut_from_slope(v: &Field, model: &CurvatureModel, scheme: Scheme) -> Result<Field> {
    let grid = *v.grid();
    if scheme == Scheme::Spectral && !grid.is_periodic() {
        return Err(Error::SchemeMismatch {
            scheme: "spectral",
            required: "periodic",
        });
    }
    let stack = derivative_stack(v.values(), &grid, 1, scheme);
    let (q, r) = (&stack[0], &stack[1]);
    let kappa: Vec<f64> = q.iter().zip(r).map(|(&q, &r)| curvature_at(q, r)).collect();
    guard(&kappa, model, v.time())?;
    let g: Vec<f64> = kappa.iter().map(|&k| model.f(-k)).collect();
    let gx = derivative_stack(&g, &grid, 1, scheme).swap_remove(1);
    let h: Vec<f64> = gx.iter().zip(q).map(|(d, q)| d / (1.0 + q * q).sqrt()).collect();
    let out = derivative_stack(&h, &grid, 1, scheme).swap_remove(1);
    check_finite(&out, v.time(), "right-hand side")?;
    v.with_values(out, "u_t")
}

/// Divergence-form right side of the flow for a height profile `u`, using the
/// grid's default scheme.
pub fn rhs_u(u: &Field, model: &CurvatureModel) -> Result<Field> {
    rhs_u_with(u, model, default_scheme(u.grid().kind))
}

pub fn rhs_u_with(u: &Field, model: &CurvatureModel, scheme: Scheme) -> Result<Field> {
    let grid = *u.grid();
    if scheme == Scheme::Spectral && !grid.is_periodic() {
        return Err(Error::SchemeMismatch {
            scheme: "spectral",
            required: "periodic",
        });
    }
    let v = derivative_stack(u.values(), &grid, 1, scheme).swap_remove(1);
    let v = u.with_values(v, "v")?;
    ut_from_slope(&v, model, scheme).map(|f| f.with_label("u_t"))
}

/// Expanded form `-A(u_x, u_xx) u_xxxx + B(u_x, u_xx, u_xxx)`.
pub fn rhs_u_expanded(u: &Field, model: &CurvatureModel) -> Result<Field> {
    rhs_u_expanded_with(u, model, default_scheme(u.grid().kind))
}

pub fn rhs_u_expanded_with(u: &Field, model: &CurvatureModel, scheme: Scheme) -> Result<Field> {
    let grid = *u.grid();
    if scheme == Scheme::Spectral && !grid.is_periodic() {
        return Err(Error::SchemeMismatch {
            scheme: "spectral",
            required: "periodic",
        });
    }
    let d = derivative_stack(u.values(), &grid, 4, scheme);
    let kappa: Vec<f64> = d[1].iter().zip(&d[2]).map(|(&q, &r)| curvature_at(q, r)).collect();
    guard(&kappa, model, u.time())?;
    let out: Vec<f64> = (0..grid.points)
        .map(|j| {
            let (q, r, s, w) = (d[1][j], d[2][j], d[3][j], d[4][j]);
            -coeff_a(q, r, model) * w + coeff_b(q, r, s, model)
        })
        .collect();
    check_finite(&out, u.time(), "right-hand side")?;
    u.with_values(out, "u_t")
}

/// Perturbation pair `(alpha, F)` and `v_xx` of a slope field on a periodic grid.
pub(crate) fn perturbation_spectral(
    sp: &Spectral,
    v: &[f64],
    model: &CurvatureModel,
    time: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut d = sp.derivatives(v, &[1, 2]);
    let vxx = d.pop().expect("two orders");
    let vx = d.pop().expect("two orders");
    let kappa: Vec<f64> = v.iter().zip(&vx).map(|(&q, &r)| curvature_at(q, r)).collect();
    guard(&kappa, model, time)?;
    let a = v.iter().zip(&vx).map(|(&q, &r)| alpha_at(q, r, model)).collect();
    let f = v.iter().zip(&vx).map(|(&q, &r)| f_pert_at(q, r, model)).collect();
    Ok((a, f, vxx))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub sup_v: f64,
    pub sup_vx: f64,
    pub sup_alpha: f64,
    pub eps0: f64,
    pub ok: bool,
}

/// Compare `max(sup|v|, sup|v_x|)` against `eps0`; `sup|alpha|` is recorded
/// for monitoring only.
pub fn check_smallness(v: &Field, v_x: &Field, eps0: f64, model: &CurvatureModel) -> Result<SmallnessReport> {
    v.ensure_same_grid(v_x)?;
    let sup_v = v.sup_norm();
    let sup_vx = v_x.sup_norm();
    let sup_alpha = v
        .values()
        .iter()
        .zip(v_x.values())
        .map(|(&q, &r)| alpha_at(q, r, model).abs())
        .fold(0.0, f64::max);
    Ok(SmallnessReport {
        sup_v,
        sup_vx,
        sup_alpha,
        eps0,
        ok: sup_v.max(sup_vx) < eps0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::differentiate;
    use crate::grid::{build_grid, GridKind};
    use std::f64::consts::PI;

    fn fields(q: f64, r: f64) -> (Field, Field) {
        let g = build_grid(GridKind::Periodic, 1.0, 8).unwrap();
        (
            Field::from_fn(g, 0.0, "v", |_| q).unwrap(),
            Field::from_fn(g, 0.0, "v_x", |_| r).unwrap(),
        )
    }

    #[test]
    fn pointwise_formulas() {
        assert_eq!(curvature_at(0.0, 1.0), 1.0);
        assert!((curvature_at(1.0, 2.0) - 0.5f64.sqrt()).abs() < 1e-15);
        let lin = CurvatureModel::linear();
        let exp = CurvatureModel::exponential();
        assert_eq!(alpha_at(0.0, 0.0, &exp), 0.0);
        assert_eq!(alpha_at(1.0, 0.3, &lin), 0.75);
        assert!((alpha_at(0.0, 0.1, &exp) - 0.095_162_581_964_040_4).abs() < 1e-15);
        assert_eq!(f_pert_at(1.0, 1.0, &lin), 0.375);
        assert_eq!(coeff_a(0.0, 0.0, &exp), 1.0);
        assert_eq!(coeff_b(0.0, 0.0, 0.0, &exp), 0.0);
    }

    #[test]
    fn field_operations_check_grids() {
        let (v, vx) = fields(1.0, 2.0);
        let k = curvature(&v, &vx).unwrap();
        assert!(k.values().iter().all(|x| (x - 0.5f64.sqrt()).abs() < 1e-15));
        let other = Field::zeros(build_grid(GridKind::Periodic, 2.0, 8).unwrap(), 0.0, "w");
        assert!(matches!(curvature(&v, &other), Err(Error::GridMismatch(_))));
        let (z, zx) = fields(0.0, 0.0);
        let exp = CurvatureModel::exponential();
        assert_eq!(alpha(&z, &zx, &exp).unwrap().sup_norm(), 0.0);
        assert_eq!(f_pert(&z, &zx, &exp).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn exponential_overflow_is_blow_up() {
        let (v, vx) = fields(0.0, 60.0);
        assert!(matches!(
            alpha(&v, &vx, &CurvatureModel::exponential()),
            Err(Error::BlowUp { .. })
        ));
        assert!(alpha(&v, &vx, &CurvatureModel::linear()).is_ok());
    }

    #[test]
    fn affine_height_is_stationary() {
        for kind in [GridKind::Periodic, GridKind::Truncated] {
            let g = build_grid(kind, 5.0, 64).unwrap();
            let u = Field::from_fn(g, 0.0, "u", |_| 0.7).unwrap();
            let r = rhs_u(&u, &CurvatureModel::exponential()).unwrap().sup_norm();
            // nested central differences amplify rounding by dx^-3
            assert!(r < 1e-10, "{kind:?} {r}");
        }
        let g = build_grid(GridKind::Truncated, 5.0, 64).unwrap();
        let u = Field::from_fn(g, 0.0, "u", |x| 0.3 * x - 1.0).unwrap();
        assert!(rhs_u(&u, &CurvatureModel::exponential()).unwrap().sup_norm() < 1e-10);
        assert!(rhs_u_expanded(&u, &CurvatureModel::exponential()).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn small_sine_leading_order() {
        let g = build_grid(GridKind::Periodic, PI, 64).unwrap();
        let eps = 1e-3;
        let u = Field::from_fn(g, 0.0, "u", |x| eps * x.sin()).unwrap();
        let lin = CurvatureModel::linear();
        for r in [rhs_u(&u, &lin).unwrap(), rhs_u_expanded(&u, &lin).unwrap()] {
            for (j, x) in g.nodes().into_iter().enumerate() {
                assert!((r.values()[j] + eps * x.sin()).abs() < 10.0 * eps.powi(3));
            }
            assert!(r.mean().abs() < 1e-12 * eps);
        }
    }

    #[test]
    fn divergence_and_expanded_forms_agree_spectrally() {
        let g = build_grid(GridKind::Periodic, PI, 128).unwrap();
        let u = Field::from_fn(g, 0.0, "u", |x| 0.3 * x.sin() + 0.1 * (2.0 * x).cos()).unwrap();
        let exp = CurvatureModel::exponential();
        let a = rhs_u(&u, &exp).unwrap();
        let b = rhs_u_expanded(&u, &exp).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-9);
    }

    #[test]
    fn slope_form_matches_height_form() {
        let g = build_grid(GridKind::Periodic, PI, 64).unwrap();
        let u = Field::from_fn(g, 0.0, "u", |x| 0.2 * x.cos()).unwrap();
        let v = differentiate(&u, 1, Scheme::Spectral).unwrap();
        let exp = CurvatureModel::exponential();
        let a = ut_from_slope(&v, &exp, Scheme::Spectral).unwrap();
        let b = rhs_u(&u, &exp).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn smallness_examples() {
        let exp = CurvatureModel::exponential();
        let (z, zx) = fields(0.0, 0.0);
        let r = check_smallness(&z, &zx, 0.1, &exp).unwrap();
        assert!(r.ok && r.sup_v == 0.0 && r.sup_vx == 0.0 && r.sup_alpha == 0.0);
        let (v, vx) = fields(0.0, 0.2);
        assert!(!check_smallness(&v, &vx, 0.1, &exp).unwrap().ok);
        let (v, vx) = fields(0.05, 0.08);
        assert!(check_smallness(&v, &vx, 0.1, &exp).unwrap().ok);
    }
}
