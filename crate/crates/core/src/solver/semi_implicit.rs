use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::calculus::CentralStencil;
use crate::error::{invalid, Error, Result};
use crate::flow::{coeff_a, coeff_b, curvature_at};
use crate::grid::{Field, GridSpec};
use crate::model::CurvatureModel;

/// Far-field slopes imposed at the ends of a truncated grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    /// Slope `b` as `x -> -inf`.
    pub left: f64,
    /// Slope `a` as `x -> +inf`.
    pub right: f64,
}

impl FarField {
    /// Slopes read off the two outermost cells of a height profile.
    pub fn from_height(u: &Field) -> Self {
        let v = u.values();
        let n = v.len();
        let dx = u.grid().dx();
        Self {
            left: (v[2] - v[0]) / (2.0 * dx),
            right: (v[n - 1] - v[n - 3]) / (2.0 * dx),
        }
    }
}

const GHOSTS: usize = 3;

/// Linearly implicit stepper for the height equation `u_t = -A u_xxxx + B`.
///
/// Nodes `0, 1` and `N-2, N-1` are boundary cells slaved to the interior by
/// affine continuation with the far-field slopes, which imposes `v = b`
/// (left), `v = a` (right) and `v_x = 0` at both ends. The remaining
/// `N - 4` nodes are updated from
/// `(I + dt A D4) u^{n+1} = u^n + dt B` with `A`, `B` frozen at `u^n`.
#[derive(Clone, Debug)]
pub struct SemiImplicitStepper {
    dx: f64,
    n: usize,
    model: CurvatureModel,
    far: FarField,
    d1: CentralStencil,
    d2: CentralStencil,
    d3: CentralStencil,
}

impl SemiImplicitStepper {
    pub fn new(grid: &GridSpec, model: CurvatureModel, far: FarField) -> Self {
        let dx = grid.dx();
        Self {
            dx,
            n: grid.points,
            model,
            far,
            d1: CentralStencil::new(1, dx, false),
            d2: CentralStencil::new(2, dx, false),
            d3: CentralStencil::new(3, dx, false),
        }
    }

    /// Interior values extended by affine ghost nodes on both sides.
    fn extended(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let dx = self.dx;
        let (b, a) = (self.far.left, self.far.right);
        let (ul, ur) = (u[2], u[n - 3]);
        let mut ext = Vec::with_capacity(n + 2 * GHOSTS);
        for k in (1..=2 + GHOSTS).rev() {
            ext.push(ul - k as f64 * b * dx);
        }
        ext.extend_from_slice(&u[2..n - 2]);
        for k in 1..=2 + GHOSTS {
            ext.push(ur + k as f64 * a * dx);
        }
        ext
    }

    pub fn step(&self, u: &[f64], dt: f64, time: f64) -> Result<Vec<f64>> {
        if dt == 0.0 {
            return Ok(u.to_vec());
        }
        let n = self.n;
        let dx = self.dx;
        let ext = self.extended(u);
        let q = self.d1.apply(&ext);
        let r = self.d2.apply(&ext);
        let s = self.d3.apply(&ext);
        let m = n - 4;
        // interior node j sits at ext index j + GHOSTS
        let off = GHOSTS;
        let limit = self.model.kappa_limit();
        let mut mat = BandMatrix::zeros(m, 2, 2);
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let e = i + 2 + off;
            let (qi, ri, si) = (q[e], r[e], s[e]);
            if let Some(l) = limit {
                let k = curvature_at(qi, ri).abs();
                if k > l {
                    return Err(Error::BlowUp {
                        time,
                        reason: format!("|kappa| = {k:.3e} exceeds {l} under the {} model", self.model.name()),
                    });
                }
            }
            let c = dt * coeff_a(qi, ri, &self.model) / dx.powi(4);
            let mut row = [c, -4.0 * c, 1.0 + 6.0 * c, -4.0 * c, c];
            let mut shift = 0.0;
            if i == 0 {
                row = [0.0, 0.0, 1.0 + 3.0 * c, -4.0 * c, c];
                shift = 2.0 * self.far.left * dx * c;
            } else if i == 1 {
                row[1] = -3.0 * c;
                row[0] = 0.0;
                shift = -self.far.left * dx * c;
            }
            if i == m - 1 {
                row = [c, -4.0 * c, 1.0 + 3.0 * c, 0.0, 0.0];
                shift = -2.0 * self.far.right * dx * c;
            } else if i == m - 2 {
                row[3] = -3.0 * c;
                row[4] = 0.0;
                shift = self.far.right * dx * c;
            }
            for (k, w) in row.iter().enumerate() {
                let j = i as i64 + k as i64 - 2;
                if j >= 0 && (j as usize) < m && *w != 0.0 {
                    mat.set(i, j as usize, *w);
                }
            }
            rhs[i] = ext[e] + dt * coeff_b(qi, ri, si, &self.model) - shift;
        }
        mat.solve(&mut rhs)?;
        let mut out = vec![0.0; n];
        out[2..n - 2].copy_from_slice(&rhs);
        out[1] = out[2] - self.far.left * dx;
        out[0] = out[2] - 2.0 * self.far.left * dx;
        out[n - 2] = out[n - 3] + self.far.right * dx;
        out[n - 1] = out[n - 3] + 2.0 * self.far.right * dx;
        Ok(out)
    }
}

/// One linearly implicit step of the height equation on a truncated grid,
/// with far-field slopes read from `u` itself.
pub fn step_semi_implicit(u: &Field, dt: f64, model: &CurvatureModel) -> Result<Field> {
    if u.grid().is_periodic() {
        return Err(Error::SchemeMismatch {
            scheme: "semi_implicit_fd",
            required: "truncated",
        });
    }
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be nonnegative, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(u.clone());
    }
    let stepper = SemiImplicitStepper::new(u.grid(), model.clone(), FarField::from_height(u));
    let next = stepper.step(u.values(), dt, u.time())?;
    u.with_values(next, u.label())?.with_time(u.time() + dt)
}
