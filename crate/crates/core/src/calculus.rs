//! Discrete spatial derivatives.
//!
//! Central differences use 5-point stencils for orders 1-2 and 7-point
//! stencils for orders 3-4, all fourth-order accurate in the interior. On
//! truncated grids the stencil slides inwards near the ends so that it never
//! leaves the grid (one-sided closures of the same width). Stencil weights
//! come from Fornberg's recursion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridKind};
use crate::spectral::Spectral;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Spectral,
    Central,
}

/// Finite-difference weights for the `order`-th derivative at `x0` on the
/// nodes `xs` (Fornberg 1988).
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Stencil half-width used by the central scheme for a derivative order.
pub fn stencil_half_width(order: u32) -> usize {
    if order <= 2 {
        2
    } else {
        3
    }
}

/// Precomputed central stencils for one grid size, spacing and order.
#[derive(Clone, Debug)]
pub struct CentralStencil {
    order: u32,
    half: usize,
    periodic: bool,
    interior: Vec<f64>,
    // closures[i] is the stencil for node i (left) or n-1-i (right, mirrored)
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl CentralStencil {
    pub fn new(order: u32, dx: f64, periodic: bool) -> Self {
        let half = stencil_half_width(order);
        let width = 2 * half + 1;
        let scale = dx.powi(order as i32);
        let offsets: Vec<f64> = (0..width).map(|k| k as f64 - half as f64).collect();
        let interior = fornberg_weights(0.0, &offsets, order as usize)
            .into_iter()
            .map(|w| w / scale)
            .collect();
        let mut left = Vec::new();
        let mut right = Vec::new();
        if !periodic {
            let nodes: Vec<f64> = (0..width).map(|k| k as f64).collect();
            for i in 0..half {
                left.push(
                    fornberg_weights(i as f64, &nodes, order as usize)
                        .into_iter()
                        .map(|w| w / scale)
                        .collect(),
                );
                // node at distance i from the right end, stencil on the last `width` nodes
                let x0 = (width - 1 - i) as f64;
                right.push(
                    fornberg_weights(x0, &nodes, order as usize)
                        .into_iter()
                        .map(|w| w / scale)
                        .collect(),
                );
            }
        }
        Self {
            order,
            half,
            periodic,
            interior,
            left,
            right,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h = self.half;
        let mut out = vec![0.0; n];
        if self.periodic {
            for (i, o) in out.iter_mut().enumerate() {
                let mut s = 0.0;
                for (k, w) in self.interior.iter().enumerate() {
                    let idx = (i + n + k - h) % n;
                    s += w * f[idx];
                }
                *o = s;
            }
            return out;
        }
        let width = 2 * h + 1;
        for i in 0..n {
            let s = if i < h {
                self.left[i].iter().zip(&f[..width]).map(|(w, v)| w * v).sum()
            } else if i + h >= n {
                let d = n - 1 - i;
                self.right[d]
                    .iter()
                    .zip(&f[n - width..])
                    .map(|(w, v)| w * v)
                    .sum()
            } else {
                self.interior
                    .iter()
                    .zip(&f[i - h..=i + h])
                    .map(|(w, v)| w * v)
                    .sum()
            };
            out[i] = s;
        }
        out
    }
}

/// Central-difference derivative of raw samples.
pub fn central_derivative(values: &[f64], dx: f64, order: u32, periodic: bool) -> Vec<f64> {
    if order == 0 {
        return values.to_vec();
    }
    CentralStencil::new(order, dx, periodic).apply(values)
}

/// Discrete `d^order/dx^order` of a field, `order` in `1..=4`.
pub fn differentiate(field: &Field, order: u32, scheme: Scheme) -> Result<Field> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be in 1..=4, got {order}"
        )));
    }
    let grid = field.grid();
    let values = match scheme {
        Scheme::Spectral => {
            if grid.kind != GridKind::Periodic {
                return Err(Error::SchemeMismatch {
                    scheme: "spectral",
                    required: "periodic",
                });
            }
            Spectral::new(grid).derivative(field.values(), order)
        }
        Scheme::Central => central_derivative(field.values(), grid.dx(), order, grid.is_periodic()),
    };
    field.with_values(values, format!("d{order}({})", field.label()))
}

/// Default scheme for a grid: spectral when periodic, central otherwise.
pub fn default_scheme(kind: GridKind) -> Scheme {
    match kind {
        GridKind::Periodic => Scheme::Spectral,
        GridKind::Truncated => Scheme::Central,
    }
}

/// Derivatives `0..=max_order` of raw samples under a scheme.
pub(crate) fn derivative_stack(
    values: &[f64],
    grid: &crate::grid::GridSpec,
    max_order: u32,
    scheme: Scheme,
) -> Vec<Vec<f64>> {
    match scheme {
        Scheme::Spectral => {
            let orders: Vec<u32> = (0..=max_order).collect();
            Spectral::new(grid).derivatives(values, &orders)
        }
        Scheme::Central => (0..=max_order)
            .map(|o| central_derivative(values, grid.dx(), o, grid.is_periodic()))
            .collect(),
    }
}
