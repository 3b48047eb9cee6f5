//! One-dimensional grids and sampled fields.
//!
//! The real line is modelled either as a periodic interval `[-L, L)` or as a
//! truncated interval whose two outermost nodes on each side act as boundary
//! cells for fourth-order stencils. Nodes follow `x_j = -L + j dx` with
//! `dx = 2L / N` in both cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest supported number of grid points.
pub const MIN_POINTS: usize = 8;

/// Number of boundary cells per side on truncated grids.
pub const BOUNDARY_CELLS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Periodic,
    Truncated,
}

impl GridKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GridKind::Periodic => "periodic",
            GridKind::Truncated => "truncated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKind,
    pub half_length: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(kind: GridKind, half_length: f64, points: usize) -> Result<Self> {
        let grid = Self {
            kind,
            half_length,
            points,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Checks for specs built field by field, e.g. from configuration files.
    pub fn validate(&self) -> Result<()> {
        if !(self.half_length.is_finite() && self.half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive and finite, got {}",
                self.half_length
            )));
        }
        if self.points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Length of the computational interval, `2L`.
    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == GridKind::Periodic
    }

    /// Index of the node closest to `x` (wrapped on periodic grids).
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let raw = ((x + self.half_length) / self.dx()).round();
        match self.kind {
            GridKind::Periodic => {
                let n = self.points as i64;
                Some((raw as i64).rem_euclid(n) as usize)
            }
            GridKind::Truncated => {
                if raw < 0.0 || raw > (self.points - 1) as f64 {
                    None
                } else {
                    Some(raw as usize)
                }
            }
        }
    }

    /// Same grid with the spatial extent multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.kind, self.half_length * factor, self.points)
    }
}

/// Build a grid, validating `L > 0` and `N >= 8`.
pub fn build_grid(kind: GridKind, half_length: f64, points: usize) -> Result<GridSpec> {
    GridSpec::new(kind, half_length, points)
}

/// A sampled function on a grid at a given time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
    time: f64,
    label: String,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>, time: f64, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if values.len() != grid.points {
            return Err(Error::LengthMismatch {
                label,
                got: values.len(),
                expected: grid.points,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { label, index });
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "field time must be finite and nonnegative, got {time}"
            )));
        }
        Ok(Self {
            grid,
            values,
            time,
            label,
        })
    }

    pub fn from_fn(
        grid: GridSpec,
        time: f64,
        label: impl Into<String>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values, time, label)
    }

    pub fn zeros(grid: GridSpec, time: f64, label: impl Into<String>) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.points],
            time,
            label: label.into(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// New field on the same grid and time with replacement values.
    pub fn with_values(&self, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::new(self.grid, values, self.time, label)
    }

    pub fn with_time(mut self, time: f64) -> Result<Self> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "field time must be finite and nonnegative, got {time}"
            )));
        }
        self.time = time;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Discrete mean `(1/N) sum_j f_j`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect(), label)
    }

    /// Checks that `other` lives on the same grid.
    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "`{}` is on {:?}, `{}` is on {:?}",
                self.label, self.grid, other.label, other.grid
            )));
        }
        Ok(())
    }

    /// Checks that `other` shares grid and time stamp.
    pub fn ensure_compatible(&self, other: &Field) -> Result<()> {
        self.ensure_same_grid(other)?;
        if self.time != other.time {
            return Err(Error::GridMismatch(format!(
                "`{}` is at t = {}, `{}` is at t = {}",
                self.label, self.time, other.label, other.time
            )));
        }
        Ok(())
    }

    /// `max_j |self_j - other_j|`.
    pub fn distance(&self, other: &Field) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

pub(crate) fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodic_nodes_are_left_closed() {
        let g = build_grid(GridKind::Periodic, PI, 8).unwrap();
        assert_eq!(g.dx(), PI / 4.0);
        let xs = g.nodes();
        assert_eq!(xs[0], -PI);
        assert!((xs[7] - 3.0 * PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_spacing() {
        let g = build_grid(GridKind::Truncated, 40.0, 1024).unwrap();
        assert_eq!(g.dx(), 0.078125);
        let g = build_grid(GridKind::Truncated, 40.0, 2048).unwrap();
        assert_eq!(g.dx(), 0.0390625);
    }

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(matches!(
            build_grid(GridKind::Periodic, 1.0, 4),
            Err(Error::InvalidGrid(_))
        ));
        assert!(build_grid(GridKind::Periodic, 0.0, 16).is_err());
        assert!(build_grid(GridKind::Truncated, -1.0, 16).is_err());
        assert!(build_grid(GridKind::Truncated, f64::NAN, 16).is_err());
    }

    #[test]
    fn field_rejects_non_finite_and_wrong_length() {
        let g = build_grid(GridKind::Periodic, 1.0, 8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(
            Field::new(g, v, 0.0, "u"),
            Err(Error::NonFinite { index: 3, .. })
        ));
        assert!(matches!(
            Field::new(g, vec![0.0; 7], 0.0, "u"),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn nearest_index_wraps_on_periodic_grids() {
        let g = build_grid(GridKind::Periodic, 1.0, 8).unwrap();
        assert_eq!(g.nearest_index(1.0), Some(0));
        assert_eq!(g.nearest_index(-1.0), Some(0));
        let t = build_grid(GridKind::Truncated, 1.0, 8).unwrap();
        assert_eq!(t.nearest_index(2.0), None);
    }
}
