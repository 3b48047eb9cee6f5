//! Curvature response models `f` with `f(0) = 0`, `f'(0) = 1`, `f' > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    /// `f(r) = r`, the conventional flow.
    Linear,
    /// `f(r) = e^r - 1`.
    Exponential,
    /// Tabulated `(r, f'(r))` pairs, interpolated monotonically.
    Custom,
}

/// Base nonlinearity as selected in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: ModelName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
}

impl ModelSpec {
    pub fn linear() -> Self {
        Self {
            name: ModelName::Linear,
            table: None,
        }
    }

    pub fn exponential() -> Self {
        Self {
            name: ModelName::Exponential,
            table: None,
        }
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson).
#[derive(Clone, Debug, PartialEq)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
    // integral of the interpolant from 0 to xs[k]
    cumulative: Vec<f64>,
}

impl MonotoneCubic {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("custom model needs at least two table rows"));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("custom model table must be strictly increasing in r"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid("custom model table has non-finite entries"));
        }
        let n = xs.len();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])).collect();
        let mut ms = vec![0.0; n];
        ms[0] = delta[0];
        ms[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            ms[k] = if delta[k - 1] * delta[k] <= 0.0 {
                0.0
            } else {
                0.5 * (delta[k - 1] + delta[k])
            };
        }
        for k in 0..n - 1 {
            if delta[k] == 0.0 {
                ms[k] = 0.0;
                ms[k + 1] = 0.0;
                continue;
            }
            let a = ms[k] / delta[k];
            let b = ms[k + 1] / delta[k];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                ms[k] = tau * a * delta[k];
                ms[k + 1] = tau * b * delta[k];
            }
        }
        let mut spline = Self {
            xs,
            ys,
            ms,
            cumulative: vec![0.0; n],
        };
        let origin = spline.locate(0.0);
        let mut acc = vec![0.0; n];
        for k in 0..n - 1 {
            acc[k + 1] = acc[k] + spline.segment_integral(k, 1.0);
        }
        let zero = acc[origin] + spline.segment_integral(origin, spline.local(origin, 0.0));
        spline.cumulative = acc.into_iter().map(|c| c - zero).collect();
        Ok(spline)
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    fn local(&self, k: usize, x: f64) -> f64 {
        (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k])
    }

    fn segment_integral(&self, k: usize, t: f64) -> f64 {
        let h = self.xs[k + 1] - self.xs[k];
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        let i00 = t - t3 + 0.5 * t4;
        let i10 = 0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2;
        let i01 = t3 - 0.5 * t4;
        let i11 = 0.25 * t4 - t3 / 3.0;
        h * (i00 * self.ys[k] + i10 * h * self.ms[k] + i01 * self.ys[k + 1] + i11 * h * self.ms[k + 1])
    }

    fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = self.local(k, x);
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[k]
            + (t3 - 2.0 * t2 + t) * h * self.ms[k]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[k + 1]
            + (t3 - t2) * h * self.ms[k + 1]
    }

    fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] || x >= self.xs[n - 1] {
            return 0.0;
        }
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = self.local(k, x);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.ys[k]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * self.ms[k]
            + (-6.0 * t2 + 6.0 * t) * self.ys[k + 1]
            + (3.0 * t2 - 2.0 * t) * h * self.ms[k + 1])
            / h
    }

    // integral of the (constant-extrapolated) interpolant from 0 to x
    fn integral(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.cumulative[0] + (x - self.xs[0]) * self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.cumulative[n - 1] + (x - self.xs[n - 1]) * self.ys[n - 1];
        }
        let k = self.locate(x);
        self.cumulative[k] + self.segment_integral(k, self.local(k, x))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Base {
    Linear,
    Exponential,
    Custom(MonotoneCubic),
}

/// `f_sigma(r) = sigma f(r / sigma)` for a base model `f` (`sigma = 1` is
/// the base model itself).
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureModel {
    spec: ModelSpec,
    base: Base,
    sigma: f64,
}

/// `|kappa / sigma|` above which the exponential model signals blow-up.
pub const EXP_KAPPA_LIMIT: f64 = 50.0;

impl CurvatureModel {
    pub fn linear() -> Self {
        Self {
            spec: ModelSpec::linear(),
            base: Base::Linear,
            sigma: 1.0,
        }
    }

    pub fn exponential() -> Self {
        Self {
            spec: ModelSpec::exponential(),
            base: Base::Exponential,
            sigma: 1.0,
        }
    }

    /// Tabulated `f'`; requires `f'(0) = 1` and `f' > 0` at every node.
    pub fn custom(table: Vec<(f64, f64)>) -> Result<Self> {
        let spline = MonotoneCubic::new(&table)?;
        if !(spline.xs[0] <= 0.0 && *spline.xs.last().expect("two rows") >= 0.0) {
            return Err(invalid("custom model table must bracket r = 0"));
        }
        if table.iter().any(|p| !(p.1 > 0.0)) {
            return Err(invalid("custom model needs f'(r) > 0 at every row"));
        }
        let d0 = spline.value(0.0);
        if (d0 - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("custom model needs f'(0) = 1, table gives {d0}")));
        }
        Ok(Self {
            spec: ModelSpec {
                name: ModelName::Custom,
                table: Some(table),
            },
            base: Base::Custom(spline),
            sigma: 1.0,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match (spec.name, &spec.table) {
            (ModelName::Linear, None) => Ok(Self::linear()),
            (ModelName::Exponential, None) => Ok(Self::exponential()),
            (ModelName::Custom, Some(table)) => Self::custom(table.clone()),
            (ModelName::Custom, None) => Err(invalid("custom model needs a `table`")),
            (_, Some(_)) => Err(invalid("only the custom model takes a `table`")),
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn name(&self) -> String {
        let base = match self.base {
            Base::Linear => "linear",
            Base::Exponential => "exponential",
            Base::Custom(_) => "custom",
        };
        if self.sigma == 1.0 {
            base.to_string()
        } else {
            format!("{base}_sigma{}", self.sigma)
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.base, Base::Linear)
    }

    /// `f_{sigma tau}`; scaling composes multiplicatively.
    pub fn scaled(&self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("scaling factor must be positive, got {tau}")));
        }
        Ok(Self {
            sigma: self.sigma * tau,
            ..self.clone()
        })
    }

    pub fn f(&self, r: f64) -> f64 {
        let x = r / self.sigma;
        let base = match &self.base {
            Base::Linear => x,
            Base::Exponential => x.exp_m1(),
            Base::Custom(s) => s.integral(x),
        };
        self.sigma * base
    }

    pub fn fp(&self, r: f64) -> f64 {
        let x = r / self.sigma;
        match &self.base {
            Base::Linear => 1.0,
            Base::Exponential => x.exp(),
            Base::Custom(s) => s.value(x),
        }
    }

    pub fn fpp(&self, r: f64) -> f64 {
        let x = r / self.sigma;
        let base = match &self.base {
            Base::Linear => 0.0,
            Base::Exponential => x.exp(),
            Base::Custom(s) => s.derivative(x),
        };
        base / self.sigma
    }

    /// Curvature magnitude beyond which evaluation is treated as blow-up.
    pub fn kappa_limit(&self) -> Option<f64> {
        match self.base {
            Base::Exponential => Some(EXP_KAPPA_LIMIT * self.sigma),
            _ => None,
        }
    }

    /// `max |f''|` over `|r| <= radius`, by dense sampling.
    pub fn max_fpp(&self, radius: f64) -> f64 {
        let n = 2000;
        (0..=n)
            .map(|i| self.fpp(-radius + 2.0 * radius * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }
}

impl Default for CurvatureModel {
    fn default() -> Self {
        Self::exponential()
    }
}
