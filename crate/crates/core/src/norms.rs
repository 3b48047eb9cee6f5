//! Discrete estimators of parabolic Hölder seminorms, scaled norms and the
//! weighted `Z^k` norm, plus power-law decay fitting.
//!
//! All suprema are taken over grid nodes and stored snapshots, so every
//! seminorm here is a lower bound of its continuum counterpart.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{derivative_stack, Scheme};
use crate::error::{invalid, Error, Result};
use crate::flow::{rhs_u_with, ut_from_slope};
use crate::grid::{sup_norm, Field};
use crate::model::CurvatureModel;
use crate::semigroup::least_squares;
use crate::trajectory::Trajectory;

/// Default Hölder exponent of the `Z^k` norm.
pub const DEFAULT_MU: f64 = 0.5;

/// Parabolic order used throughout (`l + 4m` counts derivatives).
pub const PARABOLIC_ORDER: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSpec {
    pub lambda: f64,
    #[serde(default = "default_n")]
    pub n: u32,
    #[serde(default = "default_true")]
    pub scaled: bool,
}

fn default_n() -> u32 {
    PARABOLIC_ORDER
}

fn default_true() -> bool {
    true
}

impl HolderSpec {
    pub fn scaled(lambda: f64) -> Result<Self> {
        let s = Self {
            lambda,
            n: PARABOLIC_ORDER,
            scaled: true,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn unscaled(lambda: f64) -> Result<Self> {
        Ok(Self {
            scaled: false,
            ..Self::scaled(lambda)?
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(format!("Hölder order must be finite and >= 0, got {}", self.lambda)));
        }
        if self.n != PARABOLIC_ORDER {
            return Err(invalid(format!("only parabolic order 4 is supported, got {}", self.n)));
        }
        Ok(())
    }

    /// `(l, m)` pairs with `l + 4m <= lambda`, ordered by `m` then `l`.
    pub fn derivative_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        let n = self.n as f64;
        let mut m = 0u32;
        while n * m as f64 <= self.lambda + 1e-12 {
            let mut l = 0u32;
            while l as f64 + n * m as f64 <= self.lambda + 1e-12 {
                out.push((l, m));
                l += 1;
            }
            m += 1;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// Weighted `sup |d_x^l d_t^m f|`.
    Sup,
    /// Spatial Hölder seminorm of `d_x^l d_t^m f`.
    SpaceHolder,
    /// Temporal Hölder seminorm of `d_x^l d_t^m f`.
    TimeHolder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTerm {
    /// Which function the term measures (`v`, `v_x`, ...).
    pub field: String,
    pub l: u32,
    pub m: u32,
    pub kind: TermKind,
    /// Hölder exponent of the seminorm, 0 for plain suprema.
    pub exponent: f64,
    /// Unweighted estimate.
    pub raw: f64,
    /// Window and `(1+t)^{1/4}` weights combined.
    pub weight: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// Time window `(a, b]` the terms were measured on.
    pub window: (f64, f64),
    pub terms: Vec<NormTerm>,
    pub total: f64,
    /// Time at which a supremum over windows was attained, if any.
    pub sup_time: Option<f64>,
    /// `(t, value)` per window for norms that take a supremum over `t`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<(f64, f64)>,
}

impl NormReport {
    fn from_terms(window: (f64, f64), terms: Vec<NormTerm>) -> Self {
        let total = terms.iter().map(|t| t.value).sum();
        Self {
            window,
            terms,
            total,
            sup_time: None,
            series: Vec::new(),
        }
    }

    pub fn term(&self, field: &str, l: u32, m: u32, kind: TermKind) -> Option<&NormTerm> {
        self.terms
            .iter()
            .find(|t| t.field == field && t.l == l && t.m == m && t.kind == kind)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub points: usize,
}

/// Source of time derivatives for terms with `m >= 1`.
#[derive(Clone, Copy, Debug)]
pub enum TimeRate<'a> {
    /// Non-uniform three-point differences between snapshots.
    Differencing,
    /// Snapshots hold the slope `v`; `v_t = (u_t)_x` from the flow.
    Slope(&'a CurvatureModel),
    /// Snapshots hold the height `u`; `u_t` from the flow.
    Height(&'a CurvatureModel),
}

/// `max |f(x) - f(y)| / |x - y|^lambda` over node pairs.
///
/// Periodic grids use the periodic distance and separations up to half the
/// period. Rows stop early once the oscillation bound can no longer beat
/// the running maximum.
pub fn holder_seminorm_space(field: &Field, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid(format!("spatial Hölder exponent must lie in (0, 1], got {lambda}")));
    }
    let grid = field.grid();
    Ok(space_seminorm(field.values(), grid.dx(), grid.is_periodic(), lambda))
}

fn space_seminorm(f: &[f64], dx: f64, periodic: bool, lambda: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let osc = hi - lo;
    if osc == 0.0 {
        return 0.0;
    }
    let max_sep = if periodic { n / 2 } else { n - 1 };
    let at = |i: usize, d: usize| {
        let j = i + d;
        if j < n {
            f[j]
        } else {
            f[j - n]
        }
    };
    let rows = if periodic { n } else { n - 1 };
    // adjacent pairs seed the pruning threshold
    let seed = (0..rows)
        .map(|i| (at(i, 1) - f[i]).abs())
        .fold(0.0, f64::max)
        / dx.powf(lambda);
    (0..rows)
        .into_par_iter()
        .map(|i| {
            let mut best = seed;
            let limit = if periodic { max_sep } else { max_sep - i };
            for d in 1..=limit {
                let scale = (d as f64 * dx).powf(lambda);
                if osc / scale <= best {
                    break;
                }
                let r = (at(i, d) - f[i]).abs() / scale;
                if r > best {
                    best = r;
                }
            }
            best
        })
        .reduce(|| seed, f64::max)
}

/// `max |f(x_i, s) - f(x_i, t)| / |s - t|^mu` over snapshot pairs of a window.
pub fn holder_seminorm_time(window: &[&Field], index: usize, mu: f64) -> Result<f64> {
    check_time_exponent(mu)?;
    if window.len() < 2 {
        return Err(Error::Insufficient(format!(
            "time seminorm needs two snapshots, got {}",
            window.len()
        )));
    }
    let n = window[0].len();
    if index >= n {
        return Err(invalid(format!("node {index} outside a grid of {n} points")));
    }
    let samples: Vec<f64> = window.iter().map(|f| f.values()[index]).collect();
    let times: Vec<f64> = window.iter().map(|f| f.time()).collect();
    Ok(time_seminorm_at(&samples, &times, mu))
}

/// [`holder_seminorm_time`] maximised over all nodes.
pub fn holder_seminorm_time_all(window: &[&Field], mu: f64) -> Result<f64> {
    check_time_exponent(mu)?;
    if window.len() < 2 {
        return Err(Error::Insufficient(format!(
            "time seminorm needs two snapshots, got {}",
            window.len()
        )));
    }
    for w in &window[1..] {
        window[0].ensure_same_grid(w)?;
    }
    let rows: Vec<&[f64]> = window.iter().map(|f| f.values()).collect();
    let times: Vec<f64> = window.iter().map(|f| f.time()).collect();
    Ok(time_seminorm(&rows, &times, mu))
}

fn check_time_exponent(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid(format!("temporal Hölder exponent must lie in (0, 1), got {mu}")));
    }
    Ok(())
}

fn time_seminorm_at(samples: &[f64], times: &[f64], mu: f64) -> f64 {
    let mut best = 0.0f64;
    for a in 0..samples.len() {
        for b in a + 1..samples.len() {
            let r = (samples[a] - samples[b]).abs() / (times[b] - times[a]).abs().powf(mu);
            best = best.max(r);
        }
    }
    best
}

fn time_seminorm(rows: &[&[f64]], times: &[f64], mu: f64) -> f64 {
    let n = rows[0].len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let samples: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            time_seminorm_at(&samples, times, mu)
        })
        .reduce(|| 0.0, f64::max)
}

// Per-snapshot values of d_t f, second order in the snapshot spacing.
fn differenced_rates(fields: &[&Field]) -> Result<Vec<Vec<f64>>> {
    let k = fields.len();
    if k < 2 {
        return Err(Error::Insufficient("time derivatives need two snapshots".into()));
    }
    let t: Vec<f64> = fields.iter().map(|f| f.time()).collect();
    let v: Vec<&[f64]> = fields.iter().map(|f| f.values()).collect();
    let n = v[0].len();
    let three = |i0: usize, at: usize| -> Vec<f64> {
        // derivative at t[at] of the parabola through i0, i0+1, i0+2
        let (a, b, c) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let x = t[at];
        let wa = ((x - b) + (x - c)) / ((a - b) * (a - c));
        let wb = ((x - a) + (x - c)) / ((b - a) * (b - c));
        let wc = ((x - a) + (x - b)) / ((c - a) * (c - b));
        (0..n)
            .map(|j| wa * v[i0][j] + wb * v[i0 + 1][j] + wc * v[i0 + 2][j])
            .collect()
    };
    if k == 2 {
        let d: Vec<f64> = (0..n).map(|j| (v[1][j] - v[0][j]) / (t[1] - t[0])).collect();
        return Ok(vec![d.clone(), d]);
    }
    Ok((0..k)
        .map(|i| {
            let i0 = i.saturating_sub(1).min(k - 3);
            three(i0, i)
        })
        .collect())
}

fn model_rates(fields: &[&Field], rate: TimeRate<'_>, scheme: Scheme) -> Result<Vec<Vec<f64>>> {
    fields
        .iter()
        .map(|f| match rate {
            TimeRate::Slope(model) => {
                let ut = ut_from_slope(f, model, scheme)?;
                Ok(derivative_stack(ut.values(), f.grid(), 1, scheme).swap_remove(1))
            }
            TimeRate::Height(model) => Ok(rhs_u_with(f, model, scheme)?.into_values()),
            TimeRate::Differencing => unreachable!("handled by the caller"),
        })
        .collect()
}

/// Derivative tables of a run of snapshots, `rows[m][l][snapshot]` holding
/// `d_x^l d_t^m f`, with per-snapshot suprema and spatial seminorms cached so
/// overlapping windows share the work.
struct Tables {
    dx: f64,
    periodic: bool,
    times: Vec<f64>,
    rows: Vec<Vec<Vec<Vec<f64>>>>,
    sups: BTreeMap<(u32, u32), Vec<f64>>,
    semis: BTreeMap<(u32, u32, u64), Vec<f64>>,
}

// Highest spatial and temporal orders a spec touches.
fn orders(spec: &HolderSpec) -> (u32, u32) {
    let pairs = spec.derivative_pairs();
    (
        pairs.iter().map(|p| p.0).max().unwrap_or(0),
        pairs.iter().map(|p| p.1).max().unwrap_or(0),
    )
}

// Integer part and fractional exponent of `lambda`.
fn split(lambda: f64) -> (f64, f64) {
    let floor = (lambda + 1e-12).floor();
    let frac = if lambda - floor > 1e-12 { lambda - floor } else { 0.0 };
    (floor, frac)
}

impl Tables {
    fn build(fields: &[&Field], max_l: u32, max_m: u32, scheme: Scheme, rate: TimeRate<'_>) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::Insufficient(format!(
                "norms need two snapshots, got {}",
                fields.len()
            )));
        }
        for f in &fields[1..] {
            fields[0].ensure_same_grid(f)?;
        }
        if max_m > 1 {
            return Err(invalid("time derivatives beyond first order are not estimated"));
        }
        let grid = *fields[0].grid();
        let space0: Vec<Vec<Vec<f64>>> = fields
            .par_iter()
            .map(|f| derivative_stack(f.values(), &grid, max_l, scheme))
            .collect();
        let mut rows = vec![transpose(space0)];
        if max_m == 1 {
            let rates = match rate {
                TimeRate::Differencing => differenced_rates(fields)?,
                _ => model_rates(fields, rate, scheme)?,
            };
            let space1: Vec<Vec<Vec<f64>>> = rates
                .par_iter()
                .map(|r| derivative_stack(r, &grid, max_l, scheme))
                .collect();
            rows.push(transpose(space1));
        }
        Ok(Self {
            dx: grid.dx(),
            periodic: grid.is_periodic(),
            times: fields.iter().map(|f| f.time()).collect(),
            rows,
            sups: BTreeMap::new(),
            semis: BTreeMap::new(),
        })
    }

    /// Fill the caches needed to measure `spec` on the `shift`-th derivative.
    fn prepare(&mut self, spec: &HolderSpec, shift: u32) {
        let (floor, frac) = split(spec.lambda);
        for (l, m) in spec.derivative_pairs() {
            let key = (m, l + shift);
            let rows = &self.rows[m as usize][key.1 as usize];
            self.sups
                .entry(key)
                .or_insert_with(|| rows.par_iter().map(|r| sup_norm(r)).collect());
            let order = l as f64 + spec.n as f64 * m as f64;
            if frac > 0.0 && (order - floor).abs() < 1e-12 {
                let (dx, periodic) = (self.dx, self.periodic);
                self.semis
                    .entry((key.0, key.1, frac.to_bits()))
                    .or_insert_with(|| rows.iter().map(|r| space_seminorm(r, dx, periodic, frac)).collect());
            }
        }
    }

    /// Terms of `spec` for the `shift`-th derivative over snapshots `range`.
    /// [`Tables::prepare`] must have run for the same spec and shift.
    fn terms(
        &self,
        label: &str,
        range: Range<usize>,
        shift: u32,
        window: (f64, f64),
        spec: &HolderSpec,
        extra_weight: f64,
    ) -> Vec<NormTerm> {
        let (floor, frac) = split(spec.lambda);
        let n = spec.n as f64;
        let len = window.1 - window.0;
        let w = |p: f64| if spec.scaled { len.powf(p) } else { 1.0 } * extra_weight;
        let top = w(spec.lambda / n);
        let max_of = |v: &[f64]| v[range.clone()].iter().copied().fold(0.0, f64::max);
        let term = |l: u32, m: u32, kind: TermKind, exponent: f64, raw: f64, weight: f64| NormTerm {
            field: label.to_string(),
            l,
            m,
            kind,
            exponent,
            raw,
            weight,
            value: raw * weight,
        };
        let pairs = spec.derivative_pairs();
        let mut terms = Vec::new();
        for &(l, m) in &pairs {
            let raw = max_of(&self.sups[&(m, l + shift)]);
            terms.push(term(l, m, TermKind::Sup, 0.0, raw, w(l as f64 / n + m as f64)));
        }
        for &(l, m) in &pairs {
            let key = (m, l + shift);
            let order = l as f64 + n * m as f64;
            if (order - floor).abs() < 1e-12 {
                let raw = if frac == 0.0 {
                    max_of(&self.sups[&key])
                } else {
                    max_of(&self.semis[&(key.0, key.1, frac.to_bits())])
                };
                terms.push(term(l, m, TermKind::SpaceHolder, frac, raw, top));
            }
            if order > spec.lambda - n + 1e-12 {
                let mu = (spec.lambda - order) / n;
                let raw = if mu < 1e-12 {
                    max_of(&self.sups[&key])
                } else {
                    let refs: Vec<&[f64]> = self.rows[m as usize][key.1 as usize][range.clone()]
                        .iter()
                        .map(Vec::as_slice)
                        .collect();
                    time_seminorm(&refs, &self.times[range.clone()], mu)
                };
                terms.push(term(l, m, TermKind::TimeHolder, mu.max(0.0), raw, top));
            }
        }
        terms
    }
}

// [snapshot][order] -> [order][snapshot]
fn transpose(stack: Vec<Vec<Vec<f64>>>) -> Vec<Vec<Vec<f64>>> {
    let orders = stack.first().map_or(0, Vec::len);
    let mut out: Vec<Vec<Vec<f64>>> = (0..orders).map(|_| Vec::new()).collect();
    for snap in stack {
        for (o, row) in snap.into_iter().enumerate() {
            out[o].push(row);
        }
    }
    out
}

/// Parabolic Hölder norm of the snapshots of `fields` lying in `(a, b]`.
///
/// With `spec.scaled` each term carries the window weight `(b-a)^{l/4+m}`
/// (sup terms) or `(b-a)^{lambda/4}` (seminorm terms).
pub fn holder_norm(
    fields: &[&Field],
    window: (f64, f64),
    spec: &HolderSpec,
    scheme: Scheme,
    rate: TimeRate<'_>,
) -> Result<NormReport> {
    let (a, b) = window;
    if !(b > a) {
        return Err(invalid(format!("window ({a}, {b}] is empty")));
    }
    let tol = 1e-12 * b.abs().max(1.0);
    let inside: Vec<&Field> = fields
        .iter()
        .copied()
        .filter(|f| f.time() > a + tol && f.time() <= b + tol)
        .collect();
    spec.validate()?;
    if inside.len() < 2 {
        return Err(Error::EmptyWindow { t: b });
    }
    let (max_l, max_m) = orders(spec);
    let mut tables = Tables::build(&inside, max_l, max_m, scheme, rate)?;
    tables.prepare(spec, 0);
    let terms = tables.terms(inside[0].label(), 0..inside.len(), 0, window, spec, 1.0);
    Ok(NormReport::from_terms(window, terms))
}

/// Scaled norm over the window `(t/2, t]` with time derivatives by differencing.
pub fn scaled_norm(traj: &Trajectory, t: f64, lambda: f64, derivs_by: Scheme) -> Result<NormReport> {
    scaled_norm_with(traj, t, lambda, derivs_by, TimeRate::Differencing)
}

pub fn scaled_norm_with(
    traj: &Trajectory,
    t: f64,
    lambda: f64,
    derivs_by: Scheme,
    rate: TimeRate<'_>,
) -> Result<NormReport> {
    let window = traj.window(t)?;
    holder_norm(&window, (0.5 * t, t), &HolderSpec::scaled(lambda)?, derivs_by, rate)
}

/// `Z^k` norm of a slope trajectory, the supremum over stored times `t` of
/// `|v|'_{k+mu} + (1+t)^{1/4} |v_x|'_{k-1+mu}` on `(t/2, t]`.
///
/// `v_x` is obtained from the stored `v` by the same derivative scheme.
/// Differenced time rates use neighbours across the whole trajectory, so a
/// window's first snapshot sees the one before it. Times without two
/// snapshots in their window are skipped.
pub fn z_norm(traj: &Trajectory, k: u32, mu: f64, derivs_by: Scheme) -> Result<NormReport> {
    z_norm_with(traj, k, mu, derivs_by, TimeRate::Differencing, f64::INFINITY)
}

/// [`z_norm`] restricted to `t <= horizon`, with a choice of time-derivative source.
pub fn z_norm_with(
    traj: &Trajectory,
    k: u32,
    mu: f64,
    derivs_by: Scheme,
    rate: TimeRate<'_>,
    horizon: f64,
) -> Result<NormReport> {
    if k == 0 {
        return Err(invalid("the Z norm needs k >= 1"));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid(format!("mu must lie in (0, 1), got {mu}")));
    }
    let outer = HolderSpec::scaled(k as f64 + mu)?;
    let inner = HolderSpec::scaled(k as f64 - 1.0 + mu)?;
    let fields: Vec<&Field> = traj.fields().collect();
    let times = traj.times();
    let (l_out, m_out) = orders(&outer);
    let (l_in, m_in) = orders(&inner);
    let mut tables = Tables::build(&fields, l_out.max(l_in + 1), m_out.max(m_in), derivs_by, rate)?;
    tables.prepare(&outer, 0);
    tables.prepare(&inner, 1);
    let results: Vec<Option<(f64, Vec<NormTerm>)>> = times
        .par_iter()
        .filter(|&&t| t > 0.0 && t <= horizon * (1.0 + 1e-12))
        .map(|&t| {
            // same selection as `Trajectory::window`
            let tol = 1e-12 * t;
            let lo = times.partition_point(|&s| s <= 0.5 * t + tol);
            let hi = times.partition_point(|&s| s <= t + tol);
            if hi < lo + 2 {
                return None;
            }
            let win = (0.5 * t, t);
            let mut terms = tables.terms("v", lo..hi, 0, win, &outer, 1.0);
            terms.extend(tables.terms("v_x", lo..hi, 1, win, &inner, (1.0 + t).powf(0.25)));
            Some((t, terms))
        })
        .collect();
    let mut best: Option<(f64, Vec<NormTerm>, f64)> = None;
    let mut series = Vec::new();
    for (t, terms) in results.into_iter().flatten() {
        let total: f64 = terms.iter().map(|x| x.value).sum();
        series.push((t, total));
        if best.as_ref().map_or(true, |b| total > b.2) {
            best = Some((t, terms, total));
        }
    }
    let (t, terms, _) = best.ok_or_else(|| {
        Error::Insufficient("no stored time has two snapshots in its window".into())
    })?;
    let mut report = NormReport::from_terms((0.5 * t, t), terms);
    report.sup_time = Some(t);
    report.series = series;
    Ok(report)
}

/// Least-squares slope of `log value` against `log t` for samples in `[t1, t2]`.
pub fn decay_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (t1, t2) = window;
    if !(t1 > 0.0 && t2 > t1) {
        return Err(invalid(format!("fit window [{t1}, {t2}] must satisfy 0 < t1 < t2")));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t1 * (1.0 - 1e-12) && t <= t2 * (1.0 + 1e-12))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Insufficient(format!(
            "decay fit needs 5 points in [{t1}, {t2}], got {}",
            pts.len()
        )));
    }
    if let Some(&(t, v)) = pts.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(invalid(format!("decay fit needs positive values, got {v} at t = {t}")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(DecayFit {
        window,
        slope,
        intercept,
        residual,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};
    use crate::semigroup::apply_semigroup;
    use std::f64::consts::PI;

    fn periodic(l: f64, n: usize) -> crate::grid::GridSpec {
        build_grid(GridKind::Periodic, l, n).unwrap()
    }

    #[test]
    fn space_seminorm_examples() {
        let g = build_grid(GridKind::Truncated, 1.0, 64).unwrap();
        let lin = Field::from_fn(g, 0.0, "f", |x| -3.0 * x).unwrap();
        assert!((holder_seminorm_space(&lin, 1.0).unwrap() - 3.0).abs() < 1e-12);
        let c = Field::from_fn(g, 0.0, "f", |_| 2.0).unwrap();
        assert_eq!(holder_seminorm_space(&c, 0.5).unwrap(), 0.0);
        let mut prev = 0.0;
        for n in [64, 256, 1024] {
            let g = build_grid(GridKind::Truncated, 1.0, n).unwrap();
            let f = Field::from_fn(g, 0.0, "f", |x| x.abs().sqrt()).unwrap();
            let s = holder_seminorm_space(&f, 0.5).unwrap();
            assert!(s <= 1.0 + 1e-12 && s >= prev - 1e-12, "n = {n}: {s}");
            prev = s;
        }
        assert!(prev > 0.99);
    }

    #[test]
    fn periodic_distance_wraps() {
        // a sawtooth-free sine: the seminorm with lambda = 1 is the max slope
        let g = periodic(PI, 512);
        let f = Field::from_fn(g, 0.0, "f", |x| (2.0 * x).sin()).unwrap();
        let s = holder_seminorm_space(&f, 1.0).unwrap();
        assert!((s - 2.0).abs() < 1e-3, "{s}");
    }

    #[test]
    fn pruned_scan_matches_brute_force() {
        let g = build_grid(GridKind::Periodic, 5.0, 96).unwrap();
        let f = Field::from_fn(g, 0.0, "f", |x| (x * 1.3).sin() + 0.3 * (x * 4.1).cos()).unwrap();
        for lam in [0.2, 0.5, 0.9] {
            let fast = holder_seminorm_space(&f, lam).unwrap();
            let v = f.values();
            let mut slow = 0.0f64;
            for i in 0..96 {
                for j in 0..96 {
                    let d = (i as i64 - j as i64).unsigned_abs() as usize;
                    let d = d.min(96 - d);
                    if d == 0 {
                        continue;
                    }
                    slow = slow.max((v[i] - v[j]).abs() / (d as f64 * g.dx()).powf(lam));
                }
            }
            assert!((fast - slow).abs() < 1e-12 * slow, "{lam}: {fast} vs {slow}");
        }
    }

    fn traj_of(g: crate::grid::GridSpec, times: &[f64], f: impl Fn(f64, f64) -> f64) -> Trajectory {
        let fields = times
            .iter()
            .map(|&t| Field::from_fn(g, t, "v", |x| f(x, t)).unwrap())
            .collect();
        Trajectory::from_fields(fields).unwrap()
    }

    #[test]
    fn time_seminorm_examples() {
        let g = periodic(1.0, 8);
        let times = [1.25, 1.5, 1.75, 2.0];
        let traj = traj_of(g, &times, |_, t| t);
        let w = traj.window(2.0).unwrap();
        let s = holder_seminorm_time(&w, 3, 0.5).unwrap();
        assert!((s - 0.75f64.sqrt()).abs() < 1e-14);
        let still = traj_of(g, &times, |x, _| x);
        assert_eq!(holder_seminorm_time_all(&still.window(2.0).unwrap(), 0.5).unwrap(), 0.0);
        let lin = traj_of(g, &times, |x, t| 3.0 * t * (1.0 + x * 0.0));
        let s = holder_seminorm_time_all(&lin.window(2.0).unwrap(), 0.25).unwrap();
        assert!((s - 3.0 * 0.75f64.powf(0.75)).abs() < 1e-12);
        assert!(holder_seminorm_time(&w[..1], 0, 0.5).is_err());
    }

    #[test]
    fn constant_field_norm_is_its_modulus() {
        let g = periodic(PI, 32);
        let times: Vec<f64> = (1..=8).map(|i| 4.0 + 0.5 * i as f64).collect();
        let traj = traj_of(g, &times, |_, _| -0.7);
        for lambda in [0.5, 2.5, 4.5] {
            let r = scaled_norm(&traj, 8.0, lambda, Scheme::Spectral).unwrap();
            assert!((r.total - 0.7).abs() < 1e-12, "lambda {lambda}: {}", r.total);
            let sum: f64 = r.terms.iter().map(|t| t.value).sum();
            assert_eq!(sum, r.total);
        }
        let z = z_norm(&traj, 2, DEFAULT_MU, Scheme::Spectral).unwrap();
        assert!((z.total - 0.7).abs() < 1e-12);
        let zero = traj_of(g, &times, |_, _| 0.0);
        assert_eq!(z_norm(&zero, 2, DEFAULT_MU, Scheme::Spectral).unwrap().total, 0.0);
    }

    #[test]
    fn term_bookkeeping_for_lambda_four_and_a_half() {
        let spec = HolderSpec::scaled(4.5).unwrap();
        let pairs = spec.derivative_pairs();
        assert_eq!(pairs, vec![(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (0, 1)]);
        let g = periodic(PI, 32);
        let times: Vec<f64> = (0..=8).map(|i| 1.0 + 0.125 * i as f64).collect();
        let traj = traj_of(g, &times, |x, t| (-t).exp() * x.sin());
        let r = scaled_norm(&traj, 2.0, 4.5, Scheme::Spectral).unwrap();
        let kinds = |k| r.terms.iter().filter(|t| t.kind == k).count();
        // sup: all six; space: l + 4m = 4; time: 0.5 < l + 4m <= 4.5
        assert_eq!(kinds(TermKind::Sup), 6);
        assert_eq!(kinds(TermKind::SpaceHolder), 2);
        assert_eq!(kinds(TermKind::TimeHolder), 5);
        // d_t of e^{-t} sin x is -e^{-t} sin x: sup over (1, 2] is e^{-1.125}
        let ut = r.term("v", 0, 1, TermKind::Sup).unwrap();
        assert!((ut.raw - (-1.125f64).exp()).abs() < 2e-3, "{}", ut.raw);
        assert!((ut.weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_norm_is_scale_invariant() {
        // f^s(x, t) = f(s x, s^4 t) on the nested grid of half-length L / s
        let l = 16.0;
        let g = periodic(l, 256);
        let w0 = Field::from_fn(g, 0.0, "v", |x| (-x * x).exp()).unwrap();
        let times: Vec<f64> = (0..=16).map(|i| 0.5 * 2f64.powf(i as f64 / 16.0)).collect();
        let fields: Vec<Field> = times
            .iter()
            .map(|&t| apply_semigroup(&w0, t).unwrap().with_time(t).unwrap())
            .collect();
        let traj = Trajectory::from_fields(fields.clone()).unwrap();
        let s = 2.0;
        let gs = periodic(l / s, 256);
        let scaled: Vec<Field> = fields
            .iter()
            .map(|f| Field::new(gs, f.values().to_vec(), f.time() / s.powi(4), "v").unwrap())
            .collect();
        let traj_s = Trajectory::from_fields(scaled).unwrap();
        for lambda in [0.5, 2.5, 4.5] {
            let a = scaled_norm(&traj, 1.0, lambda, Scheme::Spectral).unwrap().total;
            let b = scaled_norm(&traj_s, 1.0 / 16.0, lambda, Scheme::Spectral).unwrap().total;
            assert!((a - b).abs() < 0.02 * a, "lambda {lambda}: {a} vs {b}");
        }
    }

    #[test]
    fn smoothing_keeps_scaled_norm_bounded() {
        // step-like data with sup 1 on a large periodic box
        let g = periodic(64.0, 2048);
        let w0 = Field::from_fn(g, 0.0, "v", |x| (4.0 * x).tanh() * (-(x / 20.0).powi(8)).exp()).unwrap();
        let mut values = Vec::new();
        for t in [0.05, 0.5, 5.0, 50.0] {
            let times: Vec<f64> = (0..=8).map(|i| 0.5 * t * 2f64.powf(i as f64 / 8.0)).collect();
            let fields = times
                .iter()
                .map(|&s| apply_semigroup(&w0, s).unwrap().with_time(s).unwrap())
                .collect();
            let traj = Trajectory::from_fields(fields).unwrap();
            values.push(scaled_norm(&traj, t, 2.5, Scheme::Spectral).unwrap().total);
        }
        let (lo, hi) = values.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi < 3.0 * lo && hi < 10.0, "{values:?}");
    }

    #[test]
    fn lower_order_norms_are_dominated() {
        // Strict monotonicity in lambda fails already in the continuum for
        // long-wave data (large separations dominate small exponents), so the
        // check is the constant form |f|'_{l'} <= C |f|'_l with one C for the battery.
        let g = periodic(8.0, 256);
        let times: Vec<f64> = (0..=8).map(|i| 2.0 * 2f64.powf(i as f64 / 8.0)).collect();
        let lambdas = [0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5];
        let mut worst = 0.0f64;
        for (a, b) in [(0.4, 0.9), (1.0, 3.0), (0.25, 2.0)] {
            let traj = traj_of(g, &times, |x, t| (a * x).sin() * (-0.02 * t).exp() + 0.2 * (b * x - 0.1 * t).cos());
            let norms: Vec<f64> = lambdas
                .iter()
                .map(|&l| scaled_norm(&traj, 4.0, l, Scheme::Spectral).unwrap().total)
                .collect();
            for i in 0..norms.len() {
                for j in i + 1..norms.len() {
                    worst = worst.max(norms[i] / norms[j]);
                }
            }
        }
        assert!(worst < 2.0, "domination constant {worst}");
    }

    #[test]
    fn product_estimate_holds_with_one_constant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let g = periodic(8.0, 128);
        let times: Vec<f64> = (0..=8).map(|i| 1.0 + 0.125 * i as f64).collect();
        let mut worst = 0.0f64;
        for _ in 0..12 {
            let mut coef = || -> [f64; 4] { std::array::from_fn(|_| rng.random_range(-1.0..1.0)) };
            let (p, q) = (coef(), coef());
            let wave = |c: [f64; 4], x: f64, t: f64| {
                c[0] + c[1] * (0.5 * x + c[2] * t).sin() + 0.3 * c[3] * (1.25 * x).cos() * (-0.1 * t).exp()
            };
            let fg = traj_of(g, &times, |x, t| wave(p, x, t));
            let fh = traj_of(g, &times, |x, t| wave(q, x, t));
            let fgh = traj_of(g, &times, |x, t| wave(p, x, t) * wave(q, x, t));
            let n = |tr: &Trajectory| scaled_norm(tr, 2.0, 2.5, Scheme::Spectral).unwrap().total;
            worst = worst.max(n(&fgh) / (n(&fg) * n(&fh)));
        }
        assert!(worst.is_finite() && worst < 4.0, "product constant {worst}");
    }

    #[test]
    fn lower_norm_contracts_for_data_starting_at_zero() {
        let g = periodic(PI, 64);
        let lo = HolderSpec::unscaled(0.5).unwrap();
        let hi = HolderSpec::unscaled(2.5).unwrap();
        let series: Vec<(f64, f64)> = (1..=8)
            .map(|k| {
                let t_max = 2f64.powi(-k);
                let fields: Vec<Field> = (1..=16)
                    .map(|i| {
                        let t = t_max * i as f64 / 16.0;
                        Field::from_fn(g, t, "f", |x| t * x.sin() + t * t * (2.0 * x).cos()).unwrap()
                    })
                    .collect();
                let refs: Vec<&Field> = fields.iter().collect();
                let n = |s: &HolderSpec| {
                    holder_norm(&refs, (0.0, t_max), s, Scheme::Spectral, TimeRate::Differencing)
                        .unwrap()
                        .total
                };
                (t_max, n(&lo) / n(&hi))
            })
            .collect();
        let fit = decay_fit(&series, (1e-3, 1.0)).unwrap();
        assert!(fit.slope > 0.1, "beta = {}", fit.slope);
    }

    #[test]
    fn model_rates_match_differencing() {
        use crate::solver::{integrate, SchemeKind, SolverConfig};
        let g = periodic(8.0 * PI, 256);
        let model = CurvatureModel::exponential();
        let v0 = Field::from_fn(g, 0.0, "v", |x| 0.05 * (x / 4.0).sin()).unwrap();
        let mut cfg = SolverConfig::new(SchemeKind::IfImexSpectral, 4.0);
        cfg.retention = crate::trajectory::Retention::All;
        cfg.snapshots.per_octave = 64;
        let run = integrate(&v0, &cfg, &model).unwrap();
        let a = scaled_norm_with(&run.trajectory, 4.0, 4.5, Scheme::Spectral, TimeRate::Slope(&model)).unwrap();
        let b = scaled_norm(&run.trajectory, 4.0, 4.5, Scheme::Spectral).unwrap();
        let ta = a.term("v", 0, 1, TermKind::Sup).unwrap().raw;
        let tb = b.term("v", 0, 1, TermKind::Sup).unwrap().raw;
        assert!((ta - tb).abs() < 0.02 * ta, "{ta} vs {tb}");
    }

    #[test]
    fn decay_fit_examples() {
        let pts: Vec<(f64, f64)> = (0..40).map(|i| {
            let t = 2f64.powf(i as f64 / 4.0);
            (t, 3.0 * t.powf(-0.5))
        }).collect();
        let fit = decay_fit(&pts, (1.0, 1000.0)).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-6);
        assert!(fit.residual < 1e-8);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, 2.0)).collect();
        assert!(decay_fit(&flat, (1.0, 1000.0)).unwrap().slope.abs() < 1e-12);
        assert!(decay_fit(&pts[..4], (1.0, 1000.0)).is_err());
        let mut bad = pts.clone();
        bad[3].1 = 0.0;
        assert!(decay_fit(&bad, (1.0, 1000.0)).is_err());
    }

    #[test]
    fn semigroup_sup_decays_at_quarter_rate() {
        let g = periodic(400.0, 4096);
        let v0 = Field::from_fn(g, 0.0, "v", |x| (-x * x).exp()).unwrap();
        let series: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let t = 10.0 * 2f64.powf(i as f64 / 2.0);
                (t, apply_semigroup(&v0, t).unwrap().sup_norm())
            })
            .collect();
        let fit = decay_fit(&series, (100.0, 1e4)).unwrap();
        assert!((fit.slope + 0.25).abs() < 0.01, "{}", fit.slope);
    }
}
