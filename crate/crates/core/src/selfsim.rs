//! Ramp data, parabolic rescaling `u^s(x, t) = u(s x, s^4 t) / s`, scaled
//! curvature models and self-similar profiles `U(x, t) = t^{1/4} Phi(x t^{-1/4})`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{derivative_stack, Scheme};
use crate::error::{invalid, Error, Result};
use crate::flow::ut_from_slope;
use crate::grid::{build_grid, sup_norm, Field, GridKind, GridSpec};
use crate::init::InitialData;
use crate::model::CurvatureModel;
use crate::semigroup::abs_ramp_response;
use crate::solver::{integrate, BlowUpReport, DtPolicy, SchemeKind, SolverConfig};
use crate::spectral::Spectral;
use crate::trajectory::{Retention, Trajectory};

/// Largest far-field slope accepted for ramp data.
pub const MAX_RAMP_SLOPE: f64 = 0.3;

const PROFILE_TOL: f64 = 1e-12;

/// Far-field slopes `a` (right) and `b` (left) with a smoothing width `w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_width")]
    pub w: f64,
}

fn default_width() -> f64 {
    1.0
}

impl RampSpec {
    pub fn new(a: f64, b: f64, w: f64) -> Result<Self> {
        let r = Self { a, b, w };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.abs() <= MAX_RAMP_SLOPE && self.b.abs() <= MAX_RAMP_SLOPE) {
            return Err(invalid(format!(
                "ramp slopes must satisfy |a|, |b| <= {MAX_RAMP_SLOPE}, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(invalid(format!("smoothing width must be positive, got {}", self.w)));
        }
        Ok(())
    }

    /// The exact ramp `a x+ - b x-`.
    pub fn exact(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.a * x
        } else {
            self.b * x
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Profile {
    pub fn sup_distance(&self, other: &Profile) -> Result<f64> {
        if self.ys.len() != other.ys.len() || self.ys.iter().zip(&other.ys).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(invalid("profiles are sampled at different points"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

/// `n` equispaced points covering `[-y_max, y_max]`, both ends included.
pub fn symmetric_points(y_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| -y_max + 2.0 * y_max * i as f64 / (n - 1) as f64).collect()
}

/// `f_s(r) = s f(r / s)`.
pub fn scaled_model(model: &CurvatureModel, sigma: f64) -> Result<CurvatureModel> {
    model.scaled(sigma)
}

/// Height `u(x) = value + int_anchor^x v` from a slope field.
///
/// Periodic slopes are split into their mean and a periodic part integrated
/// spectrally, so `u` grows like `mean * x`. Truncated slopes use the
/// trapezoid rule.
pub fn height_from_slope(v: &Field, anchor: f64, value: f64) -> Result<Field> {
    let grid = *v.grid();
    let idx = grid
        .nearest_index(anchor)
        .ok_or_else(|| invalid(format!("anchor {anchor} lies outside the grid")))?;
    let xs = grid.nodes();
    let mut u: Vec<f64> = if grid.is_periodic() {
        let mean = v.mean();
        let zero_mean: Vec<f64> = v.values().iter().map(|x| x - mean).collect();
        let p = Spectral::new(&grid).antiderivative(&zero_mean);
        p.iter().zip(&xs).map(|(p, x)| p + mean * x).collect()
    } else {
        let dx = grid.dx();
        let vals = v.values();
        let mut acc = vec![0.0; vals.len()];
        for j in 1..vals.len() {
            acc[j] = acc[j - 1] + 0.5 * dx * (vals[j - 1] + vals[j]);
        }
        acc
    };
    let shift = value - u[idx] - (anchor - xs[idx]) * v.values()[idx];
    u.iter_mut().for_each(|x| *x += shift);
    v.with_values(u, "u")
}

/// Linear interpolation of a field at `x`; periodic grids wrap.
fn sample(field: &Field, x: f64) -> Result<f64> {
    let g = field.grid();
    let n = g.points;
    let vals = field.values();
    let s = (x + g.half_length) / g.dx();
    if g.is_periodic() {
        let s = s.rem_euclid(n as f64);
        let j = (s.floor() as usize).min(n - 1);
        let f = s - j as f64;
        Ok((1.0 - f) * vals[j] + f * vals[(j + 1) % n])
    } else {
        let last = (n - 1) as f64;
        if s < -1e-9 || s > last + 1e-9 {
            return Err(Error::Insufficient(format!(
                "x = {x} lies outside the grid [{}, {}]",
                g.node(0),
                g.node(n - 1)
            )));
        }
        let s = s.clamp(0.0, last);
        let j = (s.floor() as usize).min(n - 2);
        let f = s - j as f64;
        Ok((1.0 - f) * vals[j] + f * vals[j + 1])
    }
}

/// Values at `xs` and time `t`, interpolating linearly between the two
/// snapshots that bracket `t`.
fn sample_at_time(traj: &Trajectory, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let fields: Vec<&Field> = traj.fields().collect();
    let (first, last) = match (fields.first(), fields.last()) {
        (Some(a), Some(b)) => (a.time(), b.time()),
        _ => return Err(Error::Insufficient("empty trajectory".into())),
    };
    let tol = 1e-9 * t.abs().max(1e-300);
    if t < first - tol || t > last + tol {
        return Err(Error::Insufficient(format!(
            "t = {t} lies outside the trajectory span [{first}, {last}]"
        )));
    }
    if let Some(exact) = traj.at(t) {
        return xs.iter().map(|&x| sample(exact, x)).collect();
    }
    let k = fields.iter().position(|f| f.time() > t).unwrap_or(fields.len() - 1);
    let (f0, f1) = (fields[k - 1], fields[k]);
    let theta = (t - f0.time()) / (f1.time() - f0.time());
    xs.iter()
        .map(|&x| Ok((1.0 - theta) * sample(f0, x)? + theta * sample(f1, x)?))
        .collect()
}

/// A compact space-time window `[-half_width, half_width] x times`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleWindow {
    pub half_width: f64,
    pub points: usize,
    pub times: Vec<f64>,
}

impl RescaleWindow {
    /// `[-2, 2] x [1/4, 1]` with the given samples.
    pub fn standard(points: usize, times: usize) -> Self {
        let times = (0..times.max(2))
            .map(|i| 0.25 * 4f64.powf(i as f64 / (times.max(2) - 1) as f64))
            .collect();
        Self {
            half_width: 2.0,
            points,
            times,
        }
    }

    /// Sample points: the nodes of the truncated grid over `[-half_width, half_width)`.
    pub fn xs(&self) -> Vec<f64> {
        self.grid().map(|g| g.nodes()).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || self.points < crate::grid::MIN_POINTS || self.times.is_empty() {
            return Err(invalid(format!(
                "rescale window needs a positive width, {} points and a time",
                crate::grid::MIN_POINTS
            )));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid("rescale window times must be positive"));
        }
        Ok(())
    }

    fn grid(&self) -> Result<GridSpec> {
        build_grid(GridKind::Truncated, self.half_width, self.points)
    }
}

/// `s^{-degree} f(s x, s^4 t)` sampled on a window; `degree = 1` gives `u^s`
/// from heights, `degree = 1 - l` its `l`-th derivative from `d_x^l u`.
pub fn rescale_field(traj: &Trajectory, sigma: f64, window: &RescaleWindow, degree: i32) -> Result<Trajectory> {
    if !(sigma >= 1.0 && sigma.is_finite()) {
        return Err(invalid(format!("rescaling factor must be >= 1, got {sigma}")));
    }
    window.validate()?;
    let grid = window.grid()?;
    let xs = window.xs();
    let scaled_xs: Vec<f64> = xs.iter().map(|x| sigma * x).collect();
    let amp = sigma.powi(-degree);
    let s4 = sigma.powi(4);
    let mut times = window.times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let fields = times
        .iter()
        .map(|&t| {
            let vals = sample_at_time(traj, s4 * t, &scaled_xs)?;
            Field::new(grid, vals.into_iter().map(|v| amp * v).collect(), t, "u_sigma")
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_fields(fields)
}

/// `u^s(x, t) = u(s x, s^4 t) / s` of a height trajectory on a window.
pub fn rescale_solution(traj: &Trajectory, sigma: f64, window: &RescaleWindow) -> Result<Trajectory> {
    rescale_field(traj, sigma, window, 1)
}

/// `Phi(y) = t^{-1/4} u(t^{1/4} y, t)` at the requested `ys`.
pub fn extract_profile(traj: &Trajectory, t: f64, ys: &[f64]) -> Result<Profile> {
    if !(t > 0.0) {
        return Err(invalid(format!("profiles need t > 0, got {t}")));
    }
    let s = t.powf(0.25);
    if let Some(f) = traj.first() {
        let reach = f.grid().half_length / s;
        if let Some(y) = ys.iter().find(|y| y.abs() > reach) {
            return Err(Error::Insufficient(format!(
                "y = {y} exceeds the reach t^(-1/4) L = {reach}"
            )));
        }
    }
    let xs: Vec<f64> = ys.iter().map(|y| s * y).collect();
    let values = sample_at_time(traj, t, &xs)?.into_iter().map(|u| u / s).collect();
    Ok(Profile {
        ys: ys.to_vec(),
        values,
        time: t,
    })
}

/// Unit-time biharmonic response to the exact ramp:
/// `Phi_lin(y) = (a+b)/2 y + (a-b)/2 [exp(-d^4)|.|](y)`.
pub fn linear_profile(ramp: &RampSpec, ys: &[f64]) -> Result<Profile> {
    ramp.validate()?;
    let mean = 0.5 * (ramp.a + ramp.b);
    let half = 0.5 * (ramp.a - ramp.b);
    let values = ys
        .par_iter()
        .map(|&y| Ok(mean * y + half * abs_ramp_response(y, PROFILE_TOL)?))
        .collect::<Result<_>>()?;
    Ok(Profile {
        ys: ys.to_vec(),
        values,
        time: 1.0,
    })
}

/// Heights and their first two derivatives for every snapshot of a run.
///
/// IMEX runs store slopes; their heights are pinned at `anchor`, where the
/// exact ramp value is imposed. The anchor should sit where the profile is
/// flat for the whole run; [`anchor_drift`] measures how well that holds.
pub fn height_derivatives(traj: &Trajectory, scheme: SchemeKind, ramp: &RampSpec, anchor: f64) -> Result<[Trajectory; 3]> {
    let mut out: [Vec<Field>; 3] = Default::default();
    for f in traj.fields() {
        let grid = *f.grid();
        let stack = match scheme {
            SchemeKind::IfImexSpectral => {
                let u = height_from_slope(f, anchor, ramp.exact(anchor))?;
                let vx = derivative_stack(f.values(), &grid, 1, Scheme::Spectral).swap_remove(1);
                vec![u.into_values(), f.values().to_vec(), vx]
            }
            SchemeKind::SemiImplicitFd => derivative_stack(f.values(), &grid, 2, Scheme::Central),
        };
        for (l, vals) in stack.into_iter().enumerate() {
            out[l].push(Field::new(grid, vals, f.time(), ["u", "u_x", "u_xx"][l])?);
        }
    }
    let [a, b, c] = out;
    Ok([
        Trajectory::from_fields(a)?,
        Trajectory::from_fields(b)?,
        Trajectory::from_fields(c)?,
    ])
}

/// `max_t t |u_t(anchor, t)|` over the snapshots of a slope run, a bound on
/// how far the pinned height may have moved.
pub fn anchor_drift(traj: &Trajectory, model: &CurvatureModel, anchor: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for f in traj.fields() {
        let idx = f
            .grid()
            .nearest_index(anchor)
            .ok_or_else(|| invalid(format!("anchor {anchor} lies outside the grid")))?;
        let ut = ut_from_slope(f, model, Scheme::Spectral)?;
        worst = worst.max(f.time() * ut.values()[idx].abs());
    }
    Ok(worst)
}

/// Setup shared by every run of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySetup {
    pub grid: GridSpec,
    pub data: InitialData,
    pub solver: SolverConfig,
    /// Where IMEX heights are pinned to the exact ramp.
    pub anchor: f64,
    pub window: RescaleWindow,
    /// The reference `U` is the linear-model run rescaled by this factor.
    pub reference_sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub sigma: f64,
    /// `sup_K |d_x^l u^s - d_x^l U|` for `l = 0, 1, 2`.
    pub discrepancy: [f64; 3],
    pub steps: usize,
    pub anchor_drift: f64,
    /// `u^s` at the last window time.
    pub profile: Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub reference_sigma: f64,
    pub rows: Vec<StudyRow>,
}

/// Scales of the default study.
pub const STUDY_SIGMAS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

impl Default for StudySetup {
    fn default() -> Self {
        Self::standard()
    }
}

impl StudySetup {
    /// `a = -b = 0.1` relaxed with `w = 1/2` on a periodic grid of half-length
    /// `128 pi`, IMEX with geometric steps, reference scale 32.
    pub fn standard() -> Self {
        let half = 128.0 * std::f64::consts::PI;
        let mut solver = SolverConfig::new(SchemeKind::IfImexSpectral, 1.0);
        solver.dt = DtPolicy::Geometric {
            ratio: 0.01,
            dt_min: 1e-3,
            dt_max: 1e3,
        };
        Self {
            grid: GridSpec {
                kind: GridKind::Periodic,
                half_length: half,
                points: 16384,
            },
            data: InitialData::RelaxedRamp(RampSpec { a: 0.1, b: -0.1, w: 0.5 }),
            solver,
            anchor: 0.5 * half,
            window: RescaleWindow::standard(64, 5),
            reference_sigma: 32.0,
        }
    }

    fn ramp(&self) -> Result<RampSpec> {
        match &self.data {
            InitialData::SmoothedRamp(r) | InitialData::RelaxedRamp(r) => Ok(*r),
            _ => Err(invalid("convergence studies need ramp initial data")),
        }
    }

    /// Run `model` to `s^4 max(times)` and rescale `u`, `u_x`, `u_xx` onto the window.
    pub fn rescaled_run(&self, model: &CurvatureModel, sigma: f64) -> Result<([Trajectory; 3], usize, f64)> {
        let ramp = self.ramp()?;
        let s4 = sigma.powi(4);
        let t_max = self.window.times.iter().copied().fold(0.0, f64::max);
        let mut cfg = self.solver.clone();
        cfg.t_end = s4 * t_max;
        cfg.retention = Retention::All;
        cfg.snapshots.per_octave = 0;
        cfg.snapshots.extra = self.window.times.iter().map(|t| s4 * t).collect();
        let initial = self.data.state(&self.grid, cfg.scheme)?.with_time(self.data.start_time())?;
        let run = integrate(&initial, &cfg, model)?;
        if let Some(BlowUpReport { time, reason, .. }) = run.blow_up {
            return Err(Error::BlowUp { time, reason });
        }
        let drift = match cfg.scheme {
            SchemeKind::IfImexSpectral => anchor_drift(&run.trajectory, model, self.anchor)?,
            SchemeKind::SemiImplicitFd => 0.0,
        };
        let [u, ux, uxx] = height_derivatives(&run.trajectory, cfg.scheme, &ramp, self.anchor)?;
        Ok((
            [
                rescale_field(&u, sigma, &self.window, 1)?,
                rescale_field(&ux, sigma, &self.window, 0)?,
                rescale_field(&uxx, sigma, &self.window, -1)?,
            ],
            run.steps,
            drift,
        ))
    }
}

fn sup_gap(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let mut worst = 0.0f64;
    for (x, y) in a.fields().zip(b.fields()) {
        worst = worst.max(x.distance(y)?);
    }
    Ok(worst)
}

/// `sup_K |d^l u^s - d^l U|` for each `s`, where `U` is the linear-model run
/// rescaled by `setup.reference_sigma` and `u` is the run under `model`.
/// Runs are independent and execute in parallel.
pub fn convergence_study(setup: &StudySetup, model: &CurvatureModel, sigmas: &[f64]) -> Result<StudyReport> {
    setup.ramp()?;
    let linear = CurvatureModel::linear();
    let mut jobs: Vec<(f64, &CurvatureModel)> = vec![(setup.reference_sigma, &linear)];
    jobs.extend(sigmas.iter().map(|&s| (s, model)));
    let mut results = jobs
        .par_iter()
        .map(|&(s, m)| setup.rescaled_run(m, s))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let (reference, _, _) = results.next().expect("reference job");
    let rows = sigmas
        .iter()
        .zip(results)
        .map(|(&sigma, (fields, steps, anchor_drift))| {
            let mut discrepancy = [0.0; 3];
            for l in 0..3 {
                discrepancy[l] = sup_gap(&fields[l], &reference[l])?;
            }
            let last = fields[0].last().ok_or_else(|| invalid("empty rescaled trajectory"))?;
            Ok(StudyRow {
                sigma,
                discrepancy,
                steps,
                anchor_drift,
                profile: Profile {
                    ys: setup.window.xs(),
                    values: last.values().to_vec(),
                    time: last.time(),
                },
            })
        })
        .collect::<Result<_>>()?;
    Ok(StudyReport {
        reference_sigma: setup.reference_sigma,
        rows,
    })
}
