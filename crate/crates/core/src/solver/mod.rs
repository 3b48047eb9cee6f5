//! Time integration of the flow.
//!
//! Two schemes are provided:
//! * `IfImexSpectral` advances the slope `v = u_x` on a periodic grid with a
//!   first-order exponential integrator: the biharmonic part is exact and
//!   `(alpha v_xx + F)_xx` is frozen over each step.
//! * `SemiImplicitFd` advances the height `u` on a truncated grid, treating
//!   `-A u_xxxx` implicitly with `A` frozen and `B` explicitly, via a
//!   pentadiagonal solve.

mod imex;
mod picard;
mod semi_implicit;

pub use imex::{step_if_imex, ImexStepper};
pub use picard::{picard_local, picard_local_with, PicardReport};
pub use semi_implicit::{step_semi_implicit, FarField, SemiImplicitStepper};

use serde::{Deserialize, Serialize};

use crate::calculus::central_derivative;
use crate::error::{invalid, Error, Result};
use crate::flow::{check_smallness, DEFAULT_DELTA0, DEFAULT_EPS0};
use crate::grid::{sup_norm, Field, GridKind};
use crate::model::CurvatureModel;
use crate::spectral::Spectral;
use crate::trajectory::{Retention, SnapshotInfo, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    IfImexSpectral,
    SemiImplicitFd,
}

impl SchemeKind {
    /// Name of the field the scheme evolves.
    pub fn state_label(self) -> &'static str {
        match self {
            SchemeKind::IfImexSpectral => "v",
            SchemeKind::SemiImplicitFd => "u",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed {
        dt: f64,
    },
    /// `safety * min(dx^4, 1/4)` (IMEX) or `safety * dx^2` (semi-implicit).
    #[default]
    Safety,
    /// `dt = clamp(ratio * t, dt_min, dt_max)`, for long self-similar runs.
    Geometric {
        ratio: f64,
        dt_min: f64,
        dt_max: f64,
    },
}

/// Geometric snapshot schedule `base * 2^{i / per_octave}` plus explicit times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSchedule {
    pub per_octave: usize,
    pub base: f64,
    #[serde(default)]
    pub extra: Vec<f64>,
}

impl Default for SnapshotSchedule {
    fn default() -> Self {
        Self {
            per_octave: 16,
            base: 1.0 / 16.0,
            extra: Vec::new(),
        }
    }
}

impl SnapshotSchedule {
    /// Sorted snapshot times in `(t_start, t_end]`, always including `t_end`.
    pub fn times(&self, t_start: f64, t_end: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        if self.per_octave > 0 && self.base > 0.0 {
            let per = self.per_octave as f64;
            let mut i = ((t_start.max(f64::MIN_POSITIVE) / self.base).log2() * per).floor() as i64;
            loop {
                let t = self.base * 2f64.powf(i as f64 / per);
                if t > t_end {
                    break;
                }
                if t > t_start {
                    out.push(t);
                }
                i += 1;
            }
        }
        out.extend(self.extra.iter().copied().filter(|&t| t > t_start && t <= t_end));
        out.push(t_end);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        out
    }
}

fn default_safety() -> f64 {
    1.0
}
fn default_eps0() -> f64 {
    DEFAULT_EPS0
}
fn default_delta0() -> f64 {
    DEFAULT_DELTA0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: SchemeKind,
    #[serde(default)]
    pub dt: DtPolicy,
    pub t_end: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default)]
    pub retention: Retention,
    #[serde(default)]
    pub snapshots: SnapshotSchedule,
}

impl SolverConfig {
    pub fn new(scheme: SchemeKind, t_end: f64) -> Self {
        Self {
            scheme,
            dt: DtPolicy::Safety,
            t_end,
            safety: 1.0,
            eps0: DEFAULT_EPS0,
            delta0: DEFAULT_DELTA0,
            retention: Retention::Dyadic,
            snapshots: SnapshotSchedule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid(format!("t_end must be finite and nonnegative, got {}", self.t_end)));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(invalid(format!("safety factor must lie in (0, 1], got {}", self.safety)));
        }
        match self.dt {
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                Err(invalid(format!("fixed dt must be positive, got {dt}")))
            }
            DtPolicy::Geometric { ratio, dt_min, dt_max }
                if !(ratio > 0.0 && dt_min > 0.0 && dt_max >= dt_min && dt_max.is_finite()) =>
            {
                Err(invalid("geometric dt needs ratio > 0 and 0 < dt_min <= dt_max"))
            }
            _ => Ok(()),
        }
    }

    /// Step size proposed at time `t` on a grid with spacing `dx`.
    pub fn dt_at(&self, t: f64, dx: f64) -> f64 {
        match self.dt {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Safety => match self.scheme {
                SchemeKind::IfImexSpectral => self.safety * dx.powi(4).min(0.25),
                SchemeKind::SemiImplicitFd => self.safety * dx * dx,
            },
            DtPolicy::Geometric { ratio, dt_min, dt_max } => (ratio * t).clamp(dt_min, dt_max),
        }
    }
}

/// Diagnostic for an aborted run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUpReport {
    pub time: f64,
    pub reason: String,
    /// Last accepted state before the failing step.
    pub last: Field,
}

/// Result of [`integrate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub trajectory: Trajectory,
    pub steps: usize,
    pub blow_up: Option<BlowUpReport>,
}

impl Run {
    pub fn completed(&self) -> bool {
        self.blow_up.is_none()
    }
}

/// Slope and its derivative for the stored state of a scheme.
pub fn slope_pair(state: &Field, scheme: SchemeKind) -> Result<(Field, Field)> {
    let grid = *state.grid();
    match scheme {
        SchemeKind::IfImexSpectral => {
            let vx = Spectral::new(&grid).derivative(state.values(), 1);
            Ok((state.clone().with_label("v"), state.with_values(vx, "v_x")?))
        }
        SchemeKind::SemiImplicitFd => {
            let v = central_derivative(state.values(), grid.dx(), 1, false);
            let vx = central_derivative(state.values(), grid.dx(), 2, false);
            Ok((state.with_values(v, "v")?, state.with_values(vx, "v_x")?))
        }
    }
}

fn snapshot_info(state: &Field, config: &SolverConfig, model: &CurvatureModel) -> Result<SnapshotInfo> {
    let (v, vx) = slope_pair(state, config.scheme)?;
    let smallness = check_smallness(&v, &vx, config.eps0, model)?;
    Ok(SnapshotInfo {
        smallness,
        mass: v.mean(),
    })
}

enum Stepper {
    Imex(ImexStepper),
    Semi(SemiImplicitStepper),
}

impl Stepper {
    fn step(&mut self, state: &[f64], dt: f64, time: f64) -> Result<Vec<f64>> {
        match self {
            Stepper::Imex(s) => s.step(state, dt, time),
            Stepper::Semi(s) => s.step(state, dt, time),
        }
    }

    // sup |v| of a state, for the doubling test
    fn sup_slope(&self, state: &[f64], dx: f64) -> f64 {
        match self {
            Stepper::Imex(_) => sup_norm(state),
            Stepper::Semi(_) => sup_norm(&central_derivative(state, dx, 1, false)),
        }
    }
}

/// Integrate from `initial` (slope `v` for the IMEX scheme, height `u` for
/// the semi-implicit one) to `config.t_end`.
///
/// The run starts at `initial.time()`. Snapshots follow
/// `config.snapshots`, steps are shortened to land on them. Blow-up (a
/// non-finite state, the curvature guard of the model, or `sup|v|` more than
/// doubling in one step) stops the run and is reported in [`Run::blow_up`].
pub fn integrate(initial: &Field, config: &SolverConfig, model: &CurvatureModel) -> Result<Run> {
    config.validate()?;
    let grid = *initial.grid();
    let mut stepper = match (config.scheme, grid.kind) {
        (SchemeKind::IfImexSpectral, GridKind::Periodic) => Stepper::Imex(ImexStepper::new(&grid, model.clone())),
        (SchemeKind::SemiImplicitFd, GridKind::Truncated) => {
            Stepper::Semi(SemiImplicitStepper::new(&grid, model.clone(), FarField::from_height(initial)))
        }
        (SchemeKind::IfImexSpectral, _) => {
            return Err(Error::SchemeMismatch {
                scheme: "if_imex_spectral",
                required: "periodic",
            })
        }
        (SchemeKind::SemiImplicitFd, _) => {
            return Err(Error::SchemeMismatch {
                scheme: "semi_implicit_fd",
                required: "truncated",
            })
        }
    };
    let label = config.scheme.state_label();
    let t0 = initial.time();
    if config.t_end < t0 {
        return Err(invalid(format!("t_end = {} precedes the initial time {t0}", config.t_end)));
    }
    let mut traj = Trajectory::new(config.retention);
    let start = initial.clone().with_label(label);
    traj.push(start.clone(), Some(snapshot_info(&start, config, model)?))?;

    let dx = grid.dx();
    let mut state = start.into_values();
    let mut t = t0;
    let mut steps = 0usize;
    let mut sup_prev = stepper.sup_slope(&state, dx);
    let abort = |traj: Trajectory, steps, state: Vec<f64>, t: f64, err: Error| -> Result<Run> {
        match err {
            Error::BlowUp { time, reason } => Ok(Run {
                trajectory: traj,
                steps,
                blow_up: Some(BlowUpReport {
                    time,
                    reason,
                    last: Field::new(grid, state, t, label)?,
                }),
            }),
            other => Err(other),
        }
    };

    for target in config.snapshots.times(t0, config.t_end) {
        while t < target {
            let mut dt = config.dt_at(t, dx);
            let remaining = target - t;
            if dt >= remaining || remaining - dt < 1e-9 * dt {
                dt = remaining;
            }
            let next = match stepper.step(&state, dt, t) {
                Ok(n) => n,
                Err(e) => return abort(traj, steps, state, t, e),
            };
            let sup_next = stepper.sup_slope(&next, dx);
            let reason = if next.iter().any(|v| !v.is_finite()) {
                Some("non-finite state".to_string())
            } else if sup_next > 2.0 * sup_prev && sup_next > 1e-8 {
                Some(format!("sup|v| grew from {sup_prev:.3e} to {sup_next:.3e} in one step"))
            } else {
                None
            };
            if let Some(reason) = reason {
                return abort(traj, steps, state, t, Error::BlowUp { time: t + dt, reason });
            }
            state = next;
            sup_prev = sup_next;
            t = if dt == remaining { target } else { t + dt };
            steps += 1;
        }
        let field = Field::new(grid, state.clone(), t, label)?;
        let info = match snapshot_info(&field, config, model) {
            Ok(i) => i,
            Err(e) => return abort(traj, steps, state, t, e),
        };
        traj.push(field, Some(info))?;
    }
    Ok(Run {
        trajectory: traj,
        steps,
        blow_up: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use std::f64::consts::PI;

    #[test]
    fn schedule_includes_end_and_extras() {
        let s = SnapshotSchedule {
            per_octave: 2,
            base: 1.0,
            extra: vec![3.0],
        };
        let t = s.times(0.5, 4.0);
        let expect = [0.5f64.sqrt(), 1.0, 2f64.sqrt(), 2.0, 2.0 * 2f64.sqrt(), 3.0, 4.0];
        assert_eq!(t.len(), expect.len());
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn config_round_trip_and_validation() {
        let mut c = SolverConfig::new(SchemeKind::IfImexSpectral, 2.0);
        c.dt = DtPolicy::Geometric {
            ratio: 0.01,
            dt_min: 1e-4,
            dt_max: 1.0,
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SolverConfig>(&s).unwrap(), c);
        c.safety = 0.0;
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<SolverConfig>(r#"{"scheme":"if_imex_spectral","t_end":1,"bogus":1}"#).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = build_grid(GridKind::Periodic, PI, 32).unwrap();
        let v0 = Field::zeros(g, 0.0, "v");
        let mut c = SolverConfig::new(SchemeKind::IfImexSpectral, 1.0);
        c.dt = DtPolicy::Fixed { dt: 0.05 };
        let run = integrate(&v0, &c, &CurvatureModel::exponential()).unwrap();
        assert!(run.completed());
        assert!(run.trajectory.fields().all(|f| f.sup_norm() == 0.0));
    }

    #[test]
    fn scheme_grid_mismatch() {
        let g = build_grid(GridKind::Truncated, PI, 32).unwrap();
        let v0 = Field::zeros(g, 0.0, "v");
        let c = SolverConfig::new(SchemeKind::IfImexSpectral, 1.0);
        assert!(matches!(
            integrate(&v0, &c, &CurvatureModel::linear()),
            Err(Error::SchemeMismatch { .. })
        ));
    }

    #[test]
    fn small_sine_decays_monotonically_and_conserves_mass() {
        let g = build_grid(GridKind::Periodic, PI, 64).unwrap();
        let v0 = Field::from_fn(g, 0.0, "v", |x| 0.05 * x.sin() + 0.01).unwrap();
        let mut c = SolverConfig::new(SchemeKind::IfImexSpectral, 2.0);
        c.dt = DtPolicy::Fixed { dt: 1e-3 };
        c.retention = Retention::All;
        let run = integrate(&v0, &c, &CurvatureModel::linear()).unwrap();
        let sups: Vec<f64> = run.trajectory.fields().map(|f| f.sup_norm() - 0.01).collect();
        assert!(sups.windows(2).all(|w| w[1] <= w[0]));
        let last = run.trajectory.last().unwrap();
        // single mode, small amplitude: close to linear theory
        assert!(((last.sup_norm() - 0.01) / (0.05 * (-2.0f64).exp()) - 1.0).abs() < 0.05);
        for s in run.trajectory.snapshots() {
            let m = s.info.as_ref().unwrap().mass;
            assert!((m - 0.01).abs() < 1e-8 * 0.06);
        }
    }

    #[test]
    fn exponential_blow_up_is_reported() {
        let g = build_grid(GridKind::Periodic, PI, 512).unwrap();
        let v0 = Field::from_fn(g, 0.0, "v", |x| (100.0 * x).sin()).unwrap();
        let mut c = SolverConfig::new(SchemeKind::IfImexSpectral, 1.0);
        c.dt = DtPolicy::Fixed { dt: 1e-3 };
        let run = integrate(&v0, &c, &CurvatureModel::exponential()).unwrap();
        let b = run.blow_up.expect("blow-up");
        assert!(b.reason.contains("kappa"));
        assert_eq!(run.trajectory.len(), 1);
        assert_eq!(b.last.time(), 0.0);
    }
}
