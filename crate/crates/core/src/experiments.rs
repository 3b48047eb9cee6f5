//! Canned experiments: long-time decay of small slopes and the invariant
//! suite behind `validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::calculus::{differentiate, Scheme};
use crate::error::{invalid, Error, Result};
use crate::flow::{curvature_at, f_pert_at, rhs_u_expanded_with, rhs_u_with, ut_from_slope};
use crate::grid::{build_grid, Field, GridKind, GridSpec};
use crate::init::InitialData;
use crate::model::{CurvatureModel, ModelSpec};
use crate::norms::{decay_fit, z_norm_with, DecayFit, TimeRate, DEFAULT_MU};
use crate::selfsim::scaled_model;
use crate::semigroup::{apply_semigroup, kernel_profile, KernelTable, KERNEL_TOL};
use crate::solver::{integrate, picard_local, DtPolicy, Run, SchemeKind, SolverConfig};

/// Setup of a decay run on a periodic grid with the IMEX scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySetup {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub data: InitialData,
    pub solver: SolverConfig,
    /// Log-log fit window `[t1, t2]`.
    pub fit_window: (f64, f64),
    /// Order `k` of the `Z^k` norm.
    pub z_order: u32,
    /// Horizons `T` at which `sup_{t <= T}` of the Z-norm integrand is reported.
    pub horizons: Vec<f64>,
}

impl DecaySetup {
    /// Exponential model, `|v0|_{W^{1,inf}} = 0.05`, `L = 64 pi`, fit over `[10, 200]`.
    pub fn standard() -> Self {
        let mut solver = SolverConfig::new(SchemeKind::IfImexSpectral, 256.0);
        solver.dt = DtPolicy::Geometric {
            ratio: 0.01,
            dt_min: 1e-3,
            dt_max: 2.0,
        };
        Self {
            grid: GridSpec {
                kind: GridKind::Periodic,
                half_length: 64.0 * std::f64::consts::PI,
                points: 4096,
            },
            model: ModelSpec::exponential(),
            data: InitialData::GaussianSlope {
                w1inf: 0.05,
                width: 1.0,
            },
            solver,
            fit_window: (10.0, 200.0),
            z_order: 2,
            horizons: vec![32.0, 64.0, 128.0, 256.0],
        }
    }

    /// Longest time for which the slowest nonzero mode has not yet taken
    /// over: `(L / 8)^4`.
    pub fn spectral_gap_time(&self) -> f64 {
        (self.grid.half_length / 8.0).powi(4)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.data.validate()?;
        self.solver.validate()?;
        if self.grid.kind != GridKind::Periodic || self.solver.scheme != SchemeKind::IfImexSpectral {
            return Err(invalid("decay runs use the IMEX scheme on a periodic grid"));
        }
        let (t1, t2) = self.fit_window;
        if !(t1 > 0.0 && t2 > t1 && t2 <= self.solver.t_end) {
            return Err(invalid(format!(
                "fit window [{t1}, {t2}] must lie inside (0, t_end = {}]",
                self.solver.t_end
            )));
        }
        let cap = self.spectral_gap_time();
        if self.solver.t_end > cap {
            return Err(invalid(format!(
                "t_end = {} exceeds (L/8)^4 = {cap:.4e}; the periodic mean would dominate",
                self.solver.t_end
            )));
        }
        if self.z_order == 0 || self.horizons.iter().any(|&h| !(h > 0.0 && h <= self.solver.t_end)) {
            return Err(invalid("Z-norm order must be positive and horizons inside (0, t_end]"));
        }
        Ok(())
    }
}

impl Default for DecaySetup {
    fn default() -> Self {
        Self::standard()
    }
}

/// One fitted quantity `|d_x^l d_t^m u|_inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayLine {
    pub quantity: String,
    pub l: u32,
    pub m: u32,
    /// `-(l + 4m - 1)/4 - 1/4`.
    pub expected: f64,
    pub fit: DecayFit,
    pub series: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub lines: Vec<DecayLine>,
    /// `(T, sup_{t <= T} Z-integrand)` per horizon.
    pub z_norm: Vec<(f64, f64)>,
    /// Z-integrand at every stored time.
    pub z_series: Vec<(f64, f64)>,
    pub steps: usize,
}

impl DecayReport {
    pub fn line(&self, l: u32, m: u32) -> Option<&DecayLine> {
        self.lines.iter().find(|x| x.l == l && x.m == m)
    }

    /// Relative growth of the Z-norm from the first horizon to the last.
    pub fn z_growth(&self) -> f64 {
        match (self.z_norm.first(), self.z_norm.last()) {
            (Some(a), Some(b)) if a.1 > 0.0 => b.1 / a.1 - 1.0,
            _ => f64::NAN,
        }
    }
}

pub fn decay_exponent(l: u32, m: u32) -> f64 {
    -((l + 4 * m) as f64 - 1.0) / 4.0 - 0.25
}

/// Run a decay experiment and fit `u_x, u_xx, u_xxx, u_t`.
pub fn decay_experiment(setup: &DecaySetup) -> Result<(DecayReport, Run)> {
    setup.validate()?;
    let model = CurvatureModel::from_spec(&setup.model)?;
    let v0 = setup.data.state(&setup.grid, setup.solver.scheme)?;
    let run = integrate(&v0, &setup.solver, &model)?;
    if let Some(b) = &run.blow_up {
        return Err(Error::BlowUp {
            time: b.time,
            reason: b.reason.clone(),
        });
    }
    let fields: Vec<&Field> = run.trajectory.fields().filter(|f| f.time() > 0.0).collect();
    let rows = fields
        .par_iter()
        .map(|f| {
            Ok([
                f.sup_norm(),
                differentiate(f, 1, Scheme::Spectral)?.sup_norm(),
                differentiate(f, 2, Scheme::Spectral)?.sup_norm(),
                ut_from_slope(f, &model, Scheme::Spectral)?.sup_norm(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let names = [("u_x", 1, 0), ("u_xx", 2, 0), ("u_xxx", 3, 0), ("u_t", 0, 1)];
    let lines = names
        .iter()
        .enumerate()
        .map(|(i, &(name, l, m))| {
            let series: Vec<(f64, f64)> = fields.iter().zip(&rows).map(|(f, r)| (f.time(), r[i])).collect();
            Ok(DecayLine {
                quantity: name.to_string(),
                l,
                m,
                expected: decay_exponent(l, m),
                fit: decay_fit(&series, setup.fit_window)?,
                series,
            })
        })
        .collect::<Result<_>>()?;
    let horizon = setup.horizons.iter().copied().fold(0.0, f64::max);
    let z = z_norm_with(
        &run.trajectory,
        setup.z_order,
        DEFAULT_MU,
        Scheme::Spectral,
        TimeRate::Slope(&model),
        horizon,
    )?;
    let z_norm = setup
        .horizons
        .iter()
        .map(|&h| {
            let sup = z.series.iter().filter(|p| p.0 <= h * (1.0 + 1e-12)).map(|p| p.1).fold(0.0, f64::max);
            (h, sup)
        })
        .collect();
    let report = DecayReport {
        lines,
        z_norm,
        z_series: z.series,
        steps: run.steps,
    };
    Ok((report, run))
}

/// Result of one invariant check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn at_most(name: &str, measured: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            limit,
            passed: measured <= limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// Half-width of the kernel table whose mass is checked.
    pub kernel_range: f64,
    pub kernel_step: f64,
    /// Seed of the random battery for pointwise identities.
    pub seed: u64,
    pub battery: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            kernel_range: 16.0,
            kernel_step: 0.01,
            seed: 20_240_601,
            battery: 1000,
        }
    }
}

fn rel_gap(a: &Field, b: &Field) -> Result<f64> {
    Ok(a.distance(b)? / b.sup_norm().max(f64::MIN_POSITIVE))
}

/// Fast invariants of the kernel, semigroup, nonlinearity and solvers.
pub fn validate_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    if !(config.kernel_range > 0.0 && config.kernel_step > 0.0) || config.battery == 0 {
        return Err(invalid("suite needs a positive kernel range, step and battery size"));
    }
    let mut checks = Vec::new();

    let center = kernel_profile(0.0, KERNEL_TOL)?;
    checks.push(CheckOutcome::at_most(
        "kernel_center",
        (center - gamma(1.25) / std::f64::consts::PI).abs(),
        1e-6,
    ));
    let table = KernelTable::tabulate(config.kernel_range, config.kernel_step, KERNEL_TOL)?;
    checks.push(CheckOutcome::at_most("kernel_even", table.symmetry_defect(), 1e-10));
    checks.push(CheckOutcome::at_most("kernel_mass", (table.trapezoid_mass() - 1.0).abs(), 1e-4));

    let grid = build_grid(GridKind::Periodic, std::f64::consts::PI, 64)?;
    let sine = Field::from_fn(grid, 0.0, "w", |x| (3.0 * x).sin())?;
    let decayed = apply_semigroup(&sine, 0.01)?;
    let exact = sine.map("w", |w| w * (-0.01 * 81.0f64).exp())?;
    checks.push(CheckOutcome::at_most("eigenmode_decay", decayed.distance(&exact)?, 1e-12));

    let g20 = build_grid(GridKind::Periodic, 20.0, 512)?;
    let bump = Field::from_fn(g20, 0.0, "w", |x| (-x * x).exp())?;
    let twice = apply_semigroup(&apply_semigroup(&bump, 0.5)?, 1.5)?;
    let once = apply_semigroup(&bump, 2.0)?;
    checks.push(CheckOutcome::at_most("semigroup_composition", rel_gap(&twice, &once)?, 1e-10));

    let lin = CurvatureModel::linear();
    let exp = CurvatureModel::exponential();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut worst = 0.0f64;
    for _ in 0..config.battery {
        let q: f64 = rng.random_range(-1.0..1.0);
        let r: f64 = rng.random_range(-1.0..1.0);
        for m in [&lin, &exp] {
            let k = curvature_at(q, r);
            let f = f_pert_at(q, r, m);
            let form = 3.0 * q * k * k * m.fp(-k);
            worst = worst.max((f - form).abs() / f.abs().max(form.abs()).max(1e-300));
        }
    }
    checks.push(CheckOutcome::at_most("f_pert_curvature_form", worst, 1e-14));

    let mut bound_gap = f64::NEG_INFINITY;
    for sigma in [1.0, 10.0, 100.0] {
        let fs = scaled_model(&exp, sigma)?;
        let bound = exp.max_fpp(1.0 / sigma) / (2.0 * sigma);
        let dev = (0..=2000)
            .map(|i| -1.0 + i as f64 / 1000.0)
            .map(|r| (fs.f(r) - r).abs())
            .fold(0.0, f64::max);
        bound_gap = bound_gap.max(dev - bound);
    }
    checks.push(CheckOutcome::at_most("scaled_model_bound", bound_gap, 0.0));

    // expanded and divergence forms agree spectrally on a smooth small height
    let gu = build_grid(GridKind::Periodic, std::f64::consts::PI, 128)?;
    let u = Field::from_fn(gu, 0.0, "u", |x| 0.1 * x.sin() + 0.05 * (2.0 * x).cos())?;
    let div = rhs_u_with(&u, &exp, Scheme::Spectral)?;
    let expd = rhs_u_expanded_with(&u, &exp, Scheme::Spectral)?;
    checks.push(CheckOutcome::at_most("expanded_form", rel_gap(&expd, &div)?, 1e-10));

    let gm = build_grid(GridKind::Periodic, std::f64::consts::PI, 64)?;
    let data = InitialData::GaussianSlope { w1inf: 0.1, width: 0.5 };
    let v0 = data.state(&gm, SchemeKind::IfImexSpectral)?;
    let mut cfg = SolverConfig::new(SchemeKind::IfImexSpectral, 1.0);
    cfg.dt = DtPolicy::Fixed { dt: 1e-3 };
    let mut drift = 0.0f64;
    for m in [&lin, &exp] {
        let run = integrate(&v0, &cfg, m)?;
        let end = run.trajectory.last().ok_or_else(|| invalid("empty run"))?;
        drift = drift.max((end.mean() - v0.mean()).abs() / v0.mean().abs());
    }
    checks.push(CheckOutcome::at_most("mass_drift", drift, 1e-8));

    let gp = build_grid(GridKind::Periodic, 8.0, 128)?;
    let small = InitialData::GaussianSlope { w1inf: 0.05, width: 1.0 }.state(&gp, SchemeKind::IfImexSpectral)?;
    let picard = picard_local(&small, 0.1, 40, &exp)?;
    let factor = if picard.converged { picard.max_factor() } else { f64::INFINITY };
    checks.push(CheckOutcome::at_most("picard_contraction", factor, 0.5));

    Ok(SuiteReport {
        seed: config.seed,
        checks,
    })
}
