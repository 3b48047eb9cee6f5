//! The subcommands. Each returns the exit code once its outputs are written.

use serde::Serialize;

use sdflow_core::experiments::{decay_experiment, validate_suite};
use sdflow_core::semigroup::{kernel_profile, kernel_profile_derivative};
use sdflow_core::solver::SchemeKind;
use sdflow_core::{convergence_study, integrate, CurvatureModel, Field};

use crate::config::{DecayConfig, KernelConfig, RescaleConfig, SelfsimConfig, SimulateConfig, ValidateConfig};
use crate::exit::{CliError, Code};
use crate::output::Output;

fn grid_meta(f: &Field) -> Vec<(&'static str, String)> {
    let g = f.grid();
    vec![
        ("t", format!("{}", f.time())),
        ("label", f.label().to_string()),
        ("grid", format!("{} L={} N={}", g.kind.as_str(), g.half_length, g.points)),
    ]
}

#[derive(Serialize)]
struct SnapshotEntry {
    index: usize,
    time: f64,
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    smallness_ok: Option<bool>,
}

#[derive(Serialize)]
struct TrajectoryIndex {
    state: &'static str,
    steps: usize,
    snapshots: Vec<SnapshotEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blow_up: Option<BlowUpEntry>,
}

#[derive(Serialize)]
struct BlowUpEntry {
    time: f64,
    reason: String,
}

pub fn simulate(cfg: &SimulateConfig, out: &mut Output) -> Result<Code, CliError> {
    cfg.grid.validate()?;
    cfg.solver.validate()?;
    let model = CurvatureModel::from_spec(&cfg.model)?;
    let initial = cfg
        .data
        .state(&cfg.grid, cfg.solver.scheme)?
        .with_time(cfg.data.start_time())?;
    let run = integrate(&initial, &cfg.solver, &model)?;
    let stem = format!("simulate_{}", out.hash());
    let mut snapshots = Vec::new();
    for (i, snap) in run.trajectory.snapshots().iter().enumerate() {
        let f = &snap.field;
        let file = format!("{stem}_snap{i:04}.csv");
        let rows = f.grid().nodes().into_iter().zip(f.values().iter().copied());
        out.csv(&file, &grid_meta(f), &["x", "value"], rows)?;
        snapshots.push(SnapshotEntry {
            index: i,
            time: f.time(),
            file,
            mass: snap.info.as_ref().map(|s| s.mass),
            smallness_ok: snap.info.as_ref().map(|s| s.smallness.ok),
        });
    }
    let blow_up = run.blow_up.as_ref().map(|b| BlowUpEntry {
        time: b.time,
        reason: b.reason.clone(),
    });
    let index = TrajectoryIndex {
        state: cfg.solver.scheme.state_label(),
        steps: run.steps,
        snapshots,
        blow_up,
    };
    out.json(&format!("{stem}_trajectory.json"), &index)?;
    match &run.blow_up {
        Some(b) => {
            eprintln!("blow-up at t = {}: {}", b.time, b.reason);
            Ok(Code::BlowUp)
        }
        None => {
            println!(
                "simulate: {} steps, {} snapshots to t = {}",
                run.steps,
                run.trajectory.len(),
                cfg.solver.t_end
            );
            Ok(Code::Ok)
        }
    }
}

pub fn kernel(cfg: &KernelConfig, out: &mut Output) -> Result<Code, CliError> {
    if !(cfg.range >= 0.0 && cfg.step > 0.0 && cfg.range.is_finite()) {
        return Err(CliError::config("kernel needs range >= 0 and step > 0"));
    }
    let count = (cfg.range / cfg.step).round() as usize;
    let mut rows = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let y = i as f64 * cfg.step;
        rows.push((
            y,
            kernel_profile(y, cfg.tolerance)?,
            kernel_profile_derivative(y, 1, cfg.tolerance)?,
        ));
    }
    let meta = [("tolerance", format!("{:e}", cfg.tolerance))];
    let name = out.name("kernel", "csv");
    out.csv(&name, &meta, &["y", "bbar", "dbbar"], &rows)?;
    println!("kernel: {} rows", rows.len());
    Ok(Code::Ok)
}

#[derive(Serialize)]
struct FitEntry<'a> {
    quantity: &'a str,
    l: u32,
    m: u32,
    slope: f64,
    expected: f64,
    intercept: f64,
    residual: f64,
    points: usize,
}

#[derive(Serialize)]
struct DecaySummary<'a> {
    fit_window: (f64, f64),
    fits: Vec<FitEntry<'a>>,
    z_order: u32,
    z_norm: &'a [(f64, f64)],
    z_growth: f64,
    steps: usize,
}

pub fn decay(cfg: &DecayConfig, out: &mut Output) -> Result<Code, CliError> {
    let (report, _) = decay_experiment(cfg)?;
    let summary = DecaySummary {
        fit_window: cfg.fit_window,
        fits: report
            .lines
            .iter()
            .map(|l| FitEntry {
                quantity: &l.quantity,
                l: l.l,
                m: l.m,
                slope: l.fit.slope,
                expected: l.expected,
                intercept: l.fit.intercept,
                residual: l.fit.residual,
                points: l.fit.points,
            })
            .collect(),
        z_order: cfg.z_order,
        z_norm: &report.z_norm,
        z_growth: report.z_growth(),
        steps: report.steps,
    };
    let name = out.name("decay", "json");
    out.json(&name, &summary)?;
    let mut header = vec!["t"];
    header.extend(report.lines.iter().map(|l| l.quantity.as_str()));
    let rows: Vec<Vec<f64>> = (0..report.lines[0].series.len())
        .map(|i| {
            let mut row = vec![report.lines[0].series[i].0];
            row.extend(report.lines.iter().map(|l| l.series[i].1));
            row
        })
        .collect();
    let series = out.name("decay_series", "csv");
    out.csv(&series, &[], &header, rows)?;
    let z = out.name("decay_z", "csv");
    out.csv(&z, &[("k", cfg.z_order.to_string())], &["t", "z"], &report.z_series)?;
    for l in &report.lines {
        println!("{:<6} slope {:+.4} (expected {:+.2})", l.quantity, l.fit.slope, l.expected);
    }
    println!("Z-norm growth {:.3e}", report.z_growth());
    Ok(Code::Ok)
}

pub fn selfsim(cfg: &SelfsimConfig, out: &mut Output) -> Result<Code, CliError> {
    let model = CurvatureModel::from_spec(&cfg.model)?;
    let report = convergence_study(&cfg.setup, &model, &cfg.sigmas)?;
    let dir = format!("selfsim_{}", out.hash());
    for row in &report.rows {
        let meta = [("sigma", format!("{}", row.sigma)), ("t", format!("{}", row.profile.time))];
        let rows = row.profile.ys.iter().copied().zip(row.profile.values.iter().copied());
        out.csv(&format!("{dir}/profile_sigma{}.csv", row.sigma), &meta, &["y", "u"], rows)?;
    }
    #[derive(Serialize)]
    struct Row {
        sigma: f64,
        discrepancy: [f64; 3],
        steps: usize,
        anchor_drift: f64,
    }
    #[derive(Serialize)]
    struct Summary {
        reference_sigma: f64,
        rows: Vec<Row>,
    }
    let summary = Summary {
        reference_sigma: report.reference_sigma,
        rows: report
            .rows
            .iter()
            .map(|r| Row {
                sigma: r.sigma,
                discrepancy: r.discrepancy,
                steps: r.steps,
                anchor_drift: r.anchor_drift,
            })
            .collect(),
    };
    let name = out.name("selfsim", "json");
    out.json(&name, &summary)?;
    for r in &report.rows {
        println!(
            "sigma {:>6}: sup_K |u^s - U| {:.4e}, |u^s_x - U_x| {:.4e}",
            r.sigma, r.discrepancy[0], r.discrepancy[1]
        );
    }
    Ok(Code::Ok)
}

pub fn rescale(cfg: &RescaleConfig, out: &mut Output) -> Result<Code, CliError> {
    if !(cfg.sigma >= 1.0 && cfg.sigma.is_finite()) {
        return Err(CliError::config(format!("sigma must be >= 1, got {}", cfg.sigma)));
    }
    let model = CurvatureModel::from_spec(&cfg.model)?;
    let ([u, ux, uxx], steps, drift) = cfg.setup.rescaled_run(&model, cfg.sigma)?;
    let mut rows = Vec::new();
    for ((a, b), c) in u.fields().zip(ux.fields()).zip(uxx.fields()) {
        for (j, x) in a.grid().nodes().into_iter().enumerate() {
            rows.push((a.time(), x, a.values()[j], b.values()[j], c.values()[j]));
        }
    }
    let meta = [
        ("sigma", format!("{}", cfg.sigma)),
        ("steps", steps.to_string()),
        ("anchor_drift", format!("{drift:e}")),
    ];
    let name = out.name("rescale", "csv");
    out.csv(&name, &meta, &["t", "x", "u", "u_x", "u_xx"], rows)?;
    println!("rescale: sigma {} over {} window times, {steps} steps", cfg.sigma, u.len());
    Ok(Code::Ok)
}

pub fn validate(cfg: &ValidateConfig, out: &mut Output) -> Result<Code, CliError> {
    let report = validate_suite(cfg)?;
    out.manifest.seed = Some(report.seed);
    let name = out.name("validate", "json");
    out.json(&name, &report)?;
    for c in &report.checks {
        let verdict = if c.passed { "ok  " } else { "FAIL" };
        println!("{verdict} {:<24} {:.3e} (limit {:.1e})", c.name, c.measured, c.limit);
    }
    Ok(if report.passed() { Code::Ok } else { Code::Failed })
}

/// Scheme matching a grid kind, for the `--grid` shortcut.
pub fn scheme_for(kind: &str) -> Option<SchemeKind> {
    match kind {
        "periodic" => Some(SchemeKind::IfImexSpectral),
        "truncated" => Some(SchemeKind::SemiImplicitFd),
        _ => None,
    }
}
