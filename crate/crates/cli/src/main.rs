//! `sdflow`: run surface diffusion experiments from JSON configs.
//!
//! Exit codes: 0 success, 1 failed validation, 2 blow-up, 3 configuration
//! error, 4 I/O error.

mod commands;
mod config;
mod exit;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use sdflow_core::manifest::WallClock;
use sdflow_core::RunManifest;

use crate::exit::{CliError, Code};
use crate::output::Output;

#[derive(Parser, Debug)]
#[command(name = "sdflow", version, about = "Surface diffusion flow experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config for the subcommand; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $SDFLOW_OUTPUT_ROOT, else ./sdflow-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a config leaf, e.g. `--set solver.t_end=2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Fail instead of replacing existing output files.
    #[arg(long, global = true)]
    no_clobber: bool,
    /// Record wall-clock time in the manifest (outputs then differ between runs).
    #[arg(long, global = true)]
    wall_clock: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the flow and write snapshots.
    Simulate(SimulateArgs),
    /// Tabulate the biharmonic heat kernel profile and its derivative.
    Kernel {
        #[arg(long)]
        range: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Fit decay exponents and the Z-norm on a long periodic run.
    Decay,
    /// Rescaling convergence study toward the self-similar solution.
    Selfsim {
        /// Comma-separated scales.
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
    },
    /// Write one rescaled solution on the compact window.
    Rescale {
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Run the invariant suite.
    Validate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Sine,
    GaussianSlope,
    SmoothedRamp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Linear,
    Exponential,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GridArg {
    Periodic,
    Truncated,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Grid kind; also picks the matching scheme.
    #[arg(long, value_enum)]
    grid: Option<GridArg>,
    /// Half-length L of the domain [-L, L).
    #[arg(long = "half-length", short = 'L')]
    half_length: Option<f64>,
    #[arg(long, short = 'N')]
    points: Option<usize>,
    /// Fixed time step.
    #[arg(long, conflicts_with = "dt_ratio")]
    dt: Option<f64>,
    /// Geometric steps `dt = ratio * t`.
    #[arg(long = "dt-ratio")]
    dt_ratio: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Slopes and width of the smoothed ramp.
    #[arg(long, num_args = 3, value_names = ["A", "B", "W"], allow_negative_numbers = true)]
    ramp: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long)]
    mode: Option<u32>,
    #[arg(long)]
    w1inf: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
}

impl SimulateArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = Vec::new();
        if let Some(m) = self.model {
            let name = match m {
                ModelArg::Linear => "linear",
                ModelArg::Exponential => "exponential",
            };
            o.push(format!("model={{\"name\":\"{name}\"}}"));
        }
        if let Some(g) = self.grid {
            let kind = match g {
                GridArg::Periodic => "periodic",
                GridArg::Truncated => "truncated",
            };
            o.push(format!("grid.kind={kind}"));
            if let Some(s) = commands::scheme_for(kind) {
                o.push(format!("solver.scheme={}", serde_json::to_string(&s).unwrap_or_default()));
            }
        }
        if let Some(l) = self.half_length {
            o.push(format!("grid.half_length={l}"));
        }
        if let Some(n) = self.points {
            o.push(format!("grid.points={n}"));
        }
        if let Some(dt) = self.dt {
            o.push(format!("solver.dt={{\"kind\":\"fixed\",\"dt\":{dt}}}"));
        }
        if let Some(r) = self.dt_ratio {
            o.push(format!(
                "solver.dt={{\"kind\":\"geometric\",\"ratio\":{r},\"dt_min\":1e-4,\"dt_max\":1.0}}"
            ));
        }
        if let Some(t) = self.t_end {
            o.push(format!("solver.t_end={t}"));
        }
        let ramp = self.ramp.as_deref().unwrap_or(&[0.1, -0.1, 1.0]).to_vec();
        match self.preset {
            Some(Preset::Sine) => o.push("data={\"kind\":\"sine\",\"amplitude\":0.05,\"mode\":1}".into()),
            Some(Preset::GaussianSlope) => {
                o.push("data={\"kind\":\"gaussian-slope\",\"w1inf\":0.05,\"width\":1.0}".into())
            }
            Some(Preset::SmoothedRamp) => o.push(format!(
                "data={{\"kind\":\"smoothed-ramp\",\"a\":{},\"b\":{},\"w\":{}}}",
                ramp[0], ramp[1], ramp[2]
            )),
            None => {
                if self.ramp.is_some() {
                    o.push(format!("data.a={}", ramp[0]));
                    o.push(format!("data.b={}", ramp[1]));
                    o.push(format!("data.w={}", ramp[2]));
                }
            }
        }
        for (key, v) in [("amplitude", self.amplitude), ("w1inf", self.w1inf), ("width", self.width)] {
            if let Some(v) = v {
                o.push(format!("data.{key}={v}"));
            }
        }
        if let Some(m) = self.mode {
            o.push(format!("data.mode={m}"));
        }
        o
    }
}

fn prepare<T>(common: &Common, name: &str, flags: Vec<String>) -> Result<(T, Output), CliError>
where
    T: Default + Serialize + DeserializeOwned,
{
    // dedicated flags first, explicit --set entries win
    let mut overrides = flags;
    overrides.extend(common.overrides.iter().cloned());
    let cfg: T = config::load(common.config.as_deref(), &overrides)?;
    let manifest = RunManifest::new(name, &cfg)?;
    let out = Output::new(common.out.as_deref(), common.no_clobber, manifest)?;
    Ok((cfg, out))
}

fn execute<T>(
    common: &Common,
    name: &str,
    flags: Vec<String>,
    run: impl FnOnce(&T, &mut Output) -> Result<Code, CliError>,
) -> Result<Code, CliError>
where
    T: Default + Serialize + DeserializeOwned,
{
    let (cfg, mut out) = prepare::<T>(common, name, flags)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let code = run(&cfg, &mut out)?;
    if common.wall_clock {
        out.manifest.wall_clock = Some(WallClock {
            started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            elapsed_seconds: clock.elapsed().as_secs_f64(),
        });
    }
    out.finish(name)?;
    Ok(code)
}

fn dispatch(cli: Cli) -> Result<Code, CliError> {
    let c = &cli.common;
    match cli.command {
        Command::Simulate(args) => execute(c, "simulate", args.overrides(), commands::simulate),
        Command::Kernel { range, step } => {
            let mut flags = Vec::new();
            if let Some(r) = range {
                flags.push(format!("range={r}"));
            }
            if let Some(s) = step {
                flags.push(format!("step={s}"));
            }
            execute(c, "kernel", flags, commands::kernel)
        }
        Command::Decay => execute(c, "decay", Vec::new(), commands::decay),
        Command::Selfsim { sigmas } => {
            let flags = sigmas
                .map(|s| vec![format!("sigmas={}", serde_json::to_string(&s).unwrap_or_default())])
                .unwrap_or_default();
            execute(c, "selfsim", flags, commands::selfsim)
        }
        Command::Rescale { sigma } => {
            let flags = sigma.map(|s| vec![format!("sigma={s}")]).unwrap_or_default();
            execute(c, "rescale", flags, commands::rescale)
        }
        Command::Validate => execute(c, "validate", Vec::new(), commands::validate),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Code::Config as u8),
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
