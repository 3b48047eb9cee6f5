//! Initial-data presets.
//!
//! Every preset is a slope profile `v0 = u0'` with a matching height `u0`.
//! The IMEX scheme stores the slope, the semi-implicit scheme the height.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Field, GridSpec};
use crate::selfsim::RampSpec;
use crate::semigroup::{abs_ramp_response, kernel_cdf};
use crate::solver::SchemeKind;

/// Quadrature tolerance for kernel-based presets.
const PRESET_TOL: f64 = 1e-12;

/// Beyond this many widths the relaxed step equals its far-field value to
/// far below `PRESET_TOL`.
const RELAXED_REACH: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// `v0 = amplitude * sin(k x)` with `k = mode * pi / L`.
    Sine { amplitude: f64, mode: u32 },
    /// `v0 = A exp(-(x/width)^2)` scaled so that `|v0|_inf + |v0'|_inf = w1inf`.
    GaussianSlope { w1inf: f64, width: f64 },
    /// `v0 = b + (a - b) S(x / w)` with the septic smoothstep `S`.
    SmoothedRamp(RampSpec),
    /// The exact ramp `a x+ - b x-` relaxed by the biharmonic flow for `t0 = w^4`.
    RelaxedRamp(RampSpec),
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialData::Sine { amplitude, mode } => {
                if !amplitude.is_finite() || *mode == 0 {
                    return Err(invalid("sine preset needs a finite amplitude and mode >= 1"));
                }
            }
            InitialData::GaussianSlope { w1inf, width } => {
                if !(w1inf.is_finite() && *w1inf >= 0.0 && *width > 0.0) {
                    return Err(invalid("gaussian-slope preset needs w1inf >= 0 and width > 0"));
                }
            }
            InitialData::SmoothedRamp(r) | InitialData::RelaxedRamp(r) => r.validate()?,
        }
        Ok(())
    }

    /// Time stamp of the preset: a relaxed ramp is the exact ramp's
    /// biharmonic evolution at `t0 = w^4`, other presets start at 0.
    pub fn start_time(&self) -> f64 {
        match self {
            InitialData::RelaxedRamp(r) => r.w.powi(4),
            _ => 0.0,
        }
    }

    /// Slope `v0` at the nodes of `grid`.
    pub fn slope(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        self.validate()?;
        let xs = grid.nodes();
        let l = grid.half_length;
        Ok(match self {
            InitialData::Sine { amplitude, mode } => {
                let k = *mode as f64 * PI / l;
                xs.iter().map(|x| amplitude * (k * x).sin()).collect()
            }
            InitialData::GaussianSlope { w1inf, width } => {
                let amp = gaussian_amplitude(*w1inf, *width);
                xs.iter().map(|x| amp * (-(x / width).powi(2)).exp()).collect()
            }
            InitialData::SmoothedRamp(r) => {
                if grid.is_periodic() {
                    check_room(r, l)?;
                    let s = |x: f64| smoothstep(x / r.w);
                    xs.iter()
                        .map(|&x| r.b + (r.a - r.b) * (s(x) - s(x - l) - s(x + l) + 1.0))
                        .collect()
                } else {
                    xs.iter().map(|&x| r.b + (r.a - r.b) * smoothstep(x / r.w)).collect()
                }
            }
            InitialData::RelaxedRamp(r) => {
                if grid.is_periodic() {
                    relaxed_square_wave(r, grid)
                } else {
                    xs.par_iter()
                        .map(|&x| Ok(r.b + (r.a - r.b) * relaxed_step(x / r.w)?))
                        .collect::<Result<_>>()?
                }
            }
        })
    }

    /// Height `u0`. Ramps equal the exact ramp `a x+ - b x-` outside the
    /// smoothing zone; the Gaussian slope vanishes at 0; the sine has zero mean.
    ///
    /// Periodic grids only admit a height when the slope has zero mean.
    pub fn height(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        self.validate()?;
        let xs = grid.nodes();
        Ok(match self {
            InitialData::Sine { amplitude, mode } => {
                let k = *mode as f64 * PI / grid.half_length;
                xs.iter().map(|x| -amplitude / k * (k * x).cos()).collect()
            }
            InitialData::GaussianSlope { w1inf, width } => {
                if grid.is_periodic() {
                    return Err(invalid("a gaussian slope has nonzero mean and no periodic height"));
                }
                let amp = gaussian_amplitude(*w1inf, *width);
                xs.iter()
                    .map(|x| amp * width * 0.5 * PI.sqrt() * statrs::function::erf::erf(x / width))
                    .collect()
            }
            InitialData::SmoothedRamp(r) | InitialData::RelaxedRamp(r) => {
                if grid.is_periodic() {
                    return Err(invalid("ramp heights are only defined on truncated grids"));
                }
                let mean = 0.5 * (r.a + r.b);
                let half = 0.5 * (r.a - r.b);
                let relaxed = matches!(self, InitialData::RelaxedRamp(_));
                xs.par_iter()
                    .map(|&x| {
                        let y = x / r.w;
                        let bend = if relaxed {
                            if y.abs() > RELAXED_REACH {
                                y.abs()
                            } else {
                                abs_ramp_response(y, PRESET_TOL)?
                            }
                        } else {
                            smoothed_abs(y)
                        };
                        Ok(mean * x + half * r.w * bend)
                    })
                    .collect::<Result<_>>()?
            }
        })
    }

    /// The stored state of `scheme` at time 0.
    pub fn state(&self, grid: &GridSpec, scheme: SchemeKind) -> Result<Field> {
        let (values, label) = match scheme {
            SchemeKind::IfImexSpectral => (self.slope(grid)?, "v"),
            SchemeKind::SemiImplicitFd => (self.height(grid)?, "u"),
        };
        Field::new(*grid, values, 0.0, label)
    }
}

fn gaussian_amplitude(w1inf: f64, width: f64) -> f64 {
    // sup |d/dx exp(-(x/s)^2)| = sqrt(2) e^{-1/2} / s
    w1inf / (1.0 + 2f64.sqrt() * (-0.5f64).exp() / width)
}

fn check_room(r: &RampSpec, l: f64) -> Result<()> {
    if 4.0 * r.w > l {
        return Err(invalid(format!("ramp width {} too wide for a periodic box of half-length {l}", r.w)));
    }
    Ok(())
}

/// Septic smoothstep on `[-1, 1]`: 0 to the left, 1 to the right, `C^3` joins.
pub fn smoothstep(z: f64) -> f64 {
    let s = (0.5 * (z + 1.0)).clamp(0.0, 1.0);
    s.powi(4) * (35.0 + s * (-84.0 + s * (70.0 - 20.0 * s)))
}

/// `int_0^z smoothstep`.
pub fn smoothstep_integral(z: f64) -> f64 {
    // antiderivative in s = (z + 1)/2; Q(1) = 1/2
    let q = |s: f64| s.powi(5) * (7.0 + s * (-14.0 + s * (10.0 - 2.5 * s)));
    let q_half = q(0.5);
    if z <= -1.0 {
        -2.0 * q_half
    } else if z >= 1.0 {
        1.0 - 2.0 * q_half + (z - 1.0)
    } else {
        2.0 * (q(0.5 * (z + 1.0)) - q_half)
    }
}

/// Antiderivative of `2 S - 1` equal to `|y|` for `|y| >= 1`.
pub fn smoothed_abs(y: f64) -> f64 {
    2.0 * (smoothstep_integral(y) - smoothstep_integral(-1.0)) - y
}

fn relaxed_step(y: f64) -> Result<f64> {
    if y > RELAXED_REACH {
        Ok(1.0)
    } else if y < -RELAXED_REACH {
        Ok(0.0)
    } else {
        kernel_cdf(y, PRESET_TOL)
    }
}

// b on (-L, 0), a on (0, L), relaxed for t0 = w^4 through its sine series
fn relaxed_square_wave(r: &RampSpec, grid: &GridSpec) -> Vec<f64> {
    let l = grid.half_length;
    let t0 = r.w.powi(4);
    let mean = 0.5 * (r.a + r.b);
    let half = 0.5 * (r.a - r.b);
    let mut modes = Vec::new();
    let mut n = 1usize;
    loop {
        let k = n as f64 * PI / l;
        let c = 4.0 / (n as f64 * PI) * (-t0 * k.powi(4)).exp();
        if c < 1e-18 || 2 * n >= grid.points {
            break;
        }
        modes.push((k, c));
        n += 2;
    }
    grid.nodes()
        .par_iter()
        .map(|&x| mean + half * modes.iter().map(|&(k, c)| c * (k * x).sin()).sum::<f64>())
        .collect()
}
