//! Shared fixtures for the benchmarks.

use sdflow_core::{CurvatureModel, Field, GridKind, GridSpec, InitialData, ModelSpec, RampSpec, SchemeKind};

pub fn periodic(points: usize) -> GridSpec {
    GridSpec {
        kind: GridKind::Periodic,
        half_length: 16.0 * std::f64::consts::PI,
        points,
    }
}

pub fn truncated(points: usize) -> GridSpec {
    GridSpec {
        kind: GridKind::Truncated,
        half_length: 40.0,
        points,
    }
}

pub fn exponential() -> CurvatureModel {
    CurvatureModel::from_spec(&ModelSpec::exponential()).expect("exponential model")
}

/// Slope state for the spectral scheme.
pub fn slope_state(points: usize) -> Field {
    InitialData::GaussianSlope { w1inf: 0.05, width: 1.0 }
        .state(&periodic(points), SchemeKind::IfImexSpectral)
        .expect("slope state")
}

/// Height state (smoothed ramp) for the finite-difference scheme.
pub fn height_state(points: usize) -> Field {
    InitialData::SmoothedRamp(RampSpec { a: 0.1, b: -0.1, w: 1.0 })
        .state(&truncated(points), SchemeKind::SemiImplicitFd)
        .expect("height state")
}
