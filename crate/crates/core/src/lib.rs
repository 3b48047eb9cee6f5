//! Numerical laboratory for the general surface diffusion flow of graph curves,
//! `u_t = ((1 + u_x^2)^{-1/2} (f(-kappa))_x)_x`.

pub mod banded;
pub mod calculus;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod grid;
pub mod init;
pub mod manifest;
pub mod model;
pub mod norms;
pub mod quadrature;
pub mod selfsim;
pub mod semigroup;
pub mod solver;
pub mod spectral;
pub mod trajectory;

#[cfg(test)]
mod properties;

pub use calculus::{differentiate, Scheme};
pub use error::{Error, Result};
pub use grid::{build_grid, Field, GridKind, GridSpec};
pub use semigroup::{apply_semigroup, duhamel, kernel, kernel_profile, KernelBoundReport, KernelTable};
pub use flow::{alpha, check_smallness, curvature, f_pert, rhs_u, rhs_u_expanded, SmallnessReport};
pub use model::{CurvatureModel, ModelSpec};
pub use solver::{integrate, picard_local, step_if_imex, step_semi_implicit, DtPolicy, PicardReport, Run, SchemeKind, SolverConfig};
pub use trajectory::{Retention, Trajectory};
pub use norms::{decay_fit, holder_seminorm_space, holder_seminorm_time, scaled_norm, z_norm, DecayFit, HolderSpec, NormReport};
pub use init::InitialData;
pub use selfsim::{convergence_study, extract_profile, linear_profile, rescale_solution, scaled_model, Profile, RampSpec};
pub use experiments::{decay_experiment, validate_suite, CheckOutcome, DecayReport, DecaySetup, SuiteConfig, SuiteReport};
pub use manifest::{config_hash, RunManifest};
