//! Per-command configuration files and the `--set` override layer.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use sdflow_core::experiments::{DecaySetup, SuiteConfig};
use sdflow_core::selfsim::{StudySetup, STUDY_SIGMAS};
use sdflow_core::solver::{DtPolicy, SchemeKind, SolverConfig};
use sdflow_core::{GridKind, GridSpec, InitialData, ModelSpec};

use crate::exit::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub data: InitialData,
    pub solver: SolverConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let mut solver = SolverConfig::new(SchemeKind::IfImexSpectral, 1.0);
        solver.dt = DtPolicy::Fixed { dt: 1e-3 };
        Self {
            grid: GridSpec {
                kind: GridKind::Periodic,
                half_length: std::f64::consts::PI,
                points: 128,
            },
            model: ModelSpec::exponential(),
            data: InitialData::Sine {
                amplitude: 0.05,
                mode: 1,
            },
            solver,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// Rows cover `y = 0, step, ..., range`.
    pub range: f64,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            range: 12.0,
            step: 0.01,
            tolerance: sdflow_core::semigroup::KERNEL_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfsimConfig {
    pub setup: StudySetup,
    pub model: ModelSpec,
    pub sigmas: Vec<f64>,
}

impl Default for SelfsimConfig {
    fn default() -> Self {
        Self {
            setup: StudySetup::standard(),
            model: ModelSpec::exponential(),
            sigmas: STUDY_SIGMAS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RescaleConfig {
    pub setup: StudySetup,
    pub model: ModelSpec,
    pub sigma: f64,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self {
            setup: StudySetup::standard(),
            model: ModelSpec::exponential(),
            sigma: 4.0,
        }
    }
}

pub type DecayConfig = DecaySetup;
pub type ValidateConfig = SuiteConfig;

/// Read `path` (or start from defaults), then apply `key.path=value` overrides.
pub fn load<T>(path: Option<&Path>, overrides: &[String]) -> Result<T, CliError>
where
    T: Default + Serialize + DeserializeOwned,
{
    let base: T = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::io(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::config(format!("{}:{}:{}: {e}", p.display(), e.line(), e.column()))
            })?
        }
        None => T::default(),
    };
    if overrides.is_empty() {
        return Ok(base);
    }
    let mut value = serde_json::to_value(&base).map_err(|e| CliError::config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::config(format!("after overrides: {e}")))
}

/// `a.b.0.c=<json or bare string>`.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{spec}` is not of the form key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| CliError::config(format!("`{key}` in `{path}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::config(format!("index {idx} in `{path}` is out of range (len {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::config(format!("`{path}` descends into a scalar at `{key}`"))),
        };
    }
    Err(CliError::config(format!("empty override path in `{spec}`")))
}
