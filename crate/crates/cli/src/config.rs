//! Serializable description of one run. Every subcommand is parsed into a
//! `RunConfig` first and executed from it, so `--dump-config` output
//! replays the same run through `--config`.

use std::path::{Path, PathBuf};

use compgeo_core::riccati::{BoundSide, CurvatureOperatorPath, Direction};
use compgeo_core::{CurvatureProfile, ExactWarping, Scenario, VerifyConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "COMPGEO_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Outputs,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    /// machine-readable stdout
    #[serde(default)]
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// CSV file, or the output directory for `suite`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cmc_mean_curvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality_grid_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Jacobi(JacobiParams),
    Riccati(RiccatiParams),
    Bound { scenario: Scenario },
    Criterion { profile: CurvatureProfile, tail: f64 },
    Bm(BmParams),
    Cmc(CmcRun),
    Verify(VerifyRun),
    Suite,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Jacobi(_) => "jacobi",
            Command::Riccati(_) => "riccati",
            Command::Bound { .. } => "bound",
            Command::Criterion { .. } => "criterion",
            Command::Bm(_) => "bm",
            Command::Cmc(_) => "cmc",
            Command::Verify(_) => "verify",
            Command::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiParams {
    pub profile: CurvatureProfile,
    pub t0: f64,
    pub h0: f64,
    pub dh0: f64,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiccatiParams {
    pub path: CurvatureOperatorPath,
    pub direction: Direction,
    /// `A0 = a0 · Id`
    pub a0: f64,
    pub t0: f64,
    pub t1: f64,
}

impl RiccatiParams {
    pub fn side(&self) -> BoundSide {
        self.direction.required_side()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmParams {
    #[serde(flatten)]
    pub model: ExactWarping,
    /// solve the model numerically instead of using its closed form
    #[serde(default)]
    pub numeric: bool,
    /// ambient dimension; the drift is `((n-1)/2) h'/h`
    pub n: u32,
    pub r0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub explosion_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmcRun {
    pub n: u32,
    pub h: f64,
    pub rmax: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRun {
    #[serde(flatten)]
    pub config: VerifyConfig,
    /// extra grid sizes for the convergence table
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refine: Vec<usize>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self { command, seed: None, output: Outputs::default(), tolerances: ToleranceOverrides::default(), json: false }
    }

    /// Seed from the config, else `COMPGEO_SEED`, else 42.
    pub fn resolved_seed(&self) -> CliResult<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    pub fn from_json(text: &str, path: &Path) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Read a JSON document of type `T`, reporting the failing field.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_field_errors() {
        let cfg = RunConfig::new(Command::Cmc(CmcRun { n: 2, h: 1.0, rmax: 5.0, spacing: 0.01 }));
        let back = RunConfig::from_json(&cfg.to_json(), Path::new("x")).unwrap();
        assert_eq!(back, cfg);
        let err = RunConfig::from_json(r#"{"command":{"subcommand":"cmc","n":2,"h":1,"rmax":5}}"#, Path::new("x"))
            .unwrap_err();
        assert!(err.to_string().contains("spacing"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::from_json(r#"{"command":{"subcommand":"suite"},"sead":1}"#, Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("sead"), "{err}");
    }
}
