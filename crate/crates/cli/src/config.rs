use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rqbc_core::attacks::Strategy;
use rqbc_core::protocol::CommitConfig;
use rqbc_core::spectra::{disjoint_pair, Shape};
use rqbc_core::PovmFamily;

use crate::error::CliError;

/// Everything a run needs; sections not given fall back to the built-in defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub protocol: CommitConfig,
    pub sweep: SweepSpec,
    pub run: RunSpec,
    pub attack: AttackSpec,
    pub validate: ValidateSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub shapes: Vec<Shape>,
    pub deltas: Vec<f64>,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub runs: u64,
    pub adversary: Strategy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSpec {
    pub strategies: Vec<Strategy>,
    /// Empty means the protocol's channel count.
    pub channels: Vec<usize>,
    /// Empty means the protocol's `t_open`.
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSpec {
    pub t_deltas: Vec<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        let (a, b) = disjoint_pair(12.0, 10.0, 1.0, Shape::Rectangular).expect("built-in pair is valid");
        let mut protocol = CommitConfig::new(10, a, b, 1000.0, 1.0);
        protocol.family = PovmFamily::State;
        Settings {
            protocol,
            sweep: SweepSpec::default(),
            run: RunSpec::default(),
            attack: AttackSpec::default(),
            validate: ValidateSpec::default(),
        }
    }
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            shapes: Shape::ALL.to_vec(),
            deltas: vec![1.0],
            times: [0.0, 0.01, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0].to_vec(),
        }
    }
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec { runs: 1000, adversary: Strategy::Honest }
    }
}

impl Default for AttackSpec {
    fn default() -> Self {
        AttackSpec {
            strategies: vec![Strategy::Honest, Strategy::Mixed, Strategy::Delayed { tau0: std::f64::consts::TAU }],
            channels: Vec::new(),
            times: Vec::new(),
        }
    }
}

impl Default for ValidateSpec {
    fn default() -> Self {
        ValidateSpec { t_deltas: vec![0.1, 1.0, 10.0, 100.0] }
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let parsed = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| e.to_string()),
            Some("toml") => toml::from_str(&text).map_err(|e| e.to_string()),
            _ => Err("unknown extension, expected .toml or .json".to_string()),
        };
        let settings: Settings = parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        settings.protocol.validate()?;
        Ok(settings)
    }
}
