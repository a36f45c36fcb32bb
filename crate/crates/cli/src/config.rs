//! Run configuration, read from a TOML file and overridden by flags.
//!
//! Every key is optional:
//!
//! ```toml
//! profile = "desk"            # or "paper"
//! threads = 0                 # 0: one worker per core
//!
//! [check]
//! assertions = ["all"]        # or names such as ["P1", "Reach_Init"]
//! max_states = 5000000
//! wall_clock_secs = 1800
//! model = "mutants/no-disable-hv.csp"
//! counterexamples = "counterexamples"
//!
//! [plant]
//! max_steps = 1000000
//! seed = 0
//! dwell = 1.0
//! exhaustive_len = 3
//! random_programs = 16
//! random_len = 8
//! sample_every = 1000
//!
//! [output]
//! json = "report.json"
//! csv = "trace.csv"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub profile: Option<String>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub assertions: Option<Vec<String>>,
    pub max_states: Option<usize>,
    pub wall_clock_secs: Option<u64>,
    pub model: Option<String>,
    pub counterexamples: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub max_steps: Option<u64>,
    pub seed: Option<u64>,
    pub dwell: Option<f64>,
    pub exhaustive_len: Option<usize>,
    pub random_programs: Option<usize>,
    pub random_len: Option<usize>,
    pub sample_every: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
