use std::path::Path;

use serde::Deserialize;

use fibercirc::checks::CheckConfig;
use fibercirc::GroupSpec;

use crate::CliError;

/// The `--config` file. Every section is optional; flags override it.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub verify: CheckConfig,
    pub periods: PeriodsConfig,
    pub holonomy: HolonomyConfig,
    pub moment: MomentConfig,
    pub probe: ProbeConfig,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodsConfig {
    pub group: GroupSpec,
    pub resolutions: [usize; 3],
    pub tol: f64,
}

impl Default for PeriodsConfig {
    fn default() -> Self {
        PeriodsConfig { group: GroupSpec::su(2), resolutions: [8, 16, 32], tol: 1e-2 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolonomyConfig {
    /// Cells per axis of built-in scenarios.
    pub n: usize,
    pub tol: f64,
}

impl Default for HolonomyConfig {
    fn default() -> Self {
        HolonomyConfig { n: 8, tol: 1e-2 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentConfig {
    pub genus: usize,
    /// Path resolutions of the defect ladder.
    pub resolutions: [usize; 3],
    /// Finite-difference steps paired with `resolutions`.
    pub fd_steps: [f64; 3],
    pub tol: f64,
    pub min_order: f64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig { genus: 1, resolutions: [16, 32, 64], fd_steps: [4e-4, 2e-4, 1e-4], tol: 1e-3, min_order: 1.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub genus: usize,
    /// Seeded commuting and random tuples, each.
    pub count: usize,
    /// Cells of the completion path.
    pub n: usize,
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { genus: 1, count: 10, n: 8, tol: 1e-12 }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError(format!("{}: {e}", p.display())))
            }
        }
    }
}
