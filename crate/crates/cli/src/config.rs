//! JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};

use reachcert::certify::{Method, DEFAULT_LATTICE_BUDGET};
use reachcert::harness::SamplerKind;
use reachcert::systems::{Rect, SystemSpec};
use reachcert::value::{Axis, DEFAULT_CONTROL_POINTS, DEFAULT_DISTURBANCE_POINTS, DEFAULT_TOL};

/// Top-level configuration. Sections a command does not use are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    /// Value-function grid; required whenever a field is solved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<Axis>>,
    /// Discount factor; taken from the field when one is loaded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Previously solved field container; relative paths are resolved
    /// against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencyConfig>,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

/// Points per dimension of the control and disturbance lattices.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub control_points: usize,
    pub disturbance_points: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            control_points: DEFAULT_CONTROL_POINTS,
            disturbance_points: DEFAULT_DISTURBANCE_POINTS,
        }
    }
}

/// Online mode certifies `center`; offline mode covers `region`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Rect>,
    pub eps_x: f64,
    pub horizon: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_lattice_budget")]
    pub lattice_budget: usize,
}

fn default_lattice_budget() -> usize {
    DEFAULT_LATTICE_BUDGET
}

/// Which disturbance policies a simulation runs against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceChoice {
    Sampled,
    WorstCase,
    #[default]
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub region: Rect,
    #[serde(default)]
    pub sampler: SamplerKind,
    pub trials: usize,
    pub horizon: usize,
    #[serde(default)]
    pub disturbance: DisturbanceChoice,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub region: Rect,
    pub eps_x: f64,
    pub cert_horizon: usize,
    #[serde(default = "default_volume_samples")]
    pub volume_samples: usize,
    #[serde(default = "default_reach_samples")]
    pub reach_samples: usize,
    pub reach_horizon: usize,
    #[serde(default = "default_lattice_budget")]
    pub lattice_budget: usize,
}

fn default_volume_samples() -> usize {
    10_000
}

fn default_reach_samples() -> usize {
    200
}

/// Control policy used when timing certificates.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyChoice {
    /// Greedy max-min policy of the solved or loaded field.
    #[default]
    Greedy,
    Constant(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyConfig {
    pub region: Rect,
    pub centers: usize,
    pub eps_x: f64,
    pub horizon: usize,
    #[serde(default)]
    pub policy: PolicyChoice,
}

impl RunConfig {
    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let Some(field) = &config.field {
            if field.is_relative() {
                config.field = Some(base.join(field));
            }
        }
        Ok(config)
    }

    pub fn certify_section(&self) -> anyhow::Result<&CertifyConfig> {
        let c = self.certify.as_ref().context("config has no `certify` section")?;
        ensure!(
            c.eps_x >= 0.0 && c.eps_x.is_finite(),
            "certify.eps_x must be nonnegative"
        );
        ensure!(c.horizon >= 1, "certify.horizon must be at least 1");
        Ok(c)
    }

    pub fn simulate_section(&self) -> anyhow::Result<&SimulateConfig> {
        let s = self.simulate.as_ref().context("config has no `simulate` section")?;
        ensure!(s.trials >= 1, "simulate.trials must be at least 1");
        Ok(s)
    }

    pub fn sweep_section(&self) -> anyhow::Result<&SweepConfig> {
        let s = self.sweep.as_ref().context("config has no `sweep` section")?;
        ensure!(!s.gammas.is_empty(), "sweep.gammas must be nonempty");
        Ok(s)
    }

    pub fn latency_section(&self) -> anyhow::Result<&LatencyConfig> {
        let l = self.latency.as_ref().context("config has no `latency` section")?;
        ensure!(l.centers >= 1, "latency.centers must be at least 1");
        Ok(l)
    }

    pub fn require_gamma(&self) -> anyhow::Result<f64> {
        match self.gamma {
            Some(g) if g > 0.0 && g < 1.0 => Ok(g),
            Some(g) => bail!("gamma must lie in (0, 1), got {g}"),
            None => bail!("config needs `gamma`"),
        }
    }
}
