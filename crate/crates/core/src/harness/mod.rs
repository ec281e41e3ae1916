//! Seeded experiment protocols: Monte-Carlo success rates, set volumes,
//! discount-factor sweeps and certification latency.

mod latency;
pub mod rng;
mod sampler;
mod success;
mod sweep;
mod volume;

use serde::{Deserialize, Serialize};

pub use latency::{latency_histogram, quantile, LatencyReport, LatencySample, LatencySummary};
pub use sampler::{InitialSampler, InitialState, SamplerKind, StatePredicate, MAX_REJECTION_ATTEMPTS};
pub use success::{classify, success_rate, Outcome, SuccessReport, TrialOutcome};
pub use sweep::{gamma_sweep, GammaRow, SweepResult, SweepSettings};
pub use volume::volume_estimate;

use crate::error::{Error, Result};
use crate::systems::{Rect, SystemSpec};
use crate::value::check_gamma;

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub region: Rect,
    #[serde(default)]
    pub sampler: SamplerKind,
    pub trials: usize,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub eps_x: Option<f64>,
    #[serde(default)]
    pub cert_horizon: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        self.region.validate()?;
        for &g in &self.gammas {
            check_gamma(g)?;
        }
        if let Some(eps) = self.eps_x {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!("eps_x must be nonnegative, got {eps}")));
            }
        }
        if self.cert_horizon == Some(0) {
            return Err(Error::InvalidParameter("cert_horizon must be at least 1".into()));
        }
        Ok(())
    }
}
