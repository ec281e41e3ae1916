use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::rng::stream_rng;
use crate::certify::{compose, lipschitz_bounds, socp_bounds};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::systems::{Rect, SystemModel};
use crate::tube::Tube;
use crate::value::check_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub tube_s: f64,
    pub lipschitz_s: f64,
    pub socp_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: usize,
    pub min: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linearly interpolated quantile of sorted data, `q ∈ [0, 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl LatencySummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        assert!(!samples.is_empty(), "latency summary needs samples");
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        LatencySummary {
            count: sorted.len(),
            min: sorted[0],
            p10: quantile(&sorted, 0.1),
            median: quantile(&sorted, 0.5),
            p90: quantile(&sorted, 0.9),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub horizon: usize,
    pub eps_x: f64,
    /// Nominal rollout and tube radii, shared by both certificates.
    pub tube: LatencySummary,
    pub lipschitz: LatencySummary,
    pub socp: LatencySummary,
    pub samples: Vec<LatencySample>,
}

impl LatencyReport {
    /// Per-center timings in seconds.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sample", "tube_s", "lipschitz_s", "socp_s"])?;
        for (i, s) in self.samples.iter().enumerate() {
            out.write_record([
                i.to_string(),
                format!("{:?}", s.tube_s),
                format!("{:?}", s.lipschitz_s),
                format!("{:?}", s.socp_s),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Times the tube construction and each certificate's bound computation for
/// `centers` uniform centers in `region`. Runs sequentially so timings are
/// not distorted by contention.
#[allow(clippy::too_many_arguments)]
pub fn latency_histogram(
    model: &SystemModel,
    policy: &Policy,
    region: &Rect,
    centers: usize,
    eps_x: f64,
    horizon: usize,
    gamma: f64,
    seed: u64,
) -> Result<LatencyReport> {
    check_gamma(gamma)?;
    if centers == 0 {
        return Err(Error::InvalidParameter(
            "latency measurement needs at least one center".into(),
        ));
    }
    let mut rng = stream_rng(seed, 0);
    let mut samples = Vec::with_capacity(centers);
    for _ in 0..centers {
        let center = region.sample(&mut rng);
        let start = Instant::now();
        let tube = Tube::build(model, policy, &center, eps_x, horizon)?;
        let tube_s = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let b = lipschitz_bounds(model, &tube);
        std::hint::black_box(compose(&b.reward, &b.constraint, gamma)?);
        let lipschitz_s = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let b = socp_bounds(model, &tube)?;
        std::hint::black_box(compose(&b.reward, &b.constraint, gamma)?);
        let socp_s = start.elapsed().as_secs_f64();

        samples.push(LatencySample {
            tube_s,
            lipschitz_s,
            socp_s,
        });
    }
    let pick = |f: fn(&LatencySample) -> f64| LatencySummary::from_samples(&samples.iter().map(f).collect::<Vec<_>>());
    Ok(LatencyReport {
        horizon,
        eps_x,
        tube: pick(|s| s.tube_s),
        lipschitz: pick(|s| s.lipschitz_s),
        socp: pick(|s| s.socp_s),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_of_small_sets() {
        assert_eq!(quantile(&[3.0], 0.5), 3.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        let s = LatencySummary::from_samples(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!((s.min, s.max, s.mean), (1.0, 4.0, 2.5));
    }
}
