use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::stream_rng;
use super::sampler::MAX_REJECTION_ATTEMPTS;
use super::success::{classify, Outcome};
use super::volume::volume_estimate;
use crate::certify::{certify_offline, Method};
use crate::error::{Error, Result};
use crate::policy::{rollout, DisturbancePolicy, Policy};
use crate::systems::{Rect, SystemModel};
use crate::value::{value_iteration, ActionLattice, Grid, IterationOptions, ValueField};

/// Shared settings for every γ in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Region used for volumes, certification and reaching-time starts.
    pub region: Rect,
    pub tol: f64,
    pub eps_x: f64,
    pub cert_horizon: usize,
    pub volume_samples: usize,
    pub reach_samples: usize,
    pub reach_horizon: usize,
    pub lattice_budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub gamma: f64,
    pub iterations: usize,
    pub converged: bool,
    pub learned_volume: f64,
    pub lipschitz_volume: f64,
    pub socp_volume: f64,
    pub lipschitz_centers: usize,
    pub socp_centers: usize,
    /// Mean first-entry stage of greedy rollouts against the grid
    /// worst-case disturbance, over the starts that reached.
    pub mean_reaching_time: Option<f64>,
    pub reached: usize,
    pub not_reached: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<GammaRow>,
    pub fields: Vec<Arc<ValueField>>,
    /// Common reaching-time start states (inside every learned set).
    pub starts: Vec<Vec<f64>>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "gamma",
            "iterations",
            "converged",
            "learned_volume",
            "lipschitz_volume",
            "socp_volume",
            "lipschitz_centers",
            "socp_centers",
            "mean_reaching_time",
            "reached",
            "not_reached",
        ])?;
        for r in &self.rows {
            out.write_record([
                format!("{:?}", r.gamma),
                r.iterations.to_string(),
                r.converged.to_string(),
                format!("{:?}", r.learned_volume),
                format!("{:?}", r.lipschitz_volume),
                format!("{:?}", r.socp_volume),
                r.lipschitz_centers.to_string(),
                r.socp_centers.to_string(),
                r.mean_reaching_time.map(|v| format!("{v:?}")).unwrap_or_default(),
                r.reached.to_string(),
                r.not_reached.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Solves, certifies and measures reaching times for each γ.
///
/// Reaching-time starts are drawn once, from the intersection of all learned
/// sets, so that every γ is compared on the same initial states.
pub fn gamma_sweep(
    model: &SystemModel,
    grid: &Grid,
    lattice: &ActionLattice,
    gammas: &[f64],
    settings: &SweepSettings,
) -> Result<SweepResult> {
    if gammas.is_empty() {
        return Err(Error::InvalidParameter(
            "gamma sweep needs at least one discount factor".into(),
        ));
    }
    let lattice = Arc::new(lattice.clone());
    let mut fields = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let opts = IterationOptions::new(gamma).tol(settings.tol);
        fields.push(Arc::new(value_iteration(model, grid, &lattice, &opts)?));
    }

    let starts = common_starts(&fields, settings)?;

    let mut rows = Vec::with_capacity(gammas.len());
    for (&gamma, field) in gammas.iter().zip(&fields) {
        let policy = Policy::greedy(field.clone(), lattice.clone());
        let learned_volume = volume_estimate(
            |x| field.interpolate(x) > 0.0,
            &settings.region,
            settings.volume_samples,
            settings.seed,
        )?;
        let set = certify_offline(
            model,
            &policy,
            &settings.region,
            settings.eps_x,
            settings.cert_horizon,
            gamma,
            Method::Both,
            settings.lattice_budget,
        )?;
        let lip = set.restricted_to(Method::Lipschitz);
        let socp = set.restricted_to(Method::Socp);
        let lipschitz_volume = volume_estimate(
            |x| lip.contains(x),
            &settings.region,
            settings.volume_samples,
            settings.seed,
        )?;
        let socp_volume = volume_estimate(
            |x| socp.contains(x),
            &settings.region,
            settings.volume_samples,
            settings.seed,
        )?;

        let adversary = DisturbancePolicy::GridWorstCase {
            field: field.clone(),
            lattice: lattice.clone(),
        };
        let entries = starts
            .par_iter()
            .map(|x0| {
                let traj = rollout(model, &policy, &adversary, x0, settings.reach_horizon, 0)?;
                Ok(classify(&traj, model))
            })
            .collect::<Result<Vec<_>>>()?;
        let reached: Vec<usize> = entries
            .iter()
            .filter(|(_, o)| *o == Outcome::Reached)
            .filter_map(|(t, _)| *t)
            .collect();
        rows.push(GammaRow {
            gamma,
            iterations: field.stats().iterations,
            converged: field.stats().converged,
            learned_volume,
            lipschitz_volume,
            socp_volume,
            lipschitz_centers: lip.len(),
            socp_centers: socp.len(),
            mean_reaching_time: (!reached.is_empty())
                .then(|| reached.iter().sum::<usize>() as f64 / reached.len() as f64),
            reached: reached.len(),
            not_reached: entries.len() - reached.len(),
        });
    }
    Ok(SweepResult { rows, fields, starts })
}

fn common_starts(fields: &[Arc<ValueField>], settings: &SweepSettings) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream_rng(settings.seed, u64::MAX);
    let mut starts = Vec::with_capacity(settings.reach_samples);
    let mut attempts = 0usize;
    let budget = MAX_REJECTION_ATTEMPTS.saturating_mul(settings.reach_samples.max(1));
    while starts.len() < settings.reach_samples {
        if attempts >= budget {
            return Err(Error::Sampler(
                "no state lies inside every learned set of the sweep within the sampling budget".into(),
            ));
        }
        attempts += 1;
        let x = settings.region.sample(&mut rng);
        if fields.iter().all(|f| f.interpolate(&x) > 0.0) {
            starts.push(x);
        }
    }
    Ok(starts)
}
