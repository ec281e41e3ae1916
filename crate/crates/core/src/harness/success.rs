use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::stream_rng;
use super::sampler::InitialSampler;
use crate::error::{Error, Result};
use crate::policy::{rollout, rollout_open_loop, DisturbancePolicy, Policy, Trajectory};
use crate::systems::SystemModel;
use crate::value::first_reach_stage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Reached,
    ConstraintViolated,
    NeverReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub initial_state: Vec<f64>,
    pub first_entry: Option<usize>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub constraint_violations: usize,
    pub never_reached: usize,
    /// Mean first-entry stage over successful trials.
    pub mean_first_entry: Option<f64>,
    pub outcomes: Vec<TrialOutcome>,
}

impl SuccessReport {
    fn from_outcomes(outcomes: Vec<TrialOutcome>) -> Self {
        let count = |o: Outcome| outcomes.iter().filter(|t| t.outcome == o).count();
        let successes = count(Outcome::Reached);
        let entries: Vec<usize> = outcomes.iter().filter_map(|t| t.first_entry).collect();
        SuccessReport {
            trials: outcomes.len(),
            successes,
            success_rate: successes as f64 / outcomes.len() as f64,
            constraint_violations: count(Outcome::ConstraintViolated),
            never_reached: count(Outcome::NeverReached),
            mean_first_entry: (!entries.is_empty())
                .then(|| entries.iter().sum::<usize>() as f64 / entries.len() as f64),
            outcomes,
        }
    }

    /// Columns `trial, x0.., first_entry, outcome`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.outcomes.first().map_or(0, |t| t.initial_state.len());
        let mut header = vec!["trial".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.push("first_entry".into());
        header.push("outcome".into());
        out.write_record(&header)?;
        for (i, t) in self.outcomes.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(t.initial_state.iter().map(|v| format!("{v:?}")));
            row.push(t.first_entry.map(|s| s.to_string()).unwrap_or_default());
            row.push(
                match t.outcome {
                    Outcome::Reached => "reached",
                    Outcome::ConstraintViolated => "constraint_violated",
                    Outcome::NeverReached => "never_reached",
                }
                .into(),
            );
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Classifies a trajectory: reached iff some prefix has `g > 0`.
pub fn classify(traj: &Trajectory, model: &SystemModel) -> (Option<usize>, Outcome) {
    match first_reach_stage(traj, model) {
        Some(t) => (Some(t), Outcome::Reached),
        None if traj.states.iter().any(|x| model.constraint(x) <= 0.0) => (None, Outcome::ConstraintViolated),
        None => (None, Outcome::NeverReached),
    }
}

/// Monte-Carlo success rate. Trial `k` draws its initial state and its
/// rollout seed from stream `k` of `seed`. Samples carrying certified
/// controls replay those controls open-loop; others run the policy in
/// closed loop for `horizon` steps.
pub fn success_rate(
    model: &SystemModel,
    sampler: &InitialSampler<'_>,
    policy: &Policy,
    dist_policy: &DisturbancePolicy,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<SuccessReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let init = sampler.sample(&mut rng)?;
            let rollout_seed: u64 = rng.random();
            let traj = match &init.certified_controls {
                Some(controls) => rollout_open_loop(model, controls, dist_policy, &init.state, rollout_seed)?,
                None => rollout(model, policy, dist_policy, &init.state, horizon, rollout_seed)?,
            };
            let (first_entry, outcome) = classify(&traj, model);
            Ok(TrialOutcome {
                initial_state: init.state,
                first_entry,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuccessReport::from_outcomes(outcomes))
}
