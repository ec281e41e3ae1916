use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::CertifiedSet;
use crate::error::{Error, Result};
use crate::systems::{Ball, Rect};
use crate::value::ValueField;

/// Rejection-sampling attempts per accepted sample before giving up.
pub const MAX_REJECTION_ATTEMPTS: usize = 100_000;

/// Initial-state distribution named in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Uniform over the sampling region.
    #[default]
    UniformRegion,
    /// Uniform over the region points where the value field is positive.
    LearnedSet,
    /// Uniform ball member, then uniform inside its ball.
    CertifiedSet,
}

pub type StatePredicate<'a> = &'a (dyn Fn(&[f64]) -> bool + Sync);

/// A resolved initial-state distribution.
#[derive(Clone, Copy)]
pub enum InitialSampler<'a> {
    Region(&'a Rect),
    LearnedSet {
        region: &'a Rect,
        field: &'a ValueField,
    },
    CertifiedSet(&'a CertifiedSet),
    /// Uniform over the region points accepted by the predicate.
    Filtered {
        region: &'a Rect,
        accept: StatePredicate<'a>,
    },
}

/// A sampled initial state; certified samples carry the open-loop controls
/// of the ball they were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub state: Vec<f64>,
    pub certified_controls: Option<Vec<Vec<f64>>>,
}

fn reject<R: Rng + ?Sized>(
    region: &Rect,
    rng: &mut R,
    accept: impl Fn(&[f64]) -> bool,
    what: &str,
) -> Result<Vec<f64>> {
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let x = region.sample(rng);
        if accept(&x) {
            return Ok(x);
        }
    }
    Err(Error::Sampler(format!(
        "no {what} sample found in {MAX_REJECTION_ATTEMPTS} attempts; the set may be empty inside the region"
    )))
}

impl<'a> InitialSampler<'a> {
    pub fn resolve(
        kind: SamplerKind,
        region: &'a Rect,
        field: Option<&'a ValueField>,
        certified: Option<&'a CertifiedSet>,
    ) -> Result<Self> {
        match kind {
            SamplerKind::UniformRegion => Ok(InitialSampler::Region(region)),
            SamplerKind::LearnedSet => field
                .map(|field| InitialSampler::LearnedSet { region, field })
                .ok_or_else(|| Error::Sampler("the learned-set sampler needs a value field".into())),
            SamplerKind::CertifiedSet => match certified {
                Some(set) if !set.is_empty() => Ok(InitialSampler::CertifiedSet(set)),
                Some(_) => Err(Error::Sampler("the certified set is empty".into())),
                None => Err(Error::Sampler("the certified-set sampler needs a certified set".into())),
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<InitialState> {
        let plain = |state| InitialState {
            state,
            certified_controls: None,
        };
        match self {
            InitialSampler::Region(region) => Ok(plain(region.sample(rng))),
            InitialSampler::LearnedSet { region, field } => {
                reject(region, rng, |x| field.interpolate(x) > 0.0, "learned-set").map(plain)
            }
            InitialSampler::Filtered { region, accept } => reject(region, rng, accept, "filtered").map(plain),
            InitialSampler::CertifiedSet(set) => {
                let member = &set.members[rng.random_range(0..set.members.len())];
                let ball = Ball {
                    center: member.center.clone(),
                    radius: set.eps_x,
                };
                Ok(InitialState {
                    state: ball.sample(rng),
                    certified_controls: Some(member.certified_controls.clone()),
                })
            }
        }
    }
}
