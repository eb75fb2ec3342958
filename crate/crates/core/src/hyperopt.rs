//! Random-search hyperparameter optimization.
//!
//! All trial parameters are drawn up front, trial by trial and key by key in
//! ascending key order, so evaluation order cannot change what is tried.

use std::collections::BTreeMap;

use crate::model::{ParamMap, ParamValue};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Real { lo: f64, hi: f64, scale: Scale },
    /// Inclusive integer range.
    Int { lo: i64, hi: i64 },
    Categorical(Vec<ParamValue>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HyperoptError {
    #[error("search space parameter `{name}`: {reason}")]
    InvalidDomain { name: String, reason: String },
    #[error("n_trials must be at least 1")]
    NoTrials,
    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),
}

impl Domain {
    pub fn real(lo: f64, hi: f64) -> Self {
        Domain::Real {
            lo,
            hi,
            scale: Scale::Linear,
        }
    }

    pub fn log_real(lo: f64, hi: f64) -> Self {
        Domain::Real {
            lo,
            hi,
            scale: Scale::Log,
        }
    }

    pub fn int(lo: i64, hi: i64) -> Self {
        Domain::Int { lo, hi }
    }

    /// Checks the bounds. A range with `lo == hi` is a fixed value.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Domain::Real { lo, hi, scale } => {
                if !lo.is_finite() || !hi.is_finite() {
                    return Err("bounds must be finite".into());
                }
                if lo > hi {
                    return Err(format!("lo {lo} exceeds hi {hi}"));
                }
                if *scale == Scale::Log && *lo <= 0.0 {
                    return Err("logarithmic scale needs lo > 0".into());
                }
                Ok(())
            }
            Domain::Int { lo, hi } if lo > hi => Err(format!("lo {lo} exceeds hi {hi}")),
            Domain::Int { .. } => Ok(()),
            Domain::Categorical(v) if v.is_empty() => Err("no categories".into()),
            Domain::Categorical(_) => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> ParamValue {
        match self {
            Domain::Real { lo, hi, scale } => {
                let u = rng.uniform();
                ParamValue::Real(match scale {
                    Scale::Linear => lo + u * (hi - lo),
                    Scale::Log => (lo.ln() + u * (hi.ln() - lo.ln())).exp(),
                })
            }
            Domain::Int { lo, hi } => {
                let span = (hi - lo) as u64 + 1;
                ParamValue::Int(lo + rng.index(span as usize) as i64)
            }
            Domain::Categorical(v) => v[rng.index(v.len())].clone(),
        }
    }

    pub fn contains(&self, value: &ParamValue) -> bool {
        match self {
            Domain::Real { lo, hi, .. } => value.as_f64().is_some_and(|x| x >= *lo && x <= *hi),
            Domain::Int { lo, hi } => value.as_i64().is_some_and(|x| x >= *lo && x <= *hi),
            Domain::Categorical(v) => v.contains(value),
        }
    }
}

/// Named parameter domains.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchSpace {
    params: BTreeMap<String, Domain>,
}

impl SearchSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, domain: Domain) {
        self.params.insert(name.into(), domain);
    }

    pub fn with(mut self, name: impl Into<String>, domain: Domain) -> Self {
        self.insert(name, domain);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Domain> {
        self.params.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Domain)> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn validate(&self) -> Result<(), HyperoptError> {
        for (name, d) in &self.params {
            d.validate().map_err(|reason| HyperoptError::InvalidDomain {
                name: name.clone(),
                reason,
            })?;
        }
        Ok(())
    }

    /// Draws every parameter independently, in ascending key order.
    pub fn sample(&self, rng: &mut SimRng) -> ParamMap {
        self.params
            .iter()
            .map(|(k, d)| (k.clone(), d.sample(rng)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub trial_index: usize,
    pub params: ParamMap,
    /// `-inf` for a failed trial.
    pub objective_value: f64,
    pub episode_seeds: Vec<u64>,
    pub error: Option<String>,
}

/// What an objective evaluation reports back.
pub struct Evaluation {
    pub value: f64,
    pub episode_seeds: Vec<u64>,
}

/// Random search. Returns the best trial (ties to the lowest index) and the
/// full history.
pub fn optimize<F>(
    mut objective: F,
    space: &SearchSpace,
    n_trials: usize,
    rng: &mut SimRng,
) -> Result<(Trial, Vec<Trial>), HyperoptError>
where
    F: FnMut(usize, &ParamMap) -> Result<Evaluation, String>,
{
    if n_trials == 0 {
        return Err(HyperoptError::NoTrials);
    }
    space.validate()?;
    let draws: Vec<ParamMap> = (0..n_trials).map(|_| space.sample(rng)).collect();
    let mut history = Vec::with_capacity(n_trials);
    for (trial_index, params) in draws.into_iter().enumerate() {
        let trial = match objective(trial_index, &params) {
            Ok(e) => Trial {
                trial_index,
                params,
                objective_value: e.value,
                episode_seeds: e.episode_seeds,
                error: None,
            },
            Err(msg) => Trial {
                trial_index,
                params,
                objective_value: f64::NEG_INFINITY,
                episode_seeds: Vec::new(),
                error: Some(msg),
            },
        };
        history.push(trial);
    }
    let mut best: Option<&Trial> = None;
    for t in history.iter().filter(|t| t.error.is_none()) {
        if best.is_none_or(|b| t.objective_value > b.objective_value) {
            best = Some(t);
        }
    }
    let best = best
        .cloned()
        .ok_or(HyperoptError::AllTrialsFailed(n_trials))?;
    Ok((best, history))
}
