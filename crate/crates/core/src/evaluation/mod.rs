//! Episode execution and aggregate statistics.
//!
//! Stream layout of one episode: the root stream is
//! `SimRng::for_episode(seed, episode_index)`; it is split, in order, into the
//! environment stream (initial state and transitions), the belief stream
//! (initial particles, updates, rejuvenation) and the policy stream.

pub mod stats;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::beliefs::{BeliefError, BeliefSpec};
use crate::model::{
    ContractViolation, Environment, ParamError, Policy, PolicyRunData, SerializationError,
};
use crate::planners::{PlanError, Planner};
use crate::rng::SimRng;

pub use stats::{aggregate, cvar, var, AggregateStats, StatsError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: String,
    pub observation: String,
    pub reward: f64,
    pub safety_event: bool,
    pub run_data: PolicyRunData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub spec_hash: String,
    pub discounted_return: f64,
    pub undiscounted_return: f64,
    pub steps_taken: u32,
    pub goal_reached: bool,
    pub safety_event_count: u64,
    /// Times the belief was rebuilt after particle depletion.
    pub belief_resets: u64,
    pub per_step: Vec<StepRecord>,
    /// Seconds. Excluded from determinism comparisons.
    pub wall_time: f64,
}

impl EpisodeRecord {
    /// Copy with every timing field zeroed, for equality checks.
    pub fn normalized(&self) -> Self {
        let mut r = self.clone();
        r.wall_time = 0.0;
        for s in &mut r.per_step {
            s.run_data.planning_time = 0.0;
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EpisodeError {
    #[error("unknown {kind} `{id}` (valid: {valid})")]
    UnknownId {
        kind: &'static str,
        id: String,
        valid: String,
    },
    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Serialization(#[from] SerializationError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Contract(#[from] ContractViolation),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// Runs one episode of `planner` on `env`, maintaining a `belief` filter.
pub fn run_episode_with<E: Environment>(
    env: &E,
    planner: &Planner,
    belief_spec: &BeliefSpec,
    seed: u64,
    episode_index: u64,
    num_steps: u32,
    spec_hash: String,
) -> Result<EpisodeRecord, EpisodeError> {
    let start = Instant::now();
    let mut root = SimRng::for_episode(seed, episode_index);
    let mut env_rng = root.split();
    let mut belief_rng = root.split();
    let mut policy_rng = root.split();

    let actions = env.actions();
    let gamma = env.discount();
    let mut state = env.sample_initial_state(&mut env_rng);
    let mut belief = belief_spec.create(env, &mut belief_rng)?;
    let mut record = EpisodeRecord {
        spec_hash,
        discounted_return: 0.0,
        undiscounted_return: 0.0,
        steps_taken: 0,
        goal_reached: false,
        safety_event_count: 0,
        belief_resets: 0,
        per_step: Vec::new(),
        wall_time: 0.0,
    };
    let mut scale = 1.0;
    for t in 0..num_steps as usize {
        if env.is_terminal(&state) {
            break;
        }
        let (action, run_data) = match planner.scripted_action(t) {
            Some(i) => {
                let a = actions.get(i).cloned().ok_or_else(|| {
                    PlanError::InvalidConfig(format!(
                        "scripted action index {i} out of range for {} actions",
                        actions.len()
                    ))
                })?;
                (a, PolicyRunData::default())
            }
            None => planner.action(env, &belief, &mut policy_rng)?,
        };
        let out = env.step(&state, &action, &mut env_rng)?;
        record.discounted_return += scale * out.reward;
        record.undiscounted_return += out.reward;
        scale *= gamma;
        record.steps_taken += 1;
        record.goal_reached |= out.goal_reached;
        record.safety_event_count += u64::from(out.safety_event);
        record.per_step.push(StepRecord {
            action: action.to_string(),
            observation: out.observation.to_string(),
            reward: out.reward,
            safety_event: out.safety_event,
            run_data,
        });
        if out.terminal {
            break;
        }
        belief = match belief_spec.update(&belief, &action, &out.observation, env, &mut belief_rng)
        {
            Ok(b) => b,
            Err(BeliefError::Depleted) => {
                record.belief_resets += 1;
                belief_spec.create(env, &mut belief_rng)?
            }
            Err(e) => return Err(e.into()),
        };
        state = out.next_state;
    }
    record.wall_time = start.elapsed().as_secs_f64();
    Ok(record)
}
