//! The environment and policy contracts.

use std::fmt::{Debug, Display};

use serde::{Deserialize, Serialize};

use super::params::ParamMap;
use super::space::{SpaceInfo, SpaceRequirements};
use crate::beliefs::WeightedParticleBelief;
use crate::hyperopt::SearchSpace;
use crate::planners::PlanError;
use crate::rng::SimRng;

/// Result of one generative step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<S, O> {
    pub next_state: S,
    pub observation: O,
    pub reward: f64,
    pub terminal: bool,
    pub safety_event: bool,
    /// The environment's own notion of success (e.g. a correct declaration).
    pub goal_reached: bool,
}

/// One branch of an exactly enumerated transition.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedOutcome<S, O> {
    pub probability: f64,
    pub outcome: StepOutcome<S, O>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{environment}: {message}")]
pub struct ContractViolation {
    pub environment: &'static str,
    pub message: String,
}

impl ContractViolation {
    pub fn new(environment: &'static str, message: impl Into<String>) -> Self {
        Self {
            environment,
            message: message.into(),
        }
    }
}

/// A POMDP given as a generative model plus an observation likelihood.
///
/// Terminal states are absorbing: stepping one yields the same state, zero
/// reward and `terminal = true`. `step` must be a pure function of its
/// arguments and the random stream.
pub trait Environment: Send + Sync {
    type State: Clone + Debug + Send + Sync;
    type Action: Clone + PartialEq + Debug + Display + Send + Sync;
    type Observation: Clone + PartialEq + Debug + Display + Send + Sync;

    fn id(&self) -> &'static str;

    /// Full configuration as ordered key/value pairs (defaults included).
    fn params(&self) -> ParamMap;

    fn space_info(&self) -> SpaceInfo;

    fn discount(&self) -> f64;

    /// The finite action list. Required for discrete action spaces.
    fn actions(&self) -> Vec<Self::Action>;

    fn sample_initial_state(&self, rng: &mut SimRng) -> Self::State;

    fn step(
        &self,
        state: &Self::State,
        action: &Self::Action,
        rng: &mut SimRng,
    ) -> Result<StepOutcome<Self::State, Self::Observation>, ContractViolation>;

    /// Log density (continuous) or log mass (discrete) of `obs` given the
    /// state reached and the action taken.
    fn observation_loglik(
        &self,
        obs: &Self::Observation,
        next_state: &Self::State,
        action: &Self::Action,
    ) -> f64;

    /// Expected immediate reward of the transition `state -a-> next_state`.
    fn reward(&self, state: &Self::State, action: &Self::Action, next_state: &Self::State) -> f64;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Exact outcome distribution for finite models; `None` when the model is
    /// only available generatively.
    fn outcomes(
        &self,
        _state: &Self::State,
        _action: &Self::Action,
    ) -> Option<Vec<WeightedOutcome<Self::State, Self::Observation>>> {
        None
    }
}

/// Visit count and value of one root action after a planning call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionStat {
    pub action: String,
    pub visits: u64,
    pub value: f64,
}

/// Per-step planner diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyRunData {
    pub nodes_expanded: u64,
    pub root_actions: Vec<ActionStat>,
    /// Wall-clock seconds spent planning. Excluded from determinism checks.
    pub planning_time: f64,
    pub max_depth_reached: u32,
}

impl PolicyRunData {
    pub fn total_root_visits(&self) -> u64 {
        self.root_actions.iter().map(|a| a.visits).sum()
    }
}

/// A decision rule mapping beliefs to actions.
pub trait Policy<E: Environment>: Send + Sync {
    fn name(&self) -> &str;

    /// Chooses an action for `belief`. Never mutates the belief.
    fn action(
        &self,
        env: &E,
        belief: &WeightedParticleBelief<E::State>,
        rng: &mut SimRng,
    ) -> Result<(E::Action, PolicyRunData), PlanError>;

    fn requirements(&self) -> SpaceRequirements;

    fn hyperparameter_space(&self) -> SearchSpace;
}
