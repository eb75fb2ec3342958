//! Resolution of string ids in a [`SimulationSpec`] to concrete
//! environments, planners and beliefs.

use crate::beliefs::BeliefSpec;
use crate::environments::{
    LightDark, LightDarkConfig, MountainCar, MountainCarConfig, RockSample, RockSampleConfig,
    Tiger, TigerConfig, ENVIRONMENT_IDS,
};
use crate::evaluation::{run_episode_with, EpisodeError, EpisodeRecord};
use crate::model::{
    check_compatibility, Environment, ParamMap, SimulationSpec, SpaceInfo, SCHEMA_VERSION,
};
use crate::planners::{Planner, PlannerKind};

/// One of the registered environments.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyEnvironment {
    Tiger(Tiger),
    LightDark(LightDark),
    RockSample(RockSample),
    MountainCar(MountainCar),
}

/// Runs `$body` with `$env` bound to the concrete environment.
macro_rules! with_env {
    ($any:expr, $env:ident => $body:expr) => {
        match $any {
            AnyEnvironment::Tiger($env) => $body,
            AnyEnvironment::LightDark($env) => $body,
            AnyEnvironment::RockSample($env) => $body,
            AnyEnvironment::MountainCar($env) => $body,
        }
    };
}

impl AnyEnvironment {
    pub fn from_params(id: &str, params: &ParamMap) -> Result<Self, EpisodeError> {
        Ok(match id {
            "tiger" => AnyEnvironment::Tiger(Tiger::new(TigerConfig::from_params(params)?)),
            "lightdark" => {
                AnyEnvironment::LightDark(LightDark::new(LightDarkConfig::from_params(params)?))
            }
            "rocksample" => {
                AnyEnvironment::RockSample(RockSample::new(RockSampleConfig::from_params(params)?))
            }
            "mountaincar" => AnyEnvironment::MountainCar(MountainCar::new(
                MountainCarConfig::from_params(params)?,
            )),
            other => {
                return Err(EpisodeError::UnknownId {
                    kind: "environment",
                    id: other.to_string(),
                    valid: ENVIRONMENT_IDS.join(", "),
                })
            }
        })
    }

    pub fn id(&self) -> &'static str {
        with_env!(self, e => e.id())
    }

    pub fn params(&self) -> ParamMap {
        with_env!(self, e => e.params())
    }

    pub fn discount(&self) -> f64 {
        with_env!(self, e => e.discount())
    }

    pub fn space_info(&self) -> SpaceInfo {
        with_env!(self, e => e.space_info())
    }

    /// Display names of the discrete actions, in index order.
    pub fn action_names(&self) -> Vec<String> {
        with_env!(self, e => e.actions().iter().map(|a| a.to_string()).collect())
    }
}

pub fn planner_ids() -> Vec<&'static str> {
    PlannerKind::ALL.iter().map(|k| k.id()).collect()
}

/// A spec with every id resolved and every parameter map fully populated.
#[derive(Clone, Debug)]
pub struct ResolvedSpec {
    pub environment: AnyEnvironment,
    pub planner: Planner,
    pub belief: BeliefSpec,
    /// The normalized spec: defaults filled in, so equal runs hash equally.
    pub spec: SimulationSpec,
}

impl ResolvedSpec {
    pub fn hash(&self) -> Result<String, EpisodeError> {
        Ok(self.spec.hash()?)
    }
}

fn planner_for(env: &AnyEnvironment, id: &str, params: &ParamMap) -> Result<Planner, EpisodeError> {
    if PlannerKind::from_id(id).is_none() {
        return Err(EpisodeError::UnknownId {
            kind: "policy",
            id: id.to_string(),
            valid: planner_ids().join(", "),
        });
    }
    Ok(Planner::from_params(id, params, env.discount())?)
}

/// Validates ids, parameters and space compatibility, and fills defaults.
pub fn resolve(spec: &SimulationSpec) -> Result<ResolvedSpec, EpisodeError> {
    if spec.schema_version != SCHEMA_VERSION {
        return Err(EpisodeError::SchemaVersion(spec.schema_version));
    }
    let environment = AnyEnvironment::from_params(&spec.environment_id, &spec.environment_params)?;
    let planner = planner_for(&environment, &spec.policy_id, &spec.policy_params)?;
    if !BeliefSpec::IDS.contains(&spec.belief_id.as_str()) {
        return Err(EpisodeError::UnknownId {
            kind: "belief",
            id: spec.belief_id.clone(),
            valid: BeliefSpec::IDS.join(", "),
        });
    }
    let belief = BeliefSpec::from_params(&spec.belief_id, &spec.belief_params)?;
    check_compatibility(&environment.space_info(), &planner.space_requirements())
        .map_err(crate::planners::PlanError::from)?;
    if planner.kind() == PlannerKind::FixedSequence {
        let n_actions = environment.action_names().len();
        if let Some(bad) = planner.config().actions.iter().find(|&&i| i >= n_actions) {
            return Err(crate::planners::PlanError::InvalidConfig(format!(
                "scripted action index {bad} out of range for `{}`",
                environment.id()
            ))
            .into());
        }
    }
    let normalized = SimulationSpec {
        environment_id: environment.id().to_string(),
        environment_params: environment.params(),
        policy_id: planner.id().to_string(),
        policy_params: planner.params(),
        belief_id: belief.id().to_string(),
        belief_params: belief.params(),
        ..spec.clone()
    };
    Ok(ResolvedSpec {
        environment,
        planner,
        belief,
        spec: normalized,
    })
}

pub fn normalize(spec: &SimulationSpec) -> Result<SimulationSpec, EpisodeError> {
    Ok(resolve(spec)?.spec)
}

/// Resolves and runs one episode; the record carries the normalized hash.
pub fn run_episode(spec: &SimulationSpec) -> Result<EpisodeRecord, EpisodeError> {
    let r = resolve(spec)?;
    let hash = r.hash()?;
    let s = &r.spec;
    with_env!(&r.environment, env => run_episode_with(
        env,
        &r.planner,
        &r.belief,
        s.seed,
        s.episode_index,
        s.num_steps,
        hash,
    ))
}
