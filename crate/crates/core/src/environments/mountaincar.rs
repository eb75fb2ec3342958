//! Under-powered car in a valley, observed through a noisy position sensor.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};

use crate::model::{
    ContractViolation, Environment, ParamError, ParamMap, ParamReader, ParamValue, SpaceInfo,
    SpaceKind, StepOutcome,
};
use crate::rng::SimRng;

pub const POSITION_BOUNDS: (f64, f64) = (-1.2, 0.6);
pub const VELOCITY_BOUNDS: (f64, f64) = (-0.07, 0.07);

#[derive(Clone, Debug, PartialEq)]
pub struct MountainCarConfig {
    pub obs_noise_std: f64,
    pub goal_position: f64,
    pub step_cost: f64,
    pub goal_reward: f64,
    pub force: f64,
    pub gravity_coeff: f64,
    pub discount: f64,
}

impl Default for MountainCarConfig {
    fn default() -> Self {
        Self {
            obs_noise_std: 0.1,
            goal_position: 0.45,
            step_cost: -1.0,
            goal_reward: 100.0,
            force: 0.001,
            gravity_coeff: 0.0025,
            discount: 0.95,
        }
    }
}

impl MountainCarConfig {
    pub fn from_params(params: &ParamMap) -> Result<Self, ParamError> {
        let d = Self::default();
        let mut r = ParamReader::new("mountaincar", params);
        let cfg = Self {
            obs_noise_std: r.real("obs_noise_std", d.obs_noise_std)?,
            goal_position: r.real("goal_position", d.goal_position)?,
            step_cost: r.real("step_cost", d.step_cost)?,
            goal_reward: r.real("goal_reward", d.goal_reward)?,
            force: r.real("force", d.force)?,
            gravity_coeff: r.real("gravity_coeff", d.gravity_coeff)?,
            discount: r.real("discount", d.discount)?,
        };
        if cfg.obs_noise_std <= 0.0 {
            return Err(r.invalid("obs_noise_std", "must be positive"));
        }
        super::check_discount(&r, cfg.discount)?;
        r.finish()?;
        Ok(cfg)
    }

    pub fn params(&self) -> ParamMap {
        [
            ("obs_noise_std", self.obs_noise_std),
            ("goal_position", self.goal_position),
            ("step_cost", self.step_cost),
            ("goal_reward", self.goal_reward),
            ("force", self.force),
            ("gravity_coeff", self.gravity_coeff),
            ("discount", self.discount),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), ParamValue::Real(v)))
        .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MountainCarState {
    pub position: f64,
    pub velocity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MountainCarAction {
    Reverse,
    Coast,
    Forward,
}

impl MountainCarAction {
    pub fn thrust(self) -> f64 {
        match self {
            MountainCarAction::Reverse => -1.0,
            MountainCarAction::Coast => 0.0,
            MountainCarAction::Forward => 1.0,
        }
    }
}

impl fmt::Display for MountainCarAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MountainCarAction::Reverse => "-1",
            MountainCarAction::Coast => "0",
            MountainCarAction::Forward => "+1",
        })
    }
}

/// Noisy reading of the position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MountainCarObservation(pub f64);

impl fmt::Display for MountainCarObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MountainCar {
    pub config: MountainCarConfig,
}

impl MountainCar {
    pub fn new(config: MountainCarConfig) -> Self {
        Self { config }
    }

    /// Deterministic part of a transition.
    pub fn dynamics(&self, s: &MountainCarState, a: MountainCarAction) -> MountainCarState {
        let v = (s.velocity + a.thrust() * self.config.force
            - self.config.gravity_coeff * (3.0 * s.position).cos())
        .clamp(VELOCITY_BOUNDS.0, VELOCITY_BOUNDS.1);
        let p = (s.position + v).clamp(POSITION_BOUNDS.0, POSITION_BOUNDS.1);
        MountainCarState {
            position: p,
            velocity: v,
        }
    }

    fn at_goal(&self, s: &MountainCarState) -> bool {
        s.position >= self.config.goal_position
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new(MountainCarConfig::default())
    }
}

impl Environment for MountainCar {
    type State = MountainCarState;
    type Action = MountainCarAction;
    type Observation = MountainCarObservation;

    fn id(&self) -> &'static str {
        "mountaincar"
    }

    fn params(&self) -> ParamMap {
        self.config.params()
    }

    fn space_info(&self) -> SpaceInfo {
        SpaceInfo::new(
            SpaceKind::Continuous,
            SpaceKind::Discrete,
            SpaceKind::Continuous,
            Some(3),
            Some(2),
        )
        .expect("valid space info")
    }

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn actions(&self) -> Vec<MountainCarAction> {
        vec![
            MountainCarAction::Reverse,
            MountainCarAction::Coast,
            MountainCarAction::Forward,
        ]
    }

    fn sample_initial_state(&self, rng: &mut SimRng) -> MountainCarState {
        MountainCarState {
            position: -0.6 + 0.2 * rng.uniform(),
            velocity: 0.0,
        }
    }

    fn step(
        &self,
        state: &MountainCarState,
        action: &MountainCarAction,
        rng: &mut SimRng,
    ) -> Result<StepOutcome<MountainCarState, MountainCarObservation>, ContractViolation> {
        let z: f64 = StandardNormal.sample(rng);
        if self.at_goal(state) {
            return Ok(StepOutcome {
                next_state: *state,
                observation: MountainCarObservation(state.position + self.config.obs_noise_std * z),
                reward: 0.0,
                terminal: true,
                safety_event: false,
                goal_reached: false,
            });
        }
        let next = self.dynamics(state, *action);
        let terminal = self.at_goal(&next);
        Ok(StepOutcome {
            next_state: next,
            observation: MountainCarObservation(next.position + self.config.obs_noise_std * z),
            reward: if terminal {
                self.config.goal_reward
            } else {
                self.config.step_cost
            },
            terminal,
            safety_event: false,
            goal_reached: terminal,
        })
    }

    fn observation_loglik(
        &self,
        obs: &MountainCarObservation,
        next_state: &MountainCarState,
        _action: &MountainCarAction,
    ) -> f64 {
        let sigma = self.config.obs_noise_std;
        let z = (obs.0 - next_state.position) / sigma;
        -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    fn reward(
        &self,
        state: &MountainCarState,
        _action: &MountainCarAction,
        next: &MountainCarState,
    ) -> f64 {
        if self.at_goal(state) {
            0.0
        } else if self.at_goal(next) {
            self.config.goal_reward
        } else {
            self.config.step_cost
        }
    }

    fn is_terminal(&self, state: &MountainCarState) -> bool {
        self.at_goal(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reaching_the_goal_terminates() {
        let env = MountainCar::default();
        let s = MountainCarState {
            position: 0.42,
            velocity: 0.05,
        };
        let out = env
            .step(&s, &MountainCarAction::Forward, &mut SimRng::seed_from_u64(0))
            .unwrap();
        assert!(out.terminal && out.goal_reached);
        assert_eq!(out.reward, 100.0);
    }

    #[test]
    fn no_gravity_at_the_inflection() {
        let env = MountainCar::default();
        let s = MountainCarState {
            position: -std::f64::consts::PI / 6.0,
            velocity: 0.01,
        };
        let next = env.dynamics(&s, MountainCarAction::Coast);
        assert!((next.velocity - 0.01).abs() < 1e-15);
    }

    #[test]
    fn full_throttle_from_rest_is_not_enough() {
        let env = MountainCar::default();
        let mut s = MountainCarState {
            position: -0.5,
            velocity: 0.0,
        };
        for _ in 0..100 {
            s = env.dynamics(&s, MountainCarAction::Forward);
            assert!(s.position < 0.45);
        }
    }

    #[test]
    fn config_round_trip() {
        let cfg = MountainCarConfig::default();
        assert_eq!(MountainCarConfig::from_params(&cfg.params()).unwrap(), cfg);
    }
}
