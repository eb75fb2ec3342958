//! The classic Tiger problem. Opening a door ends the episode.

use std::fmt;

use crate::model::{
    ContractViolation, Environment, ParamError, ParamMap, ParamReader, ParamValue, SpaceInfo,
    SpaceKind, StepOutcome, WeightedOutcome,
};
use crate::rng::SimRng;

#[derive(Clone, Debug, PartialEq)]
pub struct TigerConfig {
    pub listen_cost: f64,
    pub wrong_door_penalty: f64,
    pub correct_door_reward: f64,
    pub obs_accuracy: f64,
    pub discount: f64,
}

impl Default for TigerConfig {
    fn default() -> Self {
        Self {
            listen_cost: -1.0,
            wrong_door_penalty: -100.0,
            correct_door_reward: 10.0,
            obs_accuracy: 0.85,
            discount: 0.95,
        }
    }
}

impl TigerConfig {
    pub fn from_params(params: &ParamMap) -> Result<Self, ParamError> {
        let d = Self::default();
        let mut r = ParamReader::new("tiger", params);
        let cfg = Self {
            listen_cost: r.real("listen_cost", d.listen_cost)?,
            wrong_door_penalty: r.real("wrong_door_penalty", d.wrong_door_penalty)?,
            correct_door_reward: r.real("correct_door_reward", d.correct_door_reward)?,
            obs_accuracy: r.real("obs_accuracy", d.obs_accuracy)?,
            discount: r.real("discount", d.discount)?,
        };
        if !(cfg.obs_accuracy > 0.5 && cfg.obs_accuracy <= 1.0) {
            return Err(r.invalid("obs_accuracy", "must lie in (0.5, 1]"));
        }
        super::check_discount(&r, cfg.discount)?;
        r.finish()?;
        Ok(cfg)
    }

    pub fn params(&self) -> ParamMap {
        [
            ("listen_cost", self.listen_cost),
            ("wrong_door_penalty", self.wrong_door_penalty),
            ("correct_door_reward", self.correct_door_reward),
            ("obs_accuracy", self.obs_accuracy),
            ("discount", self.discount),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), ParamValue::Real(v)))
        .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TigerPosition {
    Left,
    Right,
}

impl fmt::Display for TigerPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TigerPosition::Left => "tiger-left",
            TigerPosition::Right => "tiger-right",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TigerState {
    pub tiger: TigerPosition,
    /// A door has been opened.
    pub done: bool,
}

impl TigerState {
    pub fn new(tiger: TigerPosition) -> Self {
        Self { tiger, done: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TigerAction {
    Listen,
    OpenLeft,
    OpenRight,
}

impl fmt::Display for TigerAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TigerAction::Listen => "listen",
            TigerAction::OpenLeft => "open-left",
            TigerAction::OpenRight => "open-right",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TigerObservation {
    HearLeft,
    HearRight,
}

impl fmt::Display for TigerObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TigerObservation::HearLeft => "hear-left",
            TigerObservation::HearRight => "hear-right",
        })
    }
}

impl TigerObservation {
    pub const ALL: [TigerObservation; 2] = [TigerObservation::HearLeft, TigerObservation::HearRight];

    fn pointing_at(pos: TigerPosition) -> Self {
        match pos {
            TigerPosition::Left => TigerObservation::HearLeft,
            TigerPosition::Right => TigerObservation::HearRight,
        }
    }

    fn flip(self) -> Self {
        match self {
            TigerObservation::HearLeft => TigerObservation::HearRight,
            TigerObservation::HearRight => TigerObservation::HearLeft,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tiger {
    pub config: TigerConfig,
}

impl Tiger {
    pub fn new(config: TigerConfig) -> Self {
        Self { config }
    }

    fn open_reward(&self, tiger: TigerPosition, action: TigerAction) -> (f64, bool) {
        let opened_tiger_door = matches!(
            (tiger, action),
            (TigerPosition::Left, TigerAction::OpenLeft)
                | (TigerPosition::Right, TigerAction::OpenRight)
        );
        if opened_tiger_door {
            (self.config.wrong_door_penalty, true)
        } else {
            (self.config.correct_door_reward, false)
        }
    }

    fn outcome(
        &self,
        state: &TigerState,
        action: TigerAction,
        observation: TigerObservation,
    ) -> StepOutcome<TigerState, TigerObservation> {
        if state.done {
            return StepOutcome {
                next_state: *state,
                observation,
                reward: 0.0,
                terminal: true,
                safety_event: false,
                goal_reached: false,
            };
        }
        match action {
            TigerAction::Listen => StepOutcome {
                next_state: *state,
                observation,
                reward: self.config.listen_cost,
                terminal: false,
                safety_event: false,
                goal_reached: false,
            },
            TigerAction::OpenLeft | TigerAction::OpenRight => {
                let (reward, hit) = self.open_reward(state.tiger, action);
                StepOutcome {
                    next_state: TigerState {
                        tiger: state.tiger,
                        done: true,
                    },
                    observation,
                    reward,
                    terminal: true,
                    safety_event: hit,
                    goal_reached: !hit,
                }
            }
        }
    }
}

impl Default for Tiger {
    fn default() -> Self {
        Self::new(TigerConfig::default())
    }
}

impl Environment for Tiger {
    type State = TigerState;
    type Action = TigerAction;
    type Observation = TigerObservation;

    fn id(&self) -> &'static str {
        "tiger"
    }

    fn params(&self) -> ParamMap {
        self.config.params()
    }

    fn space_info(&self) -> SpaceInfo {
        SpaceInfo::new(
            SpaceKind::Discrete,
            SpaceKind::Discrete,
            SpaceKind::Discrete,
            Some(3),
            None,
        )
        .expect("valid space info")
    }

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn actions(&self) -> Vec<TigerAction> {
        vec![TigerAction::Listen, TigerAction::OpenLeft, TigerAction::OpenRight]
    }

    fn sample_initial_state(&self, rng: &mut SimRng) -> TigerState {
        if rng.uniform() < 0.5 {
            TigerState::new(TigerPosition::Left)
        } else {
            TigerState::new(TigerPosition::Right)
        }
    }

    fn step(
        &self,
        state: &TigerState,
        action: &TigerAction,
        rng: &mut SimRng,
    ) -> Result<StepOutcome<TigerState, TigerObservation>, ContractViolation> {
        let u = rng.uniform();
        let observation = match (state.done, action) {
            (false, TigerAction::Listen) => {
                let truth = TigerObservation::pointing_at(state.tiger);
                if u < self.config.obs_accuracy {
                    truth
                } else {
                    truth.flip()
                }
            }
            // Uninformative after opening or once done.
            _ => {
                if u < 0.5 {
                    TigerObservation::HearLeft
                } else {
                    TigerObservation::HearRight
                }
            }
        };
        Ok(self.outcome(state, *action, observation))
    }

    fn observation_loglik(
        &self,
        obs: &TigerObservation,
        next_state: &TigerState,
        action: &TigerAction,
    ) -> f64 {
        match action {
            TigerAction::Listen if !next_state.done => {
                if *obs == TigerObservation::pointing_at(next_state.tiger) {
                    self.config.obs_accuracy.ln()
                } else {
                    (1.0 - self.config.obs_accuracy).ln()
                }
            }
            _ => 0.5f64.ln(),
        }
    }

    fn reward(&self, state: &TigerState, action: &TigerAction, _next: &TigerState) -> f64 {
        if state.done {
            return 0.0;
        }
        match action {
            TigerAction::Listen => self.config.listen_cost,
            _ => self.open_reward(state.tiger, *action).0,
        }
    }

    fn is_terminal(&self, state: &TigerState) -> bool {
        state.done
    }

    fn outcomes(
        &self,
        state: &TigerState,
        action: &TigerAction,
    ) -> Option<Vec<WeightedOutcome<TigerState, TigerObservation>>> {
        let informative = !state.done && *action == TigerAction::Listen;
        let out = TigerObservation::ALL
            .iter()
            .map(|&obs| {
                let probability = if informative {
                    if obs == TigerObservation::pointing_at(state.tiger) {
                        self.config.obs_accuracy
                    } else {
                        1.0 - self.config.obs_accuracy
                    }
                } else {
                    0.5
                };
                WeightedOutcome {
                    probability,
                    outcome: self.outcome(state, *action, obs),
                }
            })
            .filter(|w| w.probability > 0.0)
            .collect();
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn left() -> TigerState {
        TigerState::new(TigerPosition::Left)
    }

    #[test]
    fn opening_the_safe_door_pays_off() {
        let env = Tiger::default();
        let out = env
            .step(&left(), &TigerAction::OpenRight, &mut SimRng::seed_from_u64(0))
            .unwrap();
        assert_eq!(out.reward, 10.0);
        assert!(out.terminal);
        assert!(!out.safety_event);
        assert!(out.goal_reached);
    }

    #[test]
    fn opening_the_tiger_door_is_a_safety_event() {
        let env = Tiger::default();
        let out = env
            .step(&left(), &TigerAction::OpenLeft, &mut SimRng::seed_from_u64(0))
            .unwrap();
        assert_eq!(out.reward, -100.0);
        assert!(out.terminal);
        assert!(out.safety_event);
        assert!(!out.goal_reached);
    }

    #[test]
    fn listening_is_accurate_at_the_configured_rate() {
        let env = Tiger::default();
        let mut rng = SimRng::seed_from_u64(3);
        let n = 100_000;
        let mut hear_left = 0;
        for _ in 0..n {
            let out = env.step(&left(), &TigerAction::Listen, &mut rng).unwrap();
            assert_eq!(out.reward, -1.0);
            assert!(!out.terminal);
            assert_eq!(out.next_state, left());
            if out.observation == TigerObservation::HearLeft {
                hear_left += 1;
            }
        }
        assert!((hear_left as f64 / n as f64 - 0.85).abs() < 0.01);
    }

    #[test]
    fn terminal_state_is_absorbing() {
        let env = Tiger::default();
        let done = TigerState {
            tiger: TigerPosition::Left,
            done: true,
        };
        assert!(env.is_terminal(&done));
        let out = env
            .step(&done, &TigerAction::OpenLeft, &mut SimRng::seed_from_u64(0))
            .unwrap();
        assert_eq!(out.reward, 0.0);
        assert!(out.terminal);
        assert!(!out.safety_event);
    }

    #[test]
    fn config_validation() {
        let mut p = TigerConfig::default().params();
        p.insert("obs_accuracy".into(), ParamValue::Real(0.5));
        assert!(TigerConfig::from_params(&p).is_err());
        let p = TigerConfig::default().params();
        assert_eq!(TigerConfig::from_params(&p).unwrap(), TigerConfig::default());
    }

    #[test]
    fn enumerated_outcomes_agree_with_likelihood() {
        let env = Tiger::default();
        for a in env.actions() {
            let outs = env.outcomes(&left(), &a).unwrap();
            let total: f64 = outs.iter().map(|w| w.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for w in &outs {
                let ll = env.observation_loglik(&w.outcome.observation, &w.outcome.next_state, &a);
                assert!((ll.exp() - w.probability).abs() < 1e-12);
            }
        }
    }
}
