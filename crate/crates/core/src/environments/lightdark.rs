//! One-dimensional LightDark with an optional stochastic obstacle.
//!
//! The agent moves along a line and must declare (action `0`) while within
//! `goal_radius` of the origin. Observations of the position get sharper near
//! `light_position`: the noise standard deviation is
//! `sigma_slope·|x − light_position| + sigma_min`.

use std::f64::consts::SQRT_2;
use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

use crate::model::{
    ContractViolation, Environment, ParamError, ParamMap, ParamReader, ParamValue, SpaceInfo,
    SpaceKind, StepOutcome,
};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LightDarkVariant {
    Continuous,
    /// States and observations rounded to the integer grid.
    Discrete,
}

impl LightDarkVariant {
    fn as_str(self) -> &'static str {
        match self {
            LightDarkVariant::Continuous => "continuous",
            LightDarkVariant::Discrete => "discrete",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightDarkConfig {
    pub light_position: f64,
    pub sigma_slope: f64,
    pub sigma_min: f64,
    pub goal_radius: f64,
    pub goal_reward: f64,
    pub miss_penalty: f64,
    pub step_cost: f64,
    pub init_mean: f64,
    pub init_std: f64,
    pub obstacle_interval: Option<(f64, f64)>,
    pub obstacle_hit_probability: f64,
    pub obstacle_penalty: f64,
    pub is_obstacle_hit_terminal: bool,
    pub variant: LightDarkVariant,
    pub action_set: Vec<f64>,
    pub discount: f64,
}

impl Default for LightDarkConfig {
    fn default() -> Self {
        Self {
            light_position: 5.0,
            sigma_slope: 0.5,
            sigma_min: 0.1,
            goal_radius: 1.0,
            goal_reward: 100.0,
            miss_penalty: -100.0,
            step_cost: -1.0,
            init_mean: 2.0,
            init_std: 2.0,
            obstacle_interval: None,
            obstacle_hit_probability: 0.0,
            obstacle_penalty: -100.0,
            is_obstacle_hit_terminal: false,
            variant: LightDarkVariant::Continuous,
            action_set: vec![-10.0, -1.0, 0.0, 1.0, 10.0],
            discount: 0.95,
        }
    }
}

impl LightDarkConfig {
    pub fn from_params(params: &ParamMap) -> Result<Self, ParamError> {
        let d = Self::default();
        let mut r = ParamReader::new("lightdark", params);
        let variant = match r.string("variant", d.variant.as_str())?.as_str() {
            "continuous" => LightDarkVariant::Continuous,
            "discrete" => LightDarkVariant::Discrete,
            other => {
                return Err(r.invalid(
                    "variant",
                    format!("expected `continuous` or `discrete`, got `{other}`"),
                ))
            }
        };
        let obstacle_interval = match r.real_list("obstacle_interval")? {
            None => None,
            Some(v) if v.len() == 2 && v[0] <= v[1] => Some((v[0], v[1])),
            Some(_) => return Err(r.invalid("obstacle_interval", "expected [lo, hi] with lo <= hi")),
        };
        let cfg = Self {
            light_position: r.real("light_position", d.light_position)?,
            sigma_slope: r.real("sigma_slope", d.sigma_slope)?,
            sigma_min: r.real("sigma_min", d.sigma_min)?,
            goal_radius: r.real("goal_radius", d.goal_radius)?,
            goal_reward: r.real("goal_reward", d.goal_reward)?,
            miss_penalty: r.real("miss_penalty", d.miss_penalty)?,
            step_cost: r.real("step_cost", d.step_cost)?,
            init_mean: r.real("init_mean", d.init_mean)?,
            init_std: r.real("init_std", d.init_std)?,
            obstacle_interval,
            obstacle_hit_probability: r
                .real("obstacle_hit_probability", d.obstacle_hit_probability)?,
            obstacle_penalty: r.real("obstacle_penalty", d.obstacle_penalty)?,
            is_obstacle_hit_terminal: r
                .boolean("is_obstacle_hit_terminal", d.is_obstacle_hit_terminal)?,
            variant,
            action_set: r.real_list("action_set")?.unwrap_or(d.action_set),
            discount: r.real("discount", d.discount)?,
        };
        if cfg.sigma_slope < 0.0 {
            return Err(r.invalid("sigma_slope", "must be nonnegative"));
        }
        if cfg.sigma_min <= 0.0 {
            return Err(r.invalid("sigma_min", "must be positive"));
        }
        if cfg.init_std < 0.0 {
            return Err(r.invalid("init_std", "must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&cfg.obstacle_hit_probability) {
            return Err(r.invalid("obstacle_hit_probability", "must lie in [0, 1]"));
        }
        if cfg.action_set.is_empty() {
            return Err(r.invalid("action_set", "must not be empty"));
        }
        if cfg.variant == LightDarkVariant::Discrete
            && cfg.action_set.iter().any(|a| a.fract() != 0.0)
        {
            return Err(r.invalid("action_set", "discrete variant needs integer moves"));
        }
        super::check_discount(&r, cfg.discount)?;
        r.finish()?;
        Ok(cfg)
    }

    pub fn params(&self) -> ParamMap {
        let mut m: ParamMap = [
            ("light_position", self.light_position),
            ("sigma_slope", self.sigma_slope),
            ("sigma_min", self.sigma_min),
            ("goal_radius", self.goal_radius),
            ("goal_reward", self.goal_reward),
            ("miss_penalty", self.miss_penalty),
            ("step_cost", self.step_cost),
            ("init_mean", self.init_mean),
            ("init_std", self.init_std),
            ("obstacle_hit_probability", self.obstacle_hit_probability),
            ("obstacle_penalty", self.obstacle_penalty),
            ("discount", self.discount),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), ParamValue::Real(v)))
        .collect();
        if let Some((lo, hi)) = self.obstacle_interval {
            m.insert(
                "obstacle_interval".into(),
                ParamValue::List(vec![ParamValue::Real(lo), ParamValue::Real(hi)]),
            );
        }
        m.insert(
            "is_obstacle_hit_terminal".into(),
            ParamValue::Bool(self.is_obstacle_hit_terminal),
        );
        m.insert("variant".into(), ParamValue::from(self.variant.as_str()));
        m.insert(
            "action_set".into(),
            ParamValue::List(self.action_set.iter().map(|&a| ParamValue::Real(a)).collect()),
        );
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightDarkState {
    pub x: f64,
    /// Declared, or stopped by a terminal obstacle hit.
    pub terminal: bool,
}

impl LightDarkState {
    pub fn at(x: f64) -> Self {
        Self { x, terminal: false }
    }
}

/// Signed move; `0` declares.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightDarkAction(pub f64);

impl fmt::Display for LightDarkAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightDarkObservation(pub f64);

impl fmt::Display for LightDarkObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightDark {
    pub config: LightDarkConfig,
}

/// `P(a < Z < b)` for a standard normal `Z`, accurate in both tails.
fn standard_normal_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        0.5 * (erfc(a / SQRT_2) - erfc(b / SQRT_2))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / SQRT_2) - erfc(-a / SQRT_2))
    } else {
        1.0 - 0.5 * erfc(-a / SQRT_2) - 0.5 * erfc(b / SQRT_2)
    }
}

impl LightDark {
    pub fn new(config: LightDarkConfig) -> Self {
        Self { config }
    }

    /// Observation noise standard deviation at position `x`.
    pub fn sigma(&self, x: f64) -> f64 {
        self.config.sigma_slope * (x - self.config.light_position).abs() + self.config.sigma_min
    }

    fn snap(&self, x: f64) -> f64 {
        match self.config.variant {
            LightDarkVariant::Continuous => x,
            LightDarkVariant::Discrete => x.round(),
        }
    }

    fn in_obstacle(&self, x: f64) -> bool {
        matches!(self.config.obstacle_interval, Some((lo, hi)) if x >= lo && x <= hi)
    }

    fn check_action(&self, action: &LightDarkAction) -> Result<(), ContractViolation> {
        if self.config.action_set.contains(&action.0) {
            Ok(())
        } else {
            Err(ContractViolation::new(
                "lightdark",
                format!("action {} is not in the action set {:?}", action.0, self.config.action_set),
            ))
        }
    }

    fn observe(&self, x: f64, rng: &mut SimRng) -> LightDarkObservation {
        let z: f64 = StandardNormal.sample(rng);
        LightDarkObservation(self.snap(x + self.sigma(x) * z))
    }
}

impl Default for LightDark {
    fn default() -> Self {
        Self::new(LightDarkConfig::default())
    }
}

impl Environment for LightDark {
    type State = LightDarkState;
    type Action = LightDarkAction;
    type Observation = LightDarkObservation;

    fn id(&self) -> &'static str {
        "lightdark"
    }

    fn params(&self) -> ParamMap {
        self.config.params()
    }

    fn space_info(&self) -> SpaceInfo {
        let n = self.config.action_set.len();
        match self.config.variant {
            LightDarkVariant::Continuous => SpaceInfo::new(
                SpaceKind::Continuous,
                SpaceKind::Discrete,
                SpaceKind::Continuous,
                Some(n),
                Some(1),
            ),
            LightDarkVariant::Discrete => SpaceInfo::new(
                SpaceKind::Discrete,
                SpaceKind::Discrete,
                SpaceKind::Discrete,
                Some(n),
                None,
            ),
        }
        .expect("valid space info")
    }

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn actions(&self) -> Vec<LightDarkAction> {
        self.config.action_set.iter().map(|&a| LightDarkAction(a)).collect()
    }

    fn sample_initial_state(&self, rng: &mut SimRng) -> LightDarkState {
        let z: f64 = StandardNormal.sample(rng);
        LightDarkState::at(self.snap(self.config.init_mean + self.config.init_std * z))
    }

    fn step(
        &self,
        state: &LightDarkState,
        action: &LightDarkAction,
        rng: &mut SimRng,
    ) -> Result<StepOutcome<LightDarkState, LightDarkObservation>, ContractViolation> {
        self.check_action(action)?;
        if state.terminal {
            return Ok(StepOutcome {
                next_state: *state,
                observation: self.observe(state.x, rng),
                reward: 0.0,
                terminal: true,
                safety_event: false,
                goal_reached: false,
            });
        }
        if action.0 == 0.0 {
            let inside = state.x.abs() <= self.config.goal_radius;
            let next = LightDarkState {
                x: state.x,
                terminal: true,
            };
            return Ok(StepOutcome {
                next_state: next,
                observation: self.observe(next.x, rng),
                reward: if inside {
                    self.config.goal_reward
                } else {
                    self.config.miss_penalty
                },
                terminal: true,
                safety_event: false,
                goal_reached: inside,
            });
        }
        // Movement, then the obstacle lottery, then the termination flag.
        let x = self.snap(state.x + action.0);
        let mut reward = self.config.step_cost;
        let mut safety_event = false;
        let mut terminal = false;
        if self.in_obstacle(x) && self.config.obstacle_hit_probability > 0.0 {
            let hit = rng.uniform() < self.config.obstacle_hit_probability;
            if hit {
                reward += self.config.obstacle_penalty;
                safety_event = true;
                terminal = self.config.is_obstacle_hit_terminal;
            }
        }
        let next = LightDarkState { x, terminal };
        Ok(StepOutcome {
            next_state: next,
            observation: self.observe(x, rng),
            reward,
            terminal,
            safety_event,
            goal_reached: false,
        })
    }

    fn observation_loglik(
        &self,
        obs: &LightDarkObservation,
        next_state: &LightDarkState,
        _action: &LightDarkAction,
    ) -> f64 {
        let sigma = self.sigma(next_state.x);
        match self.config.variant {
            LightDarkVariant::Continuous => {
                let z = (obs.0 - next_state.x) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            LightDarkVariant::Discrete => {
                let lo = (obs.0 - 0.5 - next_state.x) / sigma;
                let hi = (obs.0 + 0.5 - next_state.x) / sigma;
                standard_normal_interval(lo, hi).ln()
            }
        }
    }

    fn reward(&self, state: &LightDarkState, action: &LightDarkAction, next: &LightDarkState) -> f64 {
        if state.terminal {
            return 0.0;
        }
        if action.0 == 0.0 {
            return if state.x.abs() <= self.config.goal_radius {
                self.config.goal_reward
            } else {
                self.config.miss_penalty
            };
        }
        let mut r = self.config.step_cost;
        if self.in_obstacle(next.x) {
            if next.terminal {
                // A terminal landing can only come from a hit.
                r += self.config.obstacle_penalty;
            } else if !self.config.is_obstacle_hit_terminal {
                r += self.config.obstacle_hit_probability * self.config.obstacle_penalty;
            }
        }
        r
    }

    fn is_terminal(&self, state: &LightDarkState) -> bool {
        state.terminal
    }
}
