//! RockSample on an `n × n` grid with configurable dangerous cells.
//!
//! Coordinates are `(x, y)` with `x` growing east and `y` growing north. The
//! rover starts at `(0, n / 2)`; each rock is independently good with
//! probability one half. Moving east off the grid exits the map.

use std::fmt;

use crate::model::{
    ContractViolation, Environment, ParamError, ParamMap, ParamReader, ParamValue, SpaceInfo,
    SpaceKind, StepOutcome,
};
use crate::rng::SimRng;

pub type Cell = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct DangerousArea {
    pub cell: Cell,
    pub penalty: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RockSampleConfig {
    pub grid_size: usize,
    pub rock_positions: Vec<Cell>,
    pub sensor_efficiency_distance: f64,
    pub sample_good_reward: f64,
    pub sample_bad_penalty: f64,
    pub exit_reward: f64,
    pub dangerous_areas: Vec<DangerousArea>,
    pub dangerous_is_terminal: bool,
    pub discount: f64,
}

impl Default for RockSampleConfig {
    fn default() -> Self {
        Self {
            grid_size: 5,
            rock_positions: vec![(1, 1), (3, 3), (4, 4)],
            sensor_efficiency_distance: 20.0,
            sample_good_reward: 10.0,
            sample_bad_penalty: -10.0,
            exit_reward: 10.0,
            dangerous_areas: Vec::new(),
            dangerous_is_terminal: false,
            discount: 0.95,
        }
    }
}

fn read_cell(r: &ParamReader<'_>, key: &str, v: &ParamValue) -> Result<Cell, ParamError> {
    let items = v
        .as_list()
        .filter(|l| l.len() == 2)
        .ok_or_else(|| r.invalid(key, "cells are [x, y] pairs"))?;
    let coord = |p: &ParamValue| {
        p.as_i64()
            .filter(|&c| c >= 0)
            .map(|c| c as usize)
            .ok_or_else(|| r.invalid(key, "cell coordinates are nonnegative integers"))
    };
    Ok((coord(&items[0])?, coord(&items[1])?))
}

fn cell_value(c: Cell) -> ParamValue {
    ParamValue::List(vec![ParamValue::from(c.0), ParamValue::from(c.1)])
}

impl RockSampleConfig {
    pub const MAX_ROCKS: usize = 64;

    pub fn from_params(params: &ParamMap) -> Result<Self, ParamError> {
        let d = Self::default();
        let mut r = ParamReader::new("rocksample", params);
        let grid_size = r.usize_at_least("grid_size", d.grid_size, 1)?;
        let rock_positions = match r.opt_list("rock_positions")? {
            None => d.rock_positions,
            Some(items) => items
                .iter()
                .map(|v| read_cell(&r, "rock_positions", v))
                .collect::<Result<_, _>>()?,
        };
        let dangerous_areas = match r.opt_list("dangerous_areas")? {
            None => Vec::new(),
            Some(items) => items
                .iter()
                .map(|v| {
                    let pair = v
                        .as_list()
                        .filter(|l| l.len() == 2)
                        .ok_or_else(|| r.invalid("dangerous_areas", "entries are [[x, y], penalty]"))?;
                    let cell = read_cell(&r, "dangerous_areas", &pair[0])?;
                    let penalty = pair[1]
                        .as_f64()
                        .filter(|p| p.is_finite())
                        .ok_or_else(|| r.invalid("dangerous_areas", "penalty must be a finite real"))?;
                    Ok(DangerousArea { cell, penalty })
                })
                .collect::<Result<_, ParamError>>()?,
        };
        let cfg = Self {
            grid_size,
            rock_positions,
            sensor_efficiency_distance: r
                .real("sensor_efficiency_distance", d.sensor_efficiency_distance)?,
            sample_good_reward: r.real("sample_good_reward", d.sample_good_reward)?,
            sample_bad_penalty: r.real("sample_bad_penalty", d.sample_bad_penalty)?,
            exit_reward: r.real("exit_reward", d.exit_reward)?,
            dangerous_areas,
            dangerous_is_terminal: r.boolean("dangerous_is_terminal", d.dangerous_is_terminal)?,
            discount: r.real("discount", d.discount)?,
        };
        let n = cfg.grid_size;
        if cfg.rock_positions.len() > Self::MAX_ROCKS {
            return Err(r.invalid("rock_positions", "at most 64 rocks"));
        }
        if cfg.rock_positions.iter().any(|&(x, y)| x >= n || y >= n) {
            return Err(r.invalid("rock_positions", "rocks must lie inside the grid"));
        }
        if cfg.dangerous_areas.iter().any(|a| a.cell.0 >= n || a.cell.1 >= n) {
            return Err(r.invalid("dangerous_areas", "cells must lie inside the grid"));
        }
        if cfg.sensor_efficiency_distance <= 0.0 {
            return Err(r.invalid("sensor_efficiency_distance", "must be positive"));
        }
        super::check_discount(&r, cfg.discount)?;
        r.finish()?;
        Ok(cfg)
    }

    pub fn params(&self) -> ParamMap {
        let mut m: ParamMap = [
            ("sensor_efficiency_distance", self.sensor_efficiency_distance),
            ("sample_good_reward", self.sample_good_reward),
            ("sample_bad_penalty", self.sample_bad_penalty),
            ("exit_reward", self.exit_reward),
            ("discount", self.discount),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), ParamValue::Real(v)))
        .collect();
        m.insert("grid_size".into(), ParamValue::from(self.grid_size));
        m.insert(
            "rock_positions".into(),
            ParamValue::List(self.rock_positions.iter().map(|&c| cell_value(c)).collect()),
        );
        m.insert(
            "dangerous_areas".into(),
            ParamValue::List(
                self.dangerous_areas
                    .iter()
                    .map(|a| ParamValue::List(vec![cell_value(a.cell), ParamValue::Real(a.penalty)]))
                    .collect(),
            ),
        );
        m.insert(
            "dangerous_is_terminal".into(),
            ParamValue::Bool(self.dangerous_is_terminal),
        );
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RockSampleState {
    pub position: Cell,
    /// Bit `i` set iff rock `i` is good.
    pub good_rocks: u64,
    pub terminal: bool,
}

impl RockSampleState {
    pub fn rock_is_good(&self, i: usize) -> bool {
        self.good_rocks >> i & 1 == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RockSampleAction {
    North,
    South,
    East,
    West,
    Sample,
    /// Zero-based rock index; displayed one-based as `check_<i+1>`.
    Check(usize),
}

impl fmt::Display for RockSampleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RockSampleAction::North => f.write_str("north"),
            RockSampleAction::South => f.write_str("south"),
            RockSampleAction::East => f.write_str("east"),
            RockSampleAction::West => f.write_str("west"),
            RockSampleAction::Sample => f.write_str("sample"),
            RockSampleAction::Check(i) => write!(f, "check_{}", i + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RockSampleObservation {
    None,
    Good,
    Bad,
}

impl fmt::Display for RockSampleObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RockSampleObservation::None => "none",
            RockSampleObservation::Good => "good",
            RockSampleObservation::Bad => "bad",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RockSample {
    pub config: RockSampleConfig,
}

/// Everything a transition produces apart from the observation.
struct Move {
    next: RockSampleState,
    reward: f64,
    safety_event: bool,
    exited: bool,
}

impl RockSample {
    pub fn new(config: RockSampleConfig) -> Self {
        Self { config }
    }

    pub fn start_position(&self) -> Cell {
        (0, self.config.grid_size / 2)
    }

    /// Probability that checking `rock` from `position` reports the truth.
    pub fn sensor_accuracy(&self, position: Cell, rock: usize) -> f64 {
        let (rx, ry) = self.config.rock_positions[rock];
        let dx = position.0 as f64 - rx as f64;
        let dy = position.1 as f64 - ry as f64;
        let d = (dx * dx + dy * dy).sqrt();
        0.5 + 0.5 * 2f64.powf(-d / self.config.sensor_efficiency_distance)
    }

    fn danger_at(&self, cell: Cell) -> Option<f64> {
        self.config
            .dangerous_areas
            .iter()
            .find(|a| a.cell == cell)
            .map(|a| a.penalty)
    }

    fn validate(&self, action: &RockSampleAction) -> Result<(), ContractViolation> {
        match action {
            RockSampleAction::Check(i) if *i >= self.config.rock_positions.len() => {
                Err(ContractViolation::new(
                    "rocksample",
                    format!("check_{} refers to a missing rock", i + 1),
                ))
            }
            _ => Ok(()),
        }
    }

    fn transition(&self, s: &RockSampleState, action: &RockSampleAction) -> Move {
        let n = self.config.grid_size;
        let mut next = s.clone();
        let (x, y) = s.position;
        let target = match action {
            RockSampleAction::North => Some((x, (y + 1).min(n - 1))),
            RockSampleAction::South => Some((x, y.saturating_sub(1))),
            RockSampleAction::West => Some((x.saturating_sub(1), y)),
            RockSampleAction::East if x + 1 >= n => {
                next.terminal = true;
                return Move {
                    next,
                    reward: self.config.exit_reward,
                    safety_event: false,
                    exited: true,
                };
            }
            RockSampleAction::East => Some((x + 1, y)),
            RockSampleAction::Sample => {
                let rock = self.config.rock_positions.iter().position(|&c| c == s.position);
                let reward = match rock {
                    Some(i) if s.rock_is_good(i) => {
                        next.good_rocks &= !(1u64 << i);
                        self.config.sample_good_reward
                    }
                    _ => self.config.sample_bad_penalty,
                };
                return Move {
                    next,
                    reward,
                    safety_event: false,
                    exited: false,
                };
            }
            RockSampleAction::Check(_) => None,
        };
        let mut reward = 0.0;
        let mut safety_event = false;
        if let Some(cell) = target {
            if cell != s.position {
                if let Some(penalty) = self.danger_at(cell) {
                    reward += penalty;
                    safety_event = true;
                    next.terminal = self.config.dangerous_is_terminal;
                }
            }
            next.position = cell;
        }
        Move {
            next,
            reward,
            safety_event,
            exited: false,
        }
    }
}

impl Default for RockSample {
    fn default() -> Self {
        Self::new(RockSampleConfig::default())
    }
}

impl Environment for RockSample {
    type State = RockSampleState;
    type Action = RockSampleAction;
    type Observation = RockSampleObservation;

    fn id(&self) -> &'static str {
        "rocksample"
    }

    fn params(&self) -> ParamMap {
        self.config.params()
    }

    fn space_info(&self) -> SpaceInfo {
        SpaceInfo::new(
            SpaceKind::Discrete,
            SpaceKind::Discrete,
            SpaceKind::Discrete,
            Some(5 + self.config.rock_positions.len()),
            None,
        )
        .expect("valid space info")
    }

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn actions(&self) -> Vec<RockSampleAction> {
        let mut a = vec![
            RockSampleAction::North,
            RockSampleAction::South,
            RockSampleAction::East,
            RockSampleAction::West,
            RockSampleAction::Sample,
        ];
        a.extend((0..self.config.rock_positions.len()).map(RockSampleAction::Check));
        a
    }

    fn sample_initial_state(&self, rng: &mut SimRng) -> RockSampleState {
        let mut good_rocks = 0u64;
        for i in 0..self.config.rock_positions.len() {
            if rng.uniform() < 0.5 {
                good_rocks |= 1 << i;
            }
        }
        RockSampleState {
            position: self.start_position(),
            good_rocks,
            terminal: false,
        }
    }

    fn step(
        &self,
        state: &RockSampleState,
        action: &RockSampleAction,
        rng: &mut SimRng,
    ) -> Result<StepOutcome<RockSampleState, RockSampleObservation>, ContractViolation> {
        self.validate(action)?;
        if state.terminal {
            return Ok(StepOutcome {
                next_state: state.clone(),
                observation: RockSampleObservation::None,
                reward: 0.0,
                terminal: true,
                safety_event: false,
                goal_reached: false,
            });
        }
        let mv = self.transition(state, action);
        let observation = match action {
            RockSampleAction::Check(i) => {
                let truthful = rng.uniform() < self.sensor_accuracy(mv.next.position, *i);
                if mv.next.rock_is_good(*i) == truthful {
                    RockSampleObservation::Good
                } else {
                    RockSampleObservation::Bad
                }
            }
            _ => RockSampleObservation::None,
        };
        Ok(StepOutcome {
            terminal: mv.next.terminal,
            next_state: mv.next,
            observation,
            reward: mv.reward,
            safety_event: mv.safety_event,
            goal_reached: mv.exited,
        })
    }

    fn observation_loglik(
        &self,
        obs: &RockSampleObservation,
        next_state: &RockSampleState,
        action: &RockSampleAction,
    ) -> f64 {
        match (action, obs) {
            (RockSampleAction::Check(i), RockSampleObservation::Good | RockSampleObservation::Bad)
                if !next_state.terminal =>
            {
                let acc = self.sensor_accuracy(next_state.position, *i);
                let says_good = *obs == RockSampleObservation::Good;
                if says_good == next_state.rock_is_good(*i) {
                    acc.ln()
                } else {
                    (1.0 - acc).ln()
                }
            }
            (RockSampleAction::Check(_), RockSampleObservation::None) if !next_state.terminal => {
                f64::NEG_INFINITY
            }
            (_, RockSampleObservation::None) => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    fn reward(&self, state: &RockSampleState, action: &RockSampleAction, _next: &RockSampleState) -> f64 {
        if state.terminal || self.validate(action).is_err() {
            return 0.0;
        }
        self.transition(state, action).reward
    }

    fn is_terminal(&self, state: &RockSampleState) -> bool {
        state.terminal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_at(position: Cell, good_rocks: u64) -> RockSampleState {
        RockSampleState {
            position,
            good_rocks,
            terminal: false,
        }
    }

    #[test]
    fn sensor_law() {
        let env = RockSample::default();
        assert_eq!(env.sensor_accuracy((1, 1), 0), 1.0);
        let mut cfg = RockSampleConfig::default();
        cfg.grid_size = 30;
        cfg.rock_positions = vec![(0, 20)];
        let env = RockSample::new(cfg);
        assert!((env.sensor_accuracy((0, 0), 0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn check_at_distance_zero_never_lies() {
        let env = RockSample::default();
        let mut rng = SimRng::seed_from_u64(1);
        let s = state_at((1, 1), 0b001);
        for _ in 0..1000 {
            let out = env.step(&s, &RockSampleAction::Check(0), &mut rng).unwrap();
            assert_eq!(out.observation, RockSampleObservation::Good);
        }
    }

    #[test]
    fn exiting_east_ends_the_episode() {
        let env = RockSample::default();
        let s = state_at((4, 2), 0);
        let out = env
            .step(&s, &RockSampleAction::East, &mut SimRng::seed_from_u64(0))
            .unwrap();
        assert!(out.terminal && out.goal_reached);
        assert_eq!(out.reward, 10.0);
    }

    #[test]
    fn sampling() {
        let env = RockSample::default();
        let mut rng = SimRng::seed_from_u64(0);
        let s = state_at((1, 1), 0b001);
        let out = env.step(&s, &RockSampleAction::Sample, &mut rng).unwrap();
        assert_eq!(out.reward, 10.0);
        assert!(!out.next_state.rock_is_good(0));
        let again = env.step(&out.next_state, &RockSampleAction::Sample, &mut rng).unwrap();
        assert_eq!(again.reward, -10.0);
        // Off-rock sampling is penalized, not an error.
        let off = env.step(&state_at((0, 0), 0), &RockSampleAction::Sample, &mut rng).unwrap();
        assert_eq!(off.reward, -10.0);
    }

    #[test]
    fn walls_block_movement() {
        let env = RockSample::default();
        let mut rng = SimRng::seed_from_u64(0);
        let s = state_at((0, 0), 0);
        assert_eq!(env.step(&s, &RockSampleAction::West, &mut rng).unwrap().next_state.position, (0, 0));
        assert_eq!(env.step(&s, &RockSampleAction::South, &mut rng).unwrap().next_state.position, (0, 0));
        let top = state_at((2, 4), 0);
        assert_eq!(env.step(&top, &RockSampleAction::North, &mut rng).unwrap().next_state.position, (2, 4));
    }

    #[test]
    fn dangerous_cells() {
        let mut cfg = RockSampleConfig::default();
        cfg.dangerous_areas = vec![DangerousArea {
            cell: (1, 2),
            penalty: -50.0,
        }];
        let env = RockSample::new(cfg.clone());
        let mut rng = SimRng::seed_from_u64(0);
        let out = env.step(&state_at((0, 2), 0), &RockSampleAction::East, &mut rng).unwrap();
        assert_eq!(out.reward, -50.0);
        assert!(out.safety_event && !out.terminal);

        cfg.dangerous_is_terminal = true;
        let env = RockSample::new(cfg);
        let out = env.step(&state_at((0, 2), 0), &RockSampleAction::East, &mut rng).unwrap();
        assert!(out.safety_event && out.terminal && !out.goal_reached);
    }

    #[test]
    fn check_of_missing_rock_is_rejected() {
        let env = RockSample::default();
        assert!(env
            .step(&state_at((0, 0), 0), &RockSampleAction::Check(3), &mut SimRng::seed_from_u64(0))
            .is_err());
        assert_eq!(RockSampleAction::Check(0).to_string(), "check_1");
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = RockSampleConfig::default();
        cfg.dangerous_areas = vec![DangerousArea {
            cell: (2, 2),
            penalty: -20.0,
        }];
        assert_eq!(RockSampleConfig::from_params(&cfg.params()).unwrap(), cfg);
        let mut p = cfg.params();
        p.insert("grid_size".into(), ParamValue::Int(3));
        assert!(RockSampleConfig::from_params(&p).is_err(), "rock (4,4) off a 3x3 grid");
    }
}
