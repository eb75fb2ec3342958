//! Space descriptions and runtime compatibility checks.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Discrete,
    Continuous,
    Mixed,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceKind::Discrete => "discrete",
            SpaceKind::Continuous => "continuous",
            SpaceKind::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceInfoError {
    #[error("action_count must be present and positive exactly when actions are discrete")]
    ActionCount,
    #[error("state_dim must be present and positive exactly when states are continuous or mixed")]
    StateDim,
}

/// Kinds of the state, action and observation spaces of an environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceInfo {
    state_kind: SpaceKind,
    action_kind: SpaceKind,
    observation_kind: SpaceKind,
    action_count: Option<usize>,
    state_dim: Option<usize>,
}

impl SpaceInfo {
    pub fn new(
        state_kind: SpaceKind,
        action_kind: SpaceKind,
        observation_kind: SpaceKind,
        action_count: Option<usize>,
        state_dim: Option<usize>,
    ) -> Result<Self, SpaceInfoError> {
        let discrete_actions = action_kind == SpaceKind::Discrete;
        if discrete_actions != matches!(action_count, Some(n) if n > 0) {
            return Err(SpaceInfoError::ActionCount);
        }
        let needs_dim = state_kind != SpaceKind::Discrete;
        if needs_dim != matches!(state_dim, Some(d) if d > 0) {
            return Err(SpaceInfoError::StateDim);
        }
        Ok(Self {
            state_kind,
            action_kind,
            observation_kind,
            action_count,
            state_dim,
        })
    }

    pub fn state_kind(&self) -> SpaceKind {
        self.state_kind
    }

    pub fn action_kind(&self) -> SpaceKind {
        self.action_kind
    }

    pub fn observation_kind(&self) -> SpaceKind {
        self.observation_kind
    }

    pub fn action_count(&self) -> Option<usize> {
        self.action_count
    }

    pub fn state_dim(&self) -> Option<usize> {
        self.state_dim
    }
}

/// The set of space kinds a policy accepts on one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KindSet {
    discrete: bool,
    continuous: bool,
    mixed: bool,
}

impl KindSet {
    pub const ANY: KindSet = KindSet {
        discrete: true,
        continuous: true,
        mixed: true,
    };
    pub const DISCRETE: KindSet = KindSet {
        discrete: true,
        continuous: false,
        mixed: false,
    };

    pub fn contains(&self, kind: SpaceKind) -> bool {
        match kind {
            SpaceKind::Discrete => self.discrete,
            SpaceKind::Continuous => self.continuous,
            SpaceKind::Mixed => self.mixed,
        }
    }
}

impl fmt::Display for KindSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.discrete {
            parts.push("discrete");
        }
        if self.continuous {
            parts.push("continuous");
        }
        if self.mixed {
            parts.push("mixed");
        }
        f.write_str(&parts.join("|"))
    }
}

/// Space pattern a policy supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceRequirements {
    pub state: KindSet,
    pub action: KindSet,
    pub observation: KindSet,
}

impl SpaceRequirements {
    pub const ANY: SpaceRequirements = SpaceRequirements {
        state: KindSet::ANY,
        action: KindSet::ANY,
        observation: KindSet::ANY,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    State,
    Action,
    Observation,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::State => "state",
            Axis::Action => "action",
            Axis::Observation => "observation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisMismatch {
    pub axis: Axis,
    pub found: SpaceKind,
    pub supported: KindSet,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("incompatible spaces: {}", describe(.mismatches))]
pub struct Incompatibility {
    pub mismatches: Vec<AxisMismatch>,
}

fn describe(mismatches: &[AxisMismatch]) -> String {
    mismatches
        .iter()
        .map(|m| format!("{} space is {} but policy supports {}", m.axis, m.found, m.supported))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn check_compatibility(
    env_info: &SpaceInfo,
    requirements: &SpaceRequirements,
) -> Result<(), Incompatibility> {
    let axes = [
        (Axis::State, env_info.state_kind, requirements.state),
        (Axis::Action, env_info.action_kind, requirements.action),
        (Axis::Observation, env_info.observation_kind, requirements.observation),
    ];
    let mismatches: Vec<AxisMismatch> = axes
        .into_iter()
        .filter(|(_, found, supported)| !supported.contains(*found))
        .map(|(axis, found, supported)| AxisMismatch {
            axis,
            found,
            supported,
        })
        .collect();
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Incompatibility { mismatches })
    }
}
