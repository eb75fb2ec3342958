//! Declarative experiment configuration (TOML).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use pomdp_core::beliefs::BeliefSpec;
use pomdp_core::environments::ENVIRONMENT_IDS;
use pomdp_core::hyperopt::{Domain, Scale, SearchSpace};
use pomdp_core::model::{ParamMap, ParamValue, SimulationSpec, SCHEMA_VERSION};
use pomdp_core::planners::{default_search_space, PlannerKind};
use pomdp_core::registry::{planner_ids, resolve, AnyEnvironment};
use pomdp_core::task_manager::BackendKind;
use pomdp_core::workflow::{episode_specs, Budget};
use serde::{Deserialize, Serialize};

pub const DEFAULT_CACHE_DIR: &str = ".pomdp/cache";
pub const DEFAULT_RUN_DIR: &str = ".pomdp/runs";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_name: String,
    pub environment: EnvironmentEntry,
    pub belief: BeliefEntry,
    pub policies: Vec<PolicyEntry>,
    pub num_episodes: u64,
    pub num_steps: u32,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentEntry {
    pub id: String,
    #[serde(default)]
    pub params: ParamMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefEntry {
    pub id: String,
    pub n_particles: u64,
    #[serde(default)]
    pub params: ParamMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyEntry {
    pub id: String,
    /// Display label; defaults to `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub params: ParamMap,
    /// Searched parameters for `optimize`. Omitted means the planner's
    /// default space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_space: Option<BTreeMap<String, DomainConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Real {
        lo: f64,
        hi: f64,
        #[serde(default)]
        scale: ScaleConfig,
    },
    Int {
        lo: i64,
        hi: i64,
    },
    Categorical {
        values: Vec<ParamValue>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleConfig {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub n_trials: usize,
    pub episodes_per_trial: usize,
    pub eval_episodes: usize,
}

/// `backend = "serial"` or `backend = { worker_pool = 8 }`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendConfig {
    #[default]
    Serial,
    WorkerPool(usize),
}

impl BackendConfig {
    pub fn kind(self) -> BackendKind {
        match self {
            BackendConfig::Serial => BackendKind::Serial,
            BackendConfig::WorkerPool(n_workers) => BackendKind::WorkerPool { n_workers },
        }
    }

    /// `--workers n`: one worker means serial execution.
    pub fn from_workers(n: usize) -> Self {
        if n <= 1 {
            BackendConfig::Serial
        } else {
            BackendConfig::WorkerPool(n)
        }
    }
}

impl DomainConfig {
    pub fn domain(&self) -> Domain {
        match self {
            DomainConfig::Real { lo, hi, scale } => Domain::Real {
                lo: *lo,
                hi: *hi,
                scale: match scale {
                    ScaleConfig::Linear => Scale::Linear,
                    ScaleConfig::Log => Scale::Log,
                },
            },
            DomainConfig::Int { lo, hi } => Domain::Int { lo: *lo, hi: *hi },
            DomainConfig::Categorical { values } => Domain::Categorical(values.clone()),
        }
    }
}

impl From<BudgetConfig> for Budget {
    fn from(b: BudgetConfig) -> Self {
        Budget {
            n_trials: b.n_trials,
            episodes_per_trial: b.episodes_per_trial,
            eval_episodes: b.eval_episodes,
        }
    }
}

/// Validation problems, each prefixed with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            f.write_str(e)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(ConfigErrors),
}

/// Which command the configuration is checked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Evaluate,
    Optimize,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Fails only for values TOML cannot hold, such as seeds above
    /// `i64::MAX`.
    pub fn to_toml(&self) -> Result<String, String> {
        toml::to_string(self).map_err(|e| e.to_string())
    }

    /// Policy labels in entry order: `name`, else `id`, numbered on clashes.
    pub fn labels(&self) -> Vec<String> {
        let base: Vec<String> = self
            .policies
            .iter()
            .map(|p| p.name.clone().unwrap_or_else(|| p.id.clone()))
            .collect();
        base.iter()
            .enumerate()
            .map(|(i, b)| {
                if base.iter().filter(|x| *x == b).count() > 1 {
                    format!("{b}#{}", i + 1)
                } else {
                    b.clone()
                }
            })
            .collect()
    }

    fn template_belief_params(&self) -> ParamMap {
        let mut params = self.belief.params.clone();
        params.insert(
            "n_particles".into(),
            ParamValue::Int(self.belief.n_particles as i64),
        );
        params
    }

    /// Spec template for one policy entry (episode index 0).
    pub fn template(&self, policy: &PolicyEntry) -> SimulationSpec {
        let belief_params = self.template_belief_params();
        SimulationSpec {
            environment_id: self.environment.id.clone(),
            environment_params: self.environment.params.clone(),
            policy_id: policy.id.clone(),
            policy_params: policy.params.clone(),
            belief_id: self.belief.id.clone(),
            belief_params,
            seed: self.seed,
            num_steps: self.num_steps,
            episode_index: 0,
            schema_version: SCHEMA_VERSION,
        }
    }

    /// Every episode of a direct evaluation with its cohort label.
    pub fn evaluation_specs(&self) -> (Vec<SimulationSpec>, Vec<String>) {
        let mut specs = Vec::new();
        let mut labels = Vec::new();
        for (policy, label) in self.policies.iter().zip(self.labels()) {
            let block = episode_specs(&self.template(policy), self.seed, self.num_episodes as usize);
            labels.extend(std::iter::repeat_n(label, block.len()));
            specs.extend(block);
        }
        (specs, labels)
    }

    /// Search space of a policy entry: explicit, else the planner default.
    pub fn search_space(&self, policy: &PolicyEntry) -> SearchSpace {
        match &policy.search_space {
            Some(entries) => {
                let mut space = SearchSpace::new();
                for (name, d) in entries {
                    space.insert(name.clone(), d.domain());
                }
                space
            }
            None => PlannerKind::from_id(&policy.id)
                .map(default_search_space)
                .unwrap_or_default(),
        }
    }

    pub fn validate(&self, mode: Mode) -> Result<(), ConfigErrors> {
        let mut errors = Vec::new();
        if self.experiment_name.is_empty()
            || self.experiment_name.starts_with('.')
            || self.experiment_name.contains(['/', '\\'])
        {
            errors.push(format!(
                "experiment_name: `{}` is not a valid directory name",
                self.experiment_name
            ));
        }
        if self.num_episodes == 0 {
            errors.push("num_episodes: must be positive".into());
        }
        if self.num_steps == 0 {
            errors.push("num_steps: must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            errors.push(format!("alpha: must lie in (0, 1), got {}", self.alpha));
        }
        if self.backend == BackendConfig::WorkerPool(0) {
            errors.push("backend.worker_pool: must be positive".into());
        }
        if self.belief.n_particles == 0 {
            errors.push("belief.n_particles: must be positive".into());
        }
        if self.belief.params.contains_key("n_particles") {
            errors.push("belief.params.n_particles: set belief.n_particles instead".into());
        }
        let mut env_ok = false;
        if !ENVIRONMENT_IDS.contains(&self.environment.id.as_str()) {
            errors.push(format!(
                "environment.id: unknown environment `{}` (valid: {})",
                self.environment.id,
                ENVIRONMENT_IDS.join(", ")
            ));
        } else if let Err(e) = AnyEnvironment::from_params(&self.environment.id, &self.environment.params) {
            errors.push(format!("environment.params: {e}"));
        } else {
            env_ok = true;
        }
        let mut belief_ok = false;
        if !BeliefSpec::IDS.contains(&self.belief.id.as_str()) {
            errors.push(format!(
                "belief.id: unknown belief `{}` (valid: {})",
                self.belief.id,
                BeliefSpec::IDS.join(", ")
            ));
        } else if self.belief.n_particles > 0 {
            let template = self.template_belief_params();
            match BeliefSpec::from_params(&self.belief.id, &template) {
                Ok(_) => belief_ok = true,
                Err(e) => errors.push(format!("belief.params: {e}")),
            }
        }
        if self.policies.is_empty() {
            errors.push("policies: at least one policy is required".into());
        }
        for (i, p) in self.policies.iter().enumerate() {
            let path = format!("policies[{i}]");
            if PlannerKind::from_id(&p.id).is_none() {
                errors.push(format!(
                    "{path}.id: unknown policy `{}` (valid: {})",
                    p.id,
                    planner_ids().join(", ")
                ));
                continue;
            }
            if mode == Mode::Optimize {
                match p.budget {
                    None => errors.push(format!("{path}.budget: required by optimize")),
                    Some(b) => {
                        for (name, v) in [
                            ("n_trials", b.n_trials),
                            ("episodes_per_trial", b.episodes_per_trial),
                            ("eval_episodes", b.eval_episodes),
                        ] {
                            if v == 0 {
                                errors.push(format!("{path}.budget.{name}: must be positive"));
                            }
                        }
                    }
                }
                let space = self.search_space(p);
                if space.is_empty() {
                    errors.push(format!("{path}.search_space: planner has no default space"));
                }
                if let Err(e) = space.validate() {
                    errors.push(format!("{path}.search_space: {e}"));
                }
            } else if p.search_space.is_some() {
                errors.push(format!(
                    "{path}.search_space: only used by optimize; set params instead"
                ));
            }
            // Full resolution catches parameter and compatibility errors.
            if env_ok && belief_ok && self.num_steps > 0 {
                if let Err(e) = resolve(&self.template(p)) {
                    errors.push(format!("{path}: {e}"));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errors))
        }
    }
}
