//! The two experiment workflows: direct evaluation and optimize-and-evaluate.

use std::collections::HashSet;
use std::path::PathBuf;

use crate::evaluation::stats::{cvar, mean};
use crate::evaluation::AggregateStats;
use crate::hyperopt::{optimize, Evaluation, HyperoptError, SearchSpace, Trial};
use crate::model::{ParamMap, SimulationSpec};
use crate::rng::{derive_seed, episode_seed, SimRng};
use crate::task_manager::{
    execute, BackendKind, ExecuteError, ExecuteOptions, ExecutionReport, FaultPlan, TaskSet,
};

/// Expands a template into `n` episodes `seed`, indices `0..n`.
pub fn episode_specs(template: &SimulationSpec, seed: u64, n: usize) -> Vec<SimulationSpec> {
    (0..n as u64)
        .map(|episode_index| SimulationSpec {
            seed,
            episode_index,
            ..template.clone()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub n_trials: usize,
    pub episodes_per_trial: usize,
    pub eval_episodes: usize,
}

/// What a trial maximizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    MeanReturn,
    /// Lower-tail CVaR of the discounted return at this level.
    Cvar(f64),
}

impl Objective {
    fn score(self, returns: &[f64]) -> Result<f64, String> {
        match self {
            Objective::MeanReturn => mean(returns),
            Objective::Cvar(a) => cvar(returns, a),
        }
        .map_err(|e| e.to_string())
    }
}

/// Where and how the workflow runs its task sets.
#[derive(Clone, Debug)]
pub struct Campaign {
    pub experiment_name: String,
    pub backend: BackendKind,
    pub cache_dir: PathBuf,
    pub run_dir: PathBuf,
    pub alpha: f64,
    pub fault: Option<FaultPlan>,
}

impl Campaign {
    fn task_set(&self, specs: Vec<SimulationSpec>, labels: Vec<String>) -> TaskSet {
        TaskSet {
            specs,
            labels,
            experiment_name: self.experiment_name.clone(),
            backend: self.backend,
            cache_dir: self.cache_dir.clone(),
            run_dir: self.run_dir.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error("budget field `{0}` must be positive")]
    Budget(&'static str),
    #[error(transparent)]
    Hyperopt(#[from] HyperoptError),
    #[error(transparent)]
    Execute(#[from] ExecuteError),
    #[error("search and evaluation seed blocks overlap")]
    SeedOverlap,
}

#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub best: Trial,
    pub history: Vec<Trial>,
    /// Policy parameters of the best trial merged over the template's.
    pub best_params: ParamMap,
    /// Statistics of the evaluation phase only.
    pub stats: AggregateStats,
    pub report: ExecutionReport,
    /// Episodes simulated during the search phase (cache misses).
    pub search_executed: usize,
}

/// Seed of the search block derived from the campaign seed; the evaluation
/// block uses the campaign seed itself, so a single-point search evaluates
/// exactly what direct evaluation would.
pub fn search_seed(seed: u64) -> u64 {
    derive_seed(seed, "search")
}

/// Random search over `space` (keys are policy parameters), each trial scored
/// on the same `episodes_per_trial` search episodes, then a full evaluation of
/// the best parameters on a disjoint block of `eval_episodes` episodes.
pub fn optimize_and_evaluate(
    template: &SimulationSpec,
    space: &SearchSpace,
    budget: Budget,
    objective: Objective,
    seed: u64,
    campaign: &Campaign,
) -> Result<OptimizeOutcome, WorkflowError> {
    for (name, v) in [
        ("n_trials", budget.n_trials),
        ("episodes_per_trial", budget.episodes_per_trial),
        ("eval_episodes", budget.eval_episodes),
    ] {
        if v == 0 {
            return Err(WorkflowError::Budget(name));
        }
    }
    space.validate()?;
    let search = search_seed(seed);
    let search_block: HashSet<u64> = (0..budget.episodes_per_trial as u64)
        .map(|i| episode_seed(search, i))
        .collect();
    let eval_block: Vec<u64> = (0..budget.eval_episodes as u64)
        .map(|i| episode_seed(seed, i))
        .collect();
    if search == seed || eval_block.iter().any(|s| search_block.contains(s)) {
        return Err(WorkflowError::SeedOverlap);
    }
    let mut trial_seeds: Vec<u64> = search_block.into_iter().collect();
    trial_seeds.sort_unstable();

    let trial_options = ExecuteOptions {
        alpha: campaign.alpha,
        write_run: false,
        run_params: Vec::new(),
        trials: None,
        fault: campaign.fault.clone(),
    };
    let mut interrupted: Option<ExecuteError> = None;
    let mut search_executed = 0;
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, "sampler"));
    let result = optimize(
        |_, params: &ParamMap| {
            if interrupted.is_some() {
                return Err("campaign interrupted".into());
            }
            let mut spec = template.clone();
            spec.policy_params.extend(params.clone());
            let set = campaign.task_set(
                episode_specs(&spec, search, budget.episodes_per_trial),
                Vec::new(),
            );
            match execute(&set, &trial_options) {
                Ok(report) => {
                    search_executed += report.executed;
                    if report.failed > 0 {
                        return Err(format!("{} episodes failed", report.failed));
                    }
                    let returns: Vec<f64> =
                        report.records().iter().map(|r| r.discounted_return).collect();
                    Ok(Evaluation {
                        value: objective.score(&returns)?,
                        episode_seeds: trial_seeds.clone(),
                    })
                }
                Err(e @ ExecuteError::Interrupted { .. }) => {
                    let msg = e.to_string();
                    interrupted = Some(e);
                    Err(msg)
                }
                Err(e) => Err(e.to_string()),
            }
        },
        space,
        budget.n_trials,
        &mut rng,
    );
    if let Some(e) = interrupted {
        return Err(e.into());
    }
    let (best, history) = result?;

    let mut spec = template.clone();
    spec.policy_params.extend(best.params.clone());
    let label = spec.policy_id.clone();
    let set = campaign.task_set(
        episode_specs(&spec, seed, budget.eval_episodes),
        vec![label; budget.eval_episodes],
    );
    let mut run_params = vec![
        ("search_seed".to_string(), search.to_string()),
        ("eval_seed".to_string(), seed.to_string()),
        ("best_trial".to_string(), best.trial_index.to_string()),
    ];
    run_params.extend(
        best.params
            .iter()
            .map(|(k, v)| (format!("best.{k}"), crate::task_manager::run_store::param_text(v))),
    );
    let report = execute(
        &set,
        &ExecuteOptions {
            alpha: campaign.alpha,
            write_run: true,
            run_params,
            trials: Some(history.clone()),
            fault: campaign.fault.clone(),
        },
    )?;
    let stats = report.cohorts[0]
        .stats
        .clone()
        .expect("execute fails when every task fails");
    Ok(OptimizeOutcome {
        best_params: spec.policy_params,
        best,
        history,
        stats,
        report,
        search_executed,
    })
}
