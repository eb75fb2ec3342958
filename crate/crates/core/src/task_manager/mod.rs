//! Fault-tolerant execution of task sets with a content-addressed cache,
//! resume, pluggable backends and a file-based run store.

pub mod backend;
pub mod cache;
pub mod run_store;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

pub use backend::{Backend, BackendKind, Serial, WorkerPool};
pub use cache::{Cache, CacheError, CacheStats, PutOutcome, WritePoint};
pub use run_store::{list_runs, tsv_escape, tsv_unescape, RunStoreError, RunSummary};

use crate::evaluation::{aggregate, AggregateStats, EpisodeRecord, StatsError};
use crate::hyperopt::Trial;
use crate::model::SimulationSpec;
use crate::registry;
use run_store::{CohortRow, EpisodeRow, FailureRow, RunContents};

/// Specs to run plus where to cache and record them.
#[derive(Clone, Debug)]
pub struct TaskSet {
    pub specs: Vec<SimulationSpec>,
    /// Optional cohort label per spec; when empty, labels are derived from
    /// the environment and policy ids.
    pub labels: Vec<String>,
    pub experiment_name: String,
    pub backend: BackendKind,
    pub cache_dir: PathBuf,
    pub run_dir: PathBuf,
}

/// Point during execution at which an injected kill may fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultPoint {
    /// A cache miss is about to be simulated.
    BeforeTask,
    /// The cache temporary file is synced but not renamed.
    BeforeRename,
    /// A cache entry was just committed.
    AfterPut,
}

struct FaultState {
    kill_at: u64,
    events: AtomicU64,
    tripped: AtomicBool,
}

/// Simulated process kill: the `kill_at`-th fault point reached (counting
/// from 1, across every execution sharing this plan) aborts the campaign.
/// Work already committed to the cache stays; nothing else is written.
#[derive(Clone)]
pub struct FaultPlan(Arc<FaultState>);

impl FaultPlan {
    pub fn kill_at(event: u64) -> Self {
        Self(Arc::new(FaultState {
            kill_at: event.max(1),
            events: AtomicU64::new(0),
            tripped: AtomicBool::new(false),
        }))
    }

    pub fn tripped(&self) -> bool {
        self.0.tripped.load(Ordering::SeqCst)
    }

    /// Fault points reached so far.
    pub fn events(&self) -> u64 {
        self.0.events.load(Ordering::SeqCst)
    }

    fn hit(&self, _point: FaultPoint) -> Result<(), CacheError> {
        if self.tripped() {
            return Err(CacheError::Interrupted);
        }
        let n = self.0.events.fetch_add(1, Ordering::SeqCst) + 1;
        if n >= self.0.kill_at {
            self.0.tripped.store(true, Ordering::SeqCst);
            return Err(CacheError::Interrupted);
        }
        Ok(())
    }
}

impl std::fmt::Debug for FaultPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FaultPlan")
            .field("kill_at", &self.0.kill_at)
            .field("events", &self.events())
            .finish()
    }
}

#[derive(Clone, Debug)]
pub struct ExecuteOptions {
    /// Tail level for VaR/CVaR and `1 − alpha` CI confidence.
    pub alpha: f64,
    /// Write a run directory after execution.
    pub write_run: bool,
    /// Extra `key → value` rows for `params.tsv`.
    pub run_params: Vec<(String, String)>,
    /// Trial history to store as `trials.tsv`.
    pub trials: Option<Vec<Trial>>,
    pub fault: Option<FaultPlan>,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            write_run: true,
            run_params: Vec::new(),
            trials: None,
            fault: None,
        }
    }
}

/// What happened to one spec.
#[derive(Clone, Debug)]
pub struct TaskOutcome {
    pub index: usize,
    /// Normalized spec when it resolved, else the spec as given.
    pub spec: SimulationSpec,
    pub hash: String,
    pub cohort: String,
    pub result: Result<EpisodeRecord, String>,
    pub cached: bool,
}

#[derive(Clone, Debug)]
pub struct CohortSummary {
    pub label: String,
    pub digest: String,
    pub environment_id: String,
    pub policy_id: String,
    pub n_tasks: usize,
    pub n_failed: usize,
    /// `None` when every task of the cohort failed.
    pub stats: Option<AggregateStats>,
}

#[derive(Clone, Debug)]
pub struct ExecutionReport {
    /// In task-set order.
    pub outcomes: Vec<TaskOutcome>,
    pub cohorts: Vec<CohortSummary>,
    /// Episodes actually simulated (cache misses).
    pub executed: usize,
    pub cache_hits: usize,
    pub failed: usize,
    pub run_path: Option<PathBuf>,
}

impl ExecutionReport {
    /// Successful records in task-set order.
    pub fn records(&self) -> Vec<&EpisodeRecord> {
        self.outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect()
    }

    pub fn cohort(&self, label: &str) -> Option<&CohortSummary> {
        self.cohorts.iter().find(|c| c.label == label)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExecuteError {
    #[error("task set is empty")]
    Empty,
    #[error("{labels} labels given for {specs} specs")]
    LabelCount { labels: usize, specs: usize },
    #[error("specs {first} and {second} are identical (hash {hash})")]
    DuplicateSpec {
        first: usize,
        second: usize,
        hash: String,
    },
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("cannot start backend: {0}")]
    Backend(String),
    #[error("execution interrupted after {completed} tasks")]
    Interrupted { completed: usize },
    #[error("all {count} tasks failed; first error: {first}")]
    AllFailed { count: usize, first: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    RunStore(#[from] RunStoreError),
}

struct Prepared {
    spec: SimulationSpec,
    hash: String,
    resolve_error: Option<String>,
}

fn prepare(spec: &SimulationSpec) -> Prepared {
    match registry::normalize(spec) {
        Ok(n) => match n.hash() {
            Ok(hash) => Prepared {
                spec: n,
                hash,
                resolve_error: None,
            },
            Err(e) => Prepared {
                spec: n,
                hash: String::new(),
                resolve_error: Some(e.to_string()),
            },
        },
        Err(e) => Prepared {
            hash: spec.hash().unwrap_or_default(),
            spec: spec.clone(),
            resolve_error: Some(e.to_string()),
        },
    }
}

fn cohort_labels(set: &TaskSet, prepared: &[Prepared]) -> Vec<(String, String)> {
    let digests: Vec<String> = prepared
        .iter()
        .map(|p| p.spec.cohort_digest().unwrap_or_default())
        .collect();
    if !set.labels.is_empty() {
        return set.labels.iter().cloned().zip(digests).collect();
    }
    // Derived label: `env/policy`, disambiguated by digest when the same
    // pair appears with different parameters.
    let mut by_pair: HashMap<(String, String), Vec<&str>> = HashMap::new();
    for (p, d) in prepared.iter().zip(&digests) {
        let e = by_pair
            .entry((p.spec.environment_id.clone(), p.spec.policy_id.clone()))
            .or_default();
        if !e.contains(&d.as_str()) {
            e.push(d);
        }
    }
    prepared
        .iter()
        .zip(&digests)
        .map(|(p, d)| {
            let pair = (p.spec.environment_id.clone(), p.spec.policy_id.clone());
            let base = format!("{}/{}", pair.0, pair.1);
            let label = if by_pair[&pair].len() > 1 {
                format!("{base}#{}", &d[..d.len().min(8)])
            } else {
                base
            };
            (label, d.clone())
        })
        .collect()
}

/// Runs every spec, reusing cached records, and aggregates per cohort.
pub fn execute(set: &TaskSet, options: &ExecuteOptions) -> Result<ExecutionReport, ExecuteError> {
    if set.specs.is_empty() {
        return Err(ExecuteError::Empty);
    }
    if !set.labels.is_empty() && set.labels.len() != set.specs.len() {
        return Err(ExecuteError::LabelCount {
            labels: set.labels.len(),
            specs: set.specs.len(),
        });
    }
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(ExecuteError::Alpha(options.alpha));
    }
    let prepared: Vec<Prepared> = set.specs.iter().map(prepare).collect();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, p) in prepared.iter().enumerate() {
        if p.hash.is_empty() {
            continue;
        }
        if let Some(&first) = seen.get(p.hash.as_str()) {
            return Err(ExecuteError::DuplicateSpec {
                first,
                second: i,
                hash: p.hash.clone(),
            });
        }
        seen.insert(&p.hash, i);
    }
    let labels = cohort_labels(set, &prepared);

    let cache = Cache::new(&set.cache_dir);
    let backend = set
        .backend
        .build()
        .map_err(|e| ExecuteError::Backend(e.to_string()))?;
    let slots: Mutex<Vec<Option<(Result<EpisodeRecord, String>, bool)>>> =
        Mutex::new(vec![None; prepared.len()]);
    let executed = AtomicU64::new(0);
    let fault = options.fault.as_ref();
    let hit = |point| fault.map_or(Ok(()), |f| f.hit(point));

    let task = |i: usize| {
        if fault.is_some_and(FaultPlan::tripped) {
            return;
        }
        let p = &prepared[i];
        let outcome = if let Some(e) = &p.resolve_error {
            (Err(e.clone()), false)
        } else {
            match cache.get(&p.hash) {
                Ok(Some(record)) => (Ok(record), true),
                // An unreadable cache degrades to recomputation.
                Ok(None) | Err(_) => {
                    if hit(FaultPoint::BeforeTask).is_err() {
                        return;
                    }
                    executed.fetch_add(1, Ordering::SeqCst);
                    match registry::run_episode(&p.spec) {
                        Err(e) => (Err(e.to_string()), false),
                        Ok(record) => {
                            match cache.put_with(&p.hash, &record, |_| hit(FaultPoint::BeforeRename)) {
                                Err(CacheError::Interrupted) => return,
                                Err(e) => (Err(format!("cache write failed: {e}")), false),
                                Ok(_) => {
                                    if hit(FaultPoint::AfterPut).is_err() {
                                        return;
                                    }
                                    (Ok(record), false)
                                }
                            }
                        }
                    }
                }
            }
        };
        slots.lock().expect("result slots")[i] = Some(outcome);
    };
    backend.run(prepared.len(), &task);

    let slots = slots.into_inner().expect("result slots");
    if fault.is_some_and(FaultPlan::tripped) {
        return Err(ExecuteError::Interrupted {
            completed: slots.iter().filter(|s| s.is_some()).count(),
        });
    }
    let outcomes: Vec<TaskOutcome> = prepared
        .into_iter()
        .zip(slots)
        .zip(&labels)
        .enumerate()
        .map(|(index, ((p, slot), (label, _)))| {
            let (result, cached) = slot.expect("every task completes without a fault");
            TaskOutcome {
                index,
                spec: p.spec,
                hash: p.hash,
                cohort: label.clone(),
                result,
                cached,
            }
        })
        .collect();
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    if failed == outcomes.len() {
        let first = outcomes[0].result.as_ref().err().cloned().unwrap_or_default();
        return Err(ExecuteError::AllFailed {
            count: failed,
            first,
        });
    }

    // Cohorts in order of first appearance.
    let mut order: Vec<&str> = Vec::new();
    let mut members: BTreeMap<&str, Vec<&TaskOutcome>> = BTreeMap::new();
    for o in &outcomes {
        if !members.contains_key(o.cohort.as_str()) {
            order.push(&o.cohort);
        }
        members.entry(&o.cohort).or_default().push(o);
    }
    let mut cohorts = Vec::with_capacity(order.len());
    for label in order {
        let group = &members[label];
        let records: Vec<EpisodeRecord> = group
            .iter()
            .filter_map(|o| o.result.as_ref().ok().cloned())
            .collect();
        let first = group[0];
        let stats = if records.is_empty() {
            None
        } else {
            Some(aggregate(&records, options.alpha)?)
        };
        cohorts.push(CohortSummary {
            label: label.to_string(),
            digest: labels[first.index].1.clone(),
            environment_id: first.spec.environment_id.clone(),
            policy_id: first.spec.policy_id.clone(),
            n_tasks: group.len(),
            n_failed: group.len() - records.len(),
            stats,
        });
    }

    let executed = executed.load(Ordering::SeqCst) as usize;
    let cache_hits = outcomes.iter().filter(|o| o.cached).count();
    let mut report = ExecutionReport {
        outcomes,
        cohorts,
        executed,
        cache_hits,
        failed,
        run_path: None,
    };
    if options.write_run {
        report.run_path = Some(write_report(set, options, &report)?);
    }
    Ok(report)
}

fn write_report(
    set: &TaskSet,
    options: &ExecuteOptions,
    report: &ExecutionReport,
) -> Result<PathBuf, RunStoreError> {
    let mut params = vec![
        ("experiment_name".to_string(), set.experiment_name.clone()),
        ("alpha".to_string(), run_store::param_text(&options.alpha.into())),
        ("n_tasks".to_string(), report.outcomes.len().to_string()),
        ("backend".to_string(), format!("{:?}", set.backend)),
    ];
    params.extend(options.run_params.iter().cloned());
    for c in &report.cohorts {
        let first = report
            .outcomes
            .iter()
            .find(|o| o.cohort == c.label)
            .expect("cohort has a member");
        params.extend(run_store::spec_params(&c.label, &first.spec));
    }
    let cohorts: Vec<CohortRow<'_>> = report
        .cohorts
        .iter()
        .filter_map(|c| {
            c.stats.as_ref().map(|stats| CohortRow {
                cohort: &c.label,
                environment_id: &c.environment_id,
                policy_id: &c.policy_id,
                stats,
            })
        })
        .collect();
    let episodes: Vec<EpisodeRow<'_>> = report
        .outcomes
        .iter()
        .filter_map(|o| {
            o.result.as_ref().ok().map(|record| EpisodeRow {
                index: o.index,
                cohort: &o.cohort,
                spec: &o.spec,
                record,
                cached: o.cached,
            })
        })
        .collect();
    let failures: Vec<FailureRow<'_>> = report
        .outcomes
        .iter()
        .filter_map(|o| {
            o.result.as_ref().err().map(|error| FailureRow {
                index: o.index,
                cohort: &o.cohort,
                spec_hash: &o.hash,
                error,
            })
        })
        .collect();
    run_store::write_run(
        &set.run_dir,
        &set.experiment_name,
        &RunContents {
            params: &params,
            cohorts: &cohorts,
            episodes: &episodes,
            failures: &failures,
            trials: options.trials.as_deref(),
        },
    )
}
