//! Command implementations. Each returns the process status; output goes to
//! the writer it is given.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use pomdp_core::evaluation::AggregateStats;
use pomdp_core::task_manager::run_store::{param_text, read_table, RunStoreError};
use pomdp_core::task_manager::{
    execute, list_runs, Cache, CacheError, ExecuteError, ExecuteOptions, ExecutionReport, TaskSet,
};
use pomdp_core::workflow::{optimize_and_evaluate, Campaign, Objective, WorkflowError};

use crate::config::{
    BackendConfig, ConfigError, ExperimentConfig, Mode, DEFAULT_CACHE_DIR, DEFAULT_RUN_DIR,
};
use crate::text::{histogram, table};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some tasks failed; results for the rest were still produced.
    PartialFailure,
    /// Validation or system error.
    Error,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::PartialFailure => 2,
            Status::Error => 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Execute(#[from] ExecuteError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    RunStore(#[from] RunStoreError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Flags shared by every command. Directory flags win over the config file.
#[derive(Clone, Debug, Default)]
pub struct Global {
    pub cache_dir: Option<PathBuf>,
    pub run_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Global {
    fn cache_dir(&self, cfg: Option<&ExperimentConfig>) -> PathBuf {
        self.cache_dir
            .clone()
            .or_else(|| cfg.and_then(|c| c.cache_dir.clone()))
            .unwrap_or_else(|| DEFAULT_CACHE_DIR.into())
    }

    fn run_dir(&self, cfg: Option<&ExperimentConfig>) -> PathBuf {
        self.run_dir
            .clone()
            .or_else(|| cfg.and_then(|c| c.run_dir.clone()))
            .unwrap_or_else(|| DEFAULT_RUN_DIR.into())
    }

    /// Loads, applies overrides and validates a config.
    fn load(&self, path: &Path, mode: Mode) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.workers {
            cfg.backend = BackendConfig::from_workers(n);
        }
        cfg.validate(mode).map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }
}

const STATS_HEADER: [&str; 10] = [
    "policy", "n", "mean", "std", "ci_low", "ci_high", "var", "cvar", "goal_rate", "viol_rate",
];

fn stats_row(label: &str, s: &AggregateStats) -> Vec<String> {
    vec![
        label.to_string(),
        s.n_episodes.to_string(),
        format!("{:.3}", s.mean_return),
        format!("{:.3}", s.std_return),
        format!("{:.3}", s.ci_low),
        format!("{:.3}", s.ci_high),
        format!("{:.3}", s.var_alpha),
        format!("{:.3}", s.cvar_alpha),
        format!("{:.3}", s.goal_rate),
        format!("{:.3}", s.violation_rate),
    ]
}

fn report_failures(report: &ExecutionReport, err: &mut dyn Write) -> io::Result<()> {
    if report.failed == 0 {
        return Ok(());
    }
    writeln!(err, "{} of {} episodes failed", report.failed, report.outcomes.len())?;
    for o in report.outcomes.iter().filter(|o| o.result.is_err()).take(5) {
        if let Err(e) = &o.result {
            writeln!(err, "  task {} ({}): {e}", o.index, o.cohort)?;
        }
    }
    Ok(())
}

pub fn evaluate(
    config: &Path,
    g: &Global,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Status, CliError> {
    let cfg = g.load(config, Mode::Evaluate)?;
    let (specs, labels) = cfg.evaluation_specs();
    let set = TaskSet {
        specs,
        labels,
        experiment_name: cfg.experiment_name.clone(),
        backend: cfg.backend.kind(),
        cache_dir: g.cache_dir(Some(&cfg)),
        run_dir: g.run_dir(Some(&cfg)),
    };
    let options = ExecuteOptions {
        alpha: cfg.alpha,
        run_params: vec![
            ("command".into(), "evaluate".into()),
            ("seed".into(), cfg.seed.to_string()),
            ("num_episodes".into(), cfg.num_episodes.to_string()),
            ("num_steps".into(), cfg.num_steps.to_string()),
        ],
        ..ExecuteOptions::default()
    };
    let report = match execute(&set, &options) {
        Ok(r) => r,
        Err(e @ ExecuteError::AllFailed { .. }) => {
            writeln!(err, "error: {e}")?;
            return Ok(Status::PartialFailure);
        }
        Err(e) => return Err(e.into()),
    };
    if !g.quiet {
        writeln!(
            out,
            "{}: {} episodes simulated, {} from cache",
            cfg.experiment_name, report.executed, report.cache_hits
        )?;
    }
    let rows: Vec<Vec<String>> = report
        .cohorts
        .iter()
        .filter_map(|c| c.stats.as_ref().map(|s| stats_row(&c.label, s)))
        .collect();
    write!(out, "{}", table(&STATS_HEADER, &rows))?;
    if let Some(path) = &report.run_path {
        writeln!(out, "run: {}", path.display())?;
    }
    report_failures(&report, err)?;
    Ok(if report.failed > 0 {
        Status::PartialFailure
    } else {
        Status::Success
    })
}

pub fn optimize(
    config: &Path,
    objective: Objective,
    g: &Global,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Status, CliError> {
    let cfg = g.load(config, Mode::Optimize)?;
    let campaign = Campaign {
        experiment_name: cfg.experiment_name.clone(),
        backend: cfg.backend.kind(),
        cache_dir: g.cache_dir(Some(&cfg)),
        run_dir: g.run_dir(Some(&cfg)),
        alpha: cfg.alpha,
        fault: None,
    };
    let mut rows = Vec::new();
    let mut status = Status::Success;
    for (policy, label) in cfg.policies.iter().zip(cfg.labels()) {
        let budget = policy.budget.expect("validated").into();
        let space = cfg.search_space(policy);
        let outcome = match optimize_and_evaluate(
            &cfg.template(policy),
            &space,
            budget,
            objective,
            cfg.seed,
            &campaign,
        ) {
            Ok(o) => o,
            Err(WorkflowError::Execute(e @ ExecuteError::AllFailed { .. })) => {
                writeln!(err, "{label}: {e}")?;
                status = Status::PartialFailure;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let failed_trials = outcome
            .history
            .iter()
            .filter(|t| t.objective_value == f64::NEG_INFINITY)
            .count();
        if !g.quiet {
            writeln!(
                out,
                "{label}: best trial {} of {} (objective {:.3}, {} search episodes simulated)",
                outcome.best.trial_index,
                outcome.history.len(),
                outcome.best.objective_value,
                outcome.search_executed
            )?;
            for (k, v) in &outcome.best.params {
                writeln!(out, "  {k} = {}", param_text(v))?;
            }
            if let Some(path) = &outcome.report.run_path {
                writeln!(out, "  run: {}", path.display())?;
            }
        }
        if failed_trials > 0 {
            writeln!(err, "{label}: {failed_trials} trials failed")?;
            status = Status::PartialFailure;
        }
        report_failures(&outcome.report, err)?;
        if outcome.report.failed > 0 {
            status = Status::PartialFailure;
        }
        rows.push(stats_row(&label, &outcome.stats));
    }
    write!(out, "{}", table(&STATS_HEADER, &rows))?;
    Ok(status)
}

pub struct ReportOptions {
    pub experiment: Option<String>,
    pub histogram: bool,
    pub bins: usize,
}

pub fn report(
    opts: &ReportOptions,
    g: &Global,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Status, CliError> {
    let run_dir = g.run_dir(None);
    if !run_dir.is_dir() {
        writeln!(err, "no run store at {}", run_dir.display())?;
        return Ok(Status::Error);
    }
    let runs = list_runs(&run_dir, opts.experiment.as_deref())?;
    if runs.is_empty() {
        match &opts.experiment {
            Some(e) => writeln!(err, "no runs for experiment `{e}` in {}", run_dir.display())?,
            None => writeln!(err, "no runs in {}", run_dir.display())?,
        }
        return Ok(Status::Error);
    }
    let header = [
        "experiment", "run", "cohort", "n", "mean", "ci_low", "ci_high", "var", "cvar",
        "goal_rate", "viol_rate",
    ];
    let columns = [
        "cohort",
        "n_episodes",
        "mean_return",
        "ci_low",
        "ci_high",
        "var_alpha",
        "cvar_alpha",
        "goal_rate",
        "violation_rate",
    ];
    let mut rows = Vec::new();
    for run in &runs {
        for i in 0..run.metrics.len() {
            let mut row = vec![run.experiment_name.clone(), run.run_id.clone()];
            for c in columns {
                let v = run.metric(i, c).unwrap_or("");
                // Numeric columns are shortened for display.
                row.push(match v.parse::<f64>() {
                    Ok(x) if c != "n_episodes" => format!("{x:.3}"),
                    _ => v.to_string(),
                });
            }
            rows.push(row);
        }
    }
    write!(out, "{}", table(&header, &rows))?;
    if opts.histogram {
        for run in &runs {
            let (head, body) = read_table(&run.path.join("episodes.tsv"))?;
            let col = |name: &str| head.iter().position(|h| h == name);
            let (Some(ci), Some(ri)) = (col("cohort"), col("discounted_return")) else {
                return Err(RunStoreError::Malformed(run.path.join("episodes.tsv")).into());
            };
            let mut by_cohort: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for r in &body {
                if let Ok(x) = r[ri].parse() {
                    by_cohort.entry(r[ci].as_str()).or_default().push(x);
                }
            }
            for (cohort, values) in by_cohort {
                writeln!(
                    out,
                    "\n{}/{} {cohort}: discounted return",
                    run.experiment_name, run.run_id
                )?;
                write!(out, "{}", histogram(&values, opts.bins, 40))?;
            }
        }
    }
    Ok(Status::Success)
}

pub fn cache_stats(g: &Global, out: &mut dyn Write) -> Result<Status, CliError> {
    let dir = g.cache_dir(None);
    let s = Cache::new(&dir).stats();
    writeln!(out, "cache: {}", dir.display())?;
    writeln!(out, "entries: {}", s.entries)?;
    writeln!(out, "bytes: {}", s.bytes)?;
    writeln!(out, "quarantined: {}", s.quarantined)?;
    writeln!(out, "temporary: {}", s.temporary)?;
    Ok(Status::Success)
}

pub fn cache_gc(older_than: Duration, g: &Global, out: &mut dyn Write) -> Result<Status, CliError> {
    let dir = g.cache_dir(None);
    if !dir.is_dir() {
        writeln!(out, "deleted 0 entries")?;
        return Ok(Status::Success);
    }
    let n = Cache::new(&dir).gc(older_than)?;
    writeln!(out, "deleted {n} entries")?;
    Ok(Status::Success)
}

/// Parses `0`, `90s`, `15m`, `12h` or `7d`. A bare number means seconds.
pub fn parse_age(s: &str) -> Result<Duration, String> {
    let s = s.trim();
    let (digits, unit) = match s.find(|c: char| !c.is_ascii_digit()) {
        Some(i) => s.split_at(i),
        None => (s, "s"),
    };
    let n: u64 = digits
        .parse()
        .map_err(|_| format!("invalid age `{s}` (expected e.g. 0, 90s, 15m, 12h, 7d)"))?;
    let scale = match unit {
        "s" => 1,
        "m" => 60,
        "h" => 3600,
        "d" => 86_400,
        _ => return Err(format!("invalid age unit `{unit}` (use s, m, h or d)")),
    };
    n.checked_mul(scale)
        .map(Duration::from_secs)
        .ok_or_else(|| format!("age `{s}` is too large"))
}
