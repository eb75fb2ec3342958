//! File-based run store.
//!
//! A run lives in `<run_dir>/<experiment_name>/<YYYYmmddTHHMMSSZ>-<hash8>[-k]/`
//! and contains tab-separated files with a header row: `params.tsv`,
//! `metrics.tsv`, `episodes.tsv`, `failures.tsv`, optionally `trials.tsv`,
//! and `trajectories/<index>.tsv` with one file per episode. Field values are
//! escaped by [`tsv_escape`].

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;

use crate::evaluation::{AggregateStats, EpisodeRecord};
use crate::hyperopt::Trial;
use crate::model::{render_real, ParamValue, SimulationSpec};

#[derive(Debug, thiserror::Error)]
pub enum RunStoreError {
    #[error("run store I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("a run needs at least one episode record")]
    NoRecords,
    #[error("invalid experiment name `{0}`")]
    InvalidName(String),
    #[error("malformed run file {0}")]
    Malformed(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunStoreError + '_ {
    move |source| RunStoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Escapes `\`, tab, newline and carriage return as `\\`, `\t`, `\n`, `\r`.
pub fn tsv_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn tsv_unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunStoreError> {
    let mut buf = String::new();
    buf.push_str(&header.join("\t"));
    buf.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| tsv_escape(c)).collect();
        buf.push_str(&cells.join("\t"));
        buf.push('\n');
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(buf.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// Reads a table written by this module into header and rows.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), RunStoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| RunStoreError::Malformed(path.to_path_buf()))?
        .split('\t')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split('\t').map(tsv_unescape).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    if rows.iter().any(|r| r.len() != header.len()) {
        return Err(RunStoreError::Malformed(path.to_path_buf()));
    }
    Ok((header, rows))
}

fn real(x: f64) -> String {
    if x.is_finite() {
        render_real(x)
    } else {
        x.to_string()
    }
}

/// Flattens a parameter value: lists become `[a,b,...]`.
pub fn param_text(v: &ParamValue) -> String {
    match v {
        ParamValue::Real(x) => real(*x),
        ParamValue::List(items) => {
            format!("[{}]", items.iter().map(param_text).collect::<Vec<_>>().join(","))
        }
        other => other.to_string(),
    }
}

/// Flattened `prefix.key → value` pairs describing a spec, excluding the
/// per-episode seed fields.
pub fn spec_params(prefix: &str, spec: &SimulationSpec) -> Vec<(String, String)> {
    let mut out = vec![
        (format!("{prefix}.environment_id"), spec.environment_id.clone()),
        (format!("{prefix}.policy_id"), spec.policy_id.clone()),
        (format!("{prefix}.belief_id"), spec.belief_id.clone()),
        (format!("{prefix}.num_steps"), spec.num_steps.to_string()),
    ];
    for (group, map) in [
        ("environment_params", &spec.environment_params),
        ("policy_params", &spec.policy_params),
        ("belief_params", &spec.belief_params),
    ] {
        for (k, v) in map {
            out.push((format!("{prefix}.{group}.{k}"), param_text(v)));
        }
    }
    out
}

/// One episode row of a run.
pub struct EpisodeRow<'a> {
    pub index: usize,
    pub cohort: &'a str,
    pub spec: &'a SimulationSpec,
    pub record: &'a EpisodeRecord,
    pub cached: bool,
}

pub struct CohortRow<'a> {
    pub cohort: &'a str,
    pub environment_id: &'a str,
    pub policy_id: &'a str,
    pub stats: &'a AggregateStats,
}

pub struct FailureRow<'a> {
    pub index: usize,
    pub cohort: &'a str,
    pub spec_hash: &'a str,
    pub error: &'a str,
}

pub const METRICS_COLUMNS: [&str; 15] = [
    "cohort",
    "environment_id",
    "policy_id",
    "n_episodes",
    "mean_return",
    "std_return",
    "ci_low",
    "ci_high",
    "var_alpha",
    "cvar_alpha",
    "alpha",
    "goal_rate",
    "violation_rate",
    "total_violations",
    "degenerate_ci",
];

pub const EPISODE_COLUMNS: [&str; 13] = [
    "index",
    "cohort",
    "spec_hash",
    "seed",
    "episode_index",
    "discounted_return",
    "undiscounted_return",
    "steps_taken",
    "goal_reached",
    "safety_event_count",
    "belief_resets",
    "wall_time",
    "cached",
];

pub const TRAJECTORY_COLUMNS: [&str; 5] = ["step", "action", "observation", "reward", "safety_event"];

/// Everything one run records.
pub struct RunContents<'a> {
    pub params: &'a [(String, String)],
    pub cohorts: &'a [CohortRow<'a>],
    pub episodes: &'a [EpisodeRow<'a>],
    pub failures: &'a [FailureRow<'a>],
    pub trials: Option<&'a [Trial]>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains(['/', '\\', '\0'])
        && !name.starts_with('.')
}

/// Creates the run directory and writes every file. Returns its path.
pub fn write_run(
    run_dir: &Path,
    experiment_name: &str,
    contents: &RunContents<'_>,
) -> Result<PathBuf, RunStoreError> {
    if contents.episodes.is_empty() {
        return Err(RunStoreError::NoRecords);
    }
    if !valid_name(experiment_name) {
        return Err(RunStoreError::InvalidName(experiment_name.to_string()));
    }
    let parent = run_dir.join(experiment_name);
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let joined: String = contents
        .episodes
        .iter()
        .map(|e| e.record.spec_hash.as_str())
        .collect();
    let short = &crate::model::sha256_hex(joined.as_bytes())[..8];
    let stem = format!("{}-{short}", Utc::now().format("%Y%m%dT%H%M%SZ"));
    let mut dir = parent.join(&stem);
    let mut k = 0;
    loop {
        match fs::create_dir(&dir) {
            Ok(()) => break,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                k += 1;
                dir = parent.join(format!("{stem}-{k}"));
            }
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }

    let params: Vec<Vec<String>> = contents
        .params
        .iter()
        .map(|(k, v)| vec![k.clone(), v.clone()])
        .collect();
    write_table(&dir.join("params.tsv"), &["key", "value"], &params)?;

    let metrics: Vec<Vec<String>> = contents
        .cohorts
        .iter()
        .map(|c| {
            let s = c.stats;
            vec![
                c.cohort.to_string(),
                c.environment_id.to_string(),
                c.policy_id.to_string(),
                s.n_episodes.to_string(),
                real(s.mean_return),
                real(s.std_return),
                real(s.ci_low),
                real(s.ci_high),
                real(s.var_alpha),
                real(s.cvar_alpha),
                real(s.alpha),
                real(s.goal_rate),
                real(s.violation_rate),
                s.total_violations.to_string(),
                s.degenerate_ci.to_string(),
            ]
        })
        .collect();
    write_table(&dir.join("metrics.tsv"), &METRICS_COLUMNS, &metrics)?;

    let episodes: Vec<Vec<String>> = contents
        .episodes
        .iter()
        .map(|e| {
            let r = e.record;
            vec![
                e.index.to_string(),
                e.cohort.to_string(),
                r.spec_hash.clone(),
                e.spec.seed.to_string(),
                e.spec.episode_index.to_string(),
                real(r.discounted_return),
                real(r.undiscounted_return),
                r.steps_taken.to_string(),
                r.goal_reached.to_string(),
                r.safety_event_count.to_string(),
                r.belief_resets.to_string(),
                real(r.wall_time),
                e.cached.to_string(),
            ]
        })
        .collect();
    write_table(&dir.join("episodes.tsv"), &EPISODE_COLUMNS, &episodes)?;

    let traj_dir = dir.join("trajectories");
    fs::create_dir(&traj_dir).map_err(io_err(&traj_dir))?;
    for e in contents.episodes {
        let rows: Vec<Vec<String>> = e
            .record
            .per_step
            .iter()
            .enumerate()
            .map(|(t, s)| {
                vec![
                    t.to_string(),
                    s.action.clone(),
                    s.observation.clone(),
                    real(s.reward),
                    s.safety_event.to_string(),
                ]
            })
            .collect();
        write_table(
            &traj_dir.join(format!("{:06}.tsv", e.index)),
            &TRAJECTORY_COLUMNS,
            &rows,
        )?;
    }

    let failures: Vec<Vec<String>> = contents
        .failures
        .iter()
        .map(|f| {
            vec![
                f.index.to_string(),
                f.cohort.to_string(),
                f.spec_hash.to_string(),
                f.error.to_string(),
            ]
        })
        .collect();
    write_table(
        &dir.join("failures.tsv"),
        &["index", "cohort", "spec_hash", "error"],
        &failures,
    )?;

    if let Some(trials) = contents.trials {
        write_trials(&dir.join("trials.tsv"), trials)?;
    }
    Ok(dir)
}

/// Trial history: `trial_index`, one column per parameter (sorted), then
/// `objective` and `error`.
pub fn write_trials(path: &Path, trials: &[Trial]) -> Result<(), RunStoreError> {
    let mut names: Vec<&String> = trials.iter().flat_map(|t| t.params.keys()).collect();
    names.sort();
    names.dedup();
    let mut header = vec!["trial_index"];
    header.extend(names.iter().map(|s| s.as_str()));
    header.extend(["objective", "error"]);
    let rows: Vec<Vec<String>> = trials
        .iter()
        .map(|t| {
            let mut row = vec![t.trial_index.to_string()];
            row.extend(
                names
                    .iter()
                    .map(|n| t.params.get(*n).map(param_text).unwrap_or_default()),
            );
            row.push(real(t.objective_value));
            row.push(t.error.clone().unwrap_or_default());
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

/// A stored run and its metrics rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub experiment_name: String,
    pub run_id: String,
    pub path: PathBuf,
    pub metrics_header: Vec<String>,
    pub metrics: Vec<Vec<String>>,
}

impl RunSummary {
    pub fn metric(&self, row: usize, column: &str) -> Option<&str> {
        let i = self.metrics_header.iter().position(|h| h == column)?;
        self.metrics.get(row).map(|r| r[i].as_str())
    }
}

fn sorted_dirs(path: &Path) -> Result<Vec<PathBuf>, RunStoreError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io_err(path))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Lists runs, optionally only those of one experiment, oldest first within
/// each experiment.
pub fn list_runs(run_dir: &Path, experiment: Option<&str>) -> Result<Vec<RunSummary>, RunStoreError> {
    let mut out = Vec::new();
    for exp in sorted_dirs(run_dir)? {
        let name = exp
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if experiment.is_some_and(|e| e != name) {
            continue;
        }
        for run in sorted_dirs(&exp)? {
            let metrics_path = run.join("metrics.tsv");
            if !metrics_path.is_file() {
                continue;
            }
            let (metrics_header, metrics) = read_table(&metrics_path)?;
            out.push(RunSummary {
                experiment_name: name.clone(),
                run_id: run
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                path: run,
                metrics_header,
                metrics,
            });
        }
    }
    Ok(out)
}
