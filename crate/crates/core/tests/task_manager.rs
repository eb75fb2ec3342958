use std::fs;
use std::path::Path;
use std::thread;

use pomdp_core::evaluation::{EpisodeRecord, StepRecord};
use pomdp_core::model::{ParamMap, ParamValue, PolicyRunData, SimulationSpec, SCHEMA_VERSION};
use pomdp_core::rng::SimRng;
use pomdp_core::task_manager::{
    execute, list_runs, BackendKind, Cache, ExecuteError, ExecuteOptions, ExecutionReport,
    FaultPlan, PutOutcome, TaskSet,
};
use tempfile::TempDir;

fn tiger_spec(policy: &str, sims: i64, index: u64) -> SimulationSpec {
    let mut policy_params = ParamMap::new();
    if policy == "pomcp" {
        policy_params.insert("n_simulations".into(), ParamValue::Int(sims));
        policy_params.insert("exploration_constant".into(), ParamValue::Real(110.0));
    }
    let mut belief_params = ParamMap::new();
    belief_params.insert("n_particles".into(), ParamValue::Int(50));
    SimulationSpec {
        environment_id: "tiger".into(),
        environment_params: ParamMap::new(),
        policy_id: policy.into(),
        policy_params,
        belief_id: "weighted_pf".into(),
        belief_params,
        seed: 42,
        num_steps: 10,
        episode_index: index,
        schema_version: SCHEMA_VERSION,
    }
}

fn task_set(dir: &Path, specs: Vec<SimulationSpec>, backend: BackendKind) -> TaskSet {
    TaskSet {
        specs,
        labels: Vec::new(),
        experiment_name: "tm_test".into(),
        backend,
        cache_dir: dir.join("cache"),
        run_dir: dir.join("runs"),
    }
}

fn campaign(n: u64) -> Vec<SimulationSpec> {
    (0..n).map(|i| tiger_spec("pomcp", 40, i)).collect()
}

fn quiet() -> ExecuteOptions {
    ExecuteOptions {
        write_run: false,
        ..ExecuteOptions::default()
    }
}

fn normalized_bytes(report: &ExecutionReport) -> Vec<Vec<u8>> {
    report
        .records()
        .iter()
        .map(|r| serde_json::to_vec(&r.normalized()).unwrap())
        .collect()
}

#[test]
fn rerun_is_a_full_cache_hit() {
    let dir = TempDir::new().unwrap();
    let set = task_set(dir.path(), campaign(20), BackendKind::Serial);
    let first = execute(&set, &ExecuteOptions::default()).unwrap();
    assert_eq!((first.executed, first.cache_hits), (20, 0));
    let second = execute(&set, &ExecuteOptions::default()).unwrap();
    assert_eq!((second.executed, second.cache_hits), (0, 20));
    assert_eq!(first.cohorts[0].stats, second.cohorts[0].stats);
    assert_eq!(normalized_bytes(&first), normalized_bytes(&second));
    // Cache hits return the stored record exactly, timings included.
    for (a, b) in first.records().iter().zip(second.records()) {
        assert_eq!(*a, b);
    }
}

#[test]
fn kill_after_forty_tasks_resumes_with_sixty() {
    let dir = TempDir::new().unwrap();
    let set = task_set(dir.path(), campaign(100), BackendKind::Serial);
    // Three fault points per executed task; the 120th is the AfterPut of task 40.
    let fault = FaultPlan::kill_at(120);
    let err = execute(
        &set,
        &ExecuteOptions {
            fault: Some(fault),
            ..quiet()
        },
    )
    .unwrap_err();
    assert!(matches!(err, ExecuteError::Interrupted { completed: 39 }), "{err}");
    let resumed = execute(&set, &quiet()).unwrap();
    assert_eq!(resumed.executed, 60);
    assert_eq!(resumed.cache_hits, 40);

    let clean_dir = TempDir::new().unwrap();
    let clean = execute(
        &task_set(clean_dir.path(), campaign(100), BackendKind::Serial),
        &quiet(),
    )
    .unwrap();
    assert_eq!(normalized_bytes(&resumed), normalized_bytes(&clean));
}

#[test]
fn random_kill_points_never_corrupt_the_campaign() {
    let clean_dir = TempDir::new().unwrap();
    let specs = campaign(30);
    let clean = execute(
        &task_set(clean_dir.path(), specs.clone(), BackendKind::Serial),
        &quiet(),
    )
    .unwrap();
    let mut rng = SimRng::seed_from_u64(9);
    for _ in 0..5 {
        let dir = TempDir::new().unwrap();
        let set = task_set(dir.path(), specs.clone(), BackendKind::WorkerPool { n_workers: 4 });
        let kill_at = 1 + rng.index(90) as u64;
        let outcome = execute(
            &set,
            &ExecuteOptions {
                fault: Some(FaultPlan::kill_at(kill_at)),
                ..quiet()
            },
        );
        assert!(matches!(outcome, Err(ExecuteError::Interrupted { .. })));
        // Everything served from the cache must be complete and correct.
        let cache = Cache::new(dir.path().join("cache"));
        for (spec, expected) in specs.iter().zip(clean.records()) {
            let key = pomdp_core::registry::normalize(spec).unwrap().hash().unwrap();
            if let Some(r) = cache.get(&key).unwrap() {
                assert_eq!(r.normalized(), expected.normalized());
            }
        }
        let resumed = execute(&set, &quiet()).unwrap();
        assert_eq!(normalized_bytes(&resumed), normalized_bytes(&clean));
    }
}

#[test]
fn worker_pool_matches_serial() {
    let a_dir = TempDir::new().unwrap();
    let b_dir = TempDir::new().unwrap();
    let a = execute(&task_set(a_dir.path(), campaign(40), BackendKind::Serial), &quiet()).unwrap();
    let b = execute(
        &task_set(b_dir.path(), campaign(40), BackendKind::WorkerPool { n_workers: 8 }),
        &quiet(),
    )
    .unwrap();
    assert_eq!(normalized_bytes(&a), normalized_bytes(&b));
}

#[test]
fn duplicate_and_empty_task_sets_are_rejected() {
    let dir = TempDir::new().unwrap();
    let mut specs = campaign(3);
    specs.push(specs[1].clone());
    assert!(matches!(
        execute(&task_set(dir.path(), specs, BackendKind::Serial), &quiet()),
        Err(ExecuteError::DuplicateSpec { first: 1, second: 3, .. })
    ));
    assert!(matches!(
        execute(&task_set(dir.path(), Vec::new(), BackendKind::Serial), &quiet()),
        Err(ExecuteError::Empty)
    ));
}

#[test]
fn failures_are_reported_and_never_cached() {
    let dir = TempDir::new().unwrap();
    let mut bad = tiger_spec("pomcp", 10, 0);
    bad.policy_params.insert("no_such_knob".into(), ParamValue::Int(1));
    let specs = vec![tiger_spec("random", 0, 0), bad.clone(), tiger_spec("random", 0, 1)];
    let set = task_set(dir.path(), specs, BackendKind::Serial);
    let report = execute(&set, &ExecuteOptions::default()).unwrap();
    assert_eq!(report.failed, 1);
    assert!(report.outcomes[1].result.is_err());
    assert_eq!(Cache::new(dir.path().join("cache")).stats().entries, 2);
    let failures = fs::read_to_string(report.run_path.unwrap().join("failures.tsv")).unwrap();
    assert_eq!(failures.lines().count(), 2);
    assert!(failures.contains("no_such_knob"));

    let all_bad = task_set(dir.path(), vec![bad], BackendKind::Serial);
    assert!(matches!(
        execute(&all_bad, &quiet()),
        Err(ExecuteError::AllFailed { count: 1, .. })
    ));
}

#[test]
fn cohorts_follow_task_order() {
    let dir = TempDir::new().unwrap();
    let mut specs = Vec::new();
    for i in 0..4 {
        specs.push(tiger_spec("random", 0, i));
        specs.push(tiger_spec("pomcp", 20, i));
    }
    let report = execute(&task_set(dir.path(), specs, BackendKind::Serial), &quiet()).unwrap();
    let labels: Vec<&str> = report.cohorts.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, ["tiger/random", "tiger/pomcp"]);
    assert!(report.cohorts.iter().all(|c| c.stats.as_ref().unwrap().n_episodes == 4));
}

#[test]
fn run_store_layout() {
    let dir = TempDir::new().unwrap();
    let set = task_set(dir.path(), campaign(5), BackendKind::Serial);
    let a = execute(&set, &ExecuteOptions::default()).unwrap();
    let b = execute(&set, &ExecuteOptions::default()).unwrap();
    let (pa, pb) = (a.run_path.unwrap(), b.run_path.unwrap());
    assert_ne!(pa, pb);
    for f in ["params.tsv", "metrics.tsv", "episodes.tsv", "failures.tsv"] {
        assert!(pa.join(f).is_file(), "{f}");
    }
    for (i, r) in a.outcomes.iter().enumerate() {
        let record = r.result.as_ref().unwrap();
        let traj = fs::read_to_string(pa.join("trajectories").join(format!("{i:06}.tsv"))).unwrap();
        assert_eq!(traj.lines().count(), record.steps_taken as usize + 1);
    }
    let runs = list_runs(&dir.path().join("runs"), Some("tm_test")).unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0].metric(0, "n_episodes"), Some("5"));
    assert!(list_runs(&dir.path().join("runs"), Some("other")).unwrap().is_empty());
}

fn dummy_record(key: &str) -> EpisodeRecord {
    EpisodeRecord {
        spec_hash: key.to_string(),
        discounted_return: -1.25,
        undiscounted_return: 3.0,
        steps_taken: 1,
        goal_reached: true,
        safety_event_count: 0,
        belief_resets: 0,
        per_step: vec![StepRecord {
            action: "listen".into(),
            observation: "hear\tleft".into(),
            reward: -1.0,
            safety_event: false,
            run_data: PolicyRunData::default(),
        }],
        wall_time: 0.5,
    }
}

fn key(i: usize) -> String {
    pomdp_core::model::sha256_hex(format!("entry-{i}").as_bytes())
}

#[test]
fn double_put_keeps_one_entry() {
    let dir = TempDir::new().unwrap();
    let cache = Cache::new(dir.path());
    let k = key(0);
    assert_eq!(cache.put(&k, &dummy_record(&k)).unwrap(), PutOutcome::Written);
    assert_eq!(cache.put(&k, &dummy_record(&k)).unwrap(), PutOutcome::AlreadyPresent);
    assert_eq!(cache.stats().entries, 1);
    assert_eq!(cache.get(&k).unwrap().unwrap(), dummy_record(&k));
    assert_eq!(cache.get(&key(1)).unwrap(), None);
}

#[test]
fn truncated_entries_are_quarantined() {
    let dir = TempDir::new().unwrap();
    let cache = Cache::new(dir.path());
    let mut rng = SimRng::seed_from_u64(3);
    for i in 0..50 {
        let k = key(i);
        cache.put(&k, &dummy_record(&k)).unwrap();
        let path = cache.entry_path(&k);
        let bytes = fs::read(&path).unwrap();
        let cut = rng.index(bytes.len());
        fs::write(&path, &bytes[..cut]).unwrap();
        assert_eq!(cache.get(&k).unwrap(), None, "cut at {cut}");
        assert!(!path.exists());
    }
    let stats = cache.stats();
    assert_eq!((stats.entries, stats.quarantined), (0, 50));
}

#[test]
fn crash_before_rename_leaves_a_miss() {
    let dir = TempDir::new().unwrap();
    let cache = Cache::new(dir.path());
    let k = key(7);
    let outcome = cache.put_with(&k, &dummy_record(&k), |_| {
        Err(pomdp_core::task_manager::CacheError::Interrupted)
    });
    assert!(outcome.is_err());
    assert_eq!(cache.get(&k).unwrap(), None);
    let stats = cache.stats();
    assert_eq!((stats.entries, stats.temporary), (0, 1));
    assert_eq!(cache.gc(std::time::Duration::ZERO).unwrap(), 0);
    assert_eq!(cache.stats().temporary, 0);
}

#[test]
fn concurrent_puts_of_distinct_keys() {
    let dir = TempDir::new().unwrap();
    let n = 10_000;
    let threads = 8;
    thread::scope(|scope| {
        for t in 0..threads {
            let cache = Cache::new(dir.path());
            scope.spawn(move || {
                for i in (t..n).step_by(threads) {
                    let k = key(i);
                    cache.put(&k, &dummy_record(&k)).unwrap();
                }
            });
        }
    });
    let cache = Cache::new(dir.path());
    assert_eq!(cache.stats().entries, n as u64);
    for i in (0..n).step_by(97) {
        assert!(cache.get(&key(i)).unwrap().is_some());
    }
}

#[test]
fn concurrent_puts_of_one_key() {
    let dir = TempDir::new().unwrap();
    let k = key(1);
    thread::scope(|scope| {
        for _ in 0..8 {
            let cache = Cache::new(dir.path());
            let k = k.clone();
            scope.spawn(move || {
                for _ in 0..50 {
                    cache.put(&k, &dummy_record(&k)).unwrap();
                    assert!(cache.get(&k).unwrap().is_some());
                }
            });
        }
    });
    let stats = Cache::new(dir.path()).stats();
    assert_eq!((stats.entries, stats.temporary, stats.quarantined), (1, 0, 0));
}

#[test]
fn gc_with_zero_age_deletes_everything() {
    let dir = TempDir::new().unwrap();
    let cache = Cache::new(dir.path());
    for i in 0..10 {
        let k = key(i);
        cache.put(&k, &dummy_record(&k)).unwrap();
    }
    assert_eq!(cache.gc(std::time::Duration::from_secs(3600)).unwrap(), 0);
    assert_eq!(cache.gc(std::time::Duration::ZERO).unwrap(), 10);
    assert_eq!(cache.stats().entries, 0);
}
