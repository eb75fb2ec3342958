//! Execution backends: run `n` independent tasks.

use rayon::prelude::*;

/// Runs `task(0) .. task(n − 1)` to completion in any order. Results are
/// communicated through the closure.
pub trait Backend: Send + Sync {
    fn name(&self) -> String;

    fn run(&self, n: usize, task: &(dyn Fn(usize) + Sync));
}

pub struct Serial;

impl Backend for Serial {
    fn name(&self) -> String {
        "serial".into()
    }

    fn run(&self, n: usize, task: &(dyn Fn(usize) + Sync)) {
        (0..n).for_each(task);
    }
}

/// A fixed-size local thread pool.
pub struct WorkerPool {
    pool: rayon::ThreadPool,
    n_workers: usize,
}

impl WorkerPool {
    pub fn new(n_workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let n_workers = n_workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n_workers)
            .thread_name(|i| format!("pomdp-worker-{i}"))
            .build()?;
        Ok(Self { pool, n_workers })
    }
}

impl Backend for WorkerPool {
    fn name(&self) -> String {
        format!("worker_pool({})", self.n_workers)
    }

    fn run(&self, n: usize, task: &(dyn Fn(usize) + Sync)) {
        self.pool.install(|| (0..n).into_par_iter().with_max_len(1).for_each(task));
    }
}

/// Declarative backend choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Serial,
    WorkerPool { n_workers: usize },
}

impl BackendKind {
    pub fn build(self) -> Result<Box<dyn Backend>, rayon::ThreadPoolBuildError> {
        Ok(match self {
            BackendKind::Serial => Box::new(Serial),
            BackendKind::WorkerPool { n_workers } => Box::new(WorkerPool::new(n_workers)?),
        })
    }
}
