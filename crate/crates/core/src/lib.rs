//! Simulation, planning and evaluation toolkit for partially observable
//! Markov decision processes.

pub mod beliefs;
pub mod environments;
pub mod evaluation;
pub mod hyperopt;
pub mod model;
pub mod planners;
pub mod registry;
pub mod rng;
pub mod task_manager;
pub mod workflow;
