//! Library half of the `pomdp` command: config schema and command bodies.

pub mod commands;
pub mod config;
pub mod text;
