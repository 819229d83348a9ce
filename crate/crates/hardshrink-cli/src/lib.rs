//! Experiment configuration and sweep orchestration behind the
//! `hardshrink` command-line tool.

pub mod config;
pub mod runner;
