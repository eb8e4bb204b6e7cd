//! Command-line runner and planner HTTP service for the coverage simulator.

pub mod cli;
pub mod service;
