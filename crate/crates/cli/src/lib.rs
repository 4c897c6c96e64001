//! Command-line front end for the ACC scenario: configuration, simulation
//! sweeps, barrier comparisons, feasibility diagnostics and QP debugging.

pub mod commands;
pub mod config;
pub mod formats;
pub mod report;
