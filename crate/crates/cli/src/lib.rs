//! Config-driven runner for the reflection-positivity experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod report;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "RP_LAB_THREADS";

/// Exit statuses of `rp-lab`.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const SOLVER_FAILURE: i32 = 3;
}
