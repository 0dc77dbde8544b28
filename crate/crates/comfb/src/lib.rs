//! File formats, parameter files, the parallel sweep runner and the
//! command implementations behind the `comfb` binary.

pub mod cli;
pub mod config;
pub mod output;
pub mod runner;

/// Version of every CSV and JSON layout written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "COMFB_OUT";

/// Environment variable naming an external plotting command for `figure`.
pub const PLOTTER_ENV: &str = "COMFB_PLOTTER";

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    /// IO or other runtime failure.
    pub const FAILURE: i32 = 1;
    /// Bad flags, parameter file or sweep spec.
    pub const SPEC: i32 = 2;
    pub const UNSTABLE: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
    pub const QUASI_PERIODIC: i32 = 5;
    pub const UNPHYSICAL: i32 = 6;
    /// A sweep stopped before all cells finished; rerun to resume.
    pub const INCOMPLETE: i32 = 7;
}
