//! File formats, experiment sweeps and lemma checks on top of `hquad-core`,
//! plus the `hquad` command-line tool.

pub mod experiment;
pub mod io;
pub mod pipeline;
pub mod verify;

pub use hquad_core as core;

/// Process exit codes of the `hquad` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const UNBOUNDED_OR_INFEASIBLE: i32 = 3;
    pub const ROUNDING: i32 = 4;
    pub const VERIFICATION: i32 = 5;
    pub const NUMERICAL: i32 = 6;
}

/// Environment variable fixing the worker thread count.
pub const THREADS_ENV: &str = "HQUAD_THREADS";
