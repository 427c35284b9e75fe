//! Configuration and orchestration behind the `screenbem` binary.

pub mod config;
pub mod run;

pub use config::{parse_config_file, validate_config, validate_slice, Penalty, RunConfig, ScreenKind, SliceSpec, Violation};
pub use run::{run_convergence, run_field_slice, ConvergenceOutput, FieldSliceOutput};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

/// Exit code for a library error.
pub fn exit_code(e: &screenbem::Error) -> i32 {
    use screenbem::Error::*;
    match e {
        Config(_) => exit::CONFIG,
        Io(_) => exit::IO,
        Geometry(_) | Domain(_) | Quadrature(_) | Solver(_) | Extrapolation(_) => exit::NUMERICAL,
    }
}
