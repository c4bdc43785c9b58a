//! Command-line front end: instance generation, single solves, benchmark
//! sweeps and estimator verification.

pub mod csvio;
pub mod report;
pub mod sweep;
pub mod table;
pub mod verify;

pub use csvio::{read_csv, read_paths, sidecar_path, write_csv, write_paths};
pub use sweep::{recompute, run_sweep, BenchmarkRow, PathRecord, SweepResult, SweepSpec};
pub use table::{improvements, summary};
pub use verify::{run_verify, VerifyReport, VerifySpec};
