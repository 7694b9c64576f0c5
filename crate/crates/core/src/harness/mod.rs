//! Experiment harness: configuration, seeded sweeps, tabular output and
//! verification suites.

pub mod calibration;
pub mod config;
pub mod sweep;
pub mod table;
pub mod verify;

pub use config::{Constants, DGrid, ExperimentConfig, FTrue, OutputFormat, SCHEMA_VERSION};
pub use sweep::{run_sweep, summarize, SummaryRow, SweepRow, SweepTable};
pub use table::{emit, emit_summary, read_csv, read_jsonl, CSV_HEADER};
pub use verify::{verify, CheckStatus, Suite, VerifyReport};
