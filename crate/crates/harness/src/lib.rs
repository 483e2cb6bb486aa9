//! Paired SITH-PFT / PFT-DPW experiments on Light Dark.

pub mod bench;
pub mod experiment;
pub mod export;
pub mod spec;

pub use bench::{bench_entropy, BenchRow};
pub use experiment::{run_experiment, RowReport, RunOptions, RunReport, SessionRecord, TimeSummary};
pub use export::{export_report, load_report};
pub use spec::{ExperimentSpec, LightDarkOverrides, PlannerOverrides, Row};
