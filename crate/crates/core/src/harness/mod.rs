//! The filtering pipeline end to end, plus the report files each
//! subcommand of the command-line tool writes.

mod commands;
mod config;
mod pipeline;

pub use commands::{
    cmd_bench, cmd_candidates, cmd_filter, cmd_index, cmd_report, cmd_simulate, histogram, ordered_sections,
    read_index, read_layouts, write_layouts, BenchReport, BenchRow, FilterOutcome, HistogramBin, IndexSummary,
    StoredLayout, SweepRow, BENCH_HEADER, SWEEP_CAPS,
};
pub use config::{Backend, RunConfig, SimColumns};
pub use pipeline::{
    candidates_for, load_index, load_queries, load_reference, prepare, score_set, sim_columns, threshold_for, Inputs,
    PhaseCost, PhaseTable, Query, Scored, PHASES,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    /// Bad flags or configuration values.
    #[error("{0}")]
    Usage(String),
    /// Missing or malformed input, or a failure while processing it.
    #[error("{0}")]
    Data(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Data(_) => 2,
        }
    }
}
