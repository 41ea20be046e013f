//! Event-driven simulation of a message stream among churning peers with
//! instantaneous exchange: every online peer holds the same `k`-message buffer,
//! and a returning peer merges its stale buffer into it.

// NaN must fail parameter checks, hence the negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod buffer;
mod config;
mod engine;
mod error;
mod rng;
mod stats;
mod trace;

pub use buffer::{merge_buffers, Buffer};
pub use config::{Mode, SimConfig, SourceChoice, ZeroPolicy};
pub use engine::{run_trial, MessageRecord, SimResult};
pub use error::SimError;
pub use rng::{init_stream, peer_stream, sample_exponential, Purpose};
pub use stats::{coverage_stats, mean_and_std_error, CategoryStat, CoverageStats, DEFAULT_DISCARD};
pub use trace::{read_trace, write_trace, EventKind, TraceRecord};
