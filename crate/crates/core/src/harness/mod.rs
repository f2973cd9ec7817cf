//! Program generation and cross-semantics differential testing.

mod campaign;
mod compare;
mod congruence;
mod gen;

pub use campaign::{campaign_streams, fuzz_campaign, write_counterexamples, FuzzSummary, MAX_STREAM_LEN};
pub use compare::{
    classify, compare_all, run_semantics, CompareReport, Counterexample, ProverOutcome, Run, Semantics, StreamReport,
    FUEL_ESCALATION,
};
pub use congruence::{seq_congruence_counterexample, CongruenceAnomaly};
pub use gen::{depth, enumerate_streams, generate_parts, generate_program, var_name, GenConfig, Weights};
