//! Union table search benchmark toolkit: LLM-driven benchmark generation,
//! sparsity variants, profiling, baseline and two-phase search, and
//! evaluation metrics.

pub mod benchmark;
pub mod eval;
pub mod generation;
pub mod profiler;
pub mod provider;
pub mod search;
pub mod seed;
pub mod sparsity;
pub mod table;
