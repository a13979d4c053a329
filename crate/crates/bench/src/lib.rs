//! Gradient benchmarks for `arena-ad`: a fixed suite of functors, a timing
//! sweep over doubling input sizes with CSV output, and a finite-difference
//! check of every functor's gradient.

pub mod functors;
pub mod harness;

pub use functors::{find, registry, BenchFunctor};
pub use harness::{
    gradient_error, read_rows, run_sweep, sweep_dims, verify, BenchError, BenchRow, Engine,
    SweepConfig, SweepRecord, VerifyReport,
};
