//! Timing sweep, CSV output and the finite-difference correctness gate.

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use arena_ad::{fd_gradient, gradient, gradient_with, AdError, Tape};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functors::{registry, BenchFunctor};

pub const DEFAULT_CALLS: usize = 10_000;
pub const DEFAULT_MAX_DIM: usize = 16 * 1024;
pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_VERIFY_DIMS: [usize; 4] = [1, 2, 8, 64];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown functor `{0}` (see `bench list`)")]
    UnknownFunctor(String),
    #[error("calls must be at least 1")]
    NoCalls,
    #[error("max dim must be at least 1")]
    NoSizes,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{functor} at dim {dim}: {source}")]
    Functor {
        functor: String,
        dim: usize,
        source: AdError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Ad,
    Plain,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Ad => "ad",
            Engine::Plain => "plain",
        })
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub functor: String,
    pub engine: Engine,
    pub dim: usize,
    pub calls: usize,
    pub total_seconds: f64,
    pub ns_per_call: f64,
}

impl BenchRow {
    fn new(functor: &str, engine: Engine, dim: usize, calls: usize, total_seconds: f64) -> Self {
        BenchRow {
            functor: functor.to_string(),
            engine,
            dim,
            calls,
            total_seconds,
            ns_per_call: total_seconds * 1e9 / calls as f64,
        }
    }
}

/// A row together with the function value its engine produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub row: BenchRow,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub functor: Option<String>,
    pub max_dim: usize,
    pub calls: usize,
    /// Report each size on stderr as it starts.
    pub progress: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            functor: None,
            max_dim: DEFAULT_MAX_DIM,
            calls: DEFAULT_CALLS,
            progress: true,
        }
    }
}

/// Sizes 1, 2, 4, … up to and including `max_dim` when it is a power of two.
pub fn sweep_dims(max_dim: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|&n| n <= max_dim)
        .collect()
}

fn selected(filter: Option<&str>) -> Result<Vec<Box<dyn BenchFunctor>>, BenchError> {
    let all = registry();
    match filter {
        None => Ok(all),
        Some(name) => {
            let chosen: Vec<_> = all.into_iter().filter(|f| f.name() == name).collect();
            if chosen.is_empty() {
                Err(BenchError::UnknownFunctor(name.to_string()))
            } else {
                Ok(chosen)
            }
        }
    }
}

/// Times `calls` gradient evaluations on one reused tape. Returns the
/// elapsed seconds and the last value.
pub fn time_ad(
    f: &dyn BenchFunctor,
    x: &[f64],
    calls: usize,
    tape: &mut Tape,
) -> Result<(f64, f64), AdError> {
    let mut sink = 0.0;
    let mut fx = 0.0;
    let start = Instant::now();
    for _ in 0..calls {
        let (value, grad) = gradient_with(tape, |v| f.eval_var(v), black_box(x))?;
        fx = value;
        sink += value + grad[0];
    }
    let elapsed = start.elapsed().as_secs_f64();
    black_box(sink);
    Ok((elapsed, fx))
}

/// Times `calls` plain evaluations. Returns the elapsed seconds and the
/// last value.
pub fn time_plain(f: &dyn BenchFunctor, x: &[f64], calls: usize) -> (f64, f64) {
    let mut sink = 0.0;
    let mut fx = 0.0;
    let start = Instant::now();
    for _ in 0..calls {
        fx = f.eval_plain(black_box(x));
        sink += fx;
    }
    let elapsed = start.elapsed().as_secs_f64();
    black_box(sink);
    (elapsed, fx)
}

/// Runs the size sweep, writing CSV rows to `out` as they complete.
/// A functor that fails at some size is reported on stderr and that row
/// is skipped.
pub fn run_sweep<W: Write>(config: &SweepConfig, out: W) -> Result<Vec<SweepRecord>, BenchError> {
    if config.calls == 0 {
        return Err(BenchError::NoCalls);
    }
    let dims = sweep_dims(config.max_dim);
    if dims.is_empty() {
        return Err(BenchError::NoSizes);
    }
    let functors = selected(config.functor.as_deref())?;
    let mut writer = csv::Writer::from_writer(out);
    let mut records = Vec::new();
    let mut tape = Tape::new();

    for f in &functors {
        for &n in &dims {
            let x = f.fill(n);
            let dim = x.len();
            if config.progress {
                eprintln!("{} N = {n} (dim {dim})", f.name());
            }

            match time_ad(f.as_ref(), &x, config.calls, &mut tape) {
                Ok((seconds, value)) => {
                    let row = BenchRow::new(f.name(), Engine::Ad, dim, config.calls, seconds);
                    writer.serialize(&row)?;
                    records.push(SweepRecord { row, value });
                }
                Err(e) => eprintln!("skipping {} ad at dim {dim}: {e}", f.name()),
            }
            let (seconds, value) = time_plain(f.as_ref(), &x, config.calls);
            let row = BenchRow::new(f.name(), Engine::Plain, dim, config.calls, seconds);
            writer.serialize(&row)?;
            records.push(SweepRecord { row, value });
            writer.flush()?;
        }
        // release the largest tape of this functor before the next one
        tape.free_all();
    }
    writer.flush()?;
    Ok(records)
}

/// Largest FD discrepancy for one functor and size.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub functor: String,
    pub dim: usize,
    pub max_error: f64,
}

/// `maxᵢ |adᵢ − fdᵢ| / max(1, maxⱼ |fdⱼ|)`: absolute error scaled by the
/// gradient's magnitude, so tiny components do not dominate.
pub fn gradient_error(ad: &[f64], fd: &[f64]) -> f64 {
    let scale = fd.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    ad.iter()
        .zip(fd)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

/// Compares AD gradients with central finite differences for every
/// selected functor at each size.
pub fn verify(functor: Option<&str>, dims: &[usize]) -> Result<Vec<VerifyReport>, BenchError> {
    let mut reports = Vec::new();
    for f in selected(functor)? {
        for &n in dims {
            let x = f.fill(n);
            let (_, ad) =
                gradient(|v| f.eval_var(v), &x).map_err(|source| BenchError::Functor {
                    functor: f.name().to_string(),
                    dim: x.len(),
                    source,
                })?;
            let fd = fd_gradient(|v| f.eval_plain(v), &x);
            reports.push(VerifyReport {
                functor: f.name().to_string(),
                dim: x.len(),
                max_error: gradient_error(&ad, &fd),
            });
        }
    }
    Ok(reports)
}

/// Reads rows back from CSV text.
pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<BenchRow>, BenchError> {
    let mut reader = csv::Reader::from_reader(input);
    let rows = reader.deserialize().collect::<Result<Vec<BenchRow>, _>>()?;
    Ok(rows)
}
