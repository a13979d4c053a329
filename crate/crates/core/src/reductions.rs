//! Variadic nodes: a single record covering a whole sequence of operands.

use crate::error::{AdError, Result};
use crate::tape::{NodeId, Rule, Tape};
use crate::var::{Value, Var};

fn ensure_one_tape<'t>(xs: &[Var<'t>]) -> &'t Tape {
    let tape = xs[0].tape();
    for x in &xs[1..] {
        xs[0].check_tape(*x);
    }
    tape
}

/// Sum of a sequence, recorded as one node when it has three or more terms.
pub fn sum<'t>(xs: &[Var<'t>]) -> Value<'t> {
    match xs {
        [] => Value::Constant(0.0),
        [x] => Value::Var(*x),
        [a, b] => Value::Var(*a + *b),
        _ => {
            let tape = ensure_one_tape(xs);
            let mut inner = tape.inner_mut();
            let mut total = 0.0;
            for x in xs {
                total += inner.value(x.id().index());
            }
            let ops = inner.alloc_ids(xs.len(), xs.iter().map(|x| x.id().index()));
            let id = inner.push_regions(total, Rule::Sum, ops, Default::default());
            drop(inner);
            Value::Var(tape.var(id))
        }
    }
}

fn log_sum_exp_value(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log(Σ exp(xᵢ))` evaluated around the maximum to avoid overflow.
pub fn log_sum_exp<'t>(xs: &[Var<'t>]) -> Result<Var<'t>> {
    if xs.is_empty() {
        return Err(AdError::EmptyInput { op: "log_sum_exp" });
    }
    let tape = ensure_one_tape(xs);
    let mut inner = tape.inner_mut();
    let values: Vec<f64> = xs.iter().map(|x| inner.value(x.id().index())).collect();
    let value = log_sum_exp_value(&values);
    let ops = inner.alloc_ids(xs.len(), xs.iter().map(|x| x.id().index()));
    let id = inner.push_regions(value, Rule::LogSumExp, ops, Default::default());
    drop(inner);
    Ok(tape.var(id))
}

/// Two-argument form for incremental accumulation.
pub fn log_sum_exp2<'t>(a: Var<'t>, b: Var<'t>) -> Var<'t> {
    log_sum_exp(&[a, b]).expect("two operands")
}

/// Plain-value log-sum-exp with the same max shift.
pub fn log_sum_exp_f64(values: &[f64]) -> f64 {
    log_sum_exp_value(values)
}

fn check_lengths(op: &'static str, lhs: usize, rhs: usize) -> Result<()> {
    if lhs != rhs {
        return Err(AdError::Dimension { op, lhs, rhs });
    }
    if lhs == 0 {
        return Err(AdError::EmptyInput { op });
    }
    Ok(())
}

/// `Σ aᵢ·bᵢ` over two variable sequences as a single node.
pub fn dot_product<'t>(a: &[Var<'t>], b: &[Var<'t>]) -> Result<Var<'t>> {
    check_lengths("dot_product", a.len(), b.len())?;
    let tape = ensure_one_tape(a);
    ensure_one_tape(b);
    a[0].check_tape(b[0]);
    let mut inner = tape.inner_mut();
    let value = a
        .iter()
        .zip(b)
        .map(|(x, y)| inner.value(x.id().index()) * inner.value(y.id().index()))
        .sum();
    let ra = inner.alloc_ids(a.len(), a.iter().map(|x| x.id().index()));
    let rb = inner.alloc_ids(b.len(), b.iter().map(|x| x.id().index()));
    let id = inner.push_regions(value, Rule::Dot, ra, rb);
    drop(inner);
    Ok(tape.var(id))
}

/// `Σ aᵢ·bᵢ` with constant `b`; the constants are the stored partials.
pub fn dot_product_vd<'t>(a: &[Var<'t>], b: &[f64]) -> Result<Var<'t>> {
    check_lengths("dot_product_vd", a.len(), b.len())?;
    let tape = ensure_one_tape(a);
    let mut inner = tape.inner_mut();
    let value = a
        .iter()
        .zip(b)
        .map(|(x, c)| inner.value(x.id().index()) * c)
        .sum();
    let ops = inner.alloc_ids(a.len(), a.iter().map(|x| x.id().index()));
    let pl = inner.alloc_reals(b.len(), b.iter().copied());
    let id = inner.push_regions(value, Rule::DotScalar, ops, pl);
    drop(inner);
    Ok(tape.var(id))
}

/// A node with eagerly computed partials: during the sweep each operand
/// receives `adjoint × partialᵢ`.
pub fn precomputed<'t>(
    tape: &'t Tape,
    value: f64,
    operands: &[Var<'t>],
    partials: &[f64],
) -> Result<Var<'t>> {
    if operands.len() != partials.len() {
        return Err(AdError::Dimension {
            op: "precomputed",
            lhs: operands.len(),
            rhs: partials.len(),
        });
    }
    if operands.iter().any(|o| !std::ptr::eq(o.tape(), tape)) {
        return Err(AdError::CrossTape);
    }
    let ids: Vec<NodeId> = operands.iter().map(|o| o.id()).collect();
    let id = tape.record(value, Rule::Precomputed, &ids, partials)?;
    Ok(tape.var(id.index()))
}
