//! Reverse sweep plus the gradient and Jacobian functionals.

use crate::tape::{NodeId, Tape};
use crate::var::{independents, Var};

/// Seeds `root` with adjoint 1 and propagates from the top of the tape down
/// to the first record. Adjoints accumulate, so sweeping twice without
/// [`zero_adjoints`] in between adds the contributions twice.
pub fn sweep(tape: &Tape, root: NodeId) {
    tape.sweep_with(root, 0, |_| {});
}

pub fn zero_adjoints(tape: &Tape) {
    tape.zero_adjoints();
}

/// Recovers the tape when dropped, so that an error or a panic inside the
/// differentiated function still releases the episode's nodes.
struct RecoverOnDrop<'a>(&'a mut Tape);

impl Drop for RecoverOnDrop<'_> {
    fn drop(&mut self) {
        self.0.recover();
    }
}

/// Value and gradient of `f` at `x`, evaluated on a fresh tape.
pub fn gradient<F, E>(f: F, x: &[f64]) -> Result<(f64, Vec<f64>), E>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Result<Var<'t>, E>,
{
    let mut tape = Tape::new();
    gradient_with(&mut tape, f, x)
}

/// As [`gradient`], reusing `tape`. The tape is recovered on return
/// whether `f` succeeds, fails or panics.
pub fn gradient_with<F, E>(tape: &mut Tape, f: F, x: &[f64]) -> Result<(f64, Vec<f64>), E>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Result<Var<'t>, E>,
{
    let guard = RecoverOnDrop(tape);
    let tape: &Tape = guard.0;
    let inputs = independents(tape, x);
    let fx = f(&inputs)?;
    assert!(
        std::ptr::eq(fx.tape(), tape),
        "function returned a variable from another tape"
    );
    sweep(tape, fx.id());
    let grad = inputs.iter().map(|v| v.adjoint()).collect();
    Ok((fx.value(), grad))
}

/// Values and Jacobian (row `i` = gradient of output `i`) of a
/// vector-valued `f`, from one forward pass and one sweep per output.
pub fn jacobian<F, E>(f: F, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), E>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Result<Vec<Var<'t>>, E>,
{
    let mut tape = Tape::new();
    jacobian_with(&mut tape, f, x)
}

pub fn jacobian_with<F, E>(tape: &mut Tape, f: F, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), E>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Result<Vec<Var<'t>>, E>,
{
    let guard = RecoverOnDrop(tape);
    let tape: &Tape = guard.0;
    let inputs = independents(tape, x);
    let outputs = f(&inputs)?;
    let mut rows = Vec::with_capacity(outputs.len());
    for (i, out) in outputs.iter().enumerate() {
        assert!(
            std::ptr::eq(out.tape(), tape),
            "function returned a variable from another tape"
        );
        if i > 0 {
            zero_adjoints(tape);
        }
        sweep(tape, out.id());
        rows.push(inputs.iter().map(|v| v.adjoint()).collect());
    }
    let values = outputs.iter().map(|v| v.value()).collect();
    Ok((values, rows))
}

/// Default central-difference step for a coordinate with value `x`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central finite-difference gradient with a per-coordinate step chosen
/// by [`fd_step`].
pub fn fd_gradient<G>(g: G, x: &[f64]) -> Vec<f64>
where
    G: FnMut(&[f64]) -> f64,
{
    let steps: Vec<f64> = x.iter().map(|&xi| fd_step(xi)).collect();
    fd_gradient_steps(g, x, &steps)
}

/// Central finite-difference gradient with a fixed step `eps`:
/// `(g(x + eps/2·eₙ) − g(x − eps/2·eₙ)) / eps`.
pub fn fd_gradient_eps<G>(g: G, x: &[f64], eps: f64) -> Vec<f64>
where
    G: FnMut(&[f64]) -> f64,
{
    assert!(eps > 0.0, "finite-difference step must be positive");
    fd_gradient_steps(g, x, &vec![eps; x.len()])
}

fn fd_gradient_steps<G>(mut g: G, x: &[f64], steps: &[f64]) -> Vec<f64>
where
    G: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    steps
        .iter()
        .enumerate()
        .map(|(n, &eps)| {
            probe[n] = x[n] + eps / 2.0;
            let hi = g(&probe);
            probe[n] = x[n] - eps / 2.0;
            let lo = g(&probe);
            probe[n] = x[n];
            (hi - lo) / eps
        })
        .collect()
}
