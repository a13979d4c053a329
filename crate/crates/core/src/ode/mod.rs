//! Forward sensitivities of ODE solutions.
//!
//! The right-hand side is written once against [`Real`]. Its Jacobians with
//! respect to the state and the parameters are taken by short nested reverse
//! sweeps above a [`TapeMark`](crate::TapeMark); the tape is truncated back
//! to the mark afterwards, so the ambient computation never sees those nodes.
//! The coupled system (state plus sensitivities) is then integrated on plain
//! values and each output state enters the ambient tape as one precomputed
//! node.

mod dopri;

pub use dopri::{check_output_times, rk45_integrate, Rk45Options};

use crate::error::{AdError, Result};
use crate::reductions::precomputed;
use crate::tape::Tape;
use crate::var::{independents, Real, Value, Var};

/// An autonomous or time-dependent system `dy/dt = f(t, y, θ)`.
pub trait OdeSystem {
    /// Number of states N.
    fn dim(&self) -> usize;
    /// Number of parameters K.
    fn param_count(&self) -> usize;
    /// Evaluates `f(t, y, θ)`; must return exactly `dim()` components.
    fn rhs<T: Real>(&self, t: f64, y: &[T], theta: &[T]) -> Result<Vec<T>>;
}

/// `f`, `∂f/∂y` (N×N) and `∂f/∂θ` (N×K) at one point, row-major by output.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsJacobians {
    pub f: Vec<f64>,
    pub dfdy: Vec<f64>,
    pub dfdtheta: Vec<f64>,
}

/// Evaluates the right-hand side and both Jacobians by one reverse sweep
/// per output, nested on `tape` above its current top. Adjoints and records
/// below the entry point are left untouched.
pub fn jacobians_of_rhs<S: OdeSystem>(
    tape: &Tape,
    sys: &S,
    t: f64,
    y: &[f64],
    theta: &[f64],
) -> Result<RhsJacobians> {
    let (n, k) = (sys.dim(), sys.param_count());
    if y.len() != n {
        return Err(AdError::Dimension {
            op: "ode state",
            lhs: y.len(),
            rhs: n,
        });
    }
    if theta.len() != k {
        return Err(AdError::Dimension {
            op: "ode parameters",
            lhs: theta.len(),
            rhs: k,
        });
    }
    let mark = tape.mark();
    let nested = || -> Result<RhsJacobians> {
        let yv = independents(tape, y);
        let tv = independents(tape, theta);
        let f = sys.rhs(t, &yv, &tv)?;
        if f.len() != n {
            return Err(AdError::Dimension {
                op: "ode right-hand side",
                lhs: f.len(),
                rhs: n,
            });
        }
        let mut out = RhsJacobians {
            f: f.iter().map(|v| v.value()).collect(),
            dfdy: Vec::with_capacity(n * n),
            dfdtheta: Vec::with_capacity(n * k),
        };
        for (i, fi) in f.iter().enumerate() {
            if i > 0 {
                tape.zero_adjoints_from(mark.node_count());
            }
            tape.sweep_with(fi.id(), mark.node_count(), |_| {});
            out.dfdy.extend(yv.iter().map(|v| v.adjoint()));
            out.dfdtheta.extend(tv.iter().map(|v| v.adjoint()));
        }
        Ok(out)
    };
    let result = nested();
    tape.truncate_to(mark)
        .expect("nested records sit above the mark");
    result
}

/// The state augmented with forward sensitivities.
///
/// Layout: `[y | ∂y/∂θ₁ … ∂y/∂θ_K | ∂y/∂y0₁ … ∂y/∂y0_N]`, each block of
/// length N; blocks that are not requested are omitted.
pub struct CoupledSystem<'a, 't, S> {
    sys: &'a S,
    tape: &'t Tape,
    theta: Vec<f64>,
    params: bool,
    initials: bool,
}

impl<'a, 't, S: OdeSystem> CoupledSystem<'a, 't, S> {
    pub fn new(sys: &'a S, tape: &'t Tape, theta: &[f64], params: bool, initials: bool) -> Self {
        CoupledSystem {
            sys,
            tape,
            theta: theta.to_vec(),
            params,
            initials,
        }
    }

    fn param_blocks(&self) -> usize {
        if self.params {
            self.sys.param_count()
        } else {
            0
        }
    }

    fn initial_blocks(&self) -> usize {
        if self.initials {
            self.sys.dim()
        } else {
            0
        }
    }

    pub fn size(&self) -> usize {
        self.sys.dim() * (1 + self.param_blocks() + self.initial_blocks())
    }

    /// Sensitivities to θ start at zero; sensitivities to y0 start at the
    /// identity.
    pub fn initial_state(&self, y0: &[f64]) -> Vec<f64> {
        let n = self.sys.dim();
        let mut z = vec![0.0; self.size()];
        z[..n].copy_from_slice(y0);
        let base = n * (1 + self.param_blocks());
        for j in 0..self.initial_blocks() {
            z[base + j * n + j] = 1.0;
        }
        z
    }

    pub fn rhs(&self, t: f64, z: &[f64], dz: &mut [f64]) -> Result<()> {
        let n = self.sys.dim();
        let k = self.sys.param_count();
        let jac = jacobians_of_rhs(self.tape, self.sys, t, &z[..n], &self.theta)?;
        dz[..n].copy_from_slice(&jac.f);
        let jv = |block: &[f64], i: usize| -> f64 {
            (0..n).map(|j| jac.dfdy[i * n + j] * block[j]).sum()
        };
        for m in 0..self.param_blocks() {
            let off = n * (1 + m);
            let block = &z[off..off + n];
            for i in 0..n {
                dz[off + i] = jac.dfdtheta[i * k + m] + jv(block, i);
            }
        }
        let base = n * (1 + self.param_blocks());
        for j in 0..self.initial_blocks() {
            let off = base + j * n;
            let block = &z[off..off + n];
            for i in 0..n {
                dz[off + i] = jv(block, i);
            }
        }
        Ok(())
    }
}

/// Coupled system carrying sensitivities to the parameters only.
pub fn coupled_for_params<'a, 't, S: OdeSystem>(
    sys: &'a S,
    tape: &'t Tape,
    theta: &[f64],
) -> CoupledSystem<'a, 't, S> {
    CoupledSystem::new(sys, tape, theta, true, false)
}

/// Coupled system carrying sensitivities to the initial state only.
pub fn coupled_for_initials<'a, 't, S: OdeSystem>(
    sys: &'a S,
    tape: &'t Tape,
    theta: &[f64],
) -> CoupledSystem<'a, 't, S> {
    CoupledSystem::new(sys, tape, theta, false, true)
}

/// Coupled system carrying both sets of sensitivities.
pub fn coupled_for_both<'a, 't, S: OdeSystem>(
    sys: &'a S,
    tape: &'t Tape,
    theta: &[f64],
) -> CoupledSystem<'a, 't, S> {
    CoupledSystem::new(sys, tape, theta, true, true)
}

/// Initial state or parameters: plain constants or tape variables.
#[derive(Debug, Clone, Copy)]
pub enum OdeArg<'a, 't> {
    Reals(&'a [f64]),
    Vars(&'a [Var<'t>]),
}

impl<'a, 't> OdeArg<'a, 't> {
    fn len(&self) -> usize {
        match self {
            OdeArg::Reals(r) => r.len(),
            OdeArg::Vars(v) => v.len(),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            OdeArg::Reals(r) => r.to_vec(),
            OdeArg::Vars(v) => v.iter().map(|x| x.value()).collect(),
        }
    }

    fn vars(&self) -> &'a [Var<'t>] {
        match self {
            OdeArg::Reals(_) => &[],
            OdeArg::Vars(v) => v,
        }
    }
}

impl<'a> From<&'a [f64]> for OdeArg<'a, '_> {
    fn from(r: &'a [f64]) -> Self {
        OdeArg::Reals(r)
    }
}

impl<'a> From<&'a Vec<f64>> for OdeArg<'a, '_> {
    fn from(r: &'a Vec<f64>) -> Self {
        OdeArg::Reals(r)
    }
}

impl<'a, const N: usize> From<&'a [f64; N]> for OdeArg<'a, '_> {
    fn from(r: &'a [f64; N]) -> Self {
        OdeArg::Reals(r)
    }
}

impl<'a, 't> From<&'a [Var<'t>]> for OdeArg<'a, 't> {
    fn from(v: &'a [Var<'t>]) -> Self {
        OdeArg::Vars(v)
    }
}

impl<'a, 't> From<&'a Vec<Var<'t>>> for OdeArg<'a, 't> {
    fn from(v: &'a Vec<Var<'t>>) -> Self {
        OdeArg::Vars(v)
    }
}

impl<'a, 't, const N: usize> From<&'a [Var<'t>; N]> for OdeArg<'a, 't> {
    fn from(v: &'a [Var<'t>; N]) -> Self {
        OdeArg::Vars(v)
    }
}

/// The state at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPoint<'t> {
    pub t: f64,
    pub y: Vec<Value<'t>>,
}

impl SolutionPoint<'_> {
    pub fn values(&self) -> Vec<f64> {
        self.y.iter().map(|v| v.value()).collect()
    }
}

/// Solves `dy/dt = f(t, y, θ)` from `(t0, y0)` and reports the state at
/// each time in `ts`.
///
/// When `y0` or `θ` are variables, each output component is one node on
/// their tape whose operands are the θ variables followed by the y0
/// variables, with the forward sensitivities as partials.
pub fn integrate_ode<'a, 't, S: OdeSystem>(
    sys: &S,
    y0: impl Into<OdeArg<'a, 't>>,
    t0: f64,
    ts: &[f64],
    theta: impl Into<OdeArg<'a, 't>>,
    opts: &Rk45Options,
) -> Result<Vec<SolutionPoint<'t>>>
where
    't: 'a,
{
    let (y0, theta) = (y0.into(), theta.into());
    let n = sys.dim();
    if y0.len() != n {
        return Err(AdError::Dimension {
            op: "ode initial state",
            lhs: y0.len(),
            rhs: n,
        });
    }
    if theta.len() != sys.param_count() {
        return Err(AdError::Dimension {
            op: "ode parameters",
            lhs: theta.len(),
            rhs: sys.param_count(),
        });
    }
    check_output_times(t0, ts)?;
    let y0_values = y0.values();
    let theta_values = theta.values();

    let operands: Vec<Var<'t>> = theta.vars().iter().chain(y0.vars()).copied().collect();
    let Some(first) = operands.first() else {
        let states = rk45_integrate(
            |t, y, dy| {
                let f = sys.rhs(t, y, &theta_values)?;
                if f.len() != n {
                    return Err(AdError::Dimension {
                        op: "ode right-hand side",
                        lhs: f.len(),
                        rhs: n,
                    });
                }
                dy.copy_from_slice(&f);
                Ok(())
            },
            &y0_values,
            t0,
            ts,
            opts,
        )?;
        return Ok(ts
            .iter()
            .zip(states)
            .map(|(&t, y)| SolutionPoint {
                t,
                y: y.into_iter().map(Value::Constant).collect(),
            })
            .collect());
    };
    let tape = first.tape();
    if operands.iter().any(|v| !std::ptr::eq(v.tape(), tape)) {
        return Err(AdError::CrossTape);
    }

    let params = !theta.vars().is_empty();
    let initials = !y0.vars().is_empty();
    let coupled = CoupledSystem::new(sys, tape, &theta_values, params, initials);
    let states = rk45_integrate(
        |t, z, dz| coupled.rhs(t, z, dz),
        &coupled.initial_state(&y0_values),
        t0,
        ts,
        opts,
    )?;

    let k = if params { sys.param_count() } else { 0 };
    let mut out = Vec::with_capacity(ts.len());
    let mut partials = vec![0.0; operands.len()];
    for (&t, z) in ts.iter().zip(&states) {
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            for (slot, p) in partials.iter_mut().enumerate() {
                // block `slot` holds ∂y/∂(operand slot)
                *p = z[n * (1 + slot) + i];
            }
            debug_assert_eq!(partials.len(), k + if initials { n } else { 0 });
            y.push(Value::Var(precomputed(tape, z[i], &operands, &partials)?));
        }
        out.push(SolutionPoint { t, y });
    }
    Ok(out)
}
