//! Reverse-mode automatic differentiation over an append-only expression
//! tape.
//!
//! Each differentiation episode records its expression graph on a [`Tape`]:
//! node records in a growable list, operand lists and stored partials in an
//! [`arena::Arena`] of bump-allocated blocks. A [`Var`] is a copyable handle
//! to one node and behaves like a scalar under the usual operators. The
//! reverse sweep visits records in decreasing order, which is a topological
//! order by construction.
//!
//! ```
//! use arena_ad::{gradient, AdError};
//!
//! let (fx, grad) = gradient(|x| Ok::<_, AdError>(x[0] * x[1] / 2.0), &[6.0, 4.0]).unwrap();
//! assert_eq!(fx, 12.0);
//! assert_eq!(grad, vec![2.0, 3.0]);
//! ```

pub mod arena;
pub mod error;
pub mod functionals;
pub mod functions;
pub mod matrix;
pub mod ode;
pub mod prob;
pub mod reductions;
pub mod tape;
pub mod var;

pub use error::{AdError, Result};
pub use functionals::{
    fd_gradient, fd_gradient_eps, gradient, gradient_with, jacobian, jacobian_with, sweep,
    zero_adjoints,
};
pub use functions::{exp, log, pow, sqrt, square, Pow};
pub use matrix::{
    log_determinant, multiply, multiply_dv, multiply_self_transpose, multiply_vd, Matrix,
};
pub use ode::{integrate_ode, OdeSystem, Rk45Options, SolutionPoint};
pub use prob::{normal_log, BroadcastArg, DropConstants};
pub use reductions::{dot_product, dot_product_vd, log_sum_exp, log_sum_exp2, precomputed, sum};
pub use tape::{NodeId, Rule, Tape, TapeMark};
pub use var::{independent, independents, value_of, Real, Value, ValueOf, Var};
