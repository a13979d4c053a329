//! The functor suite. Each functor fills its own inputs for a requested
//! size and evaluates either on tape variables or on plain reals.

use arena_ad::matrix::multiply_values;
use arena_ad::{multiply, normal_log, sum, DropConstants, Matrix, Real, Var};

pub trait BenchFunctor {
    fn name(&self) -> &'static str;
    /// Inputs for size `n`; matrix functors shrink to the largest size
    /// their square shapes can use.
    fn fill(&self, n: usize) -> Vec<f64>;
    fn eval_var<'t>(&self, x: &[Var<'t>]) -> arena_ad::Result<Var<'t>>;
    fn eval_plain(&self, x: &[f64]) -> f64;
}

/// Implements both evaluations from one generic body.
macro_rules! generic_functor {
    ($ty:ident, $name:literal, $fill:expr, $body:ident) => {
        pub struct $ty;

        impl BenchFunctor for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn fill(&self, n: usize) -> Vec<f64> {
                let f: fn(usize) -> Vec<f64> = $fill;
                f(n)
            }
            fn eval_var<'t>(&self, x: &[Var<'t>]) -> arena_ad::Result<Var<'t>> {
                Ok($body(x))
            }
            fn eval_plain(&self, x: &[f64]) -> f64 {
                $body(x)
            }
        }
    };
}

fn sum_body<T: Real>(x: &[T]) -> T {
    let mut total = x[0].lift(0.0);
    for &xi in x {
        total += xi;
    }
    total
}

fn product_body<T: Real>(x: &[T]) -> T {
    let mut total = x[0].lift(1.0);
    for &xi in x {
        total *= xi;
    }
    total
}

fn powers_body<T: Real>(x: &[T]) -> T {
    let mut result = x[0].lift(10.0);
    for &xi in &x[1..] {
        result = result.pow(xi);
    }
    result
}

fn log_sum_exp_recursive_body<T: Real>(x: &[T]) -> T {
    let mut total = x[0].lift(0.0);
    for &xi in x {
        total = (total.exp() + xi.exp()).ln();
    }
    total
}

fn log_sum_exp_direct_body<T: Real>(x: &[T]) -> T {
    let mut total = x[0].lift(0.0);
    for &xi in x {
        total += xi.exp();
    }
    total.ln()
}

/// Two n×n matrices interleaved entry by entry, multiplied by the naive
/// triple loop and summed.
fn matrix_vv_body<T: Real>(x: &[T]) -> T {
    let n = half_side(x.len());
    let a: Vec<T> = x.iter().step_by(2).copied().collect();
    let b: Vec<T> = x.iter().skip(1).step_by(2).copied().collect();
    let zero = x[0].lift(0.0);
    let mut total = zero;
    for m in 0..n {
        for j in 0..n {
            let mut ab = zero;
            for k in 0..n {
                ab += a[m * n + k] * b[k * n + j];
            }
            total += ab;
        }
    }
    total
}

const VD_CONSTANT: f64 = 1.02;

fn matrix_vd_body<T: Real>(x: &[T]) -> T {
    let n = side(x.len());
    let zero = x[0].lift(0.0);
    let mut total = zero;
    for m in 0..n {
        for _ in 0..n {
            let mut ab = zero;
            for k in 0..n {
                ab += x[m * n + k] * VD_CONSTANT;
            }
            total += ab;
        }
    }
    total
}

const NORMAL_MU: f64 = -0.56;
const NORMAL_SIGMA: f64 = 1.37;

/// Log normal density up to `−log √(2π)`.
fn normal_log_density<T: Real>(y: T, mu: T, sigma: T) -> T {
    let z = (y - mu) / sigma;
    -sigma.ln() - z * z * 0.5
}

fn normal_naive_body<T: Real>(x: &[T]) -> T {
    let mu = x[0].lift(NORMAL_MU);
    let sigma = x[0].lift(NORMAL_SIGMA);
    let mut lp = x[0].lift(0.0);
    for &xi in x {
        lp += normal_log_density(xi, mu, sigma);
    }
    lp
}

fn side(len: usize) -> usize {
    (len as f64).sqrt() as usize
}

fn half_side(len: usize) -> usize {
    side(len / 2)
}

fn fill_index(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

fn fill_product(n: usize) -> Vec<f64> {
    vec![1e10f64.powf(1.0 / n as f64); n]
}

/// Exponents whose running product stays bounded, so the chained power
/// remains finite at every size.
fn fill_powers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 1.0 + 1.0 / ((i + 1) * (i + 1)) as f64)
        .collect()
}

fn fill_fraction(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

fn fill_ramp(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| (i + 1) as f64 / (len + 1) as f64)
        .collect()
}

fn fill_two_matrices(n: usize) -> Vec<f64> {
    let m = half_side(n).max(1);
    fill_ramp(2 * m * m)
}

fn fill_one_matrix(n: usize) -> Vec<f64> {
    let m = side(n).max(1);
    fill_ramp(m * m)
}

fn fill_centered(n: usize) -> Vec<f64> {
    let half = (n / 2) as f64;
    (0..n)
        .map(|i| ((i + 1) as f64 - half) / (n + 1) as f64)
        .collect()
}

generic_functor!(Sum, "sum", fill_index, sum_body);
generic_functor!(Product, "product", fill_product, product_body);
generic_functor!(PowersChain, "powers_chain", fill_powers, powers_body);
generic_functor!(
    LogSumExpRecursive,
    "log_sum_exp_recursive",
    fill_fraction,
    log_sum_exp_recursive_body
);
generic_functor!(
    LogSumExpDirect,
    "log_sum_exp_direct",
    fill_fraction,
    log_sum_exp_direct_body
);
generic_functor!(
    MatrixProductVv,
    "matrix_product_vv",
    fill_two_matrices,
    matrix_vv_body
);
generic_functor!(
    MatrixProductVd,
    "matrix_product_vd",
    fill_one_matrix,
    matrix_vd_body
);
generic_functor!(
    NormalDensityNaive,
    "normal_density_naive",
    fill_centered,
    normal_naive_body
);

/// Library matrix product (one dot-product node per entry) and a single
/// sum node over the result.
pub struct MatrixProductBuiltin;

fn split_matrices<T: Copy>(x: &[T]) -> (Matrix<T>, Matrix<T>) {
    let n = half_side(x.len());
    let a = Matrix::from_fn(n, n, |i, j| x[2 * (i * n + j)]);
    let b = Matrix::from_fn(n, n, |i, j| x[2 * (i * n + j) + 1]);
    (a, b)
}

impl BenchFunctor for MatrixProductBuiltin {
    fn name(&self) -> &'static str {
        "matrix_product_builtin"
    }
    fn fill(&self, n: usize) -> Vec<f64> {
        fill_two_matrices(n)
    }
    fn eval_var<'t>(&self, x: &[Var<'t>]) -> arena_ad::Result<Var<'t>> {
        let (a, b) = split_matrices(x);
        let ab = multiply(&a, &b)?;
        Ok(sum(ab.as_slice()).to_var(x[0].tape()))
    }
    fn eval_plain(&self, x: &[f64]) -> f64 {
        let (a, b) = split_matrices(x);
        multiply_values(&a, &b)
            .expect("square shapes agree")
            .as_slice()
            .iter()
            .sum()
    }
}

/// The vectorized density with constants dropped. μ and σ are constants
/// lifted onto the tape, so only the `−log √(2π)` term is dropped and the
/// value matches the naive definition.
pub struct NormalDensityBuiltin;

impl BenchFunctor for NormalDensityBuiltin {
    fn name(&self) -> &'static str {
        "normal_density_builtin"
    }
    fn fill(&self, n: usize) -> Vec<f64> {
        fill_centered(n)
    }
    fn eval_var<'t>(&self, x: &[Var<'t>]) -> arena_ad::Result<Var<'t>> {
        let mu = x[0].lift(NORMAL_MU);
        let sigma = x[0].lift(NORMAL_SIGMA);
        Ok(normal_log(DropConstants::PROPTO, x, mu, sigma)?.to_var(x[0].tape()))
    }
    fn eval_plain(&self, x: &[f64]) -> f64 {
        normal_naive_body(x)
    }
}

/// Every functor, in reporting order.
pub fn registry() -> Vec<Box<dyn BenchFunctor>> {
    vec![
        Box::new(Sum),
        Box::new(Product),
        Box::new(PowersChain),
        Box::new(LogSumExpRecursive),
        Box::new(LogSumExpDirect),
        Box::new(MatrixProductVv),
        Box::new(MatrixProductVd),
        Box::new(MatrixProductBuiltin),
        Box::new(NormalDensityNaive),
        Box::new(NormalDensityBuiltin),
    ]
}

pub fn find(name: &str) -> Option<Box<dyn BenchFunctor>> {
    registry().into_iter().find(|f| f.name() == name)
}
