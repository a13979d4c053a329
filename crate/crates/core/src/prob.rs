//! Vectorized log densities.
//!
//! Arguments are [`BroadcastArg`]s: a scalar or a sequence, each either
//! plain reals or variables. Scalars broadcast against sequences. The
//! density walks the arguments as plain values, accumulates analytic
//! partials for the variable arguments in an [`OperandsAndPartials`], and
//! records a single precomputed node at the end.

use crate::error::{AdError, Result};
use crate::reductions::precomputed;
use crate::tape::Tape;
use crate::var::{Value, Var};

/// `−½·log(2π)`.
pub const NEG_LOG_SQRT_TWO_PI: f64 = -0.918_938_533_204_672_7;

/// A scalar or sequence argument, constant or variable.
#[derive(Debug, Clone, Copy)]
pub enum BroadcastArg<'a, 't> {
    Real(f64),
    Reals(&'a [f64]),
    Var(Var<'t>),
    Vars(&'a [Var<'t>]),
}

impl<'a, 't> BroadcastArg<'a, 't> {
    /// 1 for scalars, the element count for sequences.
    pub fn len(&self) -> usize {
        match self {
            BroadcastArg::Real(_) | BroadcastArg::Var(_) => 1,
            BroadcastArg::Reals(xs) => xs.len(),
            BroadcastArg::Vars(xs) => xs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, BroadcastArg::Real(_) | BroadcastArg::Var(_))
    }

    /// True when the argument carries no variables.
    pub fn is_constant(&self) -> bool {
        matches!(self, BroadcastArg::Real(_) | BroadcastArg::Reals(_))
    }

    /// Value at index `i`; scalars ignore the index.
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        match self {
            BroadcastArg::Real(x) => *x,
            BroadcastArg::Reals(xs) => xs[i],
            BroadcastArg::Var(v) => v.value(),
            BroadcastArg::Vars(xs) => xs[i].value(),
        }
    }

    pub fn var(&self, i: usize) -> Option<Var<'t>> {
        match self {
            BroadcastArg::Var(v) => Some(*v),
            BroadcastArg::Vars(xs) => Some(xs[i]),
            _ => None,
        }
    }

    fn tape(&self) -> Option<&'t Tape> {
        match self {
            BroadcastArg::Var(v) => Some(v.tape()),
            BroadcastArg::Vars(xs) => xs.first().map(|v| v.tape()),
            _ => None,
        }
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.value(i))
    }
}

impl From<f64> for BroadcastArg<'_, '_> {
    fn from(x: f64) -> Self {
        BroadcastArg::Real(x)
    }
}

impl<'a> From<&'a [f64]> for BroadcastArg<'a, '_> {
    fn from(xs: &'a [f64]) -> Self {
        BroadcastArg::Reals(xs)
    }
}

impl<'a> From<&'a Vec<f64>> for BroadcastArg<'a, '_> {
    fn from(xs: &'a Vec<f64>) -> Self {
        BroadcastArg::Reals(xs)
    }
}

impl<'a, const N: usize> From<&'a [f64; N]> for BroadcastArg<'a, '_> {
    fn from(xs: &'a [f64; N]) -> Self {
        BroadcastArg::Reals(xs)
    }
}

impl<'t> From<Var<'t>> for BroadcastArg<'_, 't> {
    fn from(v: Var<'t>) -> Self {
        BroadcastArg::Var(v)
    }
}

impl<'a, 't> From<&'a [Var<'t>]> for BroadcastArg<'a, 't> {
    fn from(xs: &'a [Var<'t>]) -> Self {
        BroadcastArg::Vars(xs)
    }
}

impl<'a, 't> From<&'a Vec<Var<'t>>> for BroadcastArg<'a, 't> {
    fn from(xs: &'a Vec<Var<'t>>) -> Self {
        BroadcastArg::Vars(xs)
    }
}

/// Whether a density may drop terms that do not depend on its variable
/// arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DropConstants {
    pub propto: bool,
}

impl DropConstants {
    pub const FULL: DropConstants = DropConstants { propto: false };
    pub const PROPTO: DropConstants = DropConstants { propto: true };

    /// A term depending on the listed arguments is needed unless dropping
    /// constants is allowed and every one of them is constant. A term that
    /// depends on no argument is therefore included only when `propto` is
    /// false.
    pub fn include(&self, args: &[&BroadcastArg<'_, '_>]) -> bool {
        !self.propto || args.iter().any(|a| !a.is_constant())
    }
}

/// Per-call storage for an intermediate quantity, one slot per element of
/// its source argument (a single slot for scalars).
#[derive(Debug, Clone)]
pub struct VectorBuilder {
    used: bool,
    scalar: bool,
    data: Vec<f64>,
}

impl VectorBuilder {
    pub fn new(used: bool, source: &BroadcastArg<'_, '_>) -> Self {
        let len = if used { source.len() } else { 0 };
        VectorBuilder {
            used,
            scalar: source.is_scalar(),
            data: vec![0.0; len],
        }
    }

    pub fn is_used(&self) -> bool {
        self.used
    }

    pub fn set(&mut self, i: usize, value: f64) {
        assert!(self.used, "VectorBuilder written while unused");
        self.data[i] = value;
    }

    /// # Panics
    /// If the builder was created unused.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        assert!(self.used, "VectorBuilder read while unused");
        if self.scalar {
            self.data[0]
        } else {
            self.data[i]
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Window {
    offset: usize,
    len: usize,
}

/// Operands of all variable arguments, concatenated in argument order, with
/// a parallel array of partials. Each argument gets a window into the
/// partials; a scalar argument's window has one slot that every index
/// maps onto, and constant arguments have no window.
#[derive(Debug)]
pub struct OperandsAndPartials<'t> {
    tape: Option<&'t Tape>,
    operands: Vec<Var<'t>>,
    partials: Vec<f64>,
    windows: Vec<Option<Window>>,
}

impl<'t> OperandsAndPartials<'t> {
    pub fn new(args: &[&BroadcastArg<'_, 't>]) -> Self {
        let mut operands = Vec::new();
        let mut windows = Vec::with_capacity(args.len());
        let mut tape = None;
        for arg in args {
            if arg.is_constant() || arg.is_empty() {
                windows.push(None);
                continue;
            }
            tape = tape.or(arg.tape());
            let offset = operands.len();
            operands.extend((0..arg.len()).filter_map(|i| arg.var(i)));
            windows.push(Some(Window {
                offset,
                len: arg.len(),
            }));
        }
        let partials = vec![0.0; operands.len()];
        OperandsAndPartials {
            tape,
            operands,
            partials,
            windows,
        }
    }

    /// Adds `delta` to the partial of argument `arg` at element `n`.
    #[inline]
    pub fn add(&mut self, arg: usize, n: usize, delta: f64) {
        if let Some(w) = self.windows[arg] {
            let slot = if w.len == 1 { 0 } else { n };
            self.partials[w.offset + slot] += delta;
        }
    }

    pub fn partials(&self, arg: usize) -> &[f64] {
        match self.windows[arg] {
            Some(w) => &self.partials[w.offset..w.offset + w.len],
            None => &[],
        }
    }

    pub fn operand_count(&self) -> usize {
        self.operands.len()
    }

    /// Records one precomputed node, or returns the plain value when no
    /// argument is a variable.
    pub fn finish(self, value: f64) -> Result<Value<'t>> {
        match self.tape {
            None => Ok(Value::Constant(value)),
            Some(tape) => precomputed(tape, value, &self.operands, &self.partials).map(Value::Var),
        }
    }
}

fn describe(x: f64) -> String {
    format!("{x}")
}

fn check_each(
    function: &'static str,
    name: &str,
    x: &BroadcastArg<'_, '_>,
    requirement: &str,
    ok: impl Fn(f64) -> bool,
) -> Result<()> {
    match x.values().enumerate().find(|(_, v)| !ok(*v)) {
        None => Ok(()),
        Some((i, v)) => Err(AdError::Validation {
            function,
            argument: if x.is_scalar() {
                name.to_string()
            } else {
                format!("{name}[{i}]")
            },
            value: describe(v),
            requirement: requirement.to_string(),
        }),
    }
}

pub fn check_not_nan<'a, 't: 'a>(
    function: &'static str,
    name: &str,
    x: impl Into<BroadcastArg<'a, 't>>,
) -> Result<()> {
    check_each(function, name, &x.into(), "not nan", |v| !v.is_nan())
}

pub fn check_finite<'a, 't: 'a>(
    function: &'static str,
    name: &str,
    x: impl Into<BroadcastArg<'a, 't>>,
) -> Result<()> {
    check_each(function, name, &x.into(), "finite", f64::is_finite)
}

pub fn check_positive<'a, 't: 'a>(
    function: &'static str,
    name: &str,
    x: impl Into<BroadcastArg<'a, 't>>,
) -> Result<()> {
    check_each(function, name, &x.into(), "positive", |v| v > 0.0)
}

/// All sequence arguments must have the same length; scalars match
/// anything.
pub fn check_consistent_sizes(
    function: &'static str,
    args: &[(&str, &BroadcastArg<'_, '_>)],
) -> Result<()> {
    let mut reference: Option<(&str, usize)> = None;
    for (name, arg) in args {
        if arg.is_scalar() {
            continue;
        }
        match reference {
            None => reference = Some((name, arg.len())),
            Some((ref_name, len)) if len != arg.len() => {
                return Err(AdError::Validation {
                    function,
                    argument: name.to_string(),
                    value: format!("of size {}", arg.len()),
                    requirement: format!("the same size as {ref_name} ({len})"),
                });
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Counts of the per-element intermediates a density call computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DensityStats {
    pub inv_evaluations: usize,
    pub log_evaluations: usize,
}

/// Normal log density `Σₙ −½log(2π) − log σₙ − ½((yₙ − μₙ)/σₙ)²`, dropping
/// terms that are constant in the variable arguments when
/// `policy.propto` is set.
pub fn normal_log<'a, 't: 'a>(
    policy: DropConstants,
    y: impl Into<BroadcastArg<'a, 't>>,
    mu: impl Into<BroadcastArg<'a, 't>>,
    sigma: impl Into<BroadcastArg<'a, 't>>,
) -> Result<Value<'t>> {
    normal_log_stats(policy, y.into(), mu.into(), sigma.into()).map(|(v, _)| v)
}

/// As [`normal_log`], also reporting how many reciprocals and logarithms
/// of σ were evaluated.
pub fn normal_log_stats<'a, 't: 'a>(
    policy: DropConstants,
    y: BroadcastArg<'a, 't>,
    mu: BroadcastArg<'a, 't>,
    sigma: BroadcastArg<'a, 't>,
) -> Result<(Value<'t>, DensityStats)> {
    const FUNCTION: &str = "normal_log";
    let mut stats = DensityStats::default();
    check_not_nan(FUNCTION, "Random variable", y)?;
    check_finite(FUNCTION, "Location parameter", mu)?;
    check_positive(FUNCTION, "Scale parameter", sigma)?;
    check_consistent_sizes(
        FUNCTION,
        &[
            ("Random variable", &y),
            ("Location parameter", &mu),
            ("Scale parameter", &sigma),
        ],
    )?;

    if y.is_empty() || mu.is_empty() || sigma.is_empty() {
        return Ok((Value::Constant(0.0), stats));
    }
    if !policy.include(&[&y, &mu, &sigma]) {
        return Ok((Value::Constant(0.0), stats));
    }

    let include_constant = policy.include(&[]);
    let include_log_sigma = policy.include(&[&sigma]);
    let include_quadratic = policy.include(&[&y, &mu, &sigma]);

    let mut partials = OperandsAndPartials::new(&[&y, &mu, &sigma]);
    let n_max = y.len().max(mu.len()).max(sigma.len());

    let mut inv_sigma = VectorBuilder::new(true, &sigma);
    for i in 0..sigma.len() {
        inv_sigma.set(i, 1.0 / sigma.value(i));
        stats.inv_evaluations += 1;
    }
    let mut log_sigma = VectorBuilder::new(include_log_sigma, &sigma);
    if include_log_sigma {
        for i in 0..sigma.len() {
            log_sigma.set(i, sigma.value(i).ln());
            stats.log_evaluations += 1;
        }
    }

    let mut logp = 0.0;
    for n in 0..n_max {
        let inv = inv_sigma.get(n);
        let z = (y.value(n) - mu.value(n)) * inv;
        let z_sq = z * z;

        if include_constant {
            logp += NEG_LOG_SQRT_TWO_PI;
        }
        if include_log_sigma {
            logp -= log_sigma.get(n);
        }
        if include_quadratic {
            logp += -0.5 * z_sq;
        }

        let scaled_diff = inv * z;
        partials.add(0, n, -scaled_diff);
        partials.add(1, n, scaled_diff);
        partials.add(2, n, inv * (z_sq - 1.0));
    }
    Ok((partials.finish(logp)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var::{independent, independents};

    fn oracle(y: f64, mu: f64, sigma: f64) -> f64 {
        -0.5 * (2.0 * std::f64::consts::PI).ln() - sigma.ln() - 0.5 * ((y - mu) / sigma).powi(2)
    }

    #[test]
    fn negative_log_sqrt_two_pi() {
        assert!((NEG_LOG_SQRT_TWO_PI + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-16);
    }

    #[test]
    fn checks() {
        assert!(check_positive("f", "sigma", 1.2).is_ok());
        assert!(check_positive("f", "sigma", 0.0).is_err());
        assert!(check_not_nan("f", "y", f64::NAN).is_err());
        assert!(check_finite("f", "mu", f64::INFINITY).is_err());
        assert!(check_finite("f", "mu", &[1.0, 2.0]).is_ok());
        let err = check_positive("f", "sigma", &[1.0, -1.0]).unwrap_err();
        match err {
            AdError::Validation { argument, .. } => assert_eq!(argument, "sigma[1]"),
            other => panic!("{other:?}"),
        }

        let y3 = [1.0, 2.0, 3.0];
        let mu3 = [0.0; 3];
        let mu2 = [0.0; 2];
        let y: BroadcastArg = (&y3).into();
        let m3: BroadcastArg = (&mu3).into();
        let m2: BroadcastArg = (&mu2).into();
        let s: BroadcastArg = 1.0.into();
        assert!(check_consistent_sizes("f", &[("y", &y), ("mu", &m3), ("sigma", &s)]).is_ok());
        assert!(check_consistent_sizes("f", &[("y", &y), ("mu", &m2)]).is_err());
    }

    #[test]
    fn broadcast_views() {
        let tape = Tape::new();
        let v = independent(&tape, 2.5);
        let a: BroadcastArg = v.into();
        assert_eq!((a.len(), a.value(0), a.value(17)), (1, 2.5, 2.5));
        let xs = [1.0, 2.0];
        let b: BroadcastArg = (&xs).into();
        assert_eq!((b.len(), b.value(1)), (2, 2.0));
        assert!(b.is_constant() && !a.is_constant());
    }

    #[test]
    fn drop_constants_policy() {
        let c: BroadcastArg = 1.0.into();
        let tape = Tape::new();
        let v: BroadcastArg = independent(&tape, 1.0).into();
        assert!(DropConstants::FULL.include(&[]));
        assert!(!DropConstants::PROPTO.include(&[]));
        assert!(!DropConstants::PROPTO.include(&[&c, &c]));
        assert!(DropConstants::PROPTO.include(&[&c, &v]));
        assert!(DropConstants::FULL.include(&[&c]));
    }

    #[test]
    #[should_panic(expected = "unused")]
    fn unused_builder_access_panics() {
        let s: BroadcastArg = 1.0.into();
        VectorBuilder::new(false, &s).get(0);
    }

    #[test]
    fn builder_scalar_repeats() {
        let s: BroadcastArg = 1.0.into();
        let mut b = VectorBuilder::new(true, &s);
        b.set(0, 4.0);
        assert_eq!((b.get(0), b.get(9)), (4.0, 4.0));
    }

    #[test]
    fn operands_and_partials_windows() {
        let tape = Tape::new();
        let ys = independents(&tape, &[1.0, 2.0, 3.0]);
        let sigma = independent(&tape, 2.0);
        let y: BroadcastArg = (&ys).into();
        let mu: BroadcastArg = 0.5.into();
        let s: BroadcastArg = sigma.into();
        let mut ops = OperandsAndPartials::new(&[&y, &mu, &s]);
        assert_eq!(ops.operand_count(), 4);
        for n in 0..3 {
            ops.add(0, n, n as f64);
            ops.add(1, n, 100.0);
            ops.add(2, n, 1.0);
        }
        assert_eq!(ops.partials(0), &[0.0, 1.0, 2.0]);
        assert!(ops.partials(1).is_empty());
        assert_eq!(ops.partials(2), &[3.0]);
        let before = tape.len();
        let out = ops.finish(7.0).unwrap().as_var().unwrap();
        assert_eq!(tape.len(), before + 1);
        assert_eq!(tape.payload(out.id()), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn scalar_normal_matches_oracle() {
        let tape = Tape::new();
        let mu = independent(&tape, 0.5);
        let sigma = independent(&tape, 1.2);
        let lp = normal_log(DropConstants::FULL, 1.3, mu, sigma)
            .unwrap()
            .as_var()
            .unwrap();
        assert!((lp.value() - oracle(1.3, 0.5, 1.2)).abs() < 1e-14);
        assert!((lp.value() - -1.323482).abs() < 1e-6);
        tape.sweep_with(lp.id(), 0, |_| {});
        assert!((mu.adjoint() - 0.555556).abs() < 1e-6);
        assert!((sigma.adjoint() - -0.462963).abs() < 1e-6);
    }

    #[test]
    fn all_constant_propto_is_zero() {
        let (v, stats) =
            normal_log_stats(DropConstants::PROPTO, 1.0.into(), 0.0.into(), 2.0.into()).unwrap();
        assert_eq!(v, Value::Constant(0.0));
        assert_eq!(stats, DensityStats::default());
        let v = normal_log(DropConstants::FULL, 1.0, 0.0, 2.0).unwrap();
        assert!((v.value() - oracle(1.0, 0.0, 2.0)).abs() < 1e-15);
    }

    #[test]
    fn empty_sequence_is_zero() {
        let tape = Tape::new();
        let mu = independent(&tape, 0.0);
        let empty: [f64; 0] = [];
        let v = normal_log(DropConstants::FULL, &empty, mu, 1.0).unwrap();
        assert_eq!(v, Value::Constant(0.0));
        assert_eq!(tape.len(), 1);
    }

    #[test]
    fn validation_errors() {
        assert!(normal_log(DropConstants::FULL, f64::NAN, 0.0, 1.0).is_err());
        assert!(normal_log(DropConstants::FULL, 0.0, f64::INFINITY, 1.0).is_err());
        assert!(normal_log(DropConstants::FULL, 0.0, 0.0, -1.0).is_err());
        assert!(normal_log(DropConstants::FULL, &[0.0, 1.0], &[0.0, 1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn log_cache_economy() {
        let tape = Tape::new();
        let ys = [0.1, -0.4, 1.2, 0.8];
        let sig = [1.0, 2.0, 0.5, 1.5];
        let sig_vars = independents(&tape, &sig);
        let mu = independent(&tape, 0.2);

        let (_, s) = normal_log_stats(
            DropConstants::PROPTO,
            (&ys).into(),
            mu.into(),
            (&sig_vars).into(),
        )
        .unwrap();
        assert_eq!(s.log_evaluations, 4);
        assert_eq!(s.inv_evaluations, 4);

        let (_, s) = normal_log_stats(
            DropConstants::PROPTO,
            (&ys).into(),
            mu.into(),
            (&sig).into(),
        )
        .unwrap();
        assert_eq!(s.log_evaluations, 0);

        let (_, s) =
            normal_log_stats(DropConstants::PROPTO, (&ys).into(), mu.into(), 1.3.into()).unwrap();
        assert_eq!((s.log_evaluations, s.inv_evaluations), (0, 1));

        let (_, s) =
            normal_log_stats(DropConstants::FULL, (&ys).into(), mu.into(), 1.3.into()).unwrap();
        assert_eq!(s.log_evaluations, 1);
    }

    #[test]
    fn vector_equals_sum_of_scalars_with_one_node() {
        let tape = Tape::new();
        let ys = independents(&tape, &[1.3, -0.2, 2.7]);
        let mu = independent(&tape, 0.5);
        let sigma = independent(&tape, 1.2);
        let before = tape.len();
        let lp = normal_log(DropConstants::FULL, &ys, mu, sigma)
            .unwrap()
            .as_var()
            .unwrap();
        assert_eq!(tape.len(), before + 1);
        let mut expect = 0.0;
        for y in &ys {
            expect += normal_log(DropConstants::FULL, *y, mu, sigma)
                .unwrap()
                .value();
        }
        assert!((lp.value() - expect).abs() < 1e-12);
    }
}
