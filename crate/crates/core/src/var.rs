//! The scalar autodiff handle and its arithmetic.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::arena::Region;
use crate::tape::{NodeId, Rule, Tape};

/// A scalar bound to a node on a [`Tape`].
///
/// Copying a `Var` copies the handle; the node it refers to is shared.
/// Arithmetic on two handles from different tapes panics.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: NodeId,
}

impl<'t> Var<'t> {
    pub(crate) fn from_parts(tape: &'t Tape, id: NodeId) -> Self {
        Var { tape, id }
    }

    /// Wraps an existing node of `tape`.
    ///
    /// # Panics
    /// If `id` is not on the tape.
    pub fn from_node(tape: &'t Tape, id: NodeId) -> Self {
        assert!(id.index() < tape.len(), "node {id} is not on this tape");
        Var { tape, id }
    }

    pub fn id(self) -> NodeId {
        self.id
    }

    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    pub fn value(self) -> f64 {
        self.tape.inner().value(self.id.index())
    }

    pub fn adjoint(self) -> f64 {
        self.tape.adjoint(self.id)
    }

    pub fn same_tape(self, other: Var<'_>) -> bool {
        std::ptr::eq(self.tape, other.tape)
    }

    #[inline]
    pub(crate) fn check_tape(self, other: Var<'_>) {
        assert!(self.same_tape(other), "operands belong to different tapes");
    }

    #[inline]
    pub(crate) fn unary(self, value: f64, rule: Rule) -> Var<'t> {
        let mut inner = self.tape.inner_mut();
        let ops = inner.alloc_ids(1, [self.id.index()]);
        let id = inner.push_regions(value, rule, ops, Region::EMPTY);
        Var::from_parts(self.tape, NodeId(id))
    }

    #[inline]
    pub(crate) fn unary_with(self, value: f64, rule: Rule, constant: f64) -> Var<'t> {
        let mut inner = self.tape.inner_mut();
        let ops = inner.alloc_ids(1, [self.id.index()]);
        let pl = inner.alloc_reals(1, [constant]);
        let id = inner.push_regions(value, rule, ops, pl);
        Var::from_parts(self.tape, NodeId(id))
    }

    #[inline]
    pub(crate) fn binary(
        self,
        other: Var<'t>,
        rule: Rule,
        op: impl FnOnce(f64, f64) -> f64,
    ) -> Var<'t> {
        self.check_tape(other);
        let mut inner = self.tape.inner_mut();
        let (a, b) = (self.id.index(), other.id.index());
        let value = op(inner.value(a), inner.value(b));
        let ops = inner.alloc_ids(2, [a, b]);
        let id = inner.push_regions(value, rule, ops, Region::EMPTY);
        Var::from_parts(self.tape, NodeId(id))
    }
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("value", &self.value())
            .finish()
    }
}

impl fmt::Display for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Records a new independent variable.
pub fn independent(tape: &Tape, value: f64) -> Var<'_> {
    tape.constant(value)
}

/// Records one independent variable per value.
pub fn independents<'t>(tape: &'t Tape, values: &[f64]) -> Vec<Var<'t>> {
    values.iter().map(|&v| tape.constant(v)).collect()
}

// Var ∘ Var
impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, Rule::Add, |a, b| a + b)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, Rule::Sub, |a, b| a - b)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, Rule::Mul, |a, b| a * b)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, Rule::Div, |a, b| a / b)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(-self.value(), Rule::Neg)
    }
}

// Var ∘ f64
impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.unary(self.value() + rhs, Rule::AddScalar)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.unary(self.value() - rhs, Rule::SubScalar)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.unary_with(self.value() * rhs, Rule::MulScalar, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Var<'t> {
        self.unary_with(self.value() / rhs, Rule::DivScalar, rhs)
    }
}

// f64 ∘ Var
impl<'t> Add<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        rhs.unary(self + rhs.value(), Rule::AddScalar)
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        rhs.unary(self - rhs.value(), Rule::ScalarSub)
    }
}

impl<'t> Mul<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        rhs.unary_with(self * rhs.value(), Rule::MulScalar, self)
    }
}

impl<'t> Div<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        rhs.unary(self / rhs.value(), Rule::ScalarDiv)
    }
}

macro_rules! compound_assign {
    ($($trait:ident $method:ident $op:tt),*) => {$(
        impl<'t> $trait for Var<'t> {
            fn $method(&mut self, rhs: Var<'t>) {
                *self = *self $op rhs;
            }
        }

        impl<'t> $trait<f64> for Var<'t> {
            fn $method(&mut self, rhs: f64) {
                *self = *self $op rhs;
            }
        }
    )*};
}

compound_assign!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

// Comparisons read values only and never touch the tape.
impl PartialEq for Var<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.value() == other.value()
    }
}

impl PartialEq<f64> for Var<'_> {
    fn eq(&self, other: &f64) -> bool {
        self.value() == *other
    }
}

impl PartialEq<Var<'_>> for f64 {
    fn eq(&self, other: &Var<'_>) -> bool {
        *self == other.value()
    }
}

impl PartialOrd for Var<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl PartialOrd<f64> for Var<'_> {
    fn partial_cmp(&self, other: &f64) -> Option<std::cmp::Ordering> {
        self.value().partial_cmp(other)
    }
}

impl PartialOrd<Var<'_>> for f64 {
    fn partial_cmp(&self, other: &Var<'_>) -> Option<std::cmp::Ordering> {
        self.partial_cmp(&other.value())
    }
}

/// Logical negation of a value: true when it equals zero.
pub fn logical_not(a: impl ValueOf) -> bool {
    a.value_of() == 0.0
}

pub fn logical_and(a: impl ValueOf, b: impl ValueOf) -> bool {
    a.value_of() != 0.0 && b.value_of() != 0.0
}

pub fn logical_or(a: impl ValueOf, b: impl ValueOf) -> bool {
    a.value_of() != 0.0 || b.value_of() != 0.0
}

/// Plain value extraction for autodiff and non-autodiff scalars.
pub trait ValueOf {
    fn value_of(&self) -> f64;
}

impl ValueOf for f64 {
    fn value_of(&self) -> f64 {
        *self
    }
}

impl ValueOf for Var<'_> {
    fn value_of(&self) -> f64 {
        self.value()
    }
}

impl ValueOf for Value<'_> {
    fn value_of(&self) -> f64 {
        self.value()
    }
}

impl<T: ValueOf + ?Sized> ValueOf for &T {
    fn value_of(&self) -> f64 {
        (**self).value_of()
    }
}

pub fn value_of(x: impl ValueOf) -> f64 {
    x.value_of()
}

/// Result of an operation that records a node only when some input is an
/// autodiff variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'t> {
    Constant(f64),
    Var(Var<'t>),
}

impl<'t> Value<'t> {
    pub fn value(self) -> f64 {
        match self {
            Value::Constant(c) => c,
            Value::Var(v) => v.value(),
        }
    }

    pub fn as_var(self) -> Option<Var<'t>> {
        match self {
            Value::Var(v) => Some(v),
            Value::Constant(_) => None,
        }
    }

    /// Returns the variable, recording a constant node on `tape` when the
    /// value is plain.
    pub fn to_var(self, tape: &'t Tape) -> Var<'t> {
        match self {
            Value::Var(v) => v,
            Value::Constant(c) => tape.constant(c),
        }
    }
}

impl<'t> From<Var<'t>> for Value<'t> {
    fn from(v: Var<'t>) -> Self {
        Value::Var(v)
    }
}

impl From<f64> for Value<'_> {
    fn from(c: f64) -> Self {
        Value::Constant(c)
    }
}

/// Scalar arithmetic shared by plain reals and autodiff variables, so a
/// function can be written once and evaluated either way.
pub trait Real:
    Copy
    + ValueOf
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + AddAssign<f64>
    + SubAssign<f64>
    + MulAssign<f64>
    + DivAssign<f64>
{
    /// A constant in the same context as `self` (for variables, a constant
    /// node on the same tape).
    fn lift(&self, c: f64) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn square(self) -> Self;
    fn powf(self, exponent: f64) -> Self;
    fn pow(self, exponent: Self) -> Self;
}

impl Real for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn square(self) -> Self {
        self * self
    }
    fn powf(self, exponent: f64) -> Self {
        f64::powf(self, exponent)
    }
    fn pow(self, exponent: Self) -> Self {
        f64::powf(self, exponent)
    }
}

impl<'t> Real for Var<'t> {
    fn lift(&self, c: f64) -> Self {
        self.tape.constant(c)
    }
    fn ln(self) -> Self {
        crate::functions::log(self)
    }
    fn exp(self) -> Self {
        crate::functions::exp(self)
    }
    fn sqrt(self) -> Self {
        crate::functions::sqrt(self)
    }
    fn square(self) -> Self {
        crate::functions::square(self)
    }
    fn powf(self, exponent: f64) -> Self {
        crate::functions::pow(self, exponent)
    }
    fn pow(self, exponent: Self) -> Self {
        crate::functions::pow(self, exponent)
    }
}
