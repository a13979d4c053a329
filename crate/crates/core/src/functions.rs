//! Transcendental and power functions.
//!
//! Every function records a single node holding only its operand (plus one
//! constant for mixed-type `pow`); partials are evaluated lazily during the
//! reverse sweep from the stored values. Domain problems propagate as IEEE
//! infinities and NaNs rather than errors.

use crate::tape::Rule;
use crate::var::Var;

pub fn log(a: Var<'_>) -> Var<'_> {
    a.unary(a.value().ln(), Rule::Log)
}

pub fn exp(a: Var<'_>) -> Var<'_> {
    a.unary(a.value().exp(), Rule::Exp)
}

pub fn sqrt(a: Var<'_>) -> Var<'_> {
    a.unary(a.value().sqrt(), Rule::Sqrt)
}

pub fn square(a: Var<'_>) -> Var<'_> {
    let v = a.value();
    a.unary(v * v, Rule::Square)
}

/// Exponentiation, with variable or constant base and exponent.
pub trait Pow<E> {
    type Output;
    fn pow(self, exponent: E) -> Self::Output;
}

impl<'t> Pow<Var<'t>> for Var<'t> {
    type Output = Var<'t>;
    fn pow(self, exponent: Var<'t>) -> Var<'t> {
        self.binary(exponent, Rule::Pow, f64::powf)
    }
}

impl<'t> Pow<f64> for Var<'t> {
    type Output = Var<'t>;
    fn pow(self, exponent: f64) -> Var<'t> {
        if exponent == 0.5 {
            return sqrt(self);
        }
        if exponent == 1.0 {
            return self;
        }
        if exponent == 2.0 {
            return square(self);
        }
        self.unary_with(self.value().powf(exponent), Rule::PowScalar, exponent)
    }
}

impl<'t> Pow<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn pow(self, exponent: Var<'t>) -> Var<'t> {
        exponent.unary_with(self.powf(exponent.value()), Rule::ScalarPow, self)
    }
}

impl Pow<f64> for f64 {
    type Output = f64;
    fn pow(self, exponent: f64) -> f64 {
        self.powf(exponent)
    }
}

pub fn pow<B: Pow<E>, E>(base: B, exponent: E) -> B::Output {
    base.pow(exponent)
}
