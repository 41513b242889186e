//! Arithmetic expressions over argument variables, compiled to machines.

use std::fmt;

use crate::machine::{chi_pos, compose, constant, lift_arith, projection, ArithOp, FMachine, MachineError};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RealExpr {
    Const(Rational),
    Var(usize),
    Add(Box<RealExpr>, Box<RealExpr>),
    Sub(Box<RealExpr>, Box<RealExpr>),
    Mul(Box<RealExpr>, Box<RealExpr>),
    Neg(Box<RealExpr>),
    Min(Box<RealExpr>, Box<RealExpr>),
    Max(Box<RealExpr>, Box<RealExpr>),
    ChiPos(Box<RealExpr>),
}

impl RealExpr {
    pub fn constant(c: Rational) -> Self {
        Self::Const(c)
    }

    pub fn var(k: usize) -> Self {
        Self::Var(k)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Self, b: Self) -> Self {
        Self::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Self, b: Self) -> Self {
        Self::Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Self, b: Self) -> Self {
        Self::Mul(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Self) -> Self {
        Self::Neg(Box::new(a))
    }

    pub fn min(a: Self, b: Self) -> Self {
        Self::Min(Box::new(a), Box::new(b))
    }

    pub fn max(a: Self, b: Self) -> Self {
        Self::Max(Box::new(a), Box::new(b))
    }

    pub fn chi_pos(a: Self) -> Self {
        Self::ChiPos(Box::new(a))
    }

    /// One more than the largest variable index used, or 0 for closed
    /// expressions.
    pub fn min_arity(&self) -> usize {
        match self {
            Self::Const(_) => 0,
            Self::Var(k) => k + 1,
            Self::Neg(a) | Self::ChiPos(a) => a.min_arity(),
            Self::Add(a, b) | Self::Sub(a, b) | Self::Mul(a, b) | Self::Min(a, b) | Self::Max(a, b) => {
                a.min_arity().max(b.min_arity())
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Self::Const(_) | Self::Var(_) => 0,
            Self::Neg(a) | Self::ChiPos(a) => 1 + a.depth(),
            Self::Add(a, b) | Self::Sub(a, b) | Self::Mul(a, b) | Self::Min(a, b) | Self::Max(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

/// S-expression form, the same syntax the spec-file parser reads.
impl fmt::Display for RealExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Const(c) => write!(f, "(rat {} {})", c.numerator(), c.denominator()),
            Self::Var(k) => write!(f, "(var {k})"),
            Self::Add(a, b) => write!(f, "(add {a} {b})"),
            Self::Sub(a, b) => write!(f, "(sub {a} {b})"),
            Self::Mul(a, b) => write!(f, "(mul {a} {b})"),
            Self::Neg(a) => write!(f, "(neg {a})"),
            Self::Min(a, b) => write!(f, "(min {a} {b})"),
            Self::Max(a, b) => write!(f, "(max {a} {b})"),
            Self::ChiPos(a) => write!(f, "(chi-pos {a})"),
        }
    }
}

/// Compiles an expression into a machine of the given arity by composing
/// the arithmetic machines, projections, constants and `chi_pos`.
pub fn expr_to_machine(e: &RealExpr, arity: usize) -> Result<FMachine, MachineError> {
    if arity == 0 {
        return Err(MachineError::ZeroArity);
    }
    let binary = |op: ArithOp, a: &RealExpr, b: &RealExpr| -> Result<FMachine, MachineError> {
        compose(&lift_arith(op), &[expr_to_machine(a, arity)?, expr_to_machine(b, arity)?])
    };
    match e {
        RealExpr::Const(c) => constant(c.clone(), arity),
        RealExpr::Var(k) => projection(*k, arity),
        RealExpr::Add(a, b) => binary(ArithOp::Add, a, b),
        RealExpr::Sub(a, b) => binary(ArithOp::Sub, a, b),
        RealExpr::Mul(a, b) => binary(ArithOp::Mul, a, b),
        RealExpr::Min(a, b) => binary(ArithOp::Min, a, b),
        RealExpr::Max(a, b) => binary(ArithOp::Max, a, b),
        RealExpr::Neg(a) => compose(&lift_arith(ArithOp::Neg), &[expr_to_machine(a, arity)?]),
        RealExpr::ChiPos(a) => compose(&chi_pos(), &[expr_to_machine(a, arity)?]),
    }
}

/// `χ((x + 1 − y)(y − x))` over `(x, y)`: semi-decides `x < y < x + 1`.
pub fn band_expr() -> RealExpr {
    let (x, y) = (RealExpr::var(0), RealExpr::var(1));
    RealExpr::chi_pos(RealExpr::mul(
        RealExpr::sub(RealExpr::add(x.clone(), RealExpr::constant(Rational::one())), y.clone()),
        RealExpr::sub(y, x),
    ))
}
