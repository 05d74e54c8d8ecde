//! Affine expressions over declared conic variables.
//!
//! An expression is a constant plus scalar terms `coef * v` and trace
//! terms `Tr(C * H)` with Hermitian coefficient `C`. Expressions are
//! affine by construction; there is no way to form a product of two
//! variables, so "quadratic expression in a linear slot" is rejected at
//! the type level rather than at runtime.

use super::VarId;
use crate::CMat;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub(crate) constant: f64,
    pub(crate) scalar_terms: Vec<(VarId, f64)>,
    pub(crate) trace_terms: Vec<(VarId, CMat)>,
}

impl LinExpr {
    pub fn constant(v: f64) -> LinExpr {
        LinExpr {
            constant: v,
            ..Default::default()
        }
    }

    /// `coef * var` for a scalar variable.
    pub fn scalar(var: VarId, coef: f64) -> LinExpr {
        LinExpr {
            scalar_terms: vec![(var, coef)],
            ..Default::default()
        }
    }

    /// `Tr(coef * var)` for a Hermitian variable; `coef` must be Hermitian.
    pub fn trace(var: VarId, coef: CMat) -> LinExpr {
        LinExpr {
            trace_terms: vec![(var, coef)],
            ..Default::default()
        }
    }

    pub fn add_scalar(mut self, var: VarId, coef: f64) -> LinExpr {
        self.scalar_terms.push((var, coef));
        self
    }

    pub fn add_trace(mut self, var: VarId, coef: CMat) -> LinExpr {
        self.trace_terms.push((var, coef));
        self
    }

    pub fn add_const(mut self, v: f64) -> LinExpr {
        self.constant += v;
        self
    }

    pub fn is_constant(&self) -> bool {
        self.scalar_terms.is_empty() && self.trace_terms.is_empty()
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.constant += rhs.constant;
        self.scalar_terms.extend(rhs.scalar_terms);
        self.trace_terms.extend(rhs.trace_terms);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, rhs: f64) -> LinExpr {
        self.constant *= rhs;
        for t in &mut self.scalar_terms {
            t.1 *= rhs;
        }
        for t in &mut self.trace_terms {
            t.1 *= crate::C64::from(rhs);
        }
        self
    }
}
