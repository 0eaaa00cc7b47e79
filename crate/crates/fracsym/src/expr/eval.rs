//! Pointwise numeric evaluation of expressions.

use std::collections::BTreeMap;

use super::{Const, Expr, ExprError, Func};
use crate::special;

/// Variable bindings for evaluation. Extra bindings are ignored; a missing
/// binding for a free variable is an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Bindings {
        Bindings(BTreeMap::new())
    }

    pub fn of(pairs: &[(&str, f64)]) -> Bindings {
        Bindings(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }
}

impl Expr {
    /// Evaluate at a point. All free variables must be bound.
    pub fn evaluate(&self, bindings: &Bindings) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Const(Const::Rational(r)) => r.to_f64(),
            Expr::Const(Const::Decimal(x)) => *x,
            Expr::Var(v) => bindings
                .get(v)
                .ok_or_else(|| ExprError::UnboundVariable(v.clone()))?,
            Expr::Sum(terms) => {
                let mut s = 0.0;
                for t in terms {
                    s += t.evaluate(bindings)?;
                }
                s
            }
            Expr::Product(factors) => {
                let mut p = 1.0;
                for x in factors {
                    p *= x.evaluate(bindings)?;
                }
                p
            }
            Expr::Power(base, exp) => {
                let b = base.evaluate(bindings)?;
                let e = exp.evaluate(bindings)?;
                if b == 0.0 && e < 0.0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                let r = b.powf(e);
                if r.is_nan() && b.is_finite() && e.is_finite() {
                    return Err(ExprError::Domain(format!(
                        "{b} raised to non-integer power {e}"
                    )));
                }
                r
            }
            Expr::Neg(inner) => -inner.evaluate(bindings)?,
            Expr::Apply(f, arg) => {
                let a = arg.evaluate(bindings)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(ExprError::Domain(format!("log of non-positive {a}")));
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(ExprError::Domain(format!("sqrt of negative {a}")));
                        }
                        a.sqrt()
                    }
                    Func::Gamma => {
                        if let Some(k) = special::nearest_integer(a) {
                            if k <= 0 {
                                return Err(ExprError::Domain(format!(
                                    "gamma at non-positive integer {a}"
                                )));
                            }
                        }
                        special::gamma(a)
                    }
                    Func::Erf => special::erf(a),
                }
            }
        })
    }
}
