//! Exact symbolic differentiation. No floating-point arithmetic is introduced
//! beyond constants already present in the tree.

use super::{Expr, ExprError, Func};

impl Expr {
    /// n-th symbolic partial derivative with respect to `var`.
    ///
    /// The derivative of an expression free of `var` is the zero constant.
    /// Differentiating `gamma` with a `var`-dependent argument is not
    /// expressible in the function set and reports an error.
    pub fn differentiate(&self, var: &str, n: usize) -> Result<Expr, ExprError> {
        let mut e = self.clone();
        for _ in 0..n {
            e = e.d(var)?;
        }
        Ok(e)
    }

    fn d(&self, var: &str) -> Result<Expr, ExprError> {
        Ok(match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => {
                if v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Sum(terms) => {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    out.push(t.d(var)?);
                }
                Expr::sum(out)
            }
            Expr::Product(factors) => {
                // Leibniz: sum over factors of (d factor_i) * rest.
                let mut out = Vec::new();
                for (i, fi) in factors.iter().enumerate() {
                    if !fi.contains_var(var) {
                        continue;
                    }
                    let dfi = fi.d(var)?;
                    let mut term = vec![dfi];
                    for (j, fj) in factors.iter().enumerate() {
                        if j != i {
                            term.push(fj.clone());
                        }
                    }
                    out.push(Expr::product(term));
                }
                Expr::sum(out)
            }
            Expr::Power(base, exp) => {
                let b = base.as_ref();
                let e = exp.as_ref();
                match (b.contains_var(var), e.contains_var(var)) {
                    (false, false) => Expr::zero(),
                    (true, false) => {
                        // e · b^(e-1) · b'
                        let em1 = Expr::sub(e.clone(), Expr::one());
                        Expr::product(vec![e.clone(), Expr::pow(b.clone(), em1), b.d(var)?])
                    }
                    (false, true) => {
                        // b^e · log(b) · e'
                        Expr::product(vec![
                            Expr::pow(b.clone(), e.clone()),
                            Expr::apply(Func::Log, b.clone()),
                            e.d(var)?,
                        ])
                    }
                    (true, true) => {
                        // b^e (e' log b + e b'/b)
                        let t1 = Expr::product(vec![e.d(var)?, Expr::apply(Func::Log, b.clone())]);
                        let t2 = Expr::product(vec![
                            e.clone(),
                            b.d(var)?,
                            Expr::pow(b.clone(), Expr::int(-1)),
                        ]);
                        Expr::product(vec![Expr::pow(b.clone(), e.clone()), Expr::sum(vec![t1, t2])])
                    }
                }
            }
            Expr::Neg(inner) => Expr::neg(inner.d(var)?),
            Expr::Apply(f, arg) => {
                if !arg.contains_var(var) {
                    return Ok(Expr::zero());
                }
                let da = arg.d(var)?;
                let a = arg.as_ref().clone();
                let outer = match f {
                    Func::Exp => Expr::apply(Func::Exp, a),
                    Func::Log => Expr::pow(a, Expr::int(-1)),
                    Func::Sin => Expr::apply(Func::Cos, a),
                    Func::Cos => Expr::neg(Expr::apply(Func::Sin, a)),
                    // d sqrt(a) = (1/2) a^(-1/2)
                    Func::Sqrt => {
                        Expr::product(vec![Expr::rat(1, 2), Expr::pow(a, Expr::rat(-1, 2))])
                    }
                    // d erf(a) = 2/Γ(1/2) · exp(-a²); Γ(1/2) = √π stays exact.
                    Func::Erf => Expr::product(vec![
                        Expr::int(2),
                        Expr::pow(
                            Expr::apply(Func::Gamma, Expr::rat(1, 2)),
                            Expr::int(-1),
                        ),
                        Expr::apply(Func::Exp, Expr::neg(Expr::pow(a, Expr::int(2)))),
                    ]),
                    Func::Gamma => {
                        return Err(ExprError::UnsupportedDerivative(
                            "gamma with an argument depending on the differentiation variable"
                                .into(),
                        ))
                    }
                };
                Expr::product(vec![outer, da])
            }
        })
    }
}
