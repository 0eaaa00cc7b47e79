//! Expression language: parsing, printing, exact symbolic differentiation and
//! pointwise numeric evaluation.
//!
//! Trees are canonicalized on construction: nested sums/products are
//! flattened, commutative children are sorted by a stable structural key,
//! constants are folded, and constant multiples of structurally identical
//! terms are merged. Negation is represented canonically as a `-1` constant
//! factor, so `Neg` never survives canonicalization. Only these light rules
//! are applied; there is no general rewriting.

mod deriv;
mod eval;
mod parser;

pub use eval::Bindings;
pub use parser::parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Errors from the expression layer.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported derivative: {0}")]
    UnsupportedDerivative(String),
}

/// Elementary functions of the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Gamma,
    Erf,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Gamma => "gamma",
            Func::Erf => "erf",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "gamma" => Func::Gamma,
            "erf" => Func::Erf,
            _ => return None,
        })
    }
}

/// Exact rational with `i64` parts; denominator positive, fraction reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rat {
    num: i64,
    den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    pub fn new(num: i64, den: i64) -> Rat {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Rat { num: sign * num / g, den: sign * den / g }
    }

    pub fn int(n: i64) -> Rat {
        Rat { num: n, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }

    fn from_i128(num: i128, den: i128) -> Option<Rat> {
        let sign = if den < 0 { -1 } else { 1 };
        let g = {
            let (mut a, mut b) = (num.abs(), den.abs());
            while b != 0 {
                let t = a % b;
                a = b;
                b = t;
            }
            a.max(1)
        };
        let (n, d) = (sign * num / g, sign * den / g);
        if n >= i64::MIN as i128 && n <= i64::MAX as i128 && d <= i64::MAX as i128 {
            Some(Rat { num: n as i64, den: d as i64 })
        } else {
            None
        }
    }

    pub fn checked_add(self, other: Rat) -> Option<Rat> {
        let num = self.num as i128 * other.den as i128 + other.num as i128 * self.den as i128;
        Rat::from_i128(num, self.den as i128 * other.den as i128)
    }

    pub fn checked_mul(self, other: Rat) -> Option<Rat> {
        Rat::from_i128(
            self.num as i128 * other.num as i128,
            self.den as i128 * other.den as i128,
        )
    }

    pub fn checked_pow(self, k: i64) -> Option<Rat> {
        if k.unsigned_abs() > 512 {
            return None;
        }
        let mut acc = Rat::int(1);
        for _ in 0..k.unsigned_abs() {
            acc = acc.checked_mul(self)?;
        }
        if k < 0 {
            if acc.num == 0 {
                return None;
            }
            acc = Rat::new(acc.den, acc.num);
        }
        Some(acc)
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Rat) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Rat) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Numeric constant: exact rational when it came from integer/ratio literals,
/// IEEE double otherwise. Rational arithmetic falls back to decimal on
/// overflow instead of wrapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Const {
    Rational(Rat),
    Decimal(f64),
}

impl Const {
    pub fn zero() -> Const {
        Const::Rational(Rat::int(0))
    }

    pub fn one() -> Const {
        Const::Rational(Rat::int(1))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Const::Rational(r) => r.to_f64(),
            Const::Decimal(x) => x,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Const::Rational(r) => r.num == 0,
            Const::Decimal(x) => x == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Const::Rational(r) => r.num == 1 && r.den == 1,
            Const::Decimal(x) => x == 1.0,
        }
    }

    /// Integer value when the constant is exactly an integer.
    pub fn as_integer(self) -> Option<i64> {
        match self {
            Const::Rational(r) if r.den == 1 => Some(r.num),
            Const::Decimal(x) if x.fract() == 0.0 && x.abs() < 2e18 => Some(x as i64),
            _ => None,
        }
    }

    pub fn add(self, other: Const) -> Const {
        match (self, other) {
            (Const::Rational(a), Const::Rational(b)) => match a.checked_add(b) {
                Some(r) => Const::Rational(r),
                None => Const::Decimal(a.to_f64() + b.to_f64()),
            },
            _ => Const::Decimal(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul(self, other: Const) -> Const {
        match (self, other) {
            (Const::Rational(a), Const::Rational(b)) => match a.checked_mul(b) {
                Some(r) => Const::Rational(r),
                None => Const::Decimal(a.to_f64() * b.to_f64()),
            },
            _ => Const::Decimal(self.to_f64() * other.to_f64()),
        }
    }

    pub fn neg(self) -> Const {
        match self {
            Const::Rational(r) => Const::Rational(Rat { num: -r.num, den: r.den }),
            Const::Decimal(x) => Const::Decimal(-x),
        }
    }

    fn is_negative(self) -> bool {
        match self {
            Const::Rational(r) => r.num < 0,
            Const::Decimal(x) => x < 0.0,
        }
    }

    fn cmp_key(&self, other: &Const) -> Ordering {
        match (self, other) {
            (Const::Rational(a), Const::Rational(b)) => a.cmp(b),
            _ => self
                .to_f64()
                .total_cmp(&other.to_f64())
                .then_with(|| self.kind_rank().cmp(&other.kind_rank())),
        }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Const::Rational(_) => 0,
            Const::Decimal(_) => 1,
        }
    }
}

/// Symbolic expression tree. See the module docs for the canonical form.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Const),
    Var(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, Box<Expr>),
    /// Present only transiently; `Expr::neg` folds it into a constant factor.
    Neg(Box<Expr>),
    Apply(Func, Box<Expr>),
}

impl Eq for Expr {}

impl Ord for Expr {
    fn cmp(&self, other: &Expr) -> Ordering {
        fn rank(e: &Expr) -> u8 {
            match e {
                Expr::Const(_) => 0,
                Expr::Var(_) => 1,
                Expr::Power(_, _) => 2,
                Expr::Apply(_, _) => 3,
                Expr::Neg(_) => 4,
                Expr::Product(_) => 5,
                Expr::Sum(_) => 6,
            }
        }
        rank(self).cmp(&rank(other)).then_with(|| match (self, other) {
            (Expr::Const(a), Expr::Const(b)) => a.cmp_key(b),
            (Expr::Var(a), Expr::Var(b)) => a.cmp(b),
            (Expr::Power(b1, e1), Expr::Power(b2, e2)) => {
                b1.cmp(b2).then_with(|| e1.cmp(e2))
            }
            (Expr::Apply(f1, a1), Expr::Apply(f2, a2)) => {
                f1.cmp(f2).then_with(|| a1.cmp(a2))
            }
            (Expr::Neg(a), Expr::Neg(b)) => a.cmp(b),
            (Expr::Product(a), Expr::Product(b)) | (Expr::Sum(a), Expr::Sum(b)) => {
                a.len().cmp(&b.len()).then_with(|| a.cmp(b))
            }
            _ => Ordering::Equal,
        })
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Expr) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(Const::Rational(Rat::int(n)))
    }

    pub fn rat(num: i64, den: i64) -> Expr {
        Expr::Const(Const::Rational(Rat::new(num, den)))
    }

    pub fn dec(x: f64) -> Expr {
        assert!(x.is_finite(), "non-finite constant");
        Expr::Const(Const::Decimal(x))
    }

    /// A constant that stays exact when `x` is a small integer.
    pub fn num(x: f64) -> Expr {
        if x.fract() == 0.0 && x.abs() < 1e15 {
            Expr::int(x as i64)
        } else {
            Expr::dec(x)
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    pub fn as_const(&self) -> Option<Const> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Canonical sum. Flattens, folds constants, merges constant multiples of
    /// identical cores, sorts.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut const_acc = Const::zero();
        let mut cores: BTreeMap<Expr, Const> = BTreeMap::new();
        let mut stack: Vec<Expr> = terms;
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t {
                Expr::Sum(children) => stack.extend(children.into_iter().rev()),
                Expr::Neg(inner) => stack.push(Expr::neg(*inner)),
                Expr::Const(c) => const_acc = const_acc.add(c),
                other => {
                    let (coeff, core) = split_coefficient(other);
                    let entry = cores.entry(core).or_insert_with(Const::zero);
                    *entry = entry.add(coeff);
                }
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(cores.len() + 1);
        for (core, coeff) in cores {
            if coeff.is_zero() {
                continue;
            }
            if coeff.is_one() {
                out.push(core);
            } else {
                out.push(Expr::product(vec![Expr::Const(coeff), core]));
            }
        }
        if !const_acc.is_zero() || out.is_empty() {
            out.push(Expr::Const(const_acc));
        }
        out.sort();
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Sum(out),
        }
    }

    /// Canonical product. Flattens, folds constants, distributes over sum
    /// factors (products of sums normalize to sums of products), merges
    /// constant exponents of identical bases, sorts with the constant first.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut const_acc = Const::one();
        let mut flat: Vec<Expr> = Vec::new();
        let mut stack: Vec<Expr> = factors;
        stack.reverse();
        while let Some(f) = stack.pop() {
            match f {
                Expr::Product(children) => stack.extend(children.into_iter().rev()),
                Expr::Neg(inner) => {
                    const_acc = const_acc.mul(Const::one().neg());
                    stack.push(*inner);
                }
                Expr::Const(c) => const_acc = const_acc.mul(c),
                other => flat.push(other),
            }
        }
        if const_acc.is_zero() {
            // Keep the constant kind (a decimal zero stays decimal).
            return Expr::Const(const_acc);
        }
        // Distribute over the first sum factor; recursion handles the rest.
        if let Some(pos) = flat.iter().position(|f| matches!(f, Expr::Sum(_))) {
            let Expr::Sum(terms) = flat.remove(pos) else { unreachable!() };
            let out_terms = terms
                .into_iter()
                .map(|t| {
                    let mut fs = Vec::with_capacity(flat.len() + 2);
                    fs.push(Expr::Const(const_acc));
                    fs.push(t);
                    fs.extend(flat.iter().cloned());
                    Expr::product(fs)
                })
                .collect();
            return Expr::sum(out_terms);
        }
        let mut bases: BTreeMap<Expr, Const> = BTreeMap::new();
        let mut opaque: Vec<Expr> = Vec::new();
        for f in flat {
            match f {
                Expr::Power(base, exp) => match exp.as_const() {
                    Some(c) => {
                        let entry = bases.entry(*base).or_insert_with(Const::zero);
                        *entry = entry.add(c);
                    }
                    None => opaque.push(Expr::Power(base, exp)),
                },
                other => {
                    let entry = bases.entry(other).or_insert_with(Const::zero);
                    *entry = entry.add(Const::one());
                }
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(bases.len() + opaque.len() + 1);
        for (base, exp) in bases {
            if exp.is_zero() {
                continue;
            }
            if exp.is_one() {
                out.push(base);
            } else {
                out.push(Expr::pow(base, Expr::Const(exp)));
            }
        }
        out.extend(opaque);
        out.retain(|f| !f.is_one());
        if out.iter().any(|f| f.is_zero()) {
            return Expr::zero();
        }
        out.sort();
        if !const_acc.is_one() {
            out.insert(0, Expr::Const(const_acc));
        }
        match out.len() {
            0 => Expr::Const(const_acc),
            1 => out.pop().unwrap(),
            _ => Expr::Product(out),
        }
    }

    /// Canonical power with the light folds described in the module docs.
    pub fn pow(base: Expr, exp: Expr) -> Expr {
        if exp.is_zero() {
            return Expr::one();
        }
        if exp.is_one() {
            return base;
        }
        if base.is_one() {
            return Expr::one();
        }
        if let (Some(b), Some(e)) = (base.as_const(), exp.as_const()) {
            if b.is_zero() {
                if let Some(k) = e.as_integer() {
                    if k > 0 {
                        return Expr::zero();
                    }
                } else if e.to_f64() > 0.0 {
                    return Expr::zero();
                }
            }
            match (b, e) {
                (Const::Rational(rb), ce) => {
                    if let Some(k) = ce.as_integer() {
                        if let Some(r) = rb.checked_pow(k) {
                            return Expr::Const(Const::Rational(r));
                        }
                        let v = rb.to_f64().powi(k.clamp(-1000, 1000) as i32);
                        if v.is_finite() {
                            return Expr::dec(v);
                        }
                    }
                    // rational ^ non-integer: keep symbolic to preserve exactness
                }
                (Const::Decimal(db), ce) => {
                    let v = db.powf(ce.to_f64());
                    if v.is_finite() {
                        return Expr::dec(v);
                    }
                }
            }
        }
        // (a·b·…)^k -> a^k·b^k·… for integer exponents
        if let Expr::Product(factors) = &base {
            if let Some(k) = exp.as_const().and_then(|c| c.as_integer()) {
                return Expr::product(
                    factors
                        .iter()
                        .map(|f| Expr::pow(f.clone(), Expr::int(k)))
                        .collect(),
                );
            }
        }
        // (b^c)^k -> b^(c·k) for integer outer exponent
        if let Expr::Power(inner_base, inner_exp) = &base {
            if let Some(k) = exp.as_const().and_then(|c| c.as_integer()) {
                let new_exp = Expr::product(vec![(**inner_exp).clone(), Expr::int(k)]);
                return Expr::pow((**inner_base).clone(), new_exp);
            }
        }
        Expr::Power(Box::new(base), Box::new(exp))
    }

    /// Canonical negation: a `-1` constant factor.
    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(c.neg()),
            other => Expr::product(vec![Expr::int(-1), other]),
        }
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        Expr::Apply(f, Box::new(arg))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, Expr::neg(b)])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::product(vec![a, Expr::pow(b, Expr::int(-1))])
    }

    /// Free variables, sorted.
    pub fn free_vars(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Expr::Power(b, e) => {
                b.collect_vars(out);
                e.collect_vars(out);
            }
            Expr::Neg(x) => x.collect_vars(out),
            Expr::Apply(_, a) => a.collect_vars(out),
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == name,
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().any(|x| x.contains_var(name)),
            Expr::Power(b, e) => b.contains_var(name) || e.contains_var(name),
            Expr::Neg(x) => x.contains_var(name),
            Expr::Apply(_, a) => a.contains_var(name),
        }
    }

    /// Replace every occurrence of variable `name` by `replacement`,
    /// re-canonicalizing on the way up.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => {
                if v == name {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Sum(xs) => Expr::sum(xs.iter().map(|x| x.substitute(name, replacement)).collect()),
            Expr::Product(xs) => {
                Expr::product(xs.iter().map(|x| x.substitute(name, replacement)).collect())
            }
            Expr::Power(b, e) => Expr::pow(
                b.substitute(name, replacement),
                e.substitute(name, replacement),
            ),
            Expr::Neg(x) => Expr::neg(x.substitute(name, replacement)),
            Expr::Apply(f, a) => Expr::apply(*f, a.substitute(name, replacement)),
        }
    }

    /// Number of nodes; used as a growth guard by series evaluators.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Sum(xs) | Expr::Product(xs) => {
                1 + xs.iter().map(Expr::node_count).sum::<usize>()
            }
            Expr::Power(b, e) => 1 + b.node_count() + e.node_count(),
            Expr::Neg(x) | Expr::Apply(_, x) => 1 + x.node_count(),
        }
    }
}

/// Splits a (canonical, non-Sum) term into a constant coefficient and its
/// core, for like-term merging.
fn split_coefficient(e: Expr) -> (Const, Expr) {
    match e {
        Expr::Product(mut factors) => {
            if let Some(Expr::Const(c)) = factors.first().cloned() {
                factors.remove(0);
                let core = if factors.len() == 1 {
                    factors.pop().unwrap()
                } else {
                    Expr::Product(factors)
                };
                (c, core)
            } else {
                (Const::one(), Expr::Product(factors))
            }
        }
        other => (Const::one(), other),
    }
}

// -------------------------------------------------------------------------
// Printing. `parse(print(e))` must reproduce `e` for canonical trees.
// -------------------------------------------------------------------------

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f, Prec::Sum)
    }
}

#[derive(PartialEq, PartialOrd, Clone, Copy)]
enum Prec {
    Sum,
    Product,
    Power,
    Atom,
}

fn const_needs_parens(c: Const, ctx: Prec) -> bool {
    match c {
        Const::Rational(r) => {
            (r.den != 1 && ctx >= Prec::Power) || (r.num < 0 && ctx >= Prec::Product)
        }
        Const::Decimal(x) => x < 0.0 && ctx >= Prec::Product,
    }
}

fn write_const(c: Const, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match c {
        Const::Rational(r) => {
            if r.den == 1 {
                write!(f, "{}", r.num)
            } else {
                write!(f, "{}/{}", r.num, r.den)
            }
        }
        Const::Decimal(x) => write!(f, "{:?}", x),
    }
}

/// Leading constant of a term, when the term is a constant or a product that
/// starts with one. Used to render `a - b` instead of `a + -1*b`.
fn leading_const(e: &Expr) -> Option<Const> {
    match e {
        Expr::Const(c) => Some(*c),
        Expr::Product(fs) => fs.first().and_then(|h| h.as_const()),
        _ => None,
    }
}

fn negate_leading(e: &Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(c.neg()),
        Expr::Product(fs) => {
            let mut fs = fs.clone();
            if let Some(Expr::Const(c)) = fs.first().cloned() {
                fs[0] = Expr::Const(c.neg());
            }
            Expr::product(fs)
        }
        other => Expr::neg(other.clone()),
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>, ctx: Prec) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if const_needs_parens(*c, ctx) {
                write!(f, "(")?;
                write_const(*c, f)?;
                write!(f, ")")
            } else {
                write_const(*c, f)
            }
        }
        Expr::Var(v) => write!(f, "{v}"),
        Expr::Apply(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(arg, f, Prec::Sum)?;
            write!(f, ")")
        }
        Expr::Sum(terms) => {
            let parens = ctx > Prec::Sum;
            if parens {
                write!(f, "(")?;
            }
            for (i, t) in terms.iter().enumerate() {
                if i == 0 {
                    write_expr(t, f, Prec::Sum)?;
                } else if leading_const(t).map_or(false, Const::is_negative) {
                    write!(f, " - ")?;
                    write_expr(&negate_leading(t), f, Prec::Product)?;
                } else {
                    write!(f, " + ")?;
                    write_expr(t, f, Prec::Product)?;
                }
            }
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Product(factors) => {
            let parens = ctx > Prec::Product;
            if parens {
                write!(f, "(")?;
            }
            let mut rest: &[Expr] = factors;
            // A leading -1 prints as a bare minus sign.
            if let Some(Expr::Const(c)) = factors.first() {
                if matches!(c, Const::Rational(r) if r.num == -1 && r.den == 1) {
                    write!(f, "-")?;
                    rest = &factors[1..];
                }
            }
            for (i, x) in rest.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_expr(x, f, Prec::Power)?;
            }
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Power(base, exp) => {
            let parens = ctx > Prec::Power;
            if parens {
                write!(f, "(")?;
            }
            match base.as_ref() {
                Expr::Power(_, _) => {
                    write!(f, "(")?;
                    write_expr(base, f, Prec::Sum)?;
                    write!(f, ")")?;
                }
                _ => write_expr(base, f, Prec::Atom)?,
            }
            write!(f, "^")?;
            // The exponent of `^` parses at factor level, so negated or
            // composite exponents need parentheses only below that level.
            match exp.as_ref() {
                Expr::Const(c) if const_needs_parens(*c, Prec::Power) => {
                    write!(f, "(")?;
                    write_const(*c, f)?;
                    write!(f, ")")
                }
                _ => write_expr(exp, f, Prec::Power),
            }
        }
        Expr::Neg(inner) => {
            write!(f, "-")?;
            write_expr(inner, f, Prec::Power)
        }
    }
}

#[cfg(test)]
mod tests;
