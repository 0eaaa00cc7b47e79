//! Riemann-Liouville operators of one and several variables on symbolic
//! functions, by truncated series and by quadrature.
//!
//! The two evaluators are deliberately independent so they can serve as
//! oracles for each other:
//!
//! * [`rl_series`] truncates the expansion of the operator into classical
//!   derivatives with Gamma-weighted coefficients
//!   `Σ_k C(p,k) (x-a)^(k-p) / Γ(k-p+1) · f^(k)(x)`.
//! * [`rl_quadrature`] evaluates the defining integro-differential form. For
//!   `p > 0` it uses the exact decomposition into boundary terms plus a
//!   weakly singular integral of the `(⟨p⟩+1)`-th symbolic derivative,
//!   avoiding numeric differentiation through the integral:
//!   `Σ_{j=0..⟨p⟩} f^(j)(a) (x-a)^(j-p)/Γ(j-p+1)
//!    + (1/Γ(⟨p⟩+1-p)) ∫_a^x (x-τ)^(⟨p⟩-p) f^(⟨p⟩+1)(τ) dτ`.
//!
//! The quadrature path is authoritative for `p < 0`; the series there is a
//! formal expansion and is flagged as heuristic.

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError};
use crate::quad::{GaussJacobi, QuadError};
use crate::special::{bracket, gen_binomial, nearest_integer, recip_gamma, Order};

/// Default node count for quadrature rules.
pub const DEFAULT_NODES: usize = 64;

/// Hard cap on symbolic derivative size inside series loops.
const MAX_DERIV_NODES: usize = 500_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FracError {
    #[error("evaluation point {x} must lie strictly above the terminal {a} on axis {axis}")]
    TerminalViolation { axis: String, x: f64, a: f64 },
    #[error("order {0} is a nonnegative integer; use plain differentiation instead")]
    IntegerOrder(f64),
    #[error("series not convergent at this point (terms growing at k={k} on axis {axis})")]
    SeriesDiverged { axis: String, k: usize },
    #[error("symbolic derivative exceeded {limit} nodes; series evaluation aborted")]
    ExpressionTooLarge { limit: usize },
    #[error("operator expects {expected} fractional axes, got {got}")]
    AxisCount { expected: &'static str, got: usize },
    #[error("duplicate axis name `{0}` in operator spec")]
    DuplicateAxis(String),
    #[error("power-rule evaluation needs exponent q > -1, got q={0}")]
    PowerExponent(f64),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// One axis of a mixed RL operator: variable name, order and lower terminal.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AxisSpec {
    pub axis: String,
    pub order: f64,
    pub terminal: f64,
}

impl AxisSpec {
    pub fn new(axis: impl Into<String>, order: f64, terminal: f64) -> AxisSpec {
        AxisSpec { axis: axis.into(), order, terminal }
    }
}

/// Orders and terminals of a (possibly mixed) RL operator.
///
/// Axis names are distinct; the standing assumption that all operators on one
/// axis of an equation share the same terminal is enforced at the equation
/// level.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FracSpec {
    axes: Vec<AxisSpec>,
}

impl FracSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Result<FracSpec, FracError> {
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.axis == a.axis) {
                return Err(FracError::DuplicateAxis(a.axis.clone()));
            }
        }
        Ok(FracSpec { axes })
    }

    pub fn single(axis: impl Into<String>, order: f64, terminal: f64) -> FracSpec {
        FracSpec { axes: vec![AxisSpec::new(axis, order, terminal)] }
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }
}

/// Truncation control for series evaluators: per-axis term budget, relative
/// tail tolerance, and the number of consecutive small terms that counts as
/// convergence.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub tail_tol: f64,
    pub small_run: usize,
}

impl Default for SeriesControl {
    fn default() -> SeriesControl {
        SeriesControl { max_terms: 40, tail_tol: 1e-10, small_run: 3 }
    }
}

impl SeriesControl {
    pub fn with_max_terms(mut self, k: usize) -> SeriesControl {
        self.max_terms = k.max(1);
        self
    }
}

/// Result of a truncated series evaluation: the value, the magnitude of the
/// last terms as a tail estimate, and whether the tail rule was met within
/// the budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeriesEval {
    pub value: f64,
    pub tail_estimate: f64,
    pub converged: bool,
}

/// Series coefficient `C(p,k) (x-a)^(k-p) / Γ(k-p+1)`.
pub fn series_coefficient(p: f64, a: f64, k: usize, x: f64) -> f64 {
    gen_binomial(p, k) * (x - a).powf(k as f64 - p) * recip_gamma(k as f64 - p + 1.0)
}

fn axis_value(at: &Bindings, axis: &str) -> Result<f64, FracError> {
    at.get(axis)
        .ok_or_else(|| FracError::Expr(ExprError::UnboundVariable(axis.to_string())))
}

fn check_terminal(spec: &AxisSpec, x: f64) -> Result<(), FracError> {
    if x <= spec.terminal {
        return Err(FracError::TerminalViolation {
            axis: spec.axis.clone(),
            x,
            a: spec.terminal,
        });
    }
    Ok(())
}

/// Cache of mixed symbolic derivatives of one expression, keyed by the
/// per-axis derivative counts.
struct DerivCache<'a> {
    base: &'a Expr,
    axes: Vec<String>,
    map: HashMap<Vec<usize>, Expr>,
}

impl<'a> DerivCache<'a> {
    fn new(base: &'a Expr, axes: Vec<String>) -> DerivCache<'a> {
        DerivCache { base, axes, map: HashMap::new() }
    }

    fn get(&mut self, key: &[usize]) -> Result<&Expr, FracError> {
        if !self.map.contains_key(key) {
            let e = if key.iter().all(|&k| k == 0) {
                self.base.clone()
            } else {
                let i = key.iter().position(|&k| k > 0).unwrap();
                let mut parent = key.to_vec();
                parent[i] -= 1;
                let p = self.get(&parent)?.clone();
                let d = p.differentiate(&self.axes[i], 1)?;
                if d.node_count() > MAX_DERIV_NODES {
                    return Err(FracError::ExpressionTooLarge { limit: MAX_DERIV_NODES });
                }
                d
            };
            self.map.insert(key.to_vec(), e);
        }
        Ok(&self.map[key])
    }
}

/// Enumerate compositions of `total` into `n` parts, each at most `cap`.
fn compositions(total: usize, n: usize, cap: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, n: usize, cap: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            if total <= cap {
                prefix.push(total);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for k in 0..=total.min(cap) {
            prefix.push(k);
            rec(total - k, n - 1, cap, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, n, cap, &mut Vec::new(), &mut out);
    out
}

/// Value of the (possibly mixed) RL operator as a truncated multi-sum over
/// classical derivatives.
///
/// For orders `p < 0` this is a formal expansion and should be treated as
/// heuristic; the quadrature evaluator is authoritative there.
pub fn rl_series(
    f: &Expr,
    spec: &FracSpec,
    at: &Bindings,
    ctl: &SeriesControl,
) -> Result<SeriesEval, FracError> {
    if spec.axes.is_empty() {
        return Err(FracError::AxisCount { expected: "at least 1", got: 0 });
    }
    let n = spec.axes.len();
    let mut xs = Vec::with_capacity(n);
    for ax in &spec.axes {
        let x = axis_value(at, &ax.axis)?;
        check_terminal(ax, x)?;
        xs.push(x);
    }
    let mut cache = DerivCache::new(f, spec.axes.iter().map(|a| a.axis.clone()).collect());

    let mut sum = 0.0;
    let mut small = 0usize;
    let mut grow = 0usize;
    let mut prev_mag = f64::INFINITY;
    let mut recent: Vec<f64> = Vec::new();
    let mut converged = false;

    let max_shell = ctl.max_terms * n;
    for s in 0..=max_shell {
        let mut shell_mag = 0.0;
        for key in compositions(s, n, ctl.max_terms) {
            let mut coeff = 1.0;
            for (i, ax) in spec.axes.iter().enumerate() {
                coeff *= series_coefficient(ax.order, ax.terminal, key[i], xs[i]);
            }
            if coeff == 0.0 {
                continue;
            }
            let d = cache.get(&key)?;
            let term = coeff * d.evaluate(at)?;
            sum += term;
            shell_mag += term.abs();
        }
        recent.push(shell_mag);
        if recent.len() > ctl.small_run {
            recent.remove(0);
        }
        if shell_mag <= ctl.tail_tol * (1.0 + sum.abs()) {
            small += 1;
            if small >= ctl.small_run {
                converged = true;
                break;
            }
        } else {
            small = 0;
        }
        if s > 10 && shell_mag > prev_mag && shell_mag > ctl.tail_tol * (1.0 + sum.abs()) {
            grow += 1;
            if grow >= ctl.small_run {
                return Err(FracError::SeriesDiverged { axis: spec.axes[0].axis.clone(), k: s });
            }
        } else {
            grow = 0;
        }
        prev_mag = shell_mag;
    }

    let tail_estimate = recent.iter().copied().fold(0.0, f64::max);
    Ok(SeriesEval { value: sum, tail_estimate, converged })
}

/// Nested quadrature evaluation over a list of axes. Nonnegative integer
/// orders reduce to plain symbolic differentiation.
fn nested_rl(
    f: &Expr,
    axes: &[AxisSpec],
    at: &Bindings,
    nodes: usize,
) -> Result<f64, FracError> {
    let Some(ax) = axes.first() else {
        return Ok(f.evaluate(at)?);
    };
    let rest = &axes[1..];
    let order = Order::classify(ax.order);
    if let Some(k) = nearest_integer(ax.order) {
        if k >= 0 {
            let d = f.differentiate(&ax.axis, k as usize)?;
            return nested_rl(&d, rest, at, nodes);
        }
    }
    debug_assert!(!order.is_integer() || ax.order < 0.0);
    let x = axis_value(at, &ax.axis)?;
    check_terminal(ax, x)?;

    let p = ax.order;
    let a = ax.terminal;
    let m = (bracket(p) + 1) as usize;
    let mut value = 0.0;
    if m > 0 {
        let at_terminal = at.clone().with(ax.axis.clone(), a);
        for j in 0..m {
            let rg = recip_gamma(j as f64 - p + 1.0);
            if rg == 0.0 {
                continue;
            }
            let dj = f.differentiate(&ax.axis, j)?;
            let fj = nested_rl(&dj, rest, &at_terminal, nodes)?;
            value += fj * (x - a).powf(j as f64 - p) * rg;
        }
    }
    let mu = (m as f64 - 1.0) - p; // ⟨p⟩ - p, in (-1, 0) for non-integer p > 0
    let dm = f.differentiate(&ax.axis, m)?;
    let rule = GaussJacobi::new(nodes.max(2), mu, 0.0)?;
    let integral = rule.integrate(a, x, |tau| {
        let at_tau = at.clone().with(ax.axis.clone(), tau);
        nested_rl(&dm, rest, &at_tau, nodes)
    })?;
    Ok(value + recip_gamma(m as f64 - p) * integral)
}

/// Single-axis RL operator by quadrature of the defining integral.
///
/// Errors on nonnegative integer orders (use plain differentiation) and on
/// evaluation points at or below the terminal.
pub fn rl_quadrature(
    f: &Expr,
    spec: &FracSpec,
    at: &Bindings,
    nodes: usize,
) -> Result<f64, FracError> {
    let [ax] = spec.axes.as_slice() else {
        return Err(FracError::AxisCount { expected: "exactly 1", got: spec.axes.len() });
    };
    if let Some(k) = nearest_integer(ax.order) {
        if k >= 0 {
            return Err(FracError::IntegerOrder(ax.order));
        }
    }
    nested_rl(f, &spec.axes, at, nodes)
}

/// Mixed RL operator evaluated by nesting the quadrature evaluator
/// axis-by-axis. For analytic `f` the result does not depend on the nesting
/// order. Integer orders on individual axes reduce to plain derivatives.
pub fn rl_mixed(f: &Expr, spec: &FracSpec, at: &Bindings, nodes: usize) -> Result<f64, FracError> {
    if spec.axes.len() < 2 {
        return Err(FracError::AxisCount { expected: "at least 2", got: spec.axes.len() });
    }
    nested_rl(f, &spec.axes, at, nodes)
}

/// `RL^p_0 x^q = Γ(q+1)/Γ(q-p+1) x^(q-p)` for terminal `a = 0`, `q > -1`.
pub fn rl_power(q: f64, p: f64, x: f64) -> Result<f64, FracError> {
    if q <= -1.0 {
        return Err(FracError::PowerExponent(q));
    }
    Ok(crate::special::gamma(q + 1.0) * recip_gamma(q - p + 1.0) * x.powf(q - p))
}

/// Decompose `f` as a finite sum `Σ c_j(other vars) · axis^(q_j)`; returns
/// `None` when `f` is not of that shape. Used to evaluate RL operators of
/// power-law profiles in closed form via [`rl_power`].
pub fn as_power_sum(f: &Expr, axis: &str) -> Option<Vec<(Expr, f64)>> {
    fn term_power(t: &Expr, axis: &str) -> Option<(Expr, f64)> {
        if !t.contains_var(axis) {
            return Some((t.clone(), 0.0));
        }
        match t {
            Expr::Var(v) if v == axis => Some((Expr::one(), 1.0)),
            Expr::Power(base, exp) => match (base.as_ref(), exp.as_const()) {
                (Expr::Var(v), Some(c)) if v == axis => Some((Expr::one(), c.to_f64())),
                _ => None,
            },
            Expr::Product(factors) => {
                let mut coeff = Vec::new();
                let mut q = 0.0;
                for fac in factors {
                    let (c, dq) = term_power(fac, axis)?;
                    if !c.is_one() {
                        coeff.push(c);
                    }
                    q += dq;
                }
                Some((Expr::product(coeff), q))
            }
            _ => None,
        }
    }
    let terms: Vec<&Expr> = match f {
        Expr::Sum(ts) => ts.iter().collect(),
        other => vec![other],
    };
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        out.push(term_power(t, axis)?);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;
    use approx::assert_relative_eq;

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn series_constant_half_order() {
        // RL^(1/2)_0 1 at x=4: only the k=0 term survives: x^(-1/2)/Γ(1/2).
        let f = parse("1").unwrap();
        let spec = FracSpec::single("x", 0.5, 0.0);
        let r = rl_series(&f, &spec, &Bindings::of(&[("x", 4.0)]), &ctl()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, 0.282_094_791_773_878_14, max_relative = 1e-12);
        // cross-check against the quadrature oracle
        let q = rl_quadrature(&f, &spec, &Bindings::of(&[("x", 4.0)]), 64).unwrap();
        assert_relative_eq!(r.value, q, max_relative = 1e-10);
    }

    #[test]
    fn series_linear_half_order() {
        // RL^(1/2)_0 x at x=1 equals 2/√π; also Γ(2)/Γ(3/2) x^(1/2).
        let f = parse("x").unwrap();
        let spec = FracSpec::single("x", 0.5, 0.0);
        let r = rl_series(&f, &spec, &Bindings::of(&[("x", 1.0)]), &ctl()).unwrap();
        assert_relative_eq!(r.value, 1.128_379_167_095_512_6, max_relative = 1e-12);
        let q = rl_quadrature(&f, &spec, &Bindings::of(&[("x", 1.0)]), 64).unwrap();
        assert_relative_eq!(r.value, q, max_relative = 1e-10);
    }

    #[test]
    fn series_integer_limit() {
        // p -> 1 reproduces d/dx x^2 = 2x at x = 3.
        let f = parse("x^2").unwrap();
        let spec = FracSpec::single("x", 1.0 - 1e-9, 0.0);
        let r = rl_series(&f, &spec, &Bindings::of(&[("x", 3.0)]), &ctl()).unwrap();
        assert_relative_eq!(r.value, 6.0, max_relative = 1e-4);
    }

    #[test]
    fn series_terminal_violation() {
        let f = parse("x").unwrap();
        let spec = FracSpec::single("x", 0.5, 0.0);
        assert!(matches!(
            rl_series(&f, &spec, &Bindings::of(&[("x", -1.0)]), &ctl()),
            Err(FracError::TerminalViolation { .. })
        ));
    }

    #[test]
    fn series_budget_exhaustion_is_flagged() {
        let f = parse("exp(x)").unwrap();
        let spec = FracSpec::single("x", 0.5, 0.0);
        let tight = SeriesControl { max_terms: 3, tail_tol: 1e-10, small_run: 3 };
        let r = rl_series(&f, &spec, &Bindings::of(&[("x", 1.5)]), &tight).unwrap();
        assert!(!r.converged);
        assert!(r.tail_estimate > 0.0);
    }

    #[test]
    fn quadrature_plain_integral() {
        // RL^(-1)_0 1 at x=2 is the plain integral, 2.
        let f = parse("1").unwrap();
        let spec = FracSpec::single("x", -1.0, 0.0);
        let v = rl_quadrature(&f, &spec, &Bindings::of(&[("x", 2.0)]), 32).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-13);
    }

    #[test]
    fn quadrature_power_function() {
        // RL^(1/2)_0 x^2 at 1 = Γ(3)/Γ(5/2).
        let f = parse("x^2").unwrap();
        let spec = FracSpec::single("x", 0.5, 0.0);
        let v = rl_quadrature(&f, &spec, &Bindings::of(&[("x", 1.0)]), 64).unwrap();
        assert_relative_eq!(v, 1.504_505_556_127_350_1, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_exponential_closed_form() {
        // RL^(1/2)_0 e^x at 1 = e·erf(1) + 1/√π.
        let f = parse("exp(x)").unwrap();
        let spec = FracSpec::single("x", 0.5, 0.0);
        let v = rl_quadrature(&f, &spec, &Bindings::of(&[("x", 1.0)]), 64).unwrap();
        assert_relative_eq!(v, 2.854_887_835_850_994_5, max_relative = 1e-11);
    }

    #[test]
    fn quadrature_rejects_integer_order() {
        let f = parse("x").unwrap();
        for p in [0.0, 1.0, 2.0] {
            let spec = FracSpec::single("x", p, 0.0);
            assert!(matches!(
                rl_quadrature(&f, &spec, &Bindings::of(&[("x", 1.0)]), 32),
                Err(FracError::IntegerOrder(_))
            ));
        }
    }

    #[test]
    fn mixed_separable_product() {
        // RL^(1/2,1/2) (x·y) at (1,1) = (2/√π)^2 = 4/π.
        let f = parse("x*y").unwrap();
        let spec = FracSpec::new(vec![
            AxisSpec::new("x", 0.5, 0.0),
            AxisSpec::new("y", 0.5, 0.0),
        ])
        .unwrap();
        let at = Bindings::of(&[("x", 1.0), ("y", 1.0)]);
        let v = rl_mixed(&f, &spec, &at, 48).unwrap();
        assert_relative_eq!(v, 1.273_239_544_735_162_7, max_relative = 1e-10);
        // the multi-axis series agrees
        let s = rl_series(&f, &spec, &at, &ctl()).unwrap();
        assert_relative_eq!(s.value, v, max_relative = 1e-9);
    }

    #[test]
    fn mixed_constant_two_orders() {
        // RL^(1/2,1/3) 1 at (1,1) = 1/Γ(1/2) · 1/Γ(2/3).
        let f = parse("1").unwrap();
        let spec = FracSpec::new(vec![
            AxisSpec::new("x", 0.5, 0.0),
            AxisSpec::new("y", 1.0 / 3.0, 0.0),
        ])
        .unwrap();
        let at = Bindings::of(&[("x", 1.0), ("y", 1.0)]);
        let v = rl_mixed(&f, &spec, &at, 48).unwrap();
        assert_relative_eq!(v, 0.416_647_300_150_786_7, max_relative = 1e-10);
    }

    #[test]
    fn mixed_axis_order_independence() {
        let f = parse("exp(x+y)").unwrap();
        let at = Bindings::of(&[("x", 0.8), ("y", 1.1)]);
        let xy = FracSpec::new(vec![
            AxisSpec::new("x", 0.5, 0.0),
            AxisSpec::new("y", 1.0 / 3.0, 0.0),
        ])
        .unwrap();
        let yx = FracSpec::new(vec![
            AxisSpec::new("y", 1.0 / 3.0, 0.0),
            AxisSpec::new("x", 0.5, 0.0),
        ])
        .unwrap();
        let a = rl_mixed(&f, &xy, &at, 48).unwrap();
        let b = rl_mixed(&f, &yx, &at, 48).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-8);
    }

    #[test]
    fn linearity_both_evaluators() {
        let f = parse("x^3").unwrap();
        let g = parse("sin(x)").unwrap();
        let combo = parse("2*x^3 - 3*sin(x)").unwrap();
        let spec = FracSpec::single("x", 0.5, 0.0);
        let at = Bindings::of(&[("x", 1.3)]);
        let qf = rl_quadrature(&f, &spec, &at, 64).unwrap();
        let qg = rl_quadrature(&g, &spec, &at, 64).unwrap();
        let qc = rl_quadrature(&combo, &spec, &at, 64).unwrap();
        assert_relative_eq!(qc, 2.0 * qf - 3.0 * qg, max_relative = 1e-10);
        let sf = rl_series(&f, &spec, &at, &ctl()).unwrap().value;
        let sg = rl_series(&g, &spec, &at, &ctl()).unwrap().value;
        let sc = rl_series(&combo, &spec, &at, &ctl()).unwrap().value;
        assert_relative_eq!(sc, 2.0 * sf - 3.0 * sg, max_relative = 1e-10);
    }

    #[test]
    fn power_sum_detection() {
        let f = parse("2*x^(1/2)/t + 3*x - 5").unwrap();
        let terms = as_power_sum(&f, "x").unwrap();
        assert_eq!(terms.len(), 3);
        let qs: Vec<f64> = terms.iter().map(|t| t.1).collect();
        assert!(qs.contains(&0.5) && qs.contains(&1.0) && qs.contains(&0.0));
        assert!(as_power_sum(&parse("exp(x)").unwrap(), "x").is_none());
        // power rule matches quadrature
        let spec = FracSpec::single("x", 0.5, 0.0);
        let at = Bindings::of(&[("x", 1.7)]);
        let direct = rl_quadrature(&parse("x^2").unwrap(), &spec, &at, 64).unwrap();
        assert_relative_eq!(direct, rl_power(2.0, 0.5, 1.7).unwrap(), max_relative = 1e-12);
    }
}
