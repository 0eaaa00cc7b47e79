//! Truncated infinite-jet coordinates, total derivatives, the fractional
//! total derivative, and the expansion of a fractional equation into a chain
//! of classical relations.
//!
//! Jet coordinates are ordinary expression variables with conventional
//! names: `u` for the dependent variable and `u_<axes>` for derivatives,
//! where `<axes>` lists axis names in canonical (sorted) order, e.g. `u_x`,
//! `u_xx`, `u_tx`. Partial derivatives commute on analytic sections, so the
//! sorted form is the canonical one.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError};
use crate::fracop::{series_coefficient, FracError, FracSpec, SeriesControl, SeriesEval};
use crate::special::{gen_binomial, recip_gamma};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum JetError {
    #[error("jet truncation exceeded: expression needs derivative order {needed}, jet holds {available}")]
    Truncation { needed: usize, available: usize },
    #[error("axis `{0}` is not part of this jet space")]
    UnknownAxis(String),
    #[error("jet coordinate `{0}` is missing from the jet point")]
    MissingCoordinate(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Frac(#[from] FracError),
}

/// A multi-index over the axes of a jet space, kept sorted: derivatives
/// commute, so `(x, t)` and `(t, x)` name the same coordinate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn empty() -> MultiIndex {
        MultiIndex(Vec::new())
    }

    pub fn new(mut indices: Vec<usize>) -> MultiIndex {
        indices.sort_unstable();
        MultiIndex(indices)
    }

    /// |σ|, the total derivative order.
    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// Number of occurrences of axis `i`.
    pub fn count(&self, axis: usize) -> usize {
        self.0.iter().filter(|&&a| a == axis).count()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// σ + one more derivative along `axis`.
    pub fn plus(&self, axis: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v.push(axis);
        v.sort_unstable();
        MultiIndex(v)
    }

    /// Serialization key: sorted 1-based axis indices, comma separated;
    /// empty string for the base coordinate `u`.
    pub fn json_key(&self) -> String {
        self.0
            .iter()
            .map(|i| (i + 1).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Ordered axis names of a jet space; provides the coordinate naming scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct JetSpace {
    axes: Vec<String>,
}

impl JetSpace {
    pub fn new<S: Into<String>>(axes: Vec<S>) -> JetSpace {
        JetSpace { axes: axes.into_iter().map(Into::into).collect() }
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a == name)
    }

    /// Variable name of the jet coordinate `u^σ`.
    pub fn coord_name(&self, mi: &MultiIndex) -> String {
        if mi.order() == 0 {
            return "u".to_string();
        }
        let mut s = String::from("u_");
        for &i in mi.indices() {
            s.push_str(&self.axes[i]);
        }
        s
    }

    /// Inverse of [`coord_name`](Self::coord_name); greedy longest-match on
    /// axis names.
    pub fn parse_coord(&self, name: &str) -> Option<MultiIndex> {
        if name == "u" {
            return Some(MultiIndex::empty());
        }
        let rest = name.strip_prefix("u_")?;
        let mut indices = Vec::new();
        let mut pos = 0;
        while pos < rest.len() {
            let mut matched: Option<(usize, usize)> = None;
            for (i, ax) in self.axes.iter().enumerate() {
                if rest[pos..].starts_with(ax.as_str())
                    && matched.map_or(true, |(_, len)| ax.len() > len)
                {
                    matched = Some((i, ax.len()));
                }
            }
            let (i, len) = matched?;
            indices.push(i);
            pos += len;
        }
        Some(MultiIndex::new(indices))
    }

    /// Jet coordinates (including `u` itself) referenced by `g`.
    pub fn jet_coords_in(&self, g: &Expr) -> Vec<MultiIndex> {
        let mut out: Vec<MultiIndex> = g
            .free_vars()
            .iter()
            .filter_map(|v| self.parse_coord(v))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Highest derivative order among the jet coordinates of `g`.
    pub fn max_order_in(&self, g: &Expr) -> usize {
        self.jet_coords_in(g).iter().map(MultiIndex::order).max().unwrap_or(0)
    }

    /// Total derivative `D_i g = ∂g/∂x_i + Σ_σ u^(σ+i) ∂g/∂u^σ`.
    ///
    /// Raises the derivative order of `g` by at most one; jet coordinates are
    /// treated as independent variables.
    pub fn total_derivative(&self, g: &Expr, axis: usize) -> Result<Expr, JetError> {
        if axis >= self.axes.len() {
            return Err(JetError::UnknownAxis(format!("#{axis}")));
        }
        let mut terms = vec![g.differentiate(&self.axes[axis], 1)?];
        for mi in self.jet_coords_in(g) {
            let name = self.coord_name(&mi);
            let dg = g.differentiate(&name, 1)?;
            if dg.is_zero() {
                continue;
            }
            let shifted = Expr::var(self.coord_name(&mi.plus(axis)));
            terms.push(Expr::product(vec![dg, shifted]));
        }
        Ok(Expr::sum(terms))
    }
}

/// A truncated point of the infinite jet: base coordinates, `u`, and all
/// `u^σ` with `1 <= |σ| <= k_trunc`. May carry the generating section, which
/// lets downstream evaluators use quadrature on the section instead of
/// series on jet data.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoint {
    space: JetSpace,
    base: Vec<f64>,
    u: f64,
    derivs: BTreeMap<MultiIndex, f64>,
    k_trunc: usize,
    section: Option<Expr>,
}

impl JetPoint {
    /// Builds a jet point from explicit coordinate values. `coords` must
    /// contain every multi-index of order `1..=k_trunc`.
    pub fn from_coords(
        space: JetSpace,
        base: Vec<f64>,
        u: f64,
        coords: BTreeMap<MultiIndex, f64>,
        k_trunc: usize,
    ) -> Result<JetPoint, JetError> {
        assert!(k_trunc >= 1, "truncation order must be at least 1");
        for key in enumerate_indices(space.axes.len(), k_trunc) {
            if key.order() >= 1 && !coords.contains_key(&key) {
                return Err(JetError::MissingCoordinate(space.coord_name(&key)));
            }
        }
        Ok(JetPoint { space, base, u, derivs: coords, k_trunc, section: None })
    }

    /// Builds a sparse jet point; evaluators error on missing coordinates.
    pub fn sparse(
        space: JetSpace,
        base: Vec<f64>,
        u: f64,
        coords: BTreeMap<MultiIndex, f64>,
        k_trunc: usize,
    ) -> JetPoint {
        JetPoint { space, base, u, derivs: coords, k_trunc, section: None }
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn k_trunc(&self) -> usize {
        self.k_trunc
    }

    pub fn base_value(&self, axis: usize) -> f64 {
        self.base[axis]
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn coord(&self, mi: &MultiIndex) -> Option<f64> {
        if mi.order() == 0 {
            Some(self.u)
        } else {
            self.derivs.get(mi).copied()
        }
    }

    pub fn section(&self) -> Option<&Expr> {
        self.section.as_ref()
    }

    pub fn with_section(mut self, section: Expr) -> JetPoint {
        self.section = Some(section);
        self
    }

    /// All coordinates as variable bindings (base axes, `u`, jet variables).
    pub fn bindings(&self) -> Bindings {
        let mut b = Bindings::new();
        for (i, ax) in self.space.axes.iter().enumerate() {
            b.set(ax.clone(), self.base[i]);
        }
        b.set("u", self.u);
        for (mi, v) in &self.derivs {
            b.set(self.space.coord_name(mi), *v);
        }
        b
    }

    /// Restriction to a lower truncation order.
    pub fn restrict(&self, k: usize) -> JetPoint {
        assert!(k >= 1 && k <= self.k_trunc);
        let derivs = self
            .derivs
            .iter()
            .filter(|(mi, _)| mi.order() <= k)
            .map(|(mi, v)| (mi.clone(), *v))
            .collect();
        JetPoint {
            space: self.space.clone(),
            base: self.base.clone(),
            u: self.u,
            derivs,
            k_trunc: k,
            section: self.section.clone(),
        }
    }

    /// JSON form `{"x": [..], "K": k, "u": {"": u, "1": ., "1,1": ., ..}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut u = serde_json::Map::new();
        u.insert(String::new(), serde_json::json!(self.u));
        for (mi, v) in &self.derivs {
            u.insert(mi.json_key(), serde_json::json!(v));
        }
        serde_json::json!({ "x": self.base, "K": self.k_trunc, "u": u })
    }

    /// Inverse of [`to_json`](Self::to_json).
    pub fn from_json(space: JetSpace, value: &serde_json::Value) -> Result<JetPoint, JetError> {
        let err = |m: &str| JetError::MissingCoordinate(m.to_string());
        let base: Vec<f64> = value["x"]
            .as_array()
            .ok_or_else(|| err("x"))?
            .iter()
            .map(|v| v.as_f64().unwrap_or(f64::NAN))
            .collect();
        let k = value["K"].as_u64().ok_or_else(|| err("K"))? as usize;
        let map = value["u"].as_object().ok_or_else(|| err("u"))?;
        let mut u0 = None;
        let mut coords = BTreeMap::new();
        for (key, v) in map {
            let x = v.as_f64().ok_or_else(|| err(key))?;
            if key.is_empty() {
                u0 = Some(x);
            } else {
                let indices: Option<Vec<usize>> = key
                    .split(',')
                    .map(|s| s.parse::<usize>().ok().and_then(|i| i.checked_sub(1)))
                    .collect();
                coords.insert(MultiIndex::new(indices.ok_or_else(|| err(key))?), x);
            }
        }
        JetPoint::from_coords(space, base, u0.ok_or_else(|| err("u[\"\"]"))?, coords, k)
    }
}

/// All multi-indices of order `0..=k` over `n` axes.
pub fn enumerate_indices(n: usize, k: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, k: usize, start: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        out.push(MultiIndex::new(prefix.clone()));
        if k == 0 {
            return;
        }
        for i in start..n {
            prefix.push(i);
            rec(n, k - 1, i, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out.sort();
    out.dedup();
    out
}

/// Fill a jet point of order `k` from an analytic section `f` by symbolic
/// differentiation and evaluation. Attaches `f` as the underlying section.
pub fn jet_of(f: &Expr, space: &JetSpace, at: &Bindings, k: usize) -> Result<JetPoint, JetError> {
    assert!(k >= 1, "truncation order must be at least 1");
    let mut cache: HashMap<MultiIndex, Expr> = HashMap::new();
    cache.insert(MultiIndex::empty(), f.clone());
    let mut coords = BTreeMap::new();
    let mut base = Vec::with_capacity(space.axes.len());
    for ax in &space.axes {
        base.push(
            at.get(ax)
                .ok_or_else(|| JetError::Expr(ExprError::UnboundVariable(ax.clone())))?,
        );
    }
    let u = f.evaluate(at)?;
    for mi in enumerate_indices(space.axes.len(), k) {
        if mi.order() == 0 {
            continue;
        }
        let d = derivative_for(&mut cache, f, space, &mi)?;
        coords.insert(mi, d.evaluate(at)?);
    }
    Ok(JetPoint::from_coords(space.clone(), base, u, coords, k)?.with_section(f.clone()))
}

fn derivative_for(
    cache: &mut HashMap<MultiIndex, Expr>,
    f: &Expr,
    space: &JetSpace,
    mi: &MultiIndex,
) -> Result<Expr, JetError> {
    if let Some(e) = cache.get(mi) {
        return Ok(e.clone());
    }
    let indices = mi.indices();
    let last = indices[indices.len() - 1];
    let parent = MultiIndex::new(indices[..indices.len() - 1].to_vec());
    let pd = derivative_for(cache, f, space, &parent)?;
    let d = pd.differentiate(&space.axes[last], 1)?;
    cache.insert(mi.clone(), d.clone());
    Ok(d)
}

/// Truncated evaluation of the fractional total derivative `𝔇^p g` at a jet
/// point: the per-axis product of series `Σ_k C(p,k)(x-a)^(k-p)/Γ(k-p+1) D^k`
/// applied to `g`, with the same tail rule as the plain RL series.
///
/// Errors if `g` itself already references coordinates beyond the jet's
/// truncation order; running out of jet orders before the tail tolerance is
/// met is reported through the `converged` flag.
pub fn frac_total_derivative(
    g: &Expr,
    spec: &FracSpec,
    at: &JetPoint,
    ctl: &SeriesControl,
) -> Result<SeriesEval, JetError> {
    let space = at.space().clone();
    let ord_g = space.max_order_in(g);
    if ord_g > at.k_trunc() {
        return Err(JetError::Truncation { needed: ord_g, available: at.k_trunc() });
    }
    let mut axis_ids = Vec::with_capacity(spec.axes().len());
    for ax in spec.axes() {
        let id = space
            .axis_index(&ax.axis)
            .ok_or_else(|| JetError::UnknownAxis(ax.axis.clone()))?;
        let x = at.base_value(id);
        if x <= ax.terminal {
            return Err(JetError::Frac(FracError::TerminalViolation {
                axis: ax.axis.clone(),
                x,
                a: ax.terminal,
            }));
        }
        axis_ids.push(id);
    }

    let bindings = at.bindings();
    let budget = (at.k_trunc() - ord_g).min(ctl.max_terms);
    let n = spec.axes().len();

    fn cached_total_deriv(
        cache: &mut HashMap<Vec<usize>, Expr>,
        space: &JetSpace,
        axis_ids: &[usize],
        key: &[usize],
    ) -> Result<Expr, JetError> {
        if let Some(e) = cache.get(key) {
            return Ok(e.clone());
        }
        let i = key.iter().position(|&k| k > 0).unwrap();
        let mut parent = key.to_vec();
        parent[i] -= 1;
        let pd = cached_total_deriv(cache, space, axis_ids, &parent)?;
        let d = space.total_derivative(&pd, axis_ids[i])?;
        cache.insert(key.to_vec(), d.clone());
        Ok(d)
    }

    let mut cache: HashMap<Vec<usize>, Expr> = HashMap::new();
    cache.insert(vec![0; n], g.clone());

    let mut sum = 0.0;
    let mut small = 0usize;
    let mut recent: Vec<f64> = Vec::new();
    let mut converged = false;
    for s in 0..=budget * n {
        let mut shell = 0.0;
        for key in compositions(s, n, budget) {
            let mut coeff = 1.0;
            for (j, ax) in spec.axes().iter().enumerate() {
                coeff *=
                    series_coefficient(ax.order, ax.terminal, key[j], at.base_value(axis_ids[j]));
            }
            if coeff == 0.0 {
                continue;
            }
            let d = cached_total_deriv(&mut cache, &space, &axis_ids, &key)?;
            let term = coeff * d.evaluate(&bindings)?;
            sum += term;
            shell += term.abs();
        }
        recent.push(shell);
        if recent.len() > ctl.small_run {
            recent.remove(0);
        }
        if shell <= ctl.tail_tol * (1.0 + sum.abs()) {
            small += 1;
            if small >= ctl.small_run {
                converged = true;
                break;
            }
        } else {
            small = 0;
        }
    }
    let tail_estimate = recent.iter().copied().fold(0.0, f64::max);
    Ok(SeriesEval { value: sum, tail_estimate, converged })
}

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

/// One row of the truncated infinite-system expansion of `RL^p_a u = f`:
/// `ω_k = d ω_(k-1) / dx` and
/// `z_k = z_(k-1) - C(p,k-1) (x-a)^(k-1-p)/Γ(k-p) · ω_(k-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRow {
    pub k: usize,
    /// Jet coordinate ω_(k-1) appearing in the z-update.
    pub omega: Expr,
    /// Coefficient expression multiplying ω_(k-1), a function of x.
    pub coeff: Expr,
}

/// Truncated chain of recurrence records for a single-axis operator; the
/// final `z_K` carries the residual tail of the series.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemExpansion {
    pub p: f64,
    pub a: f64,
    pub rows: Vec<SystemRow>,
    pub space: JetSpace,
}

/// Emit the truncated chain `z_0 .. z_K` on the axis `x`.
pub fn expand_to_system(p: f64, a: f64, k_max: usize) -> SystemExpansion {
    let space = JetSpace::new(vec!["x"]);
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let scalar = gen_binomial(p, k - 1) * recip_gamma(k as f64 - p);
        let x_shift = if a == 0.0 {
            Expr::var("x")
        } else {
            Expr::sub(Expr::var("x"), Expr::num(a))
        };
        let coeff = Expr::product(vec![
            Expr::num(scalar),
            Expr::pow(x_shift, Expr::num(k as f64 - 1.0 - p)),
        ]);
        let omega = Expr::var(space.coord_name(&MultiIndex::new(vec![0; k - 1])));
        rows.push(SystemRow { k, omega, coeff });
    }
    SystemExpansion { p, a, rows, space }
}

impl SystemExpansion {
    /// `z_0 - z_K = Σ_{k=1..K} coeff_k ω_(k-1)` evaluated on jet data: the
    /// partial sum of the series representation.
    pub fn partial_sum(&self, jet: &JetPoint) -> Result<f64, JetError> {
        let b = jet.bindings();
        let mut s = 0.0;
        for row in &self.rows {
            s += row.coeff.evaluate(&b)? * row.omega.evaluate(&b)?;
        }
        Ok(s)
    }
}
