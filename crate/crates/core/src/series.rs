//! Truncated formal Laurent series in fractional powers of several variables.
//!
//! A [`Series`] stores a sparse map from exponent tuples to coefficients
//! together with a guaranteed window per variable. A coefficient is *known*
//! when its exponent lies inside every variable's window; anything outside is
//! treated as unknown and reading it is an error. Arithmetic narrows windows
//! pessimistically so that every coefficient reported as known is exact.
//!
//! Expansions of `(a ± b)^r` always use nonnegative integral powers of the
//! second variable, with the branch `1^{1/k} = 1`.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalars::{binomial, fmt_rat, rint, Rational, Scalar};

/// Coefficient types a series can carry: scalars or vectors over the scalars.
pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn scale(&self, s: &Scalar) -> Self;

    fn sub_assign(&mut self, other: &Self) {
        self.add_assign(&other.scale(&Scalar::from_int(-1)));
    }
}

impl Coeff for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn scale(&self, s: &Scalar) -> Self {
        self * s
    }
}

/// A formal variable with its ramification index and guaranteed window.
///
/// `lo`/`hi` of `None` mean the series is exact in that direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub ramification: u32,
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
}

impl Var {
    pub fn exact(name: &str, ramification: u32) -> Self {
        Var {
            name: name.to_string(),
            ramification,
            lo: None,
            hi: None,
        }
    }

    fn is_exact(&self) -> bool {
        self.lo.is_none() && self.hi.is_none()
    }

    fn contains(&self, e: &Rational) -> bool {
        self.lo.as_ref().is_none_or(|lo| e >= lo) && self.hi.as_ref().is_none_or(|hi| e <= hi)
    }

    fn window_string(&self) -> String {
        let lo = self.lo.as_ref().map_or("-inf".to_string(), fmt_rat);
        let hi = self.hi.as_ref().map_or("+inf".to_string(), fmt_rat);
        format!("[{lo}, {hi}]")
    }
}

fn min_opt(a: Option<Rational>, b: Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn max_opt(a: Option<Rational>, b: Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Exponent tuple, one entry per variable.
pub type Exps = Vec<Rational>;

/// Sparse truncated series in several fractional-power variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<C = Scalar> {
    vars: Vec<Var>,
    terms: BTreeMap<Exps, C>,
}

/// Series in one variable.
pub type FracSeries = Series<Scalar>;
/// Series in two variables, typically `(z, z0)`.
pub type BiSeries = Series<Scalar>;

impl<C: Coeff> Series<C> {
    /// The exact zero series in the given variables.
    pub fn zero(vars: &[(&str, u32)]) -> Self {
        Series {
            vars: vars.iter().map(|(n, k)| Var::exact(n, *k)).collect(),
            terms: BTreeMap::new(),
        }
    }

    pub fn from_vars(vars: Vec<Var>) -> Self {
        Series {
            vars,
            terms: BTreeMap::new(),
        }
    }

    /// `c · ∏ v_i^{e_i}`, exact.
    pub fn monomial(vars: &[(&str, u32)], exps: Exps, c: C) -> Self {
        let mut s = Self::zero(vars);
        s.add_term(exps, c);
        s
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::Incompatible(format!("no variable named {name}")))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every variable is exact (no truncation anywhere).
    pub fn is_exact(&self) -> bool {
        self.vars.iter().all(Var::is_exact)
    }

    /// Adds `c` to the coefficient at `exps` (ignored if outside the window).
    pub fn add_term(&mut self, exps: Exps, c: C) {
        assert_eq!(exps.len(), self.vars.len(), "exponent arity mismatch");
        if c.is_zero() || !self.in_window(&exps) {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(e) => {
                e.add_assign(&c);
                if e.is_zero() {
                    self.terms.remove(&exps);
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    fn in_window(&self, exps: &[Rational]) -> bool {
        self.vars.iter().zip(exps).all(|(v, e)| v.contains(e))
    }

    /// Narrows the window of `var` to `[lo, hi]` (intersected with the
    /// current one) and drops terms that fall outside.
    pub fn truncate(mut self, var: usize, lo: Option<Rational>, hi: Option<Rational>) -> Self {
        let v = &mut self.vars[var];
        v.lo = max_opt(v.lo.take(), lo);
        v.hi = min_opt(v.hi.take(), hi);
        self.prune();
        self
    }

    fn prune(&mut self) {
        let vars = &self.vars;
        self.terms
            .retain(|e, _| vars.iter().zip(e.iter()).all(|(v, x)| v.contains(x)));
    }

    /// Coefficient at `exps`; errors if it lies outside the guaranteed window.
    pub fn coeff(&self, exps: &[Rational]) -> Result<C> {
        for (v, e) in self.vars.iter().zip(exps) {
            if !v.contains(e) {
                return Err(Error::WindowViolation {
                    variable: v.name.clone(),
                    exponent: fmt_rat(e),
                    window: v.window_string(),
                });
            }
        }
        Ok(self.terms.get(exps).cloned().unwrap_or_else(C::zero))
    }

    fn check_compatible(&self, o: &Self) -> Result<()> {
        if self.vars.len() != o.vars.len()
            || self.vars.iter().zip(&o.vars).any(|(a, b)| a.name != b.name)
        {
            return Err(Error::Incompatible(format!(
                "variables {:?} vs {:?}",
                self.var_names(),
                o.var_names()
            )));
        }
        Ok(())
    }

    pub fn var_names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    fn merged_vars(&self, o: &Self) -> Vec<Var> {
        self.vars
            .iter()
            .zip(&o.vars)
            .map(|(a, b)| Var {
                name: a.name.clone(),
                ramification: a.ramification.lcm(&b.ramification),
                lo: max_opt(a.lo.clone(), b.lo.clone()),
                hi: min_opt(a.hi.clone(), b.hi.clone()),
            })
            .collect()
    }

    /// Sum; the window is the intersection of both windows.
    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_compatible(o)?;
        let mut out = Series::from_vars(self.merged_vars(o));
        for (e, c) in self.terms.iter().chain(o.terms.iter()) {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(&Scalar::from_int(-1)))
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        let mut out = Series::from_vars(self.vars.clone());
        if !s.is_zero() {
            for (e, c) in &self.terms {
                out.add_term(e.clone(), c.scale(s));
            }
        }
        out
    }

    /// Multiplies by the monomial `∏ v_i^{shift_i}`; windows move along.
    pub fn shift(&self, shift: &[Rational]) -> Self {
        let vars = self
            .vars
            .iter()
            .zip(shift)
            .map(|(v, s)| Var {
                name: v.name.clone(),
                ramification: v.ramification.lcm(&s.denom().to_u32().unwrap_or(1)),
                lo: v.lo.as_ref().map(|x| x + s),
                hi: v.hi.as_ref().map(|x| x + s),
            })
            .collect();
        let mut out = Series::from_vars(vars);
        for (e, c) in &self.terms {
            let ne = e.iter().zip(shift).map(|(a, b)| a + b).collect();
            out.add_term(ne, c.clone());
        }
        out
    }

    /// Formal derivative in variable `var`: `∂ v^e = e v^{e-1}`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut vars = self.vars.clone();
        let one = Rational::one();
        vars[var].lo = vars[var].lo.as_ref().map(|x| x - &one);
        vars[var].hi = vars[var].hi.as_ref().map(|x| x - &one);
        let mut out = Series::from_vars(vars);
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            ne[var] -= &one;
            out.add_term(ne, c.scale(&Scalar::from_rational(e[var].clone())));
        }
        out
    }

    /// Substitution `v^{m/k} ↦ η^{-j m} v^{m/k}`, `η = e^{-2πi/k}`, in variable `var`.
    pub fn subst_root_of_unity(&self, var: usize, k: u32, j: i64) -> Result<Self> {
        let mut out = Series::from_vars(self.vars.clone());
        for (e, c) in &self.terms {
            let m = &e[var] * rint(k as i64);
            let m = m.to_integer().to_i64().filter(|_| m.is_integer()).ok_or_else(|| {
                Error::InvalidMode {
                    index: fmt_rat(&e[var]),
                    k,
                }
            })?;
            out.add_term(e.clone(), c.scale(&Scalar::eta_pow(k, -j * m)));
        }
        Ok(out)
    }

    /// Coefficient of `v^{-1}` in `var`, as a series in the remaining variables.
    pub fn residue_in(&self, var: usize) -> Result<Self> {
        let m1 = -Rational::one();
        let v = &self.vars[var];
        if !v.contains(&m1) {
            return Err(Error::WindowViolation {
                variable: v.name.clone(),
                exponent: "-1".into(),
                window: v.window_string(),
            });
        }
        let mut vars = self.vars.clone();
        vars.remove(var);
        let mut out = Series::from_vars(vars);
        for (e, c) in &self.terms {
            if e[var] == m1 {
                let mut ne = e.clone();
                ne.remove(var);
                out.add_term(ne, c.clone());
            }
        }
        Ok(out)
    }

    /// Coefficient of `v^{-1}` for a one-variable series.
    pub fn residue(&self) -> Result<C> {
        if self.vars.len() != 1 {
            return Err(Error::Incompatible("residue needs a one-variable series".into()));
        }
        self.coeff(&[-Rational::one()])
    }

    /// Applies a linear map to every coefficient.
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Series<D> {
        let mut out = Series::from_vars(self.vars.clone());
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Re-expresses the series in new variables. `f` maps an exponent tuple to
    /// a new tuple and a scalar factor; the caller supplies windows valid for
    /// the image in `vars`.
    pub fn remap(&self, vars: Vec<Var>, f: impl Fn(&[Rational]) -> (Exps, Scalar)) -> Self {
        let mut out = Series::from_vars(vars);
        for (e, c) in &self.terms {
            let (ne, s) = f(e);
            out.add_term(ne, c.scale(&s));
        }
        out
    }

    /// Known coefficients with exponents inside `bx`, after checking that the
    /// box lies inside the guaranteed window. `None` in the box means every
    /// exponent of that variable, which requires the variable to be exact.
    pub fn restrict(&self, bx: &[Option<(Rational, Rational)>]) -> Result<BTreeMap<Exps, C>> {
        for (v, b) in self.vars.iter().zip(bx) {
            let ok = match b {
                None => v.is_exact(),
                Some((lo, hi)) => v.contains(lo) && v.contains(hi),
            };
            if !ok {
                let (lo, hi) = match b {
                    Some((lo, hi)) => (fmt_rat(lo), fmt_rat(hi)),
                    None => ("-inf".into(), "+inf".into()),
                };
                return Err(Error::WindowViolation {
                    variable: v.name.clone(),
                    exponent: format!("[{lo}, {hi}]"),
                    window: v.window_string(),
                });
            }
        }
        Ok(self
            .terms
            .iter()
            .filter(|(e, _)| {
                e.iter().zip(bx).all(|(x, b)| match b {
                    None => true,
                    Some((lo, hi)) => x >= lo && x <= hi,
                })
            })
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect())
    }

    /// Compares two series coefficient-wise on a box inside both windows.
    pub fn residual_on_box(&self, o: &Self, bx: &[Option<(Rational, Rational)>]) -> Result<Residual> {
        self.check_compatible(o)?;
        let a = self.restrict(bx)?;
        let b = o.restrict(bx)?;
        let mut r = Residual::default();
        let keys: std::collections::BTreeSet<&Exps> = a.keys().chain(b.keys()).collect();
        for e in keys {
            let mut d = a.get(e).cloned().unwrap_or_else(C::zero);
            d.sub_assign(&b.get(e).cloned().unwrap_or_else(C::zero));
            r.record(!d.is_zero(), || fmt_exps(e));
        }
        Ok(r)
    }

    /// Compares two series on the intersection of their windows. Both must
    /// share the same variables; the intersection must not be empty.
    pub fn residual(&self, o: &Self) -> Result<Residual> {
        let d = self.sub(o)?;
        let keys: std::collections::BTreeSet<&Exps> = self
            .terms
            .keys()
            .chain(o.terms.keys())
            .filter(|e| d.in_window(e))
            .collect();
        let mut r = Residual::default();
        for e in keys {
            r.record(d.terms.contains_key(e), || fmt_exps(e));
        }
        Ok(r)
    }
}

fn fmt_exps(e: &[Rational]) -> String {
    let parts: Vec<String> = e.iter().map(fmt_rat).collect();
    format!("({})", parts.join(", "))
}

impl Series<Scalar> {
    pub fn one(vars: &[(&str, u32)]) -> Self {
        let n = vars.len();
        Self::monomial(vars, vec![Rational::zero(); n], Scalar::one())
    }

    /// Cauchy product with a series of any coefficient type.
    ///
    /// Per variable `v`, unknown coefficients of one factor can only reach
    /// exponents beyond `hi + (lowest exponent of the other factor)`, and
    /// symmetrically below. A factor truncated in some other variable has no
    /// lowest exponent in `v`, which leaves nothing guaranteed on that side.
    pub fn mul<C: Coeff>(&self, o: &Series<C>) -> Result<Series<C>> {
        if self.vars.len() != o.vars.len()
            || self.vars.iter().zip(&o.vars).any(|(a, b)| a.name != b.name)
        {
            return Err(Error::Incompatible(format!(
                "variables {:?} vs {:?}",
                self.var_names(),
                o.var_names()
            )));
        }
        let n = self.vars.len();
        let a_exact_zero = self.terms.is_empty() && self.is_exact();
        let b_exact_zero = o.terms.is_empty() && o.is_exact();
        let mut vars = Vec::with_capacity(n);
        for v in 0..n {
            let (va, vb) = (&self.vars[v], &o.vars[v]);
            let mut out = Var {
                name: va.name.clone(),
                ramification: va.ramification.lcm(&vb.ramification),
                lo: None,
                hi: None,
            };
            if !(a_exact_zero || b_exact_zero) {
                let ext_a = extent(&self.vars, self.terms.keys(), v);
                let ext_b = extent(&o.vars, o.terms.keys(), v);
                for (h, other_min) in [(&va.hi, &ext_b.0), (&vb.hi, &ext_a.0)] {
                    if let Some(h) = h {
                        let m = other_min.as_ref().ok_or_else(|| no_window(&va.name))?;
                        out.hi = min_opt(out.hi, Some(h + m));
                    }
                }
                for (l, other_max) in [(&va.lo, &ext_b.1), (&vb.lo, &ext_a.1)] {
                    if let Some(l) = l {
                        let m = other_max.as_ref().ok_or_else(|| no_window(&va.name))?;
                        out.lo = max_opt(out.lo, Some(l + m));
                    }
                }
            }
            vars.push(out);
        }
        let mut out = Series::from_vars(vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Exps = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                if out.in_window(&e) {
                    out.add_term(e, cb.scale(ca));
                }
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse with respect to variable `var`.
    ///
    /// The lowest `var`-degree part must be a single monomial, the series may
    /// only be truncated above in `var`, and the result is guaranteed through
    /// `order` degrees beyond its leading exponent.
    pub fn inverse(&self, var: usize, order: u32) -> Result<Self> {
        let bad = |m: &str| Error::Incompatible(format!("cannot invert: {m}"));
        if self.vars.iter().enumerate().any(|(i, v)| i != var && !v.is_exact()) || self.vars[var].lo.is_some() {
            return Err(bad("series is truncated in a way that leaves no leading term"));
        }
        let d0 = self
            .terms
            .keys()
            .map(|e| e[var].clone())
            .min()
            .ok_or(Error::DivisionByZero)?;
        let lead: Vec<(&Exps, &Scalar)> = self.terms.iter().filter(|(e, _)| e[var] == d0).collect();
        if lead.len() != 1 {
            return Err(bad("leading part is not a monomial"));
        }
        let (le, lc) = (lead[0].0.clone(), lead[0].1.clone());
        let hi_in = min_opt(self.vars[var].hi.clone(), Some(&d0 + rint(order as i64)));
        let hi_h = hi_in.unwrap() - &d0;
        // a = m (1 - h)
        let neg_le: Exps = le.iter().map(|x| -x).collect();
        let m_inv = lc.inv()?;
        let normalised = self.shift(&neg_le).scale(&m_inv);
        let mut h = Series::from_vars(normalised.vars.clone());
        for (e, c) in normalised.terms() {
            if e.iter().any(|x| !x.is_zero()) {
                h.add_term(e.clone(), -c);
            }
        }
        h.vars[var].hi = Some(hi_h.clone());
        h.prune();
        let step = h.terms.keys().map(|e| e[var].clone()).min();
        let mut geo = Series::one(&self.var_pairs());
        geo.vars[var].hi = Some(hi_h.clone());
        if let Some(step) = step {
            if !step.is_positive() {
                return Err(bad("non-leading terms do not raise the degree"));
            }
            let reps = (&hi_h / &step).floor().to_integer().to_u32().unwrap_or(0);
            let mut pw = geo.clone();
            for _ in 0..reps {
                pw = pw.mul(&h)?;
                geo = geo.add(&pw)?;
            }
        }
        Ok(geo.shift(&neg_le).scale(&m_inv))
    }

    /// Integer power; negative powers go through [`Series::inverse`].
    pub fn pow(&self, n: i64, var: usize, order: u32) -> Result<Self> {
        let base = if n < 0 { self.inverse(var, order)? } else { self.clone() };
        let mut acc = Series::one(&self.var_pairs());
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
        Ok(acc)
    }

    fn var_pairs(&self) -> Vec<(&str, u32)> {
        self.vars.iter().map(|v| (v.name.as_str(), v.ramification)).collect()
    }
}

fn no_window(name: &str) -> Error {
    Error::Incompatible(format!("product has no guaranteed coefficients in {name}"))
}

/// Lowest and highest `v`-exponent any coefficient of the full (untruncated)
/// series can have; `None` when unbounded.
fn extent<'a>(
    vars: &[Var],
    keys: impl Iterator<Item = &'a Exps>,
    v: usize,
) -> (Option<Rational>, Option<Rational>) {
    let other_trunc = vars.iter().enumerate().any(|(i, x)| i != v && !x.is_exact());
    if other_trunc {
        return (None, None);
    }
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for e in keys {
        lo = min_opt(lo, Some(e[v].clone()));
        hi = max_opt(hi, Some(e[v].clone()));
    }
    let min = if vars[v].lo.is_some() {
        None
    } else {
        min_opt(lo, vars[v].hi.clone()).or(Some(Rational::zero()))
    };
    let max = if vars[v].hi.is_some() {
        None
    } else {
        max_opt(hi, vars[v].lo.clone()).or(Some(Rational::zero()))
    };
    (min, max)
}

impl<C: Coeff + Serialize> Series<C> {
    /// JSON dump; one-variable series use the `{variable, ramification,
    /// window, terms}` layout, others list all variables.
    pub fn to_json(&self) -> Value {
        let window = |v: &Var| json!([v.lo.as_ref().map(fmt_rat), v.hi.as_ref().map(fmt_rat)]);
        if self.vars.len() == 1 {
            let v = &self.vars[0];
            let terms: Vec<Value> = self
                .terms
                .iter()
                .map(|(e, c)| json!({"exponent": fmt_rat(&e[0]), "coeff": c}))
                .collect();
            return json!({
                "variable": v.name, "ramification": v.ramification,
                "window": window(v), "terms": terms,
            });
        }
        let vars: Vec<Value> = self
            .vars
            .iter()
            .map(|v| json!({"variable": v.name, "ramification": v.ramification, "window": window(v)}))
            .collect();
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| json!({"exponents": e.iter().map(fmt_rat).collect::<Vec<_>>(), "coeff": c}))
            .collect();
        json!({"variables": vars, "terms": terms})
    }
}

impl fmt::Display for Series<Scalar> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (v, x) in self.vars.iter().zip(e) {
                if !x.is_zero() {
                    write!(f, "*{}^{}", v.name, fmt_rat(x))?;
                }
            }
        }
        let windows: Vec<String> = self
            .vars
            .iter()
            .filter(|v| !v.is_exact())
            .map(|v| format!("{} in {}", v.name, v.window_string()))
            .collect();
        if !windows.is_empty() {
            write!(f, " [{}]", windows.join(", "))?;
        }
        Ok(())
    }
}

/// Outcome of comparing two sides of an identity coefficient-wise.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Residual {
    /// Number of coefficients compared.
    pub compared: usize,
    /// Number of coefficients where the two sides differ.
    pub nonzero: usize,
    /// Location of the first mismatch, if any.
    pub first: Option<String>,
}

impl Residual {
    pub fn is_zero(&self) -> bool {
        self.nonzero == 0
    }

    pub fn record(&mut self, mismatch: bool, at: impl FnOnce() -> String) {
        self.compared += 1;
        if mismatch {
            self.nonzero += 1;
            if self.first.is_none() {
                self.first = Some(at());
            }
        }
    }

    pub fn merge(&mut self, o: Residual) {
        self.compared += o.compared;
        self.nonzero += o.nonzero;
        if self.first.is_none() {
            self.first = o.first;
        }
    }

    pub fn summary(&self) -> String {
        match &self.first {
            None => format!("zero ({} coefficients compared)", self.compared),
            Some(at) => format!(
                "nonzero ({} of {} coefficients differ; first at {at})",
                self.nonzero, self.compared
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Binomial expansions and δ-function identities.

/// `Σ_{m=0}^{order} C(r,m) (±1)^m a^{r-m} b^m` in variables `(a, b)`,
/// guaranteed exactly for `b`-degree `≤ order`.
pub fn binomial_expand_in(names: (&str, &str), k: u32, r: &Rational, sign: i64, order: u32) -> BiSeries {
    let mut s = Series::zero(&[(names.0, k), (names.1, 1)]);
    s.vars[1].hi = Some(rint(order as i64));
    for m in 0..=order {
        let c = binomial(r, m) * rint(sign.pow(m));
        s.add_term(vec![r - rint(m as i64), rint(m as i64)], Scalar::from_rational(c));
    }
    s
}

/// `(z ± z0)^r` expanded in nonnegative powers of `z0` through `z0^{order}`.
pub fn binomial_expand(r: &Rational, sign: i64, order: u32) -> BiSeries {
    let k = r.denom().to_u32().unwrap_or(1);
    binomial_expand_in(("z", "z0"), k, r, sign, order)
}

/// One summand `c · mono · (A ± B)^r` of a δ-function expansion.
struct DeltaTerm {
    coeff: Rational,
    mono: Exps,
    r: Rational,
}

/// Sums the given terms, each `(A ± B)^r` expanded in nonnegative powers of
/// `B` through degree `order`, as a series in `names`.
fn expand_family(
    names: &[&str],
    k: u32,
    (a, b, sign): (usize, usize, i64),
    order: u32,
    items: impl IntoIterator<Item = DeltaTerm>,
) -> Series {
    let vars: Vec<(&str, u32)> = names.iter().map(|n| (*n, k)).collect();
    let mut s = Series::zero(&vars);
    s.vars[b].hi = Some(rint(order as i64));
    for t in items {
        for m in 0..=order {
            let c = &t.coeff * binomial(&t.r, m) * rint(sign.pow(m));
            let mut e = t.mono.clone();
            e[a] += &t.r - rint(m as i64);
            e[b] += rint(m as i64);
            s.add_term(e, Scalar::from_rational(c));
        }
    }
    s
}

fn with_window(mut s: Series, var: usize, lo: Rational, hi: Rational) -> Series {
    s.vars[var].lo = Some(lo);
    s.vars[var].hi = Some(hi);
    s.prune();
    s
}

const DELTA_VARS: [&str; 3] = ["z0", "z1", "z2"];

fn unit(i: usize, e: Rational) -> Exps {
    let mut v = vec![Rational::zero(); 3];
    v[i] = e;
    v
}

fn delta_box(radius: i64) -> Vec<Option<(Rational, Rational)>> {
    vec![Some((rint(-radius), rint(radius))); 3]
}

/// `z2^{-1}((z1-z0)/z2)^{-p/k} δ((z1-z0)/z2)` versus
/// `z1^{-1}((z2+z0)/z1)^{p/k} δ((z2+z0)/z1)` on the box `|deg| ≤ radius`.
pub fn delta_ramified_shift(k: u32, p: u32, radius: i64) -> Result<Residual> {
    let n_max = radius + 2;
    let pk = Rational::new((p as i64).into(), (k as i64).into());
    let lhs = expand_family(
        &DELTA_VARS,
        k,
        (1, 0, -1),
        radius as u32,
        (-n_max..=n_max).map(|n| DeltaTerm {
            coeff: Rational::one(),
            mono: unit(2, rint(-n - 1) + &pk),
            r: rint(n) - &pk,
        }),
    );
    let lhs = with_window(lhs, 2, rint(-n_max - 1) + &pk, rint(n_max - 1) + &pk);
    let rhs = expand_family(
        &DELTA_VARS,
        k,
        (2, 0, 1),
        radius as u32,
        (-n_max..=n_max).map(|n| DeltaTerm {
            coeff: Rational::one(),
            mono: unit(1, rint(-n - 1) - &pk),
            r: rint(n) + &pk,
        }),
    );
    let rhs = with_window(rhs, 1, rint(-n_max - 1) - &pk, rint(n_max - 1) - &pk);
    lhs.residual_on_box(&rhs, &delta_box(radius))
}

/// `z2^{-1} δ((z1-z0)^{1/k}/z2^{1/k}) = Σ_n (z1-z0)^{n/k} z2^{-n/k-1}`.
fn root_delta(k: u32, n_max: i64, radius: u32) -> Series {
    let kk = k as i64;
    let s = expand_family(
        &DELTA_VARS,
        k,
        (1, 0, -1),
        radius,
        (-kk * n_max..=kk * n_max + kk - 1).map(|n| DeltaTerm {
            coeff: Rational::one(),
            mono: unit(2, Rational::new((-n).into(), kk.into()) - rint(1)),
            r: Rational::new(n.into(), kk.into()),
        }),
    );
    let lo = rint(-n_max - 1) - Rational::new((kk - 1).into(), kk.into());
    with_window(s, 2, lo, rint(n_max - 1))
}

/// `Σ_{p<k} ((z1-z0)/z2)^{p/k} z2^{-1}δ((z1-z0)/z2)` versus
/// `z2^{-1}δ((z1-z0)^{1/k}/z2^{1/k})`.
pub fn delta_root_sum(k: u32, radius: i64) -> Result<Residual> {
    let n_max = radius + 2;
    let kk = k as i64;
    let items = (0..kk).flat_map(|p| {
        (-n_max..=n_max).map(move |n| {
            let pk = Rational::new(p.into(), kk.into());
            DeltaTerm {
                coeff: Rational::one(),
                mono: unit(2, rint(-n - 1) - &pk),
                r: rint(n) + pk,
            }
        })
    });
    let lhs = expand_family(&DELTA_VARS, k, (1, 0, -1), radius as u32, items);
    let lo = rint(-n_max - 1) - Rational::new((kk - 1).into(), kk.into());
    let lhs = with_window(lhs, 2, lo, rint(n_max - 1));
    lhs.residual_on_box(&root_delta(k, n_max, radius as u32), &delta_box(radius))
}

/// `z2^{-1}δ((z1-z0)^{1/k}/z2^{1/k})` versus `z1^{-1}δ((z2+z0)^{1/k}/z1^{1/k})`.
pub fn delta_root_symmetry(k: u32, radius: i64) -> Result<Residual> {
    let n_max = radius + 2;
    let kk = k as i64;
    let rhs = expand_family(
        &DELTA_VARS,
        k,
        (2, 0, 1),
        radius as u32,
        (-kk * n_max..=kk * n_max + kk - 1).map(|n| DeltaTerm {
            coeff: Rational::one(),
            mono: unit(1, Rational::new((-n).into(), kk.into()) - rint(1)),
            r: Rational::new(n.into(), kk.into()),
        }),
    );
    let lo = rint(-n_max - 1) - Rational::new((kk - 1).into(), kk.into());
    let rhs = with_window(rhs, 1, lo, rint(n_max - 1));
    root_delta(k, n_max, radius as u32).residual_on_box(&rhs, &delta_box(radius))
}

/// `z0^{-1}δ((z1-z2)/z0) - z0^{-1}δ((z2-z1)/(-z0))` versus `z2^{-1}δ((z1-z0)/z2)`.
pub fn delta_three_term(radius: i64) -> Result<Residual> {
    let n_max = radius + 2;
    let order = radius as u32;
    let family = |a, b, sign, mono_var: usize, alt: bool| {
        let s = expand_family(
            &DELTA_VARS,
            1,
            (a, b, sign),
            order,
            (-n_max..=n_max).map(|n| DeltaTerm {
                coeff: if alt && n % 2 != 0 { rint(-1) } else { rint(1) },
                mono: unit(mono_var, rint(-n - 1)),
                r: rint(n),
            }),
        );
        with_window(s, mono_var, rint(-n_max - 1), rint(n_max - 1))
    };
    let lhs = family(1, 2, -1, 0, false).sub(&family(2, 1, -1, 0, true))?;
    let rhs = family(1, 0, -1, 2, false);
    lhs.residual_on_box(&rhs, &delta_box(radius))
}

/// `(z1^{1/k} - x)^n` at `x = z1^{1/k} - (z1 - z0)^{1/k}` versus
/// `(z1 - z0)^{n/k}`, both expanded in nonnegative powers of `z0`.
pub fn root_substitution(k: u32, n: i64, order: u32) -> Result<Residual> {
    let names = ("z1", "z0");
    let vars = [(names.0, k), (names.1, 1)];
    let root = Series::monomial(&vars, vec![Rational::new(1.into(), (k as i64).into()), Rational::zero()], Scalar::one());
    let x = root.sub(&binomial_expand_in(names, k, &Rational::new(1.into(), (k as i64).into()), -1, order))?;
    let base = root.sub(&x)?;
    let lhs = base.pow(n, 1, order)?;
    let rhs = binomial_expand_in(names, k, &Rational::new(n.into(), (k as i64).into()), -1, order);
    lhs.residual_on_box(&rhs, &[None, Some((Rational::zero(), rint(order as i64)))])
}
