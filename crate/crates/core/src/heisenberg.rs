//! The rank-one free boson (Heisenberg vertex operator algebra, `c = 1`).
//!
//! Basis states are indexed by partitions: `λ = (λ_1 ≥ … ≥ λ_r)` stands for
//! `α(-λ_1) ⋯ α(-λ_r) 𝟏`, unnormalised. The weight of `λ` is `|λ|`.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalars::{binomial, fmt_rat, rat, rint, Rational, Scalar};
use crate::series::Coeff;

/// A weakly decreasing sequence of positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    pub fn vacuum() -> Self {
        Partition(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    fn multiplicity(&self, p: u32) -> usize {
        self.0.iter().filter(|&&x| x == p).count()
    }

    fn with(&self, p: u32) -> Self {
        let mut v = self.0.clone();
        let at = v.iter().position(|&x| x < p).unwrap_or(v.len());
        v.insert(at, p);
        Partition(v)
    }

    fn without(&self, p: u32) -> Self {
        let mut v = self.0.clone();
        let at = v.iter().position(|&x| x == p).expect("part present");
        v.remove(at);
        Partition(v)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Partitions of `n` in reverse-lexicographic order, e.g. `(3), (2,1), (1,1,1)`.
pub fn basis(n: u32) -> Vec<Partition> {
    fn rec(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(Partition(prefix.clone()));
            return;
        }
        for p in (1..=max.min(n)).rev() {
            prefix.push(p);
            rec(n - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// The partition numbers `p(0), …, p(n)`.
pub fn partition_counts(n: usize) -> Vec<u64> {
    let mut p = vec![0u64; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for m in part..=n {
            p[m] += p[m - part];
        }
    }
    p
}

/// Finite linear combination of basis keys with scalar coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct LinComb<K: Ord> {
    terms: BTreeMap<K, Scalar>,
}

/// A vector of the Fock space.
pub type FockVector = LinComb<Partition>;

impl<K: Ord + Clone> LinComb<K> {
    pub fn new() -> Self {
        LinComb {
            terms: BTreeMap::new(),
        }
    }

    pub fn basis(k: K) -> Self {
        Self::term(k, Scalar::one())
    }

    pub fn term(k: K, c: Scalar) -> Self {
        let mut v = Self::new();
        v.add_term(k, c);
        v
    }

    pub fn add_term(&mut self, k: K, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&k) {
            Some(x) => {
                *x += &c;
                if x.is_zero() {
                    self.terms.remove(&k);
                }
            }
            None => {
                self.terms.insert(k, c);
            }
        }
    }

    pub fn add_scaled(&mut self, o: &Self, s: &Scalar) {
        if s.is_zero() {
            return;
        }
        for (k, c) in &o.terms {
            self.add_term(k.clone(), c * s);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Scalar)> {
        self.terms.iter()
    }

    pub fn get(&self, k: &K) -> Scalar {
        self.terms.get(k).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Extends a map on basis keys linearly.
    pub fn map_linear<K2: Ord + Clone>(&self, mut f: impl FnMut(&K) -> LinComb<K2>) -> LinComb<K2> {
        let mut out = LinComb::new();
        for (k, c) in &self.terms {
            out.add_scaled(&f(k), c);
        }
        out
    }

    /// Fallible version of [`LinComb::map_linear`].
    pub fn try_map_linear<K2: Ord + Clone>(
        &self,
        mut f: impl FnMut(&K) -> Result<LinComb<K2>>,
    ) -> Result<LinComb<K2>> {
        let mut out = LinComb::new();
        for (k, c) in &self.terms {
            out.add_scaled(&f(k)?, c);
        }
        Ok(out)
    }
}

impl<K: Ord + Clone> Default for LinComb<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone + fmt::Debug> Coeff for LinComb<K> {
    fn zero() -> Self {
        Self::new()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add_assign(&mut self, other: &Self) {
        self.add_scaled(other, &Scalar::one());
    }
    fn scale(&self, s: &Scalar) -> Self {
        let mut out = Self::new();
        out.add_scaled(self, s);
        out
    }
}

impl<K: Ord + fmt::Debug> fmt::Debug for LinComb<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter().map(|(k, c)| (k, c.to_string()))).finish()
    }
}

impl FockVector {
    pub fn vacuum() -> Self {
        Self::basis(Partition::vacuum())
    }

    /// `α(-n_1) ⋯ α(-n_r) 𝟏`.
    pub fn state(parts: &[u32]) -> Self {
        Self::basis(Partition::new(parts.to_vec()))
    }

    /// The conformal vector `ω = ½ α(-1)² 𝟏`.
    pub fn omega() -> Self {
        Self::term(Partition::new(vec![1, 1]), Scalar::from_rational(rat(1, 2)))
    }

    /// Weight of a homogeneous vector (0 for the zero vector).
    pub fn weight(&self) -> Result<u32> {
        let ws: Vec<u32> = {
            let mut w: Vec<u32> = self.terms.keys().map(Partition::weight).collect();
            w.sort_unstable();
            w.dedup();
            w
        };
        match ws.as_slice() {
            [] => Ok(0),
            [w] => Ok(*w),
            _ => Err(Error::NonHomogeneous(ws)),
        }
    }

    /// Homogeneous components by weight.
    pub fn components(&self) -> BTreeMap<u32, FockVector> {
        let mut out: BTreeMap<u32, FockVector> = BTreeMap::new();
        for (k, c) in &self.terms {
            out.entry(k.weight()).or_default().add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let m: serde_json::Map<String, Value> = self
            .terms
            .iter()
            .map(|(k, c)| (k.to_string(), serde_json::to_value(c).unwrap()))
            .collect();
        Value::Object(m)
    }
}

impl fmt::Display for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(k, c)| format!("({c}){k}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for FockVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

// ---------------------------------------------------------------------------
// Oscillator and Virasoro actions.

fn alpha_on_basis(n: i64, p: &Partition) -> FockVector {
    match n {
        0 => FockVector::new(),
        n if n < 0 => FockVector::basis(p.with((-n) as u32)),
        n => {
            let m = p.multiplicity(n as u32);
            if m == 0 {
                FockVector::new()
            } else {
                FockVector::term(p.without(n as u32), Scalar::from_int(n * m as i64))
            }
        }
    }
}

/// `α(n) v`, with `[α(m), α(n)] = m δ_{m+n,0}` and `α(0) = 0`.
pub fn heisenberg_mode(n: i64, v: &FockVector) -> FockVector {
    v.map_linear(|p| alpha_on_basis(n, p))
}

/// `L(n) v = ½ Σ_j :α(j) α(n-j): v`, annihilators to the right.
pub fn virasoro_mode(n: i64, v: &FockVector) -> FockVector {
    let half = Scalar::from_rational(rat(1, 2));
    v.map_linear(|p| {
        let w = p.weight() as i64;
        let mut out = FockVector::new();
        for a in (n - w)..=w {
            let b = n - a;
            if a == 0 || b == 0 {
                continue;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let v1 = alpha_on_basis(hi, p);
            out.add_scaled(&heisenberg_mode(lo, &v1), &half);
        }
        out
    })
}

thread_local! {
    static VERTEX_CACHE: RefCell<HashMap<(Partition, i64, Partition), FockVector>> =
        RefCell::new(HashMap::new());
}

/// `u_m v` for the vertex operator `Y(u, z) = Σ u_m z^{-m-1}`.
///
/// For `u = α(-n_1) ⋯ α(-n_r) 𝟏` the field is the normal-ordered product of
/// `∂^{(n_i - 1)} α(z)`, whose modes are `C(-j-1, n_i-1) α(j) z^{-j-n_i}`.
pub fn vertex_mode(u: &FockVector, m: i64, v: &FockVector) -> FockVector {
    let mut out = FockVector::new();
    for (pu, cu) in u.iter() {
        for (pv, cv) in v.iter() {
            let r = vertex_mode_basis(pu, m, pv);
            out.add_scaled(&r, &(cu * cv));
        }
    }
    out
}

fn vertex_mode_basis(u: &Partition, m: i64, v: &Partition) -> FockVector {
    let key = (u.clone(), m, v.clone());
    if let Some(hit) = VERTEX_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    let r = vertex_mode_uncached(u, m, v);
    VERTEX_CACHE.with(|c| c.borrow_mut().insert(key, r.clone()));
    r
}

fn vertex_mode_uncached(u: &Partition, m: i64, v: &Partition) -> FockVector {
    let parts = u.parts();
    if parts.is_empty() {
        return if m == -1 { FockVector::basis(v.clone()) } else { FockVector::new() };
    }
    let w = v.weight() as i64;
    let total = m + 1 - u.weight() as i64;
    let lo = (total - w).min(-1);
    let mut out = FockVector::new();
    let mut js = Vec::with_capacity(parts.len());
    enumerate_modes(parts.len(), total, lo, w, &mut js, &mut |js| {
        let mut coeff = Rational::one();
        for (j, n) in js.iter().zip(parts) {
            coeff *= binomial(&rint(-j - 1), n - 1);
            if coeff.is_zero() {
                return;
            }
        }
        let mut state = FockVector::basis(v.clone());
        let mut order: Vec<i64> = js.to_vec();
        order.sort_unstable_by(|a, b| b.cmp(a));
        for j in order {
            state = heisenberg_mode(j, &state);
            if state.is_empty() {
                return;
            }
        }
        out.add_scaled(&state, &Scalar::from_rational(coeff));
    });
    out
}

/// Tuples of nonzero integers in `[lo, hi]` with the given sum, whose
/// positive entries sum to at most `hi`.
fn enumerate_modes(len: usize, sum: i64, lo: i64, hi: i64, js: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
    let pos: i64 = js.iter().filter(|&&j| j > 0).sum();
    if js.len() + 1 == len {
        let last = sum - js.iter().sum::<i64>();
        if last != 0 && last >= lo && last <= hi && pos + last.max(0) <= hi {
            js.push(last);
            f(js);
            js.pop();
        }
        return;
    }
    for j in lo..=hi {
        if j == 0 || pos + j.max(0) > hi {
            continue;
        }
        js.push(j);
        enumerate_modes(len, sum, lo, hi, js, f);
        js.pop();
    }
}

// ---------------------------------------------------------------------------

/// One block of a mode operator: the matrix from the weight-`source` piece to
/// the weight-`target` piece, rows and columns in [`basis`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeBlock {
    pub source: u32,
    pub target: u32,
    pub entries: Vec<Vec<Scalar>>,
}

/// Exact matrix of a homogeneous mode operator on the Fock space truncated
/// at weight `cap`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeMatrix {
    pub mode: Rational,
    /// Target weight minus source weight.
    pub shift: i64,
    pub blocks: Vec<ModeBlock>,
}

impl ModeMatrix {
    /// Tabulates `op` on every basis vector of weight `≤ cap` whose image
    /// lands in weight `≤ cap`. Errors if an image leaves the target piece.
    pub fn build(mode: Rational, shift: i64, cap: u32, mut op: impl FnMut(&FockVector) -> Result<FockVector>) -> Result<Self> {
        let mut blocks = Vec::new();
        for s in 0..=cap {
            let t = s as i64 + shift;
            if t < 0 || t > cap as i64 {
                continue;
            }
            let t = t as u32;
            let rows = basis(t);
            let mut entries = vec![vec![Scalar::zero(); basis(s).len()]; rows.len()];
            for (col, p) in basis(s).into_iter().enumerate() {
                let img = op(&FockVector::basis(p))?;
                for (q, c) in img.iter() {
                    let row = rows.iter().position(|r| r == q).ok_or_else(|| Error::NonHomogeneous(vec![q.weight(), t]))?;
                    entries[row][col] = c.clone();
                }
            }
            blocks.push(ModeBlock { source: s, target: t, entries });
        }
        Ok(ModeMatrix { mode, shift, blocks })
    }

    /// Number of entries compared and entries that differ.
    pub fn diff_count(&self, o: &ModeMatrix) -> (usize, usize) {
        let mut n = 0;
        let mut bad = 0;
        for (a, b) in self.blocks.iter().zip(&o.blocks) {
            for (ra, rb) in a.entries.iter().zip(&b.entries) {
                for (x, y) in ra.iter().zip(rb) {
                    n += 1;
                    if x != y {
                        bad += 1;
                    }
                }
            }
        }
        if self.blocks.len() != o.blocks.len() {
            bad += 1;
        }
        (n, bad)
    }

    pub fn to_json(&self) -> Value {
        let blocks: Vec<Value> = self
            .blocks
            .iter()
            .map(|b| {
                json!({
                    "source_weight": b.source,
                    "target_weight": b.target,
                    "rows": basis(b.target).iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                    "cols": basis(b.source).iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                    "entries": b.entries,
                })
            })
            .collect();
        json!({"mode": fmt_rat(&self.mode), "weight_shift": self.shift, "blocks": blocks})
    }
}

/// Matrix of `u_m` on weights `≤ cap`.
pub fn vertex_mode_matrix(u: &FockVector, m: i64, cap: u32) -> Result<ModeMatrix> {
    let p = u.weight()? as i64;
    ModeMatrix::build(rint(m), p - m - 1, cap, |v| Ok(vertex_mode(u, m, v)))
}
