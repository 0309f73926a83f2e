//! Twisted modules for arbitrary `g ∈ S_k`: cycle decomposition into
//! consecutive blocks, the conjugation action on tensor slots, tensor products
//! of cycle-twisted Fock modules, and their characters.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::heisenberg::{partition_counts, FockVector, Partition};
use crate::scalars::{binomial, fmt_rat, rat, rint, Rational, Scalar};
use crate::series::{Coeff, Residual};
use crate::twist::{scaled_mode, tensor_weight, Tensor, TensorState, TwistedModule};

/// A permutation of `{1, …, k}` stored by its images.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<u32>,
}

impl Permutation {
    /// `images[i-1] = g(i)`; errors unless this is a bijection of `{1, …, k}`.
    pub fn new(images: Vec<u32>) -> Result<Self> {
        let k = images.len() as u32;
        let mut seen = vec![false; images.len()];
        for &x in &images {
            if x == 0 || x > k || seen[x as usize - 1] {
                return Err(Error::Incompatible(format!("{images:?} is not a permutation")));
            }
            seen[x as usize - 1] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(k: u32) -> Self {
        Permutation { images: (1..=k).collect() }
    }

    /// The cycle `(c_1 c_2 ⋯ c_r)` in `S_k`.
    pub fn cycle(k: u32, c: &[u32]) -> Result<Self> {
        Self::from_cycles(k, &[c.to_vec()])
    }

    pub fn from_cycles(k: u32, cycles: &[Vec<u32>]) -> Result<Self> {
        let mut images: Vec<u32> = (1..=k).collect();
        let mut used = vec![false; k as usize];
        for c in cycles {
            for (t, &x) in c.iter().enumerate() {
                if x == 0 || x > k || used[x as usize - 1] {
                    return Err(Error::Incompatible(format!("bad cycle {c:?} in S_{k}")));
                }
                used[x as usize - 1] = true;
                images[x as usize - 1] = c[(t + 1) % c.len()];
            }
        }
        Self::new(images)
    }

    /// Parses cycle notation such as `"(1 3)(2)"`. Fixed points may be
    /// omitted; `k` defaults to the largest entry.
    pub fn parse(s: &str, k: Option<u32>) -> Result<Self> {
        let err = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.to_string() };
        let mut cycles: Vec<Vec<u32>> = Vec::new();
        let mut current: Option<Vec<u32>> = None;
        let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
        let bytes = s.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let ch = bytes[i] as char;
            match ch {
                '(' if current.is_none() => current = Some(Vec::new()),
                '(' => return Err(err(i, "nested '('")),
                ')' => match current.take() {
                    Some(c) if c.is_empty() => return Err(err(i, "empty cycle")),
                    Some(c) => cycles.push(c),
                    None => return Err(err(i, "unmatched ')'")),
                },
                c if c.is_ascii_whitespace() || c == ',' => {}
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                    let n: u32 = s[start..i].parse().map_err(|_| err(start, "number too large"))?;
                    if n == 0 {
                        return Err(err(start, "entries start at 1"));
                    }
                    if seen.insert(n, start).is_some() {
                        return Err(err(start, "entry repeated"));
                    }
                    match current.as_mut() {
                        Some(c) => c.push(n),
                        None => return Err(err(start, "number outside parentheses")),
                    }
                    continue;
                }
                _ => return Err(err(i, &format!("unexpected character '{ch}'"))),
            }
            i += 1;
        }
        if current.is_some() {
            return Err(err(s.len(), "unclosed '('"));
        }
        let top = seen.keys().next_back().copied().unwrap_or(1);
        let k = match k {
            Some(k) if k < top => return Err(err(seen[&top], &format!("entry {top} exceeds k = {k}"))),
            Some(k) => k,
            None => top,
        };
        Self::from_cycles(k, &cycles)
    }

    pub fn k(&self) -> u32 {
        self.images.len() as u32
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    pub fn apply(&self, i: u32) -> u32 {
        self.images[i as usize - 1]
    }

    /// `(self ∘ o)(i) = self(o(i))`.
    pub fn compose(&self, o: &Permutation) -> Permutation {
        assert_eq!(self.k(), o.k());
        Permutation { images: o.images.iter().map(|&i| self.apply(i)).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x as usize - 1] = i as u32 + 1;
        }
        Permutation { images }
    }

    /// Order of the permutation (lcm of cycle lengths).
    pub fn order(&self) -> u32 {
        self.cycles().iter().fold(1u32, |acc, c| acc.lcm(&(c.len() as u32)))
    }

    /// Disjoint cycles including fixed points, ordered by their minimum and
    /// each listed from its minimum.
    pub fn cycles(&self) -> Vec<Vec<u32>> {
        let mut done = vec![false; self.images.len()];
        let mut out = Vec::new();
        for start in 1..=self.k() {
            if done[start as usize - 1] {
                continue;
            }
            let mut c = vec![start];
            done[start as usize - 1] = true;
            let mut x = self.apply(start);
            while x != start {
                c.push(x);
                done[x as usize - 1] = true;
                x = self.apply(x);
            }
            out.push(c);
        }
        out
    }

    /// All of `S_k` in lexicographic order of images.
    pub fn all(k: u32) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<u32> = Vec::new();
        fn rec(k: u32, cur: &mut Vec<u32>, out: &mut Vec<Permutation>) {
            if cur.len() == k as usize {
                out.push(Permutation { images: cur.clone() });
                return;
            }
            for x in 1..=k {
                if !cur.contains(&x) {
                    cur.push(x);
                    rec(k, cur, out);
                    cur.pop();
                }
            }
        }
        rec(k, &mut cur, &mut out);
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.cycles() {
            let parts: Vec<String> = c.iter().map(u32::to_string).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

/// `g = h g'_1 ⋯ g'_p h^{-1}` with `g'_i = (o_i+1 ⋯ o_i+k_i)` cycling the
/// `i`-th block of consecutive integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleDecomposition {
    pub lengths: Vec<u32>,
    pub conjugator: Permutation,
    pub canonical: Vec<Permutation>,
}

impl CycleDecomposition {
    /// First slot of each block, 0-based.
    pub fn offsets(&self) -> Vec<u32> {
        self.lengths
            .iter()
            .scan(0, |acc, &l| {
                let o = *acc;
                *acc += l;
                Some(o)
            })
            .collect()
    }

    /// `h g'_1 ⋯ g'_p h^{-1}`.
    pub fn reconstruct(&self) -> Permutation {
        let k = self.conjugator.k();
        let prod = self.canonical.iter().fold(Permutation::identity(k), |acc, c| acc.compose(c));
        self.conjugator.compose(&prod).compose(&self.conjugator.inverse())
    }
}

/// Cycles ordered by minimum; `h` sends block position `o_i + t` to the
/// `t`-th entry of cycle `i` read from its minimum, so a single `k`-cycle
/// gets the conjugator fixing 1.
pub fn decompose(g: &Permutation) -> CycleDecomposition {
    let k = g.k();
    let cycles = g.cycles();
    let lengths: Vec<u32> = cycles.iter().map(|c| c.len() as u32).collect();
    let mut images = Vec::with_capacity(k as usize);
    let mut canonical = Vec::new();
    let mut offset = 0;
    for c in &cycles {
        images.extend_from_slice(c);
        let block: Vec<u32> = (offset + 1..=offset + c.len() as u32).collect();
        canonical.push(Permutation::cycle(k, &block).expect("block inside 1..k"));
        offset += c.len() as u32;
    }
    let conjugator = Permutation::new(images).expect("cycles partition 1..k");
    CycleDecomposition { lengths, conjugator, canonical }
}

/// `ρ(h)`: the content of slot `i` moves to slot `h(i)`.
pub fn conjugate_action(h: &Permutation, v: &TensorState) -> TensorState {
    let mut out = TensorState::new();
    for (t, c) in v.iter() {
        let mut t2 = vec![Partition::vacuum(); t.len()];
        for (i, p) in t.iter().enumerate() {
            t2[h.apply(i as u32 + 1) as usize - 1] = p.clone();
        }
        out.add_term(t2, c.clone());
    }
    out
}

/// A vector of a tensor product of Fock spaces, one factor per cycle.
pub type AssembledState = TensorState;

/// Desk-scale bound on `k` for assembled mode evaluation.
pub const MAX_ASSEMBLED_K: u32 = 4;

/// `h ∘ (T^{k_1}(M) ⊗ ⋯ ⊗ T^{k_p}(M))` with `M` the Fock space: a
/// `g`-twisted `V^{⊗k}`-module. The `g`-twisted field of `v` is the field of
/// `ρ(h)^{-1} v` on the block-canonical product, which factors over blocks.
pub struct AssembledModule {
    pub g: Permutation,
    pub decomposition: CycleDecomposition,
    pub factors: Vec<TwistedModule>,
}

impl AssembledModule {
    pub fn degree(&self, w: &Tensor) -> Rational {
        w.iter()
            .zip(&self.decomposition.lengths)
            .map(|(p, &l)| rat(p.weight() as i64, l as i64))
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// `L_g(0)` eigenvalue on the basis vector `w`.
    pub fn lg0_eigenvalue(&self, w: &Tensor) -> Rational {
        let c = rint(1);
        let shift: Rational = self.decomposition.lengths.iter().map(|&l| crate::twist::lg0_eigenvalue(l, 0, &c)).sum();
        self.degree(w) + shift
    }

    /// `v_m w` with `m ∈ (1/|g|)Z`.
    pub fn mode(&self, v: &TensorState, m: &Rational, w: &AssembledState) -> Result<AssembledState> {
        scaled_mode(self.g.order(), m)?;
        let pulled = conjugate_action(&self.decomposition.conjugator.inverse(), v);
        let mut out = AssembledState::new();
        for (t, c) in pulled.iter() {
            for (wt, d) in w.iter() {
                out.add_scaled(&self.pure_mode(t, m, wt)?, &(c * d));
            }
        }
        Ok(out)
    }

    /// `Π_i Y^{(i)}(v_i, z)` on `w_1 ⊗ ⋯ ⊗ w_p`; the coefficient of
    /// `z^{-m-1}` collects `q_1 + ⋯ + q_p = m + 1 - p`.
    fn pure_mode(&self, t: &Tensor, m: &Rational, w: &Tensor) -> Result<AssembledState> {
        let offs = self.decomposition.offsets();
        let lens = &self.decomposition.lengths;
        let p = lens.len();
        let blocks: Vec<TensorState> = (0..p)
            .map(|i| TensorState::basis(t[offs[i] as usize..(offs[i] + lens[i]) as usize].to_vec()))
            .collect();
        let wts: Vec<u32> = (0..p).map(|i| tensor_weight(&t[offs[i] as usize..(offs[i] + lens[i]) as usize].to_vec())).collect();
        // Largest mode of factor i that does not kill w_i.
        let upper: Vec<Rational> = (0..p)
            .map(|i| rat(w[i].weight() as i64, lens[i] as i64) + rint(wts[i] as i64) - rint(1))
            .collect();
        let total = m + rint(1) - rint(p as i64);
        let mut out = AssembledState::new();
        let mut qs: Vec<Rational> = Vec::with_capacity(p);
        self.enumerate(&blocks, w, &upper, &total, &mut qs, &mut out)?;
        Ok(out)
    }

    fn enumerate(
        &self,
        blocks: &[TensorState],
        w: &Tensor,
        upper: &[Rational],
        total: &Rational,
        qs: &mut Vec<Rational>,
        out: &mut AssembledState,
    ) -> Result<()> {
        let i = qs.len();
        let p = blocks.len();
        let used: Rational = qs.iter().cloned().sum();
        let lens = &self.decomposition.lengths;
        if i + 1 == p {
            let q = total - used;
            if q > upper[i] || !(&q * rint(lens[i] as i64)).is_integer() {
                return Ok(());
            }
            qs.push(q);
            let mut acc = AssembledState::term(Vec::new(), Scalar::from_int(1));
            for (j, q) in qs.iter().enumerate() {
                let img = self.factors[j].tensor_mode(&blocks[j], q, &FockVector::basis(w[j].clone()))?;
                let mut next = AssembledState::new();
                for (pre, c) in acc.iter() {
                    for (part, d) in img.iter() {
                        let mut key = pre.clone();
                        key.push(part.clone());
                        next.add_term(key, c * d);
                    }
                }
                acc = next;
                if acc.is_empty() {
                    break;
                }
            }
            out.add_scaled(&acc, &Scalar::from_int(1));
            qs.pop();
            return Ok(());
        }
        let rest_upper: Rational = upper[i + 1..].iter().cloned().sum();
        let lo = total - &used - rest_upper;
        let k = lens[i] as i64;
        let mut j = (&lo * rint(k)).ceil().to_integer().to_i64().expect("small");
        loop {
            let q = rat(j, k);
            if q > upper[i] {
                break;
            }
            qs.push(q);
            self.enumerate(blocks, w, upper, total, qs, out)?;
            qs.pop();
            j += 1;
        }
        Ok(())
    }
}

/// Builds the `g`-twisted module for `g ∈ S_k`, `k ≤ 4`.
pub fn assemble(g: &Permutation) -> Result<AssembledModule> {
    if g.k() > MAX_ASSEMBLED_K {
        return Err(Error::CapExceeded(format!("assembled modules need k <= {MAX_ASSEMBLED_K}, got {}", g.k())));
    }
    let decomposition = decompose(g);
    let factors = decomposition.lengths.iter().map(|&l| TwistedModule::new(l)).collect();
    Ok(AssembledModule { g: g.clone(), decomposition, factors })
}

/// Basis of the assembled space: tensors of Fock basis vectors with total
/// untwisted weight `≤ cap`.
pub fn assembled_basis(p: usize, cap: u32) -> Vec<Tensor> {
    let mut out: Vec<Tensor> = vec![Vec::new()];
    for _ in 0..p {
        let mut next = Vec::new();
        for t in &out {
            let used = tensor_weight(t);
            for wt in 0..=cap - used {
                for q in crate::heisenberg::basis(wt) {
                    let mut t2 = t.clone();
                    t2.push(q);
                    next.push(t2);
                }
            }
        }
        out = next;
    }
    out
}

/// `P_r a = (1/L) Σ_s η_L^{-rs} ρ(g)^s a`, the `η_L^r`-eigencomponent of `a`
/// for `g` of order `L`.
pub fn eigen_component(g: &Permutation, a: &TensorState, r: i64) -> TensorState {
    let l = g.order();
    let mut out = TensorState::new();
    let mut cur = a.clone();
    for s in 0..l as i64 {
        let c = Scalar::eta_pow(l, -r * s) * Scalar::from_rational(rat(1, l as i64));
        out.add_scaled(&cur, &c);
        cur = conjugate_action(g, &cur);
    }
    out
}

/// `[(u^i)_m, b_n] = Σ_l C(m,l) ((P_r u^i)_{(l)} b)_{m+n-l}` with `r = |g| m`
/// mod `|g|`, for `m, n ∈ (1/|g|)Z ∩ [lo, hi]` and basis vectors of weight `≤ cap`.
pub fn assembled_commutator_residual(
    am: &AssembledModule,
    u: &FockVector,
    i: u32,
    b: &TensorState,
    window: (i64, i64),
    cap: u32,
) -> Result<Residual> {
    commutator_residual_with(am, u, i, b, window, cap, true)
}

fn commutator_residual_with(
    am: &AssembledModule,
    u: &FockVector,
    i: u32,
    b: &TensorState,
    (lo, hi): (i64, i64),
    cap: u32,
    project: bool,
) -> Result<Residual> {
    let k = am.g.k();
    let l = am.g.order();
    let a = crate::twist::slot_vector(k, i, u);
    let wu = u.weight()?;
    let wb = crate::twist::tensor_state_weight(b)?;
    let mut r = Residual::default();
    for w in assembled_basis(am.factors.len(), cap) {
        let wv = AssembledState::basis(w.clone());
        for m in crate::twist::mode_range(l, lo, hi) {
            let rr = scaled_mode(l, &m)?.rem_euclid(l as i64);
            let pa = if project { eigen_component(&am.g, &a, rr) } else { a.clone() };
            for n in crate::twist::mode_range(l, lo, hi) {
                let mut lhs = am.mode(&a, &m, &am.mode(b, &n, &wv)?)?;
                lhs.add_scaled(&am.mode(b, &n, &am.mode(&a, &m, &wv)?)?, &Scalar::from_int(-1));
                let mut rhs = AssembledState::new();
                for ll in 0..(wu + wb) as i64 {
                    let prod = slot_products(&pa, ll, b);
                    if prod.is_empty() {
                        continue;
                    }
                    let c = Scalar::from_rational(binomial(&m, ll as u32));
                    rhs.add_scaled(&am.mode(&prod, &(&m + &n - rint(ll)), &wv)?, &c);
                }
                r.record(lhs != rhs, || format!("m={} n={} w={w:?}", fmt_rat(&m), fmt_rat(&n)));
            }
        }
    }
    Ok(r)
}

/// `a_{(l)} b` in `V^{⊗k}` for `a` a combination of single-slot tensors.
fn slot_products(a: &TensorState, l: i64, b: &TensorState) -> TensorState {
    let mut out = TensorState::new();
    for (ta, ca) in a.iter() {
        let occupied: Vec<usize> = (0..ta.len()).filter(|&s| !ta[s].is_vacuum()).collect();
        assert!(occupied.len() <= 1, "slot_products needs single-slot tensors");
        let Some(&s) = occupied.first() else {
            if l == -1 {
                out.add_scaled(b, ca);
            }
            continue;
        };
        let u = FockVector::basis(ta[s].clone());
        for (tb, cb) in b.iter() {
            let x = crate::heisenberg::vertex_mode(&u, l, &FockVector::basis(tb[s].clone()));
            for (p, d) in x.iter() {
                let mut t2 = tb.clone();
                t2[s] = p.clone();
                out.add_term(t2, &(ca * cb) * d);
            }
        }
    }
    out
}

/// `Y(ρ(g) v)_m = e^{-2πi m} Y(v)_m`: the module is `g`-twisted.
pub fn assembled_twist_residual(am: &AssembledModule, v: &TensorState, (lo, hi): (i64, i64), cap: u32) -> Result<Residual> {
    let l = am.g.order();
    let gv = conjugate_action(&am.g, v);
    let mut r = Residual::default();
    for w in assembled_basis(am.factors.len(), cap) {
        let wv = AssembledState::basis(w.clone());
        for m in crate::twist::mode_range(l, lo, hi) {
            let lhs = am.mode(&gv, &m, &wv)?;
            let rhs = Coeff::scale(&am.mode(v, &m, &wv)?, &Scalar::eta_pow(l, scaled_mode(l, &m)?));
            r.record(lhs != rhs, || format!("m={} w={w:?}", fmt_rat(&m)));
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// Characters.

/// One entry `coeff · q^{exponent}` of a character.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharTerm {
    pub exponent: Rational,
    pub coeff: u64,
}

/// `Π_i q^{(k_i²-1)c/(24k_i)} Σ_n p(n) q^{n/k_i}` over cycles of length
/// `k_i`, first `terms` exponents in increasing order.
pub fn twisted_character_from_lengths(lengths: &[u32], c: &Rational, terms: usize) -> Result<Vec<CharTerm>> {
    let cutoff = terms as i64;
    let mut acc: BTreeMap<Rational, u64> = BTreeMap::new();
    acc.insert(Rational::zero(), 1);
    for &l in lengths {
        let counts = partition_counts((cutoff * l as i64) as usize);
        let mut next: BTreeMap<Rational, u64> = BTreeMap::new();
        for (e, a) in &acc {
            for (n, &pn) in counts.iter().enumerate() {
                let e2 = e + rat(n as i64, l as i64);
                if e2 > rint(cutoff) {
                    break;
                }
                let prod = a.checked_mul(pn).ok_or_else(|| Error::CapExceeded("character coefficient overflows u64".into()))?;
                let slot = next.entry(e2).or_insert(0);
                *slot = slot.checked_add(prod).ok_or_else(|| Error::CapExceeded("character coefficient overflows u64".into()))?;
            }
        }
        acc = next;
    }
    let shift: Rational = lengths.iter().map(|&l| crate::twist::lg0_eigenvalue(l, 0, c)).sum();
    Ok(acc.into_iter().take(terms).map(|(e, coeff)| CharTerm { exponent: e + &shift, coeff }).collect())
}

/// Graded dimension of the `g`-twisted module: `Σ dim · q^{L_g(0)}`.
pub fn twisted_character(g: &Permutation, c: &Rational, terms: usize) -> Result<Vec<CharTerm>> {
    twisted_character_from_lengths(&decompose(g).lengths, c, terms)
}

pub fn character_to_json(ch: &[CharTerm]) -> Value {
    Value::Array(ch.iter().map(|t| json!({"exponent": fmt_rat(&t.exponent), "coeff": t.coeff})).collect())
}

/// Multiplies two characters exactly up to the smaller known range and
/// returns the first `terms` entries.
pub fn character_product(a: &[CharTerm], b: &[CharTerm], terms: usize) -> Vec<CharTerm> {
    let (Some(a0), Some(b0)) = (a.first(), b.first()) else {
        return Vec::new();
    };
    let ra = &a.last().unwrap().exponent - &a0.exponent;
    let rb = &b.last().unwrap().exponent - &b0.exponent;
    let reach = if ra < rb { ra } else { rb };
    let base = &a0.exponent + &b0.exponent;
    let mut acc: BTreeMap<Rational, u64> = BTreeMap::new();
    for x in a {
        for y in b {
            let e = &x.exponent + &y.exponent;
            if e - &base <= reach {
                *acc.entry(&x.exponent + &y.exponent).or_insert(0) += x.coeff * y.coeff;
            }
        }
    }
    acc.into_iter().take(terms).map(|(exponent, coeff)| CharTerm { exponent, coeff }).collect()
}
