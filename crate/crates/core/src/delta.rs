//! The operator `Δ_k(z) = exp(Σ_j a_j z^{-j/k} L(j)) k^{-L(0)} z^{(1/k-1)L(0)}`
//! on the Fock space, its inverse, and the identities it satisfies.
//!
//! On a vector of weight `p` the result is a finite sum: `L(j)` for `j ≥ 1`
//! lowers weight, so the exponential terminates.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use serde_json::{json, Value};

use crate::derivation::solve_a_coeffs;
use crate::error::Result;
use crate::heisenberg::{vertex_mode, virasoro_mode, FockVector, Partition};
use crate::scalars::{fmt_rat, rat, rint, Rational, Scalar};
use crate::series::{binomial_expand, Coeff, Residual, Series};

/// One summand `vector · z^{exponent}`; `vector` has weight `p - i` for
/// `Δ_k(z)` and the same for the inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaTerm {
    pub i: u32,
    pub exponent: Rational,
    pub vector: FockVector,
}

/// `Δ_k(z) u` (or its inverse) as a finite list of homogeneous pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaExpansion {
    pub k: u32,
    pub weight: u32,
    pub inverse: bool,
    pub terms: Vec<DeltaTerm>,
}

impl DeltaExpansion {
    /// The expansion as an exact series in `z`.
    pub fn to_series(&self) -> Series<FockVector> {
        let mut s = Series::zero(&[("z", self.k)]);
        for t in &self.terms {
            s.add_term(vec![t.exponent.clone()], t.vector.clone());
        }
        s
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|t| json!({"i": t.i, "exponent": fmt_rat(&t.exponent), "vector": t.vector.to_json()}))
                .collect(),
        )
    }
}

thread_local! {
    static A_CACHE: RefCell<HashMap<u32, Vec<Rational>>> = RefCell::new(HashMap::new());
    static DELTA_CACHE: RefCell<HashMap<(u32, bool, Partition), DeltaExpansion>> = RefCell::new(HashMap::new());
}

/// `a_1, …, a_depth` for `k`, cached per thread.
fn a_coeffs(k: u32, depth: usize) -> Vec<Rational> {
    A_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        let have = c.get(&k).map_or(0, Vec::len);
        if have < depth {
            let a = solve_a_coeffs(k, depth.max(8)).expect("k >= 1").coeffs;
            c.insert(k, a);
        }
        c[&k][..depth].to_vec()
    })
}

/// `exp(s Σ_j a_j L(j)) v` for `v` of weight `p`, split by weight.
fn exp_virasoro(k: u32, sign: i64, v: &FockVector, p: u32) -> BTreeMap<u32, FockVector> {
    let a = a_coeffs(k, p.max(1) as usize);
    let mut total: BTreeMap<u32, FockVector> = BTreeMap::new();
    total.insert(p, v.clone());
    let mut term = total.clone();
    for r in 1..=p as i64 {
        let mut next: BTreeMap<u32, FockVector> = BTreeMap::new();
        for (w, x) in &term {
            for j in 1..=*w {
                let c = Scalar::from_rational(&a[j as usize - 1] * rat(sign, r));
                if c.is_zero() {
                    continue;
                }
                let y = virasoro_mode(j as i64, x);
                if !y.is_empty() {
                    next.entry(w - j).or_default().add_scaled(&y, &c);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        for (w, x) in &next {
            total.entry(*w).or_default().add_scaled(x, &Scalar::one());
        }
        term = next;
    }
    total.retain(|_, x| !x.is_empty());
    total
}

fn kpow(k: u32, e: i64) -> Scalar {
    Scalar::from_int(k as i64).pow(e).expect("k >= 1")
}

fn delta_basis(k: u32, inverse: bool, p: &Partition) -> DeltaExpansion {
    let key = (k, inverse, p.clone());
    if let Some(hit) = DELTA_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    let w = p.weight();
    let kth = rat(1, k as i64);
    let v = FockVector::basis(p.clone());
    let mut terms = Vec::new();
    if !inverse {
        let pre = kpow(k, -(w as i64));
        for (wt, x) in exp_virasoro(k, 1, &v, w).into_iter().rev() {
            let i = w - wt;
            let exponent = (&kth - rint(1)) * rint(w as i64) - rint(i as i64) * &kth;
            terms.push(DeltaTerm { i, exponent, vector: Coeff::scale(&x, &pre) });
        }
    } else {
        for (wt, x) in exp_virasoro(k, -1, &v, w).into_iter().rev() {
            let i = w - wt;
            let exponent = (rint(1) - &kth) * rint(w as i64) - rint(i as i64);
            terms.push(DeltaTerm { i, exponent, vector: Coeff::scale(&x, &kpow(k, wt as i64)) });
        }
    }
    let d = DeltaExpansion { k, weight: w, inverse, terms };
    DELTA_CACHE.with(|c| c.borrow_mut().insert(key, d.clone()));
    d
}

fn combine(k: u32, inverse: bool, u: &FockVector) -> Result<DeltaExpansion> {
    let weight = u.weight()?;
    let mut by_i: BTreeMap<u32, DeltaTerm> = BTreeMap::new();
    for (p, c) in u.iter() {
        for t in delta_basis(k, inverse, p).terms {
            let e = by_i.entry(t.i).or_insert_with(|| DeltaTerm {
                i: t.i,
                exponent: t.exponent.clone(),
                vector: FockVector::new(),
            });
            e.vector.add_scaled(&t.vector, c);
        }
    }
    let terms = by_i.into_values().filter(|t| !t.vector.is_empty()).collect();
    Ok(DeltaExpansion { k, weight, inverse, terms })
}

/// `Δ_k(z) u = Σ_i u(i) z^{(1/k-1)p - i/k}` for `u` homogeneous of weight `p`,
/// with `u(i)` of weight `p - i`.
pub fn delta_apply(k: u32, u: &FockVector) -> Result<DeltaExpansion> {
    combine(k, false, u)
}

/// `Δ_k(z)^{-1} u = z^{-(1/k-1)L(0)} k^{L(0)} exp(-Σ a_j z^{-j/k} L(j)) u`;
/// the weight-`p - i` piece carries `z^{(1-1/k)p - i}`.
pub fn delta_inverse_apply(k: u32, u: &FockVector) -> Result<DeltaExpansion> {
    combine(k, true, u)
}

/// Applies `Δ_k(z)^{±1}` to a finite series of vectors in `z`.
pub fn delta_on_series(k: u32, inverse: bool, s: &Series<FockVector>) -> Result<Series<FockVector>> {
    let mut out = Series::from_vars(s.vars().to_vec());
    for (e, v) in s.terms() {
        for (_, comp) in v.components() {
            for t in combine(k, inverse, &comp)?.terms {
                out.add_term(vec![&e[0] + &t.exponent], t.vector);
            }
        }
    }
    Ok(out)
}

fn zmono(k: u32, e: Rational, c: Rational) -> Series<Scalar> {
    Series::monomial(&[("z", k)], vec![e], Scalar::from_rational(c))
}

fn l_minus_one(v: &FockVector) -> FockVector {
    virasoro_mode(-1, v)
}

/// `Δ(z)L(-1)u - (1/k) z^{1/k-1} L(-1)Δ(z)u` versus `∂_z Δ(z)u`.
pub fn derivative_identity_residual(k: u32, u: &FockVector) -> Result<Residual> {
    let kth = rat(1, k as i64);
    let du = delta_apply(k, u)?.to_series();
    let lhs1 = delta_apply(k, &l_minus_one(u))?.to_series();
    let lhs2 = zmono(k, &kth - rint(1), kth.clone()).mul(&du.map_coeffs(l_minus_one))?;
    lhs1.sub(&lhs2)?.residual(&du.derivative(0))
}

/// `Δ(z)^{-1}L(-1)u - k z^{1-1/k} L(-1)Δ(z)^{-1}u` versus
/// `k z^{1-1/k} ∂_z Δ(z)^{-1}u`.
pub fn inverse_derivative_identity_residual(k: u32, u: &FockVector) -> Result<Residual> {
    let kth = rat(1, k as i64);
    let pref = zmono(k, rint(1) - &kth, rint(k as i64));
    let du = delta_inverse_apply(k, u)?.to_series();
    let lhs1 = delta_inverse_apply(k, &l_minus_one(u))?.to_series();
    let lhs2 = pref.mul(&du.map_coeffs(l_minus_one))?;
    lhs1.sub(&lhs2)?.residual(&pref.mul(&du.derivative(0))?)
}

fn zz0(k: u32) -> [(&'static str, u32); 2] {
    [("z", k), ("z0", 1)]
}

/// `X = (z + z0)^{1/k} - z^{1/k}`, known through `z0^{order}`.
fn root_difference(k: u32, order: u32) -> Series<Scalar> {
    let kth = rat(1, k as i64);
    let b = binomial_expand(&kth, 1, order);
    let root = Series::monomial(&zz0(k), vec![kth, Rational::zero()], Scalar::one());
    b.sub(&root).expect("same variables")
}

/// Both sides of `Δ(z) Y(u, z0) Δ(z)^{-1} = Y(Δ(z+z0)u, (z+z0)^{1/k} - z^{1/k})`
/// applied to `w`, projected to weight `b`, through `z0^{order}`.
pub fn conjugation_sides(k: u32, u: &FockVector, w: &FockVector, b: u32, order: u32) -> Result<(Series<FockVector>, Series<FockVector>)> {
    let p = u.weight()? as i64;
    let a = w.weight()? as i64;
    let ord = order as i64;
    let vars = zz0(k);
    let z0_window = |s: Series<FockVector>| s.truncate(1, None, Some(rint(ord)));

    let mut lhs: Series<FockVector> = z0_window(Series::zero(&vars));
    for t in delta_inverse_apply(k, w)?.terms {
        let ai = a - t.i as i64;
        for e0 in -(ai + p)..=ord {
            let x = vertex_mode(u, -e0 - 1, &t.vector);
            if x.is_empty() {
                continue;
            }
            for s in delta_apply(k, &x)?.terms {
                if x.weight()? as i64 - s.i as i64 == b as i64 {
                    lhs.add_term(vec![&t.exponent + &s.exponent, rint(e0)], s.vector);
                }
            }
        }
    }

    let x_root = root_difference(k, order + 2 + (a + p) as u32);
    let mut rhs: Series<FockVector> = z0_window(Series::zero(&vars));
    for t in delta_apply(k, u)?.terms {
        let n = p - t.i as i64 + a - 1 - b as i64;
        let vec = vertex_mode(&t.vector, n, w);
        let big_n = -n - 1;
        if vec.is_empty() || big_n > ord {
            continue;
        }
        let need = (ord - big_n) as u32;
        let xn = x_root.clone().truncate(1, None, Some(rint(need as i64 + 1))).pow(big_n, 1, need)?;
        let shift = binomial_expand(&t.exponent, 1, need).mul(&xn)?;
        let vs = Series::monomial(&vars, vec![Rational::zero(), Rational::zero()], vec);
        rhs = rhs.add(&shift.mul(&vs)?)?;
    }
    Ok((lhs, rhs))
}

/// Residual of the conjugation identity for `u` over all basis vectors `w`
/// of weight `≤ cap` and target weights `≤ cap`, through `z0^{order}`.
pub fn conjugation_residual(k: u32, u: &FockVector, cap: u32, order: u32) -> Result<Residual> {
    let mut r = Residual::default();
    for a in 0..=cap {
        for pw in crate::heisenberg::basis(a) {
            let w = FockVector::basis(pw);
            for b in 0..=cap {
                let (lhs, rhs) = conjugation_sides(k, u, &w, b, order)?;
                let lo = -((a + u.weight()?) as i64) - 1;
                let bx = [None, Some((rint(lo), rint(order as i64)))];
                r.merge(lhs.residual_on_box(&rhs, &bx)?);
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::basis;

    fn all_states(cap: u32) -> Vec<FockVector> {
        (0..=cap).flat_map(basis).map(FockVector::basis).collect()
    }

    #[test]
    fn highest_weight_and_vacuum() {
        for k in 1..=4u32 {
            let one = FockVector::vacuum();
            let d = delta_apply(k, &one).unwrap();
            assert_eq!(d.terms, vec![DeltaTerm { i: 0, exponent: Rational::zero(), vector: one.clone() }]);
            assert_eq!(delta_inverse_apply(k, &one).unwrap().terms.len(), 1);
            let a = FockVector::state(&[1]);
            let d = delta_apply(k, &a).unwrap();
            assert_eq!(d.terms.len(), 1);
            assert_eq!(d.terms[0].exponent, rat(1, k as i64) - rint(1));
            assert_eq!(d.terms[0].vector, Coeff::scale(&a, &Scalar::from_rational(rat(1, k as i64))));
            let di = delta_inverse_apply(k, &a).unwrap();
            assert_eq!(di.terms[0].exponent, rint(1) - rat(1, k as i64));
            assert_eq!(di.terms[0].vector, Coeff::scale(&a, &Scalar::from_int(k as i64)));
        }
    }

    #[test]
    fn omega_expansion() {
        let d = delta_apply(2, &FockVector::omega()).unwrap();
        assert_eq!(d.terms.len(), 2);
        assert_eq!(d.terms[0].exponent, rint(-1));
        assert_eq!(d.terms[0].vector, Coeff::scale(&FockVector::omega(), &Scalar::from_rational(rat(1, 4))));
        assert_eq!(d.terms[1].exponent, rint(-2));
        assert_eq!(d.terms[1].vector, Coeff::scale(&FockVector::vacuum(), &Scalar::from_rational(rat(1, 32))));
        // General k with c = 1: (z^{2(1/k-1)}/k^2)(ω + ((k^2-1)/24) z^{-2/k} 𝟏).
        for k in 1..=5i64 {
            let d = delta_apply(k as u32, &FockVector::omega()).unwrap();
            let vac = d.terms.iter().find(|t| t.i == 2).map(|t| t.vector.get(&Partition::vacuum()));
            let want = rat(k * k - 1, 24 * k * k);
            assert_eq!(vac.unwrap_or_else(Scalar::zero), Scalar::from_rational(want));
        }
    }

    /// Composes two expansions, collecting by exponent.
    fn compose(k: u32, outer_inverse: bool, d: &DeltaExpansion) -> Series<FockVector> {
        delta_on_series(k, outer_inverse, &d.to_series()).unwrap()
    }

    #[test]
    fn inverse_round_trip() {
        for k in [2u32, 3] {
            for u in all_states(5) {
                let there = delta_apply(k, &u).unwrap();
                let back = compose(k, true, &there);
                let want = Series::monomial(&[("z", k)], vec![Rational::zero()], u.clone());
                assert_eq!(back, want, "k={k} u={u}");
                let other = compose(k, false, &delta_inverse_apply(k, &u).unwrap());
                assert_eq!(other, want);
            }
        }
        assert!(delta_apply(2, &{
            let mut v = FockVector::state(&[1]);
            v.add_term(Partition::vacuum(), Scalar::one());
            v
        })
        .is_err());
    }

    #[test]
    fn derivative_identities() {
        for k in [2u32, 3] {
            for u in all_states(4) {
                let r = derivative_identity_residual(k, &u).unwrap();
                assert!(r.is_zero(), "k={k} u={u}: {}", r.summary());
                let r = inverse_derivative_identity_residual(k, &u).unwrap();
                assert!(r.is_zero(), "inverse k={k} u={u}: {}", r.summary());
            }
        }
    }

    #[test]
    fn conjugation_identity_small() {
        for u in [FockVector::vacuum(), FockVector::state(&[1]), FockVector::omega()] {
            let r = conjugation_residual(2, &u, 2, 2).unwrap();
            assert!(r.is_zero() && r.compared > 0, "u={u}: {}", r.summary());
        }
    }

    #[test]
    fn conjugation_detects_errors() {
        // Dropping the correction term of Δ ω must break the identity.
        let u = FockVector::omega();
        let w = FockVector::state(&[1, 1]);
        let (lhs, rhs) = conjugation_sides(2, &u, &w, 0, 2).unwrap();
        let bx = [None, Some((rint(-6), rint(2)))];
        assert!(lhs.residual_on_box(&rhs, &bx).unwrap().is_zero());
        let wrong = rhs.scale(&Scalar::from_int(2));
        assert!(!lhs.residual_on_box(&wrong, &bx).unwrap().is_zero());
    }
}
