//! Exact scalars: arbitrary-precision rationals and elements of cyclotomic
//! fields ℚ(ζ_N).
//!
//! A [`Cyclotomic`] is stored as a polynomial in ζ = e^{2πi/N} reduced modulo
//! the N-th cyclotomic polynomial Φ_N, so every nonzero element is invertible.
//! Mixed-order arithmetic lifts both operands to the lcm of their orders.
//! Elements that lie in ℚ are always stored at order 1, which keeps the common
//! rational case on a fast path.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number, always in lowest terms.
pub type Rational = num_rational::BigRational;

/// Rational `p/q`. Panics if `q == 0`.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Integer as a rational.
pub fn rint(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Formats a rational as `p/q` (or `p` when integral).
pub fn fmt_rat(r: &Rational) -> String {
    r.to_string()
}

/// Parses `p`, `-p`, or `p/q`.
pub fn parse_rat(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = |pos: usize| Error::Parse {
        pos,
        msg: format!("not a rational: {s:?}"),
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad(0))?;
            let q: BigInt = q.trim().parse().map_err(|_| bad(p.to_string().len() + 1))?;
            if q.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad(0))?)),
    }
}

/// Generalised binomial coefficient C(r, m) = r(r-1)...(r-m+1)/m!.
pub fn binomial(r: &Rational, m: u32) -> Rational {
    let mut acc = Rational::one();
    for i in 0..m {
        acc = acc * (r - rint(i as i64)) / rint(i as i64 + 1);
    }
    acc
}

/// n! as a rational.
pub fn factorial(n: u32) -> Rational {
    (1..=n as i64).fold(Rational::one(), |a, i| a * rint(i))
}

/// Returns the integer value of `r` if it is integral.
pub fn as_integer(r: &Rational) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

/// Euler's totient.
pub fn totient(n: u32) -> u32 {
    (1..=n).filter(|&d| d.gcd(&n) == 1).count() as u32
}

// ---------------------------------------------------------------------------
// Dense rational polynomials (coefficient of x^i at index i).

type Poly = Vec<Rational>;

fn trim(p: &mut Poly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Rational::zero);
            let y = b.get(i).cloned().unwrap_or_else(Rational::zero);
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

/// Quotient and remainder of `a` by a nonzero `b`.
fn poly_divmod(a: &[Rational], b: &[Rational]) -> (Poly, Poly) {
    let mut r: Poly = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![Rational::zero(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let shift = r.len() - 1 - db;
        let c = r.last().unwrap() / &lead;
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] -= &c * bc;
        }
        q[shift] = c;
        r.pop();
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

/// Coefficients of the N-th cyclotomic polynomial (monic, integer entries).
pub fn cyclotomic_polynomial(n: u32) -> Vec<Rational> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Vec<Rational>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 = prod_{d | n} Phi_d
    let mut p: Poly = vec![Rational::zero(); n as usize + 1];
    p[0] = -Rational::one();
    p[n as usize] = Rational::one();
    for d in 1..n {
        if n.is_multiple_of(d) {
            let (q, _) = poly_divmod(&p, &cyclotomic_polynomial(d));
            p = q;
        }
    }
    cache.lock().unwrap().insert(n, p.clone());
    p
}

fn reduce_mod_phi(p: &[Rational], n: u32) -> Poly {
    let phi = cyclotomic_polynomial(n);
    poly_divmod(p, &phi).1
}

// ---------------------------------------------------------------------------

/// Exact element of ℚ(ζ_N), ζ_N = e^{2πi/N}.
#[derive(Clone, Debug)]
pub struct Cyclotomic {
    order: u32,
    /// Coefficients in the power basis 1, ζ, …, ζ^{φ(N)-1}; no trailing zeros.
    coeffs: Vec<Rational>,
}

/// The scalar type used throughout the crate.
pub type Scalar = Cyclotomic;

impl Cyclotomic {
    fn from_poly(order: u32, mut coeffs: Poly) -> Self {
        trim(&mut coeffs);
        if coeffs.len() <= 1 {
            Cyclotomic { order: 1, coeffs }
        } else {
            Cyclotomic { order, coeffs }
        }
    }

    pub fn zero() -> Self {
        Cyclotomic {
            order: 1,
            coeffs: Vec::new(),
        }
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(r: Rational) -> Self {
        Self::from_poly(1, vec![r])
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rint(n))
    }

    /// ζ_N^{j mod N}.
    pub fn root_of_unity(n: u32, j: i64) -> Self {
        assert!(n >= 1, "root_of_unity needs N >= 1");
        let e = j.rem_euclid(n as i64) as usize;
        let mut p = vec![Rational::zero(); e + 1];
        p[e] = Rational::one();
        Self::from_poly(n, reduce_mod_phi(&p, n))
    }

    /// η^j for η = e^{-2πi/k} = ζ_k^{-1}.
    pub fn eta_pow(k: u32, j: i64) -> Self {
        Self::root_of_unity(k, -j)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.order == 1 && self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn to_rational(&self) -> Option<Rational> {
        match self.coeffs.len() {
            0 => Some(Rational::zero()),
            1 => Some(self.coeffs[0].clone()),
            _ => None,
        }
    }

    /// Re-expresses the element in ℚ(ζ_n); `n` must be a multiple of the order.
    pub fn lift(&self, n: u32) -> Self {
        assert!(n.is_multiple_of(self.order), "cannot lift order {} to {}", self.order, n);
        if n == self.order || self.coeffs.len() <= 1 {
            return self.clone();
        }
        let step = (n / self.order) as usize;
        let mut p = vec![Rational::zero(); (self.coeffs.len() - 1) * step + 1];
        for (e, c) in self.coeffs.iter().enumerate() {
            p[e * step] = c.clone();
        }
        Self::from_poly(n, reduce_mod_phi(&p, n))
    }

    fn common(a: &Self, b: &Self) -> (u32, Poly, Poly) {
        if a.order == b.order {
            return (a.order, a.coeffs.clone(), b.coeffs.clone());
        }
        let n = a.order.lcm(&b.order);
        let (x, y) = (a.lift(n), b.lift(n));
        (n, x.coeffs, y.coeffs)
    }

    fn add_ref(&self, o: &Self) -> Self {
        if self.order == 1 && o.order == 1 {
            return Self::rat_op(self, o, |x, y| x + y);
        }
        let (n, a, b) = Self::common(self, o);
        let len = a.len().max(b.len());
        let p = (0..len)
            .map(|i| {
                a.get(i).cloned().unwrap_or_else(Rational::zero)
                    + b.get(i).cloned().unwrap_or_else(Rational::zero)
            })
            .collect();
        Self::from_poly(n, p)
    }

    fn mul_ref(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if self.order == 1 && o.order == 1 {
            return Self::rat_op(self, o, |x, y| x * y);
        }
        let (n, a, b) = Self::common(self, o);
        Self::from_poly(n, reduce_mod_phi(&poly_mul(&a, &b), n))
    }

    fn rat_op(a: &Self, b: &Self, f: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        let z = Rational::zero();
        let x = a.coeffs.first().unwrap_or(&z);
        let y = b.coeffs.first().unwrap_or(&z);
        Self::from_poly(1, vec![f(x, y)])
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    /// Multiplicative inverse, via the extended Euclidean algorithm against Φ_N.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.order == 1 {
            return Ok(Self::from_rational(self.coeffs[0].recip()));
        }
        let n = self.order;
        // Invariant: s_i * a ≡ r_i (mod Φ_N).
        let (mut r0, mut r1) = (cyclotomic_polynomial(n), self.coeffs.clone());
        let (mut s0, mut s1): (Poly, Poly) = (Vec::new(), vec![Rational::one()]);
        while !(r1.len() == 1) {
            let (q, r) = poly_divmod(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        let c = r1[0].recip();
        let s: Poly = s1.iter().map(|x| x * &c).collect();
        Ok(Self::from_poly(n, reduce_mod_phi(&s, n)))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Self::one();
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul_ref(&base);
        }
        Ok(acc)
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, o: &Self) -> bool {
        if self.order == o.order {
            return self.coeffs == o.coeffs;
        }
        let (_, a, b) = Self::common(self, o);
        a == b
    }
}

impl Eq for Cyclotomic {}

impl From<Rational> for Cyclotomic {
    fn from(r: Rational) -> Self {
        Self::from_rational(r)
    }
}

impl From<i64> for Cyclotomic {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

macro_rules! bin_op {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Cyclotomic> for &Cyclotomic {
            type Output = Cyclotomic;
            fn $m(self, o: &Cyclotomic) -> Cyclotomic {
                $body(self, o)
            }
        }
        impl $tr<Cyclotomic> for Cyclotomic {
            type Output = Cyclotomic;
            fn $m(self, o: Cyclotomic) -> Cyclotomic {
                $body(&self, &o)
            }
        }
        impl $tr<&Cyclotomic> for Cyclotomic {
            type Output = Cyclotomic;
            fn $m(self, o: &Cyclotomic) -> Cyclotomic {
                $body(&self, o)
            }
        }
        impl $tr<Cyclotomic> for &Cyclotomic {
            type Output = Cyclotomic;
            fn $m(self, o: Cyclotomic) -> Cyclotomic {
                $body(self, &o)
            }
        }
    };
}

bin_op!(Add, add, |a: &Cyclotomic, b: &Cyclotomic| a.add_ref(b));
bin_op!(Sub, sub, |a: &Cyclotomic, b: &Cyclotomic| a.add_ref(&-b));
bin_op!(Mul, mul, |a: &Cyclotomic, b: &Cyclotomic| a.mul_ref(b));
bin_op!(Div, div, |a: &Cyclotomic, b: &Cyclotomic| a
    .mul_ref(&b.inv().expect("division by zero")));

impl Neg for &Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        -&self
    }
}

impl AddAssign<&Cyclotomic> for Cyclotomic {
    fn add_assign(&mut self, o: &Cyclotomic) {
        *self = self.add_ref(o);
    }
}

impl SubAssign<&Cyclotomic> for Cyclotomic {
    fn sub_assign(&mut self, o: &Cyclotomic) {
        *self = self.add_ref(&-o);
    }
}

impl MulAssign<&Cyclotomic> for Cyclotomic {
    fn mul_assign(&mut self, o: &Cyclotomic) {
        *self = self.mul_ref(o);
    }
}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match e {
                0 => write!(f, "{a}")?,
                _ if a.is_one() => write!(f, "z{}^{e}", self.order)?,
                _ => write!(f, "{a}*z{}^{e}", self.order)?,
            }
        }
        Ok(())
    }
}

/// Rationals serialise as `"p/q"` strings, other elements as
/// `{"order": N, "coeffs": {"e": "p/q", ...}}`.
impl Serialize for Cyclotomic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if let Some(r) = self.to_rational() {
            return s.serialize_str(&fmt_rat(&r));
        }
        struct Coeffs<'a>(&'a [Rational]);
        impl Serialize for Coeffs<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(None)?;
                for (e, c) in self.0.iter().enumerate() {
                    if !c.is_zero() {
                        m.serialize_entry(&e.to_string(), &fmt_rat(c))?;
                    }
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("order", &self.order)?;
        m.serialize_entry("coeffs", &Coeffs(&self.coeffs))?;
        m.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(r: i64) -> Cyclotomic {
        Cyclotomic::from_int(r)
    }

    #[test]
    fn roots_of_unity_basics() {
        assert!(Cyclotomic::root_of_unity(1, 0).is_one());
        assert_eq!(Cyclotomic::root_of_unity(2, 1), c(-1));
        let p = Cyclotomic::root_of_unity(3, 1) * Cyclotomic::root_of_unity(3, 2);
        assert!(p.is_one());
    }

    #[test]
    fn field_arith_examples() {
        let s = Cyclotomic::from(rat(1, 2)) + Cyclotomic::from(rat(1, 3));
        assert_eq!(s, Cyclotomic::from(rat(5, 6)));
        let i = Cyclotomic::root_of_unity(4, 1);
        assert_eq!(&i * &i, c(-1));
        let z3 = Cyclotomic::root_of_unity(3, 1);
        assert_eq!(z3.inv().unwrap(), Cyclotomic::root_of_unity(3, 2));
        assert!((z3.inv().unwrap() * z3).is_one());
        assert_eq!(c(0).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn cyclotomic_polynomials() {
        let as_ints = |n| {
            cyclotomic_polynomial(n)
                .iter()
                .map(|r| r.to_integer().to_i64().unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(as_ints(1), vec![-1, 1]);
        assert_eq!(as_ints(4), vec![1, 0, 1]);
        assert_eq!(as_ints(6), vec![1, -1, 1]);
        assert_eq!(as_ints(12), vec![1, 0, -1, 0, 1]);
        for n in 1..=12 {
            assert_eq!(cyclotomic_polynomial(n).len() as u32 - 1, totient(n));
        }
    }

    #[test]
    fn primitive_order() {
        for n in 1..=12u32 {
            let z = Cyclotomic::root_of_unity(n, 1);
            assert!(z.pow(n as i64).unwrap().is_one());
            for m in 1..n {
                assert!(!z.pow(m as i64).unwrap().is_one(), "zeta_{n}^{m} == 1");
            }
        }
    }

    #[test]
    fn eta_is_inverse_root() {
        for k in 1..=6u32 {
            let eta = Cyclotomic::eta_pow(k, 1);
            assert!((eta * Cyclotomic::root_of_unity(k, 1)).is_one());
        }
    }

    #[test]
    fn serialisation() {
        let v = serde_json::to_value(Cyclotomic::from(rat(-3, 4))).unwrap();
        assert_eq!(v, serde_json::json!("-3/4"));
        let v = serde_json::to_value(Cyclotomic::root_of_unity(3, 1)).unwrap();
        assert_eq!(v, serde_json::json!({"order": 3, "coeffs": {"1": "1"}}));
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rat("-1/2").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat("7").unwrap(), rint(7));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    fn element(n: u32) -> impl Strategy<Value = Cyclotomic> {
        prop::collection::vec((-5i64..=5, 1i64..=4), 0..=(totient(n) as usize)).prop_map(
            move |cs| {
                cs.iter().enumerate().fold(Cyclotomic::zero(), |acc, (e, (p, q))| {
                    acc + Cyclotomic::root_of_unity(n, e as i64).scale(&rat(*p, *q))
                })
            },
        )
    }

    fn order_and_triple() -> impl Strategy<Value = (u32, Cyclotomic, Cyclotomic, Cyclotomic)> {
        (1u32..=12).prop_flat_map(|n| (Just(n), element(n), element(n), element(n)))
    }

    proptest! {
        #[test]
        fn field_axioms((_n, a, b, c) in order_and_triple()) {
            prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
            prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
            prop_assert_eq!(&a * &b, &b * &a);
            if !a.is_zero() {
                prop_assert!((a.inv().unwrap() * &a).is_one());
            }
        }

        #[test]
        fn coercion_compatible((n, a, b, _c) in order_and_triple()) {
            let direct = (&a * &b + &a).lift(2 * n);
            let lifted = &a.lift(2 * n) * &b.lift(2 * n) + a.lift(2 * n);
            prop_assert_eq!(direct, lifted);
        }
    }
}
