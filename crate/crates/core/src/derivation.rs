//! Exponentials of derivation sums on ℚ[x, x^{-1}] and the series built from
//! them: the coefficients `a_j`, the maps `f` and `f^{-1}`, the `Θ_j`
//! series, and the operator `Δ_k^x(z)` with its inverse.
//!
//! Series in `x` with coefficients in `z^{±1/k}` use the variables `(x, z)`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalars::{binomial, rat, rint, Rational, Scalar};
use crate::series::{binomial_expand, BiSeries, Residual, Series, Var};

/// Series in `x` whose coefficients are Laurent series in `z^{1/k}`.
pub type XLaurent = Series<Scalar>;

/// Coefficient rings the derivation flow is evaluated over.
pub trait FlowRing: Clone {
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Result<Self>;
    fn mul(&self, o: &Self) -> Result<Self>;
    fn scale(&self, r: &Rational) -> Self;
}

impl FlowRing for Scalar {
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add(&self, o: &Self) -> Result<Self> {
        Ok(self + o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        Ok(self * o)
    }
    fn scale(&self, r: &Rational) -> Self {
        Scalar::scale(self, r)
    }
}

impl FlowRing for Series<Scalar> {
    fn is_zero(&self) -> bool {
        self.is_empty()
    }
    fn add(&self, o: &Self) -> Result<Self> {
        Series::add(self, o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        Series::mul(self, o)
    }
    fn scale(&self, r: &Rational) -> Self {
        Series::scale(self, &Scalar::from_rational(r.clone()))
    }
}

fn acc<R: FlowRing>(slot: &mut Option<R>, v: R) -> Result<()> {
    *slot = Some(match slot.take() {
        Some(x) => x.add(&v)?,
        None => v,
    });
    Ok(())
}

/// `exp(Σ_j b_j x^{j+1} d/dx) · x^n` through x-degree `n + order`, as the
/// coefficients of `x^n, …, x^{n+order}` (`None` = zero). `one` is the unit
/// of the coefficient ring.
///
/// Each application of the derivation raises the degree by at least one, so
/// every coefficient is a finite sum.
pub fn exp_flow<R: FlowRing>(b: &[R], one: &R, n: i64, order: usize) -> Result<Vec<Option<R>>> {
    let mut total: Vec<Option<R>> = vec![None; order + 1];
    let mut term: Vec<Option<R>> = vec![None; order + 1];
    term[0] = Some(one.clone());
    total[0] = Some(one.clone());
    for r in 1..=order {
        let mut next: Vec<Option<R>> = vec![None; order + 1];
        for (d, c) in term.iter().enumerate() {
            let Some(c) = c else { continue };
            let m = n + d as i64;
            if m == 0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                let nd = d + j + 1;
                if nd > order || bj.is_zero() {
                    continue;
                }
                acc(&mut next[nd], c.mul(bj)?.scale(&rat(m, r as i64)))?;
            }
        }
        for (d, v) in next.iter().enumerate() {
            if let Some(v) = v {
                acc(&mut total[d], v.clone())?;
            }
        }
        term = next;
    }
    Ok(total)
}

/// Solves `exp(Σ_{j=1}^{J} b_j x^{j+1} d/dx) · x ≡ Σ_i t_i x^i (mod x^{J+2})`
/// for `b_1, …, b_J`, given `target = [t_2, …, t_{J+1}]` (with `t_1 = 1`).
///
/// The `x^{j+1}` coefficient is `b_j` plus a polynomial in earlier `b`s, so
/// the system is triangular.
pub fn solve_flow<R: FlowRing>(target: &[R], zero: &R, one: &R) -> Result<Vec<R>> {
    let depth = target.len();
    let mut b: Vec<R> = vec![zero.clone(); depth];
    for j in 1..=depth {
        let cur = exp_flow(&b[..j - 1], one, 1, j)?;
        let lower = cur[j].clone().unwrap_or_else(|| zero.clone());
        b[j - 1] = target[j - 1].add(&lower.scale(&rint(-1)))?;
    }
    Ok(b)
}

/// The coefficients `a_1, …, a_J` for a given `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivCoeffs {
    pub k: u32,
    #[serde(serialize_with = "ser_rats")]
    pub coeffs: Vec<Rational>,
}

fn ser_rats<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

impl DerivCoeffs {
    /// `a_j` (1-based), zero beyond the computed depth is not assumed.
    pub fn a(&self, j: usize) -> &Rational {
        &self.coeffs[j - 1]
    }

    pub fn as_scalars(&self) -> Vec<Scalar> {
        self.coeffs.iter().cloned().map(Scalar::from_rational).collect()
    }
}

/// The unique `a_1, …, a_J` with
/// `exp(-Σ a_j x^{j+1} d/dx) · x = (1/k)(1+x)^k - 1/k` through `x^{J+1}`.
pub fn solve_a_coeffs(k: u32, depth: usize) -> Result<DerivCoeffs> {
    if k == 0 || depth == 0 {
        return Err(Error::Usage("k and depth must be positive".into()));
    }
    let kr = rint(k as i64);
    let target: Vec<Scalar> = (2..=depth as u32 + 1)
        .map(|i| Scalar::from_rational(binomial(&kr, i) / &kr))
        .collect();
    let b = solve_flow(&target, &Scalar::zero(), &Scalar::one())?;
    let coeffs = b
        .iter()
        .map(|x| -x.to_rational().expect("rational input gives rational output"))
        .collect();
    Ok(DerivCoeffs { k, coeffs })
}

/// `exp(-Σ_j α_j x^{j+1} d/dx) · x^n` as a series in `x`, guaranteed through
/// x-degree `n + order`.
pub fn exp_derivation_apply(alpha: &[Scalar], n: i64, order: usize) -> Result<XLaurent> {
    let b: Vec<Scalar> = alpha.iter().map(|a| -a).collect();
    let cs = exp_flow(&b, &Scalar::one(), n, order)?;
    let mut s = Series::zero(&[("x", 1)]).truncate(0, None, Some(rint(n + order as i64)));
    for (d, c) in cs.into_iter().enumerate() {
        if let Some(c) = c {
            s.add_term(vec![rint(n + d as i64)], c);
        }
    }
    Ok(s)
}

fn xz(k: u32) -> [(&'static str, u32); 2] {
    [("x", 1), ("z", k)]
}

fn kth(k: u32) -> Rational {
    rat(1, k as i64)
}

/// `f(x) = (z^{1/k}/k)(1+x)^k - z^{1/k}/k`, an exact polynomial in `x`.
pub fn f_series(k: u32) -> XLaurent {
    let kr = rint(k as i64);
    let mut s = Series::zero(&xz(k));
    for i in 1..=k {
        s.add_term(vec![rint(i as i64), kth(k)], Scalar::from_rational(binomial(&kr, i) / &kr));
    }
    s
}

/// `f^{-1}(x) = (1 + k z^{-1/k} x)^{1/k} - 1`, guaranteed through `x^{order}`.
pub fn f_inverse_series(k: u32, order: u32) -> XLaurent {
    let kr = rint(k as i64);
    let mut s = Series::zero(&xz(k)).truncate(0, None, Some(rint(order as i64)));
    let mut kp = Rational::one();
    for m in 1..=order {
        kp *= &kr;
        let c = binomial(&kth(k), m) * &kp;
        s.add_term(vec![rint(m as i64), -kth(k) * rint(m as i64)], Scalar::from_rational(c));
    }
    s
}

/// `outer(inner(x))` for `inner` without constant term in `x`. If `outer` is
/// truncated at x-degree `H`, so is the result.
pub fn compose_x(outer: &XLaurent, inner: &XLaurent, order: u32) -> Result<XLaurent> {
    let vars: Vec<(&str, u32)> = outer.vars().iter().map(|v| (v.name.as_str(), v.ramification)).collect();
    if inner.terms().any(|(e, _)| e[0] < Rational::one()) {
        return Err(Error::Incompatible("inner series must start at x^1".into()));
    }
    let inner = inner.clone().truncate(0, None, Some(rint(order as i64)));
    let mut out = Series::zero(&vars).truncate(0, None, Some(rint(order as i64)));
    out = out.truncate(0, None, outer.vars()[0].hi.clone());
    let mut powers = vec![Series::one(&vars)];
    for (e, c) in outer.terms() {
        let i = e[0].to_integer().try_into().map_err(|_| Error::Incompatible("bad exponent".into()))?;
        if e[0] < Rational::zero() || !e[0].is_integer() {
            return Err(Error::Incompatible("outer series must be a power series".into()));
        }
        while powers.len() <= i {
            let next = powers.last().unwrap().mul(&inner)?;
            powers.push(next);
        }
        let mono = Series::monomial(&vars, vec![Rational::zero(), e[1].clone()], c.clone());
        out = out.add(&mono.mul(&powers[i])?)?;
    }
    Ok(out)
}

/// `Δ_k^x(z) · x = z((1 + z^{-1/k} x)^k - 1)`.
pub fn delta_x_of_x(k: u32) -> XLaurent {
    let kr = rint(k as i64);
    let mut s = Series::zero(&xz(k));
    for i in 1..=k {
        s.add_term(vec![rint(i as i64), rint(1) - rint(i as i64) * kth(k)], Scalar::from_rational(binomial(&kr, i)));
    }
    s
}

/// `Δ_k^x(z)^{-1} · x = z^{1/k}((1 + z^{-1} x)^{1/k} - 1)`, through `x^{order}`.
pub fn delta_x_inverse_of_x(k: u32, order: u32) -> XLaurent {
    let mut s = Series::zero(&xz(k)).truncate(0, None, Some(rint(order as i64)));
    for m in 1..=order {
        s.add_term(vec![rint(m as i64), kth(k) - rint(m as i64)], Scalar::from_rational(binomial(&kth(k), m)));
    }
    s
}

/// `Δ_k^x(z) · x^n = (Δ_k^x(z) · x)^n`, guaranteed through x-degree `n + order`.
pub fn delta_x_apply(k: u32, n: i64, order: u32) -> Result<XLaurent> {
    delta_x_of_x(k).pow(n, 0, order)
}

/// `Δ_k^x(z)^{-1} · x^n`, guaranteed through x-degree `n + order`.
pub fn delta_x_inverse_apply(k: u32, n: i64, order: u32) -> Result<XLaurent> {
    let psi = delta_x_inverse_of_x(k, order + 1);
    psi.pow(n, 0, order)
}

fn x_box(n: i64, order: u32) -> Vec<Option<(Rational, Rational)>> {
    vec![Some((rint(n - 1), rint(n - 1 + order as i64))), None]
}

fn zmono(k: u32, e: Rational, c: Rational) -> XLaurent {
    Series::monomial(&xz(k), vec![Rational::zero(), e], Scalar::from_rational(c))
}

/// `-Δ ∂_x x^n + (1/k) z^{1/k-1} ∂_x Δ x^n` versus `∂_z Δ x^n`.
pub fn delta_x_derivative_identity(k: u32, n: i64, order: u32) -> Result<Residual> {
    let phi_n = delta_x_apply(k, n, order)?;
    let mut lhs = zmono(k, kth(k) - rint(1), kth(k)).mul(&phi_n.derivative(0))?;
    if n != 0 {
        let prev = delta_x_apply(k, n - 1, order)?.scale(&Scalar::from_int(-n));
        lhs = lhs.add(&prev)?;
    }
    lhs.residual_on_box(&phi_n.derivative(1), &x_box(n, order))
}

/// `-Δ^{-1} ∂_x x^n + k z^{1-1/k} ∂_x Δ^{-1} x^n` versus `k z^{1-1/k} ∂_z Δ^{-1} x^n`.
pub fn delta_x_inverse_derivative_identity(k: u32, n: i64, order: u32) -> Result<Residual> {
    let psi_n = delta_x_inverse_apply(k, n, order)?;
    let pref = zmono(k, rint(1) - kth(k), rint(k as i64));
    let mut lhs = pref.mul(&psi_n.derivative(0))?;
    if n != 0 {
        let prev = delta_x_inverse_apply(k, n - 1, order)?.scale(&Scalar::from_int(-n));
        lhs = lhs.add(&prev)?;
    }
    let rhs = pref.mul(&psi_n.derivative(1))?;
    lhs.residual_on_box(&rhs, &x_box(n, order))
}

/// The `Θ` series evaluated at `x = (1/k) z^{1/k-1} z0`.
#[derive(Clone, Debug)]
pub struct ThetaSeries {
    pub k: u32,
    /// `exp(Θ_0)`.
    pub exp_theta0: BiSeries,
    /// `Θ_1, …, Θ_J`.
    pub theta: Vec<BiSeries>,
}

/// Computes `Θ_0, …, Θ_J` from `e^{Θ_0} exp(Σ Θ_j y^{j+1} d/dy) y =
/// f(f^{-1}(x) + z^{-1/k} y) - x` by matching powers of `y` over the ring of
/// `(x, z)` series, then substitutes `x = (1/k) z^{1/k-1} z0`.
pub fn theta_series(k: u32, depth: usize, order: u32) -> Result<ThetaSeries> {
    let vars = xz(k);
    let one = Series::one(&vars);
    let a = one.add(&f_inverse_series(k, order))?;
    let kr = rint(k as i64);
    // y^i coefficient of f(A - 1 + z^{-1/k} y) is (z^{1/k}/k) C(k,i) z^{-i/k} A^{k-i}.
    let coeff = |i: u32| -> Result<XLaurent> {
        let pref = zmono(k, kth(k) - rint(i as i64) * kth(k), binomial(&kr, i) / &kr);
        pref.mul(&a.pow(k as i64 - i as i64, 0, order)?)
    };
    let lead = coeff(1)?;
    let lead_inv = lead.inverse(0, order)?;
    let zero = Series::zero(&vars).truncate(0, None, Some(rint(order as i64)));
    let mut target = Vec::with_capacity(depth);
    for i in 2..=depth as u32 + 1 {
        target.push(if i <= k { coeff(i)?.mul(&lead_inv)? } else { zero.clone() });
    }
    let theta = solve_flow(&target, &zero, &one)?;
    let eval = |s: &XLaurent| -> BiSeries {
        let mut vars = vec![Var::exact("z", k), Var::exact("z0", 1)];
        vars[1].hi = s.vars()[0].hi.clone();
        s.remap(vars, |e| {
            let xe = &e[0];
            let ke = Scalar::from_rational(kr.clone()).pow(-xe.to_integer().try_into().unwrap_or(0i64)).unwrap();
            (vec![&e[1] + xe * (kth(k) - rint(1)), xe.clone()], ke)
        })
    };
    Ok(ThetaSeries {
        k,
        exp_theta0: eval(&lead),
        theta: theta.iter().map(eval).collect(),
    })
}

/// Compares the evaluated `Θ` series with `-a_j (z+z0)^{-j/k}` and
/// `exp(Θ_0)` with `z^{1/k-1}(z+z0)^{1-1/k}`.
pub fn theta_residuals(k: u32, depth: usize, order: u32) -> Result<Vec<Residual>> {
    let th = theta_series(k, depth, order)?;
    let a = solve_a_coeffs(k, depth)?;
    let bx = [None, Some((Rational::zero(), rint(order as i64)))];
    let expected0 = binomial_expand(&(rint(1) - kth(k)), 1, order).shift(&[kth(k) - rint(1), Rational::zero()]);
    let mut out = vec![th.exp_theta0.residual_on_box(&expected0, &bx)?];
    for (j, t) in th.theta.iter().enumerate() {
        let j = j + 1;
        let e = binomial_expand(&(-rint(j as i64) * kth(k)), 1, order).scale(&Scalar::from_rational(-a.a(j).clone()));
        out.push(t.residual_on_box(&e, &bx)?);
    }
    Ok(out)
}
