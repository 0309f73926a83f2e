//! Named verification suites: exhaustive desk-scale sweeps of the identities,
//! each reported with its exact residual.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::delta::{conjugation_residual, derivative_identity_residual, inverse_derivative_identity_residual};
use crate::derivation::{delta_x_derivative_identity, delta_x_inverse_derivative_identity, theta_residuals};
use crate::error::{Error, Result};
use crate::heisenberg::FockVector;
use crate::series::{delta_ramified_shift, delta_root_sum, delta_root_symmetry, delta_three_term, Residual};
use crate::twist::{
    commutator_residual, derivative_residual, fock_basis, roundtrip_tu_residual, roundtrip_ut_residual,
    twisted_jacobi_residual, untwisted_commutator_residual, untwisted_derivative_residual, TwistedModule, UFunctor,
};

pub const SUITES: [&str; 10] = [
    "theta",
    "xidentities",
    "conjugation",
    "delta-derivative",
    "twist-derivative",
    "twist-commutator",
    "twisted-jacobi",
    "roundtrip",
    "branch-negative",
    "delta-calculus",
];

/// Sweep parameters; `None` picks the suite default.
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub k: u32,
    pub depth: Option<usize>,
    pub cap: Option<u32>,
    pub order: Option<u32>,
}

impl VerifyOptions {
    pub fn new(k: u32) -> Self {
        VerifyOptions { k, depth: None, cap: None, order: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyItem {
    pub identity_id: String,
    /// Short description of the identity being checked.
    pub anchor: String,
    pub parameters: Value,
    pub status: Status,
    pub residual_summary: String,
    /// Wall time in seconds.
    pub elapsed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub items: Vec<VerifyItem>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.status == Status::Pass)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// One aligned line per item.
    pub fn to_text(&self) -> String {
        let width = self.items.iter().map(|i| i.identity_id.len()).max().unwrap_or(0);
        let mut out = String::new();
        for i in &self.items {
            let status = match i.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
            };
            out.push_str(&format!(
                "{status}  {:width$}  {:>8.3}s  {}  {}\n",
                i.identity_id, i.elapsed, i.parameters, i.residual_summary
            ));
        }
        let failed = self.items.iter().filter(|i| i.status == Status::Fail).count();
        out.push_str(&format!("{}: {} items, {} failed\n", self.suite, self.items.len(), failed));
        out
    }
}

/// Whether a check expects its residual to vanish or to be nonzero.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Expect {
    Zero,
    Nonzero,
}

fn check(id: String, anchor: &str, parameters: Value, expect: Expect, f: impl FnOnce() -> Result<Residual>) -> VerifyItem {
    let start = Instant::now();
    let res = f();
    let elapsed = start.elapsed().as_secs_f64();
    let (status, residual_summary) = match res {
        Ok(r) => {
            let ok = match expect {
                Expect::Zero => r.is_zero(),
                Expect::Nonzero => !r.is_zero(),
            };
            (if ok { Status::Pass } else { Status::Fail }, r.summary())
        }
        Err(e) => (Status::Fail, format!("error: {e}")),
    };
    VerifyItem { identity_id: id, anchor: anchor.to_string(), parameters, status, residual_summary, elapsed }
}

fn alpha() -> FockVector {
    FockVector::state(&[1])
}

fn slot_pairs(k: u32) -> Vec<(u32, u32)> {
    (1..=k).flat_map(|i| (1..=k).map(move |j| (i, j))).collect()
}

/// Runs one suite, or every suite in declaration order for `"all"`.
pub fn run_suite(name: &str, o: &VerifyOptions) -> Result<VerifyReport> {
    if o.k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    let items = match name {
        "all" => {
            let mut items = Vec::new();
            for s in SUITES {
                items.extend(run_suite(s, o)?.items);
            }
            items
        }
        "theta" => theta(o),
        "xidentities" => xidentities(o),
        "conjugation" => conjugation(o),
        "delta-derivative" => derivative_identities(o),
        "twist-derivative" => twist_derivative(o),
        "twist-commutator" => twist_commutator(o),
        "twisted-jacobi" => twisted_jacobi(o),
        "roundtrip" => roundtrip(o),
        "branch-negative" => branch_negative(o),
        "delta-calculus" => delta_calculus(o),
        _ => {
            return Err(Error::Usage(format!("unknown suite '{name}'; expected one of {} or all", SUITES.join(", "))));
        }
    };
    Ok(VerifyReport { suite: name.to_string(), items })
}

fn theta(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, depth, order) = (o.k, o.depth.unwrap_or(4), o.order.unwrap_or(6));
    let params = json!({"k": k, "depth": depth, "order": order});
    let mut items = Vec::new();
    match theta_residuals(k, depth, order) {
        Ok(rs) => {
            for (j, r) in rs.into_iter().enumerate() {
                let anchor = if j == 0 {
                    "exp(Theta_0) = z^{1/k-1}(z+z0)^{1-1/k}"
                } else {
                    "Theta_j = -a_j (z+z0)^{-j/k}"
                };
                items.push(check(format!("theta-{j}"), anchor, params.clone(), Expect::Zero, || Ok(r)));
            }
        }
        Err(e) => items.push(check("theta".into(), "Theta series", params, Expect::Zero, || Err(e))),
    }
    items
}

fn xidentities(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, order) = (o.k, o.order.unwrap_or(6));
    let mut items = Vec::new();
    for n in -3..=3 {
        let params = json!({"k": k, "n": n, "order": order});
        items.push(check(
            format!("delta-x-derivative[n={n}]"),
            "z-derivative of Delta_k on x^n",
            params.clone(),
            Expect::Zero,
            || delta_x_derivative_identity(k, n, order),
        ));
        items.push(check(
            format!("delta-x-inverse-derivative[n={n}]"),
            "z-derivative of Delta_k^{-1} on x^n",
            params,
            Expect::Zero,
            || delta_x_inverse_derivative_identity(k, n, order),
        ));
    }
    items
}

fn conjugation(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, cap, order) = (o.k, o.cap.unwrap_or(4), o.order.unwrap_or(3));
    fock_basis(cap.min(3))
        .into_iter()
        .map(|u| {
            let params = json!({"k": k, "u": u.to_string(), "cap": cap, "order": order});
            check(
                format!("conjugation[u={u}]"),
                "Delta_k(z) conjugates Y(u, z0) into Y(Delta_k(z+z0)u, (z+z0)^{1/k} - z^{1/k})",
                params,
                Expect::Zero,
                || conjugation_residual(k, &u, cap, order),
            )
        })
        .collect()
}

fn derivative_identities(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, cap) = (o.k, o.cap.unwrap_or(4));
    let mut items = Vec::new();
    for u in fock_basis(cap) {
        let params = json!({"k": k, "u": u.to_string()});
        items.push(check(
            format!("delta-derivative[u={u}]"),
            "Delta_k(z) L(-1) against d/dz Delta_k(z)",
            params.clone(),
            Expect::Zero,
            || derivative_identity_residual(k, &u),
        ));
        items.push(check(
            format!("delta-inverse-derivative[u={u}]"),
            "Delta_k(z)^{-1} L(-1) against d/dz Delta_k(z)^{-1}",
            params,
            Expect::Zero,
            || inverse_derivative_identity_residual(k, &u),
        ));
    }
    items
}

fn twist_derivative(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, cap) = (o.k, o.cap.unwrap_or(3));
    let tm = TwistedModule::new(k);
    let mut items = Vec::new();
    for u in fock_basis(2) {
        for j in 1..=k {
            let params = json!({"k": k, "u": u.to_string(), "slot": j, "modes": [-3, 3], "cap": cap});
            items.push(check(
                format!("twisted-derivative[u={u},j={j}]"),
                "Y_g(L(-1)u^j, z) = d/dz Y_g(u^j, z)",
                params,
                Expect::Zero,
                || derivative_residual(&tm, &u, j, (-3, 3), cap),
            ));
        }
    }
    items
}

fn twist_commutator(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, cap) = (o.k, o.cap.unwrap_or(2));
    let window = if k == 2 { (-3, 3) } else { (-1, 1) };
    let tm = TwistedModule::new(k);
    let mut items = Vec::new();
    let us = fock_basis(2);
    for u in &us {
        for v in &us {
            let params = json!({"k": k, "u": u.to_string(), "v": v.to_string(), "modes": [window.0, window.1], "cap": cap});
            items.push(check(
                format!("twisted-commutator[u={u},v={v}]"),
                "[u^i_M, v^j_N] through the eta-twisted commutator formula",
                params,
                Expect::Zero,
                || {
                    let mut r = Residual::default();
                    for ij in slot_pairs(k) {
                        r.merge(commutator_residual(&tm, u, v, ij, window, cap)?);
                    }
                    Ok(r)
                },
            ));
        }
    }
    items
}

fn twisted_jacobi(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, cap) = (o.k, o.cap.unwrap_or(2));
    let tm = TwistedModule::new(k);
    let mut items = Vec::new();
    for (u, v) in [(alpha(), alpha()), (FockVector::omega(), alpha())] {
        let params = json!({"k": k, "u": u.to_string(), "v": v.to_string(), "modes": [-1, 1], "cap": cap});
        items.push(check(
            format!("twisted-jacobi[u={u},v={v}]"),
            "component form of the twisted Jacobi identity",
            params,
            Expect::Zero,
            || {
                let mut r = Residual::default();
                for ij in slot_pairs(k) {
                    r.merge(twisted_jacobi_residual(&tm, &u, &v, ij, (-1, 1), cap)?);
                }
                Ok(r)
            },
        ));
    }
    items
}

fn roundtrip(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, cap) = (o.k, o.cap.unwrap_or(3));
    let tm = TwistedModule::new(k);
    let mut items = Vec::new();
    for u in [FockVector::vacuum(), alpha(), FockVector::omega()] {
        let params = json!({"k": k, "u": u.to_string(), "modes": [-3, 3], "cap": cap});
        items.push(check(format!("u-after-t[u={u}]"), "U(T(M)) = M on modes", params.clone(), Expect::Zero, || {
            roundtrip_ut_residual(&tm, &u, (-3, 3), cap)
        }));
        items.push(check(format!("t-after-u[u={u}]"), "T(U(W)) = W on modes", params, Expect::Zero, || {
            roundtrip_tu_residual(&tm, &u, (-2, 2), cap)
        }));
    }
    items
}

/// Passes when the non-principal branch of `(z^k)^{1/k}` breaks the module axioms.
fn branch_negative(o: &VerifyOptions) -> Vec<VerifyItem> {
    let (k, cap) = (o.k, o.cap.unwrap_or(2));
    if k < 2 {
        return Vec::new();
    }
    let tm = TwistedModule::new(k);
    let bad = UFunctor::with_branch(&tm, 1);
    let params = json!({"k": k, "branch": 1, "modes": [-2, 2], "cap": cap});
    vec![
        check("wrong-branch-commutator".into(), "commutator formula under the eta z branch", params.clone(), Expect::Nonzero, || {
            let mut r = Residual::default();
            for u in fock_basis(2) {
                for v in fock_basis(2) {
                    r.merge(untwisted_commutator_residual(&bad, &u, &v, (-2, 2), cap)?);
                }
            }
            Ok(r)
        }),
        check("wrong-branch-derivative".into(), "L(-1)-derivative under the eta z branch", params, Expect::Nonzero, || {
            let mut r = Residual::default();
            for u in fock_basis(2) {
                r.merge(untwisted_derivative_residual(&bad, &u, (-2, 2), cap)?);
            }
            Ok(r)
        }),
    ]
}

fn delta_calculus(o: &VerifyOptions) -> Vec<VerifyItem> {
    let k = o.k;
    let radius = o.order.unwrap_or(4) as i64;
    let mut items = Vec::new();
    for p in 0..k {
        items.push(check(
            format!("delta-ramified-shift[p={p}]"),
            "two-variable delta with fractional prefactor, both expansions",
            json!({"k": k, "p": p, "radius": radius}),
            Expect::Zero,
            || delta_ramified_shift(k, p, radius),
        ));
    }
    let params = json!({"k": k, "radius": radius});
    items.push(check("delta-root-sum".into(), "sum over p of ramified deltas is the root delta", params.clone(), Expect::Zero, || {
        delta_root_sum(k, radius)
    }));
    items.push(check("delta-root-symmetry".into(), "root delta in (z1 - z0) against (z2 + z0)", params, Expect::Zero, || {
        delta_root_symmetry(k, radius)
    }));
    items.push(check(
        "delta-three-term".into(),
        "three-term delta identity",
        json!({"radius": radius}),
        Expect::Zero,
        || delta_three_term(radius),
    ));
    items
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_usage_error() {
        assert!(matches!(run_suite("nope", &VerifyOptions::new(2)), Err(Error::Usage(_))));
        assert!(matches!(run_suite("theta", &VerifyOptions::new(0)), Err(Error::Usage(_))));
    }

    #[test]
    fn small_suites_pass() {
        for s in ["theta", "xidentities", "delta-calculus", "branch-negative"] {
            let r = run_suite(s, &VerifyOptions::new(2)).unwrap();
            assert!(r.passed(), "{}", r.to_text());
            assert!(!r.items.is_empty());
        }
    }

    #[test]
    fn report_shape() {
        let r = run_suite("delta-calculus", &VerifyOptions::new(2)).unwrap();
        let j = r.to_json();
        let item = &j["items"][0];
        for key in ["identity_id", "anchor", "parameters", "status", "residual_summary", "elapsed"] {
            assert!(item.get(key).is_some(), "{key}");
        }
        assert_eq!(item["status"], "pass");
        assert!(r.to_text().ends_with("0 failed\n"));
    }

    #[test]
    fn errors_become_failures() {
        let item = check("x".into(), "", Value::Null, Expect::Zero, || Err(Error::Usage("boom".into())));
        assert_eq!(item.status, Status::Fail);
        let item = check("x".into(), "", Value::Null, Expect::Nonzero, || Ok(Residual::default()));
        assert_eq!(item.status, Status::Fail);
    }
}
