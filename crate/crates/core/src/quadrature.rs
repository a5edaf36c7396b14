//! Gauss-Jacobi quadrature on (0, 1) for integrals of the form
//!
//! ```text
//!     ∫_0^1 (1-u)^a u^b φ(u) du,    a > -1, b > -1,
//! ```
//!
//! which is the inner-integral shape of the weakly singular SVIE kernels
//! after the substitution τ = (t-s)u + s (there a = α-1, b = -β_j). The
//! weight function absorbs both endpoint singularities, so φ only needs to
//! be smooth.
//!
//! Nodes and weights come from the Golub-Welsch symmetric tridiagonal
//! eigenproblem built on the classical Jacobi three-term recurrence, solved
//! with the implicit-shift QL iteration tracking only the first eigenvector
//! component. The rule is then mapped affinely from [-1, 1] to [0, 1].

use crate::error::{Error, Result};
use crate::specialfn::beta;

/// An immutable Gauss-Jacobi rule on (0, 1) with weight (1-u)^a u^b.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    pub exponent_a: f64,
    pub exponent_b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl JacobiRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub const MAX_NODES: usize = 200;

/// Build an n-point Gauss-Jacobi rule for the weight (1-u)^a u^b on (0, 1).
pub fn build_jacobi_rule(exponent_a: f64, exponent_b: f64, n: usize) -> Result<JacobiRule> {
    if !(exponent_a > -1.0) || !(exponent_b > -1.0) {
        return Err(Error::domain(
            "build_jacobi_rule",
            format!("exponents must be > -1, got ({exponent_a}, {exponent_b})"),
        ));
    }
    if n == 0 || n > MAX_NODES {
        return Err(Error::domain(
            "build_jacobi_rule",
            format!("node count must lie in 1..={MAX_NODES}, got {n}"),
        ));
    }

    // Jacobi recurrence on [-1, 1]: `a` is the (1-x) exponent, `b` the (1+x)
    // exponent. Diagonal d_k and squared off-diagonal e_k^2 of the Jacobi
    // matrix, Gautschi's formulas.
    let (a, b) = (exponent_a, exponent_b);
    let mut diag = vec![0.0f64; n];
    let mut off = vec![0.0f64; n];
    diag[0] = (b - a) / (a + b + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let denom = (2.0 * kf + a + b) * (2.0 * kf + a + b + 2.0);
        diag[k] = (b * b - a * a) / denom;
        let e2 = if k == 1 {
            4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 2.0).powi(2) * (a + b + 3.0))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + a + b)
                / ((2.0 * kf + a + b).powi(2) * (2.0 * kf + a + b + 1.0) * (2.0 * kf + a + b - 1.0))
        };
        off[k - 1] = e2.sqrt();
    }

    // First eigenvector components; weights are mu0 * z_i^2, and the affine
    // map to [0,1] cancels the 2^(a+b+1) factor so the total mass is exactly
    // B(a+1, b+1).
    let mut first_row = vec![0.0f64; n];
    first_row[0] = 1.0;
    ql_implicit_shift(&mut diag, &mut off, &mut first_row)?;

    let mass = beta(a + 1.0, b + 1.0)?;
    let mut pairs: Vec<(f64, f64)> = diag
        .iter()
        .zip(first_row.iter())
        .map(|(&x, &z)| ((1.0 + x) * 0.5, mass * z * z))
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("eigenvalues are finite"));

    let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    for w in &nodes {
        if !(*w > 0.0 && *w < 1.0) {
            return Err(Error::not_converged(
                "build_jacobi_rule",
                format!("node {w} escaped (0, 1)"),
            ));
        }
    }

    Ok(JacobiRule {
        exponent_a,
        exponent_b,
        nodes,
        weights,
    })
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix, updating
/// only the first row of the accumulated eigenvector matrix (EISPACK imtql2
/// restricted to what Golub-Welsch needs). `diag` receives the eigenvalues.
fn ql_implicit_shift(diag: &mut [f64], off: &mut [f64], first_row: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 1 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    const MAX_SWEEPS: usize = 50;

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find a negligible off-diagonal element.
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::not_converged(
                    "build_jacobi_rule",
                    format!("QL sweep budget exhausted at row {l}"),
                ));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflowed = false;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let bb = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - bb;
                // rotate the tracked eigenvector row
                f = first_row[i + 1];
                first_row[i + 1] = s * first_row[i] + c * f;
                first_row[i] = c * first_row[i] - s * f;
            }
            if underflowed {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// Apply a rule to a scalar integrand: Σ_k w_k φ(u_k).
pub fn integrate<F: Fn(f64) -> f64>(rule: &JacobiRule, phi: F) -> Result<f64> {
    let mut acc = 0.0;
    for (&u, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let v = phi(u);
        if !v.is_finite() {
            return Err(Error::evaluation(
                "integrate",
                format!("integrand returned {v} at node u = {u}"),
            ));
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Apply a rule to a vector-valued integrand, accumulating w_k · φ(u_k)
/// into `out` (which is zeroed first). `scratch` must have `out.len()`.
pub fn integrate_into<F>(rule: &JacobiRule, mut phi: F, scratch: &mut [f64], out: &mut [f64]) -> Result<()>
where
    F: FnMut(f64, &mut [f64]),
{
    debug_assert_eq!(scratch.len(), out.len());
    out.fill(0.0);
    for (&u, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        phi(u, scratch);
        for (o, &s) in out.iter_mut().zip(scratch.iter()) {
            if !s.is_finite() {
                return Err(Error::evaluation(
                    "integrate",
                    format!("integrand returned {s} at node u = {u}"),
                ));
            }
            *o += w * s;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_point_legendre_on_unit_interval() {
        let rule = build_jacobi_rule(0.0, 0.0, 2).unwrap();
        let s3 = 3.0f64.sqrt();
        assert_relative_eq!(rule.nodes[0], (3.0 - s3) / 6.0, max_relative = 1e-14);
        assert_relative_eq!(rule.nodes[1], (3.0 + s3) / 6.0, max_relative = 1e-14);
        assert_relative_eq!(rule.weights[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(rule.weights[1], 0.5, max_relative = 1e-14);
        assert_relative_eq!(integrate(&rule, |_| 1.0).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn weight_sum_is_beta_moment() {
        // kernel exponents (alpha, beta) = (0.4, 0.6): weights sum to B(1-beta, alpha)
        let (alpha, b) = (0.4, 0.6);
        let rule = build_jacobi_rule(alpha - 1.0, -b, 12).unwrap();
        let total: f64 = rule.weights.iter().sum();
        assert_relative_eq!(total, beta(1.0 - b, alpha).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn cubic_moment_eight_nodes() {
        // ∫ (1-u)^0.5 u^{-0.3} u^3 du = B(4 - 0.3, 1.5) = B(3.7, 1.5)
        let rule = build_jacobi_rule(0.5, -0.3, 8).unwrap();
        let got = integrate(&rule, |u| u.powi(3)).unwrap();
        // mpmath: beta(3.7, 1.5)
        assert_relative_eq!(got, 0.113_454_877_835_027_18, max_relative = 1e-12);
    }

    #[test]
    fn first_moment_sixteen_nodes() {
        // (alpha, beta) = (0.8, 0.4): ∫ (1-u)^{-0.2} u^{-0.4} u du = B(1.6, 0.8)
        let rule = build_jacobi_rule(-0.2, -0.4, 16).unwrap();
        let got = integrate(&rule, |u| u).unwrap();
        // mpmath: beta(1.6, 0.8)
        assert_relative_eq!(got, 0.837_451_933_516_756_1, max_relative = 1e-12);
    }

    #[test]
    fn doubly_singular_cosine() {
        // ∫_0^1 (1-u)^{-0.6} u^{-0.4} cos u du, mpmath adaptive reference
        let rule = build_jacobi_rule(-0.6, -0.4, 24).unwrap();
        let got = integrate(&rule, |u| u.cos()).unwrap();
        assert_relative_eq!(got, 2.560_561_531_275_071, max_relative = 1e-12);
    }

    #[test]
    fn moment_exactness_grid() {
        // all monomial moments up to degree 2n-1 across the kernel-exponent grid
        for &alpha in &[0.3, 0.5, 0.8] {
            for &b in &[0.1, 0.3, 0.45] {
                for &n in &[4usize, 8, 16] {
                    let rule = build_jacobi_rule(alpha - 1.0, -b, n).unwrap();
                    for k in 0..=(2 * n - 1) {
                        let got = integrate(&rule, |u| u.powi(k as i32)).unwrap();
                        let want = beta(k as f64 + 1.0 - b, alpha).unwrap();
                        assert_relative_eq!(got, want, max_relative = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn rule_invariants_hold() {
        let rule = build_jacobi_rule(-0.5, -0.45, 32).unwrap();
        for w in &rule.weights {
            assert!(*w > 0.0);
        }
        for pair in rule.nodes.windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let r1 = build_jacobi_rule(-0.6, -0.3, 64).unwrap();
        let r2 = build_jacobi_rule(-0.6, -0.3, 64).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn smooth_integrand_converges_with_n() {
        for &(a, b) in &[(0.3, 0.1), (0.5, 0.3), (0.8, 0.45)] {
            let reference = integrate(
                &build_jacobi_rule(a - 1.0, -b, 64).unwrap(),
                |u| (2.5 * u).sin().exp(),
            )
            .unwrap();
            let mut errs = Vec::new();
            for &n in &[4usize, 8, 16, 32] {
                let rule = build_jacobi_rule(a - 1.0, -b, n).unwrap();
                let v = integrate(&rule, |u| (2.5 * u).sin().exp()).unwrap();
                errs.push((v - reference).abs());
            }
            // decreasing until the roundoff floor, where jitter is allowed
            for pair in errs.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-15 || pair[1] < 1e-13,
                    "quadrature error not decreasing: {errs:?}"
                );
            }
            assert!(*errs.last().unwrap() < 1e-12, "final error too large: {errs:?}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_jacobi_rule(-1.0, 0.0, 4).is_err());
        assert!(build_jacobi_rule(0.0, -1.2, 4).is_err());
        assert!(build_jacobi_rule(0.0, 0.0, 0).is_err());
        assert!(build_jacobi_rule(0.0, 0.0, 201).is_err());
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let rule = build_jacobi_rule(0.0, 0.0, 4).unwrap();
        let err = integrate(&rule, |u| 1.0 / (u - rule.nodes[1])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("node"), "unexpected message: {msg}");
    }
}
