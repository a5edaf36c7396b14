//! Numerical evaluation of a generalized Gronwall bound with multiple
//! weakly singular kernels. For
//!
//! ```text
//!   u(t) ≤ g(t) + Σ_i a_i(t) ∫_0^t (t-s)^{α_i - 1} u(s) ds
//!               + b(t) ∫_0^t (t-s)^{α - 1} u(s) ds
//! ```
//!
//! the bound is a double series over shells k and binomial splits j, with a
//! multinomial sum over weak compositions l_1 + ... + l_n = j:
//!
//! ```text
//!   u(t) ≤ Σ_k Σ_{j≤k} C(k,j) (b Γ(α))^{k-j}
//!          Σ_{|l|=j} M(j; l) Π_i (a_i Γ(α_i))^{l_i}
//!          · (1/Γ(μ)) ∫_0^t (t-s)^{μ-1} g(s) ds,
//!   μ = Σ_i l_i α_i + (k-j) α.
//! ```
//!
//! Every term is assembled as a sum of logs and exponentiated once, since
//! the Gamma ratios overflow f64 near k ≈ 30 otherwise. The k = 0 shell is
//! the identity-operator term and equals g(t). The composite order μ
//! appears once per term (the exponents of the nested fractional integrals
//! add), and the multinomial coefficient is j!/(l_1!...l_n!).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::quadrature::{build_jacobi_rule, integrate, JacobiRule};
use crate::specialfn::log_gamma;

/// Scalar time-dependent coefficient.
pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// The inhomogeneity g: either a constant (corollary path, closed-form
/// moments) or a general locally integrable callable.
pub enum Inhomogeneity {
    Constant(f64),
    Callable(Box<ScalarFn>),
}

impl Inhomogeneity {
    fn at(&self, t: f64) -> f64 {
        match self {
            Inhomogeneity::Constant(c) => *c,
            Inhomogeneity::Callable(f) => f(t),
        }
    }
}

/// Coefficient that is either constant or a callable of t.
pub enum Coefficient {
    Constant(f64),
    Callable(Box<ScalarFn>),
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Coefficient::Constant(c)
    }

    fn at(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Callable(f) => f(t),
        }
    }
}

/// Data of the integral inequality: orders, kernel coefficients a_i and b,
/// inhomogeneity g, and the horizon.
pub struct GronwallProblem {
    pub alpha: f64,
    pub alpha_i: Vec<f64>,
    pub a: Vec<Coefficient>,
    pub b: Coefficient,
    pub g: Inhomogeneity,
    pub horizon: f64,
}

impl GronwallProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain(
                "GronwallProblem",
                format!("alpha must lie in (0, 1], got {}", self.alpha),
            ));
        }
        for (i, &a) in self.alpha_i.iter().enumerate() {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::domain(
                    "GronwallProblem",
                    format!("alpha_{} must lie in (0, 1], got {a}", i + 1),
                ));
            }
        }
        if self.a.len() != self.alpha_i.len() {
            return Err(Error::mismatch(
                "GronwallProblem",
                format!("{} kernels a_i but {} orders alpha_i", self.a.len(), self.alpha_i.len()),
            ));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::domain("GronwallProblem", "horizon must be positive"));
        }
        Ok(())
    }

    /// Probe that a_i and b are non-negative and non-decreasing on a sample
    /// grid. Warnings only.
    pub fn probe_monotone(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let samples = 17;
        let mut check = |name: String, c: &Coefficient| {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..samples {
                let t = self.horizon * k as f64 / samples as f64;
                let v = c.at(t);
                if v < 0.0 {
                    warnings.push(format!("{name} is negative at t = {t}: {v}"));
                }
                if v < prev {
                    warnings.push(format!("{name} decreases at t = {t}"));
                }
                prev = v;
            }
        };
        for (i, a) in self.a.iter().enumerate() {
            check(format!("a_{}", i + 1), a);
        }
        check("b".to_string(), &self.b);
        warnings
    }
}

/// Truncation policy for the infinite series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPolicy {
    /// Cap on the outer shell index.
    pub k_max: usize,
    /// Relative tail tolerance; the series stops after 3 consecutive shells
    /// below `tail_tol` times the running sum.
    pub tail_tol: f64,
    /// Node count for the quadrature of non-closed-form g-integrals.
    pub quad_order: usize,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy {
            k_max: 120,
            tail_tol: 1e-12,
            quad_order: 32,
        }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::domain("SeriesPolicy", "k_max must be >= 1"));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::domain("SeriesPolicy", "tail_tol must be > 0"));
        }
        Ok(())
    }
}

/// Result of a series evaluation with truncation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub shells_used: usize,
    /// Contribution of the last shell, as a tail size estimate.
    pub tail_estimate: f64,
    /// First shell index whose contribution fell below its predecessor.
    pub decay_onset: Option<usize>,
}

/// All ordered n-tuples of non-negative integers summing to j, in
/// lexicographic order. There are C(j+n-1, n-1) of them.
pub fn weak_compositions(j: usize, n: usize) -> Vec<Vec<usize>> {
    assert!(n >= 1, "composition width must be >= 1");
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fn rec(out: &mut Vec<Vec<usize>>, current: &mut Vec<usize>, pos: usize, remaining: usize) {
        if pos == current.len() - 1 {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        for v in 0..=remaining {
            current[pos] = v;
            rec(out, current, pos + 1, remaining - v);
        }
    }
    rec(&mut out, &mut current, 0, j);
    out
}

/// ln( j! / (l_1! ... l_n!) ) via log-Gamma. Errors if Σ l_i ≠ j.
pub fn log_multinomial(j: usize, parts: &[usize]) -> Result<f64> {
    let total: usize = parts.iter().sum();
    if total != j {
        return Err(Error::mismatch(
            "log_multinomial",
            format!("parts sum to {total}, expected {j}"),
        ));
    }
    let mut acc = log_gamma(j as f64 + 1.0)?;
    for &l in parts {
        acc -= log_gamma(l as f64 + 1.0)?;
    }
    Ok(acc)
}

fn log_binomial(k: usize, j: usize) -> Result<f64> {
    Ok(log_gamma(k as f64 + 1.0)? - log_gamma(j as f64 + 1.0)? - log_gamma((k - j) as f64 + 1.0)?)
}

/// The kernel-weighted g-integral ∫_0^t (t-s)^{μ-1} g(s) ds, returned as a
/// log so large μ stays stable. Constant g uses the closed form g t^μ / μ;
/// a callable g is mapped by s = t·v, turning the kernel into
/// t^μ (1-v)^{μ-1}, i.e. a Jacobi rule with exponent_a = μ-1, exponent_b = 0.
/// `None` means the integral is identically zero (or not positive).
fn log_g_integral(
    g: &Inhomogeneity,
    t: f64,
    mu: f64,
    policy: &SeriesPolicy,
    rule_cache: &mut HashMap<u64, JacobiRule>,
) -> Result<Option<f64>> {
    match g {
        Inhomogeneity::Constant(c) => {
            if *c == 0.0 {
                return Ok(None);
            }
            Ok(Some(c.ln() + mu * t.ln() - mu.ln()))
        }
        Inhomogeneity::Callable(f) => {
            let rule = match rule_cache.entry(mu.to_bits()) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(build_jacobi_rule(mu - 1.0, 0.0, policy.quad_order)?)
                }
            };
            let integral = integrate(rule, |v| f(t * v))?;
            if integral <= 0.0 {
                return Ok(None);
            }
            Ok(Some(integral.ln() + mu * t.ln()))
        }
    }
}

/// Evaluate the multi-kernel series bound at time t. The g-integrals use
/// quadrature (or the closed form when g is constant and exactness is not
/// required — see [`gronwall_bound_constant_g`] for the corollary path).
pub fn gronwall_bound(
    problem: &GronwallProblem,
    t: f64,
    policy: &SeriesPolicy,
) -> Result<BoundValue> {
    bound_impl(problem, t, policy, false)
}

/// Corollary path for constant (or non-decreasing, evaluated at t) g: the
/// g-integral collapses to g(t) t^μ / μ, i.e. the series
/// g(t) Σ ... t^{μ} / Γ(μ+1), with no quadrature.
pub fn gronwall_bound_constant_g(
    problem: &GronwallProblem,
    t: f64,
    policy: &SeriesPolicy,
) -> Result<BoundValue> {
    if !matches!(problem.g, Inhomogeneity::Constant(_)) {
        return Err(Error::mismatch(
            "gronwall_bound_constant_g",
            "requires a constant inhomogeneity g",
        ));
    }
    bound_impl(problem, t, policy, true)
}

fn bound_impl(
    problem: &GronwallProblem,
    t: f64,
    policy: &SeriesPolicy,
    force_closed_form: bool,
) -> Result<BoundValue> {
    problem.validate()?;
    policy.validate()?;
    if !(t > 0.0 && t < problem.horizon) {
        return Err(Error::domain(
            "gronwall_bound",
            format!("t must lie in (0, {}), got {t}", problem.horizon),
        ));
    }

    let n = problem.alpha_i.len().max(1);
    let has_neutral = !problem.alpha_i.is_empty();

    // coefficients enter evaluated at the query time (they sit outside the
    // integrals in the bound)
    let b_t = problem.b.at(t);
    let a_t: Vec<f64> = problem.a.iter().map(|a| a.at(t)).collect();
    if b_t < 0.0 || a_t.iter().any(|&v| v < 0.0) {
        return Err(Error::domain(
            "gronwall_bound",
            "kernel coefficients must be non-negative",
        ));
    }
    let ln_b_gamma = if b_t > 0.0 {
        Some(b_t.ln() + log_gamma(problem.alpha)?)
    } else {
        None
    };
    let ln_a_gamma: Vec<Option<f64>> = a_t
        .iter()
        .zip(problem.alpha_i.iter())
        .map(|(&a, &ai)| {
            if a > 0.0 {
                Ok(Some(a.ln() + log_gamma(ai)?))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    // The g-integral path: the generic bound always goes through the
    // quadrature machinery (constants are wrapped), the corollary uses the
    // closed form.
    let g_const_wrapped;
    let g_for_integrals: &Inhomogeneity = if force_closed_form {
        &problem.g
    } else {
        match &problem.g {
            Inhomogeneity::Constant(c) => {
                let c = *c;
                g_const_wrapped = Inhomogeneity::Callable(Box::new(move |_| c));
                &g_const_wrapped
            }
            other => other,
        }
    };

    let mut rule_cache: HashMap<u64, JacobiRule> = HashMap::new();

    // k = 0 shell: the identity term, g(t) itself.
    let mut sum = problem.g.at(t);
    let mut shells_used = 1;
    let mut last_shell = sum;
    let mut prev_shell = last_shell;
    let mut grew_last = false;
    let mut quiet_shells = 0;
    let mut decay_onset = None;

    for k in 1..=policy.k_max {
        let mut shell = 0.0f64;
        for j in 0..=k {
            // the (k-j) b-kernel factor
            let kmj = k - j;
            let ln_b_part = match (kmj, ln_b_gamma) {
                (0, _) => 0.0,
                (_, Some(l)) => kmj as f64 * l,
                (_, None) => continue, // b = 0 kills every k-j > 0 term
            };
            if j > 0 && !has_neutral {
                continue; // no a-kernels: only the j = 0 split exists
            }
            let ln_binom = log_binomial(k, j)?;
            let compositions = if has_neutral {
                weak_compositions(j, n)
            } else {
                vec![vec![0usize; 1]]
            };
            for parts in &compositions {
                // Π a_i^{l_i} Γ(α_i)^{l_i}
                let mut ln_a_part = 0.0f64;
                let mut dead = false;
                let mut mu = kmj as f64 * problem.alpha;
                if has_neutral {
                    for (i, &l) in parts.iter().enumerate() {
                        if l == 0 {
                            continue;
                        }
                        match ln_a_gamma[i] {
                            Some(la) => ln_a_part += l as f64 * la,
                            None => {
                                dead = true;
                                break;
                            }
                        }
                        mu += l as f64 * problem.alpha_i[i];
                    }
                }
                if dead {
                    continue;
                }
                let ln_multi = if has_neutral { log_multinomial(j, parts)? } else { 0.0 };
                let Some(ln_gint) = log_g_integral(g_for_integrals, t, mu, policy, &mut rule_cache)?
                else {
                    continue;
                };
                let ln_term =
                    ln_binom + ln_b_part + ln_multi + ln_a_part - log_gamma(mu)? + ln_gint;
                shell += ln_term.exp();
            }
        }

        if !shell.is_finite() || !sum.is_finite() {
            return Err(Error::overflow(
                "gronwall_bound",
                format!("series overflowed at shell {k}"),
            ));
        }
        sum += shell;
        shells_used = k + 1;
        grew_last = shell > prev_shell;
        if decay_onset.is_none() && shell < prev_shell {
            decay_onset = Some(k);
        }
        last_shell = shell;

        if shell <= policy.tail_tol * sum {
            quiet_shells += 1;
            if quiet_shells >= 3 {
                return Ok(BoundValue {
                    value: sum,
                    shells_used,
                    tail_estimate: last_shell,
                    decay_onset,
                });
            }
        } else {
            quiet_shells = 0;
        }
        prev_shell = shell;
    }

    if grew_last {
        return Err(Error::not_converged(
            "gronwall_bound",
            format!(
                "shell contributions still growing at k_max = {} (last = {last_shell:e})",
                policy.k_max
            ),
        ));
    }
    Ok(BoundValue {
        value: sum,
        shells_used,
        tail_estimate: last_shell,
        decay_onset,
    })
}
