//! Problem data for the SFNIDE and evaluation of its equivalent stochastic
//! Volterra integral kernels.
//!
//! The equation
//!
//! ```text
//!   D^α { z(t) - Σ_i I^{α_i} f_i(t, z(t)) }
//!       = g_0(t, z(t)) + ∫_0^t g_1(t,s,z(s)) (t-s)^{-β_1} ds
//!                      + ∫_0^t g_2(t,s,z(s)) (t-s)^{-β_2} dW(s)
//! ```
//!
//! is solved through its Volterra form with kernels
//!
//! ```text
//!   F_i(t,s,z) = f_i(s,z) (t-s)^{α_i-1} / Γ(α_i)
//!   G_0(t,s,z) = g_0(s,z) (t-s)^{α-1} / Γ(α)
//!   G_j(t,s,z) = (t-s)^{α-β_j}/Γ(α) ∫_0^1 (1-u)^{α-1} u^{-β_j}
//!                    g_j((t-s)u + s, s, z) du,   j = 1, 2.
//! ```
//!
//! Coefficient functions are caller-supplied callables over plain slices and
//! must be pure; Lipschitz/linear-growth assumptions are spot-checked as
//! warnings, never enforced.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_into, JacobiRule};
use crate::specialfn::gamma;

/// Coefficient of the form c(t, z) -> R^d, writing into the output slice.
pub type StateFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
/// Two-time kernel coefficient c(v, s, z) -> R^d (or R^{d×r}, row-major).
pub type KernelFn = dyn Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync;

/// The fractional exponents of the problem with their admissibility ranges:
/// 0 < α ≤ α_i ≤ 1, β_1 ∈ (0,1), β_2 ∈ (0, 1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalOrders {
    pub alpha: f64,
    pub alpha_i: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
}

impl FractionalOrders {
    pub fn new(alpha: f64, alpha_i: Vec<f64>, beta1: f64, beta2: f64) -> Result<Self> {
        let orders = FractionalOrders { alpha, alpha_i, beta1, beta2 };
        orders.validate()?;
        Ok(orders)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            errs.push(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        for (i, &a) in self.alpha_i.iter().enumerate() {
            if !(a >= self.alpha && a <= 1.0) {
                errs.push(format!(
                    "alpha_{} must lie in [alpha, 1] = [{}, 1], got {a}",
                    i + 1,
                    self.alpha
                ));
            }
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) {
            errs.push(format!("beta1 must lie in (0, 1), got {}", self.beta1));
        }
        if !(self.beta2 > 0.0 && self.beta2 < 0.5) {
            errs.push(format!("beta2 must lie in (0, 0.5), got {}", self.beta2));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::domain("FractionalOrders", errs.join("; ")))
        }
    }

    /// Number of neutral terms (may be zero).
    pub fn n_neutral(&self) -> usize {
        self.alpha_i.len()
    }
}

/// A uniform grid t_n = n·h, n = 0..N, with h = T/N.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n_steps: usize,
    pub horizon: f64,
}

impl Grid {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::domain("Grid", "n_steps must be positive"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain("Grid", format!("horizon must be > 0, got {horizon}")));
        }
        Ok(Grid { n_steps, horizon })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.step()
    }
}

/// The full problem data of the SFNIDE.
#[derive(Clone)]
pub struct ProblemSpec {
    pub dim: usize,
    pub wiener_dim: usize,
    pub orders: FractionalOrders,
    /// Neutral coefficients f_i(t, z) -> R^d; one per entry of `orders.alpha_i`.
    pub f: Vec<Arc<StateFn>>,
    pub g0: Arc<StateFn>,
    /// Drift kernel coefficient g_1(v, s, z) -> R^d.
    pub g1: Arc<KernelFn>,
    /// Diffusion kernel coefficient g_2(v, s, z) -> R^{d×r}, row-major.
    pub g2: Arc<KernelFn>,
    pub z0: Vec<f64>,
    pub horizon: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dim", &self.dim)
            .field("wiener_dim", &self.wiener_dim)
            .field("orders", &self.orders)
            .field("z0", &self.z0)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.orders.validate()?;
        if self.f.len() != self.orders.alpha_i.len() {
            return Err(Error::mismatch(
                "ProblemSpec",
                format!(
                    "{} neutral coefficients but {} neutral orders",
                    self.f.len(),
                    self.orders.alpha_i.len()
                ),
            ));
        }
        if self.z0.len() != self.dim {
            return Err(Error::mismatch(
                "ProblemSpec",
                format!("z0 has {} entries, dim is {}", self.z0.len(), self.dim),
            ));
        }
        if self.dim == 0 || self.wiener_dim == 0 {
            return Err(Error::domain("ProblemSpec", "dim and wiener_dim must be positive"));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::domain("ProblemSpec", "horizon must be positive"));
        }
        Ok(())
    }

    /// Spot-check the linear growth condition |c(t,z)| ≤ L(1 + |z|) on a
    /// sampled (t, z) grid. Returns human-readable warnings; an empty vector
    /// means every probe passed. Never fatal (Assumption-4 hook).
    pub fn probe_linear_growth(&self, l: f64) -> Vec<String> {
        let mut warnings = Vec::new();
        let mut out = vec![0.0; self.dim];
        let mut out2 = vec![0.0; self.dim * self.wiener_dim];
        let scales = [0.0, 0.5, 1.0, 2.0, 5.0];
        for (ti, &tf) in [0.0, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
            let t = tf * self.horizon;
            for &scale in &scales {
                let z: Vec<f64> = (0..self.dim)
                    .map(|k| scale * if k % 2 == 0 { 1.0 } else { -1.0 })
                    .collect();
                let zn = norm(&z);
                let budget = l * (1.0 + zn);
                let mut check = |name: &str, v: f64| {
                    if v > budget {
                        warnings.push(format!(
                            "{name} violates linear growth at t={t}, |z|={zn}: |value|={v} > {budget}"
                        ));
                    }
                };
                for (i, fi) in self.f.iter().enumerate() {
                    fi(t, &z, &mut out);
                    check(&format!("f_{}", i + 1), norm(&out));
                }
                (self.g0)(t, &z, &mut out);
                check("g0", norm(&out));
                let s = t * 0.5;
                (self.g1)(t, s, &z, &mut out);
                check("g1", norm(&out));
                (self.g2)(t, s, &z, &mut out2);
                check("g2", norm(&out2));
                let _ = ti;
            }
        }
        warnings
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// F_i(t, s, z) = f_i(s, z) (t-s)^{α_i - 1} / Γ(α_i). Requires s < t.
pub fn eval_f(
    orders: &FractionalOrders,
    i: usize,
    f_i: &StateFn,
    t: f64,
    s: f64,
    z: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let alpha_i = orders.alpha_i[i];
    let factor = singular_prefactor("eval_f", t, s, alpha_i - 1.0)? / gamma(alpha_i)?;
    f_i(s, z, out);
    scale_checked("eval_f", out, factor)
}

/// G_0(t, s, z) = g_0(s, z) (t-s)^{α - 1} / Γ(α). Requires s < t.
pub fn eval_g0(
    orders: &FractionalOrders,
    g0: &StateFn,
    t: f64,
    s: f64,
    z: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let factor = singular_prefactor("eval_g0", t, s, orders.alpha - 1.0)? / gamma(orders.alpha)?;
    g0(s, z, out);
    scale_checked("eval_g0", out, factor)
}

/// G_j(t, s, z) for j = 1, 2: the prefactor (t-s)^{α-β_j}/Γ(α) times the
/// Gauss-Jacobi quadrature of u -> g_j((t-s)u + s, s, z). The rule must
/// have been built with exponents (α-1, -β_j). `scratch` and `out` hold the
/// coefficient's output shape (d for j=1, d×r row-major for j=2).
pub fn eval_gj(
    orders: &FractionalOrders,
    j: u8,
    g_j: &KernelFn,
    rule: &JacobiRule,
    t: f64,
    s: f64,
    z: &[f64],
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    let beta_j = match j {
        1 => orders.beta1,
        2 => orders.beta2,
        _ => return Err(Error::domain("eval_gj", format!("j must be 1 or 2, got {j}"))),
    };
    let dt = t - s;
    let factor =
        singular_prefactor("eval_gj", t, s, orders.alpha - beta_j)? / gamma(orders.alpha)?;
    integrate_into(rule, |u, buf| g_j(dt * u + s, s, z, buf), scratch, out)?;
    scale_checked("eval_gj", out, factor)
}

fn singular_prefactor(op: &'static str, t: f64, s: f64, exponent: f64) -> Result<f64> {
    if !(s < t) {
        return Err(Error::domain(
            op,
            format!("requires s < t (kernel singular on the diagonal), got s={s}, t={t}"),
        ));
    }
    Ok((t - s).powf(exponent))
}

fn scale_checked(op: &'static str, out: &mut [f64], factor: f64) -> Result<()> {
    for v in out.iter_mut() {
        *v *= factor;
        if !v.is_finite() {
            return Err(Error::evaluation(op, format!("kernel value became {v}")));
        }
    }
    Ok(())
}

/// The scalar test problem used throughout the convergence experiments:
///
/// ```text
///   D^α( z(t) - I^{α_1} cos(t z(t)) )
///       = cos(t z(t)) + ∫_0^t s sin(z(s)) (t-s)^{-β_1} ds
///                     + ∫_0^t s sin(z(s)) (t-s)^{-β_2} dW(s)
/// ```
///
/// on [0, 1] with z(0) = 1.
pub fn example1(alpha: f64, alpha1: f64, beta1: f64, beta2: f64) -> Result<ProblemSpec> {
    let orders = FractionalOrders::new(alpha, vec![alpha1], beta1, beta2)?;
    let p = ProblemSpec {
        dim: 1,
        wiener_dim: 1,
        orders,
        f: vec![Arc::new(|t: f64, z: &[f64], out: &mut [f64]| {
            out[0] = (t * z[0]).cos();
        })],
        g0: Arc::new(|t: f64, z: &[f64], out: &mut [f64]| {
            out[0] = (t * z[0]).cos();
        }),
        g1: Arc::new(|_v: f64, s: f64, z: &[f64], out: &mut [f64]| {
            out[0] = s * z[0].sin();
        }),
        g2: Arc::new(|_v: f64, s: f64, z: &[f64], out: &mut [f64]| {
            out[0] = s * z[0].sin();
        }),
        z0: vec![1.0],
        horizon: 1.0,
    };
    p.validate()?;
    Ok(p)
}

/// Deterministic and degenerate fixtures used by the test suite and the
/// `linear_test` problem family of the CLI.
pub mod fixtures {
    use super::*;

    /// All coefficients zero: the solution stays at z0.
    pub fn zero_problem(orders: FractionalOrders, z0: Vec<f64>, horizon: f64) -> ProblemSpec {
        let dim = z0.len();
        constant_problem(orders, z0, horizon, dim, 0.0, 0.0, 0.0, 0.0)
    }

    /// g0 ≡ c, all other coefficients zero. Exact solution
    /// z(t) = z0 + c t^α / Γ(α+1).
    pub fn constant_g0(orders: FractionalOrders, z0: Vec<f64>, horizon: f64, c: f64) -> ProblemSpec {
        let dim = z0.len();
        constant_problem(orders, z0, horizon, dim, 0.0, c, 0.0, 0.0)
    }

    /// g1 ≡ c, all other coefficients zero. Exact solution
    /// z(T) = z0 + c B(α, 2-β_1) T^{α+1-β_1} / (Γ(α)(1-β_1)).
    pub fn constant_g1(orders: FractionalOrders, z0: Vec<f64>, horizon: f64, c: f64) -> ProblemSpec {
        let dim = z0.len();
        constant_problem(orders, z0, horizon, dim, 0.0, 0.0, c, 0.0)
    }

    /// g2 ≡ c, all other coefficients zero: a weakly singular stochastic
    /// integral with E[Z(t)] = z0.
    pub fn constant_g2(orders: FractionalOrders, z0: Vec<f64>, horizon: f64, c: f64) -> ProblemSpec {
        let dim = z0.len();
        constant_problem(orders, z0, horizon, dim, 0.0, 0.0, 0.0, c)
    }

    /// Every coefficient constant (f_i ≡ cf for each neutral term).
    #[allow(clippy::too_many_arguments)]
    pub fn constant_problem(
        orders: FractionalOrders,
        z0: Vec<f64>,
        horizon: f64,
        wiener_dim: usize,
        cf: f64,
        c0: f64,
        c1: f64,
        c2: f64,
    ) -> ProblemSpec {
        let dim = z0.len();
        let n = orders.alpha_i.len();
        let fill = move |c: f64| {
            Arc::new(move |_t: f64, _z: &[f64], out: &mut [f64]| out.fill(c)) as Arc<StateFn>
        };
        let fill2 = move |c: f64| {
            Arc::new(move |_v: f64, _s: f64, _z: &[f64], out: &mut [f64]| out.fill(c))
                as Arc<KernelFn>
        };
        ProblemSpec {
            dim,
            wiener_dim,
            orders,
            f: (0..n).map(|_| fill(cf)).collect(),
            g0: fill(c0),
            g1: fill2(c1),
            g2: fill2(c2),
            z0,
            horizon,
        }
    }
}
