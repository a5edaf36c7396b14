//! The discrete Euler-Maruyama scheme on the stochastic Volterra form:
//!
//! ```text
//!   Z_n = z_0 + Σ_{j<n} Σ_i F_i(t_n, t_j, Z_j) h + Σ_{j<n} G_0(t_n, t_j, Z_j) h
//!             + Σ_{j<n} G_1(t_n, t_j, Z_j) h + Σ_{j<n} G_2(t_n, t_j, Z_j) ΔW_j
//! ```
//!
//! The kernels depend on t_n, so the history sums are recomputed from
//! scratch at every step: O(N^2) kernel evaluations per trajectory, with no
//! reuse across n. The singular prefactors (t_n - t_j)^e depend only on the
//! lag n - j and are tabulated once per grid.

use std::sync::Arc;

use rayon::prelude::*;

use crate::brownian::{sample_path, BrownianPath, SeedRecord};
use crate::error::{Error, Result};
use crate::model::{FractionalOrders, Grid, ProblemSpec};
use crate::quadrature::{build_jacobi_rule, JacobiRule};
use crate::specialfn::gamma;

/// The pair of Gauss-Jacobi rules a solve needs: one per diffusion/drift
/// singularity exponent (α-1, -β_1) and (α-1, -β_2).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRules {
    pub rule_g1: JacobiRule,
    pub rule_g2: JacobiRule,
}

impl KernelRules {
    /// Build both rules for the given orders with `n_quad` nodes each.
    pub fn build(orders: &FractionalOrders, n_quad: usize) -> Result<Self> {
        Ok(KernelRules {
            rule_g1: build_jacobi_rule(orders.alpha - 1.0, -orders.beta1, n_quad)?,
            rule_g2: build_jacobi_rule(orders.alpha - 1.0, -orders.beta2, n_quad)?,
        })
    }

    fn check_match(&self, orders: &FractionalOrders) -> Result<()> {
        let expect = [
            (self.rule_g1.exponent_a, orders.alpha - 1.0, "g1 exponent_a"),
            (self.rule_g1.exponent_b, -orders.beta1, "g1 exponent_b"),
            (self.rule_g2.exponent_a, orders.alpha - 1.0, "g2 exponent_a"),
            (self.rule_g2.exponent_b, -orders.beta2, "g2 exponent_b"),
        ];
        for (got, want, what) in expect {
            if got != want {
                return Err(Error::mismatch(
                    "em_solve",
                    format!("{what} is {got}, problem requires {want}"),
                ));
            }
        }
        Ok(())
    }
}

/// EM iterates Z_n on a grid, row-major (N+1)×d, with provenance.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub dim: usize,
    pub values: Vec<f64>,
    pub orders: FractionalOrders,
    pub seed_record: SeedRecord,
}

impl Trajectory {
    pub fn state(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.grid.n_steps)
    }
}

/// Summary statistics of a batch of terminal states.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub n_paths: u64,
    /// Componentwise sample mean of Z_N.
    pub mean: Vec<f64>,
    /// Sample mean of |Z_N|^2.
    pub second_moment: f64,
}

/// Run the EM recursion for one Brownian path.
pub fn em_solve(
    problem: &ProblemSpec,
    grid: &Grid,
    path: &BrownianPath,
    rules: &KernelRules,
) -> Result<Trajectory> {
    problem.validate()?;
    rules.check_match(&problem.orders)?;
    if path.grid != *grid {
        return Err(Error::mismatch(
            "em_solve",
            format!("path grid {:?} does not match solve grid {:?}", path.grid, grid),
        ));
    }
    if path.wiener_dim != problem.wiener_dim {
        return Err(Error::mismatch(
            "em_solve",
            format!(
                "path has wiener_dim {}, problem has {}",
                path.wiener_dim, problem.wiener_dim
            ),
        ));
    }
    if (grid.horizon - problem.horizon).abs() > 1e-12 * problem.horizon {
        return Err(Error::mismatch(
            "em_solve",
            format!("grid horizon {} vs problem horizon {}", grid.horizon, problem.horizon),
        ));
    }

    let d = problem.dim;
    let r = problem.wiener_dim;
    let big_n = grid.n_steps;
    let h = grid.step();
    let orders = &problem.orders;
    let inv_gamma_alpha = 1.0 / gamma(orders.alpha)?;
    let inv_gamma_alpha_i: Vec<f64> = orders
        .alpha_i
        .iter()
        .map(|&a| gamma(a).map(|g| 1.0 / g))
        .collect::<Result<_>>()?;

    // Lag power tables: index m = n - j in 1..=N.
    let lag_pow = |e: f64| -> Vec<f64> {
        let mut v = Vec::with_capacity(big_n + 1);
        v.push(f64::NAN); // lag 0 never used
        for m in 1..=big_n {
            v.push((m as f64 * h).powf(e));
        }
        v
    };
    let pow_f: Vec<Vec<f64>> = orders.alpha_i.iter().map(|&a| lag_pow(a - 1.0)).collect();
    let pow_g0 = lag_pow(orders.alpha - 1.0);
    let pow_g1 = lag_pow(orders.alpha - orders.beta1);
    let pow_g2 = lag_pow(orders.alpha - orders.beta2);

    let mut values = vec![0.0f64; (big_n + 1) * d];
    values[..d].copy_from_slice(&problem.z0);

    let mut buf = vec![0.0f64; d];
    let mut gbuf = vec![0.0f64; d];
    let mut mbuf = vec![0.0f64; d * r];
    let mut mgbuf = vec![0.0f64; d * r];
    let n_quad_1 = rules.rule_g1.len();
    let n_quad_2 = rules.rule_g2.len();

    for n in 1..=big_n {
        let (history, tail) = values.split_at_mut(n * d);
        let acc = &mut tail[..d];
        acc.copy_from_slice(&problem.z0);

        for j in 0..n {
            let z = &history[j * d..(j + 1) * d];
            let s = j as f64 * h;
            let m = n - j;
            let dt = m as f64 * h;

            // neutral terms F_i
            for (i, f_i) in problem.f.iter().enumerate() {
                f_i(s, z, &mut buf);
                let w = pow_f[i][m] * inv_gamma_alpha_i[i] * h;
                for (a, &b) in acc.iter_mut().zip(buf.iter()) {
                    *a += w * b;
                }
            }

            // G_0 drift
            (problem.g0)(s, z, &mut buf);
            let w0 = pow_g0[m] * inv_gamma_alpha * h;
            for (a, &b) in acc.iter_mut().zip(buf.iter()) {
                *a += w0 * b;
            }

            // G_1: quadrature of the inner weakly singular integral
            gbuf.fill(0.0);
            for k in 0..n_quad_1 {
                let u = rules.rule_g1.nodes[k];
                let wq = rules.rule_g1.weights[k];
                (problem.g1)(dt * u + s, s, z, &mut buf);
                for (g, &b) in gbuf.iter_mut().zip(buf.iter()) {
                    *g += wq * b;
                }
            }
            let w1 = pow_g1[m] * inv_gamma_alpha * h;
            for (a, &g) in acc.iter_mut().zip(gbuf.iter()) {
                *a += w1 * g;
            }

            // G_2: matrix-valued quadrature, then contract with ΔW_j
            mgbuf.fill(0.0);
            for k in 0..n_quad_2 {
                let u = rules.rule_g2.nodes[k];
                let wq = rules.rule_g2.weights[k];
                (problem.g2)(dt * u + s, s, z, &mut mbuf);
                for (g, &b) in mgbuf.iter_mut().zip(mbuf.iter()) {
                    *g += wq * b;
                }
            }
            let w2 = pow_g2[m] * inv_gamma_alpha;
            let dw = path.increment(j);
            for row in 0..d {
                let mut dot = 0.0;
                for (col, &dwc) in dw.iter().enumerate() {
                    dot += mgbuf[row * r + col] * dwc;
                }
                acc[row] += w2 * dot;
            }
        }

        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::evaluation(
                "em_solve",
                format!("non-finite state at step {n} (t = {})", n as f64 * h),
            ));
        }
    }

    Ok(Trajectory {
        grid: grid.clone(),
        dim: d,
        values,
        orders: problem.orders.clone(),
        seed_record: path.seed_record.clone(),
    })
}

/// Monte Carlo batch over independent paths with deterministic per-path
/// seeds; results are a pure function of (master_seed, n_paths) regardless
/// of worker count.
pub fn em_solve_batch(
    problem: &ProblemSpec,
    grid: &Grid,
    master_seed: u64,
    n_paths: u64,
    rules: &KernelRules,
) -> Result<BatchSummary> {
    if n_paths == 0 {
        return Err(Error::domain("em_solve_batch", "n_paths must be >= 1"));
    }
    let problem = Arc::new(problem.clone());
    let finals: Vec<Result<Vec<f64>>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let path = sample_path(master_seed, p, grid, problem.wiener_dim)?;
            let traj = em_solve(&problem, grid, &path, rules).map_err(|e| {
                Error::evaluation("em_solve_batch", format!("path {p}: {e}"))
            })?;
            Ok(traj.final_state().to_vec())
        })
        .collect();

    // fixed-order reduction for schedule independence
    let mut mean = vec![0.0f64; problem.dim];
    let mut second_moment = 0.0f64;
    for res in finals {
        let z = res?;
        for (m, &v) in mean.iter_mut().zip(z.iter()) {
            *m += v;
        }
        second_moment += z.iter().map(|v| v * v).sum::<f64>();
    }
    let nf = n_paths as f64;
    for m in mean.iter_mut() {
        *m /= nf;
    }
    Ok(BatchSummary {
        n_paths,
        mean,
        second_moment: second_moment / nf,
    })
}
