//! Strong-convergence experiments: the coupled mean-square error estimator
//!
//! ```text
//!   e_{h,T} = ( (1/M) Σ_i |Z_h(T, ω_i) - Z_{h/2}(T, ω_i)|² )^{1/2}
//! ```
//!
//! over a common Brownian sample ω_i per path (the fine path is generated
//! at 2N steps and coarsened exactly to N), plus log-log least squares rate
//! fitting and the end-to-end study runner that writes CSV/SVG artifacts.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::brownian::{coarsen, derive_stream, sample_path};
use crate::error::{Error, Result};
use crate::model::{Grid, ProblemSpec};
use crate::solver::{em_solve, KernelRules};

/// Per-level results of a convergence study, with the fitted rate.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    /// Coarse step counts per level, strictly doubling.
    pub levels: Vec<usize>,
    pub n_paths: u64,
    pub master_seed: u64,
    pub quad_order: usize,
    /// Coupled error e_{h,T} per level.
    pub errors: Vec<f64>,
    pub fit: RateFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals of the log2-log2 least squares fit.
    pub residual: f64,
}

/// The coupled estimator at coarse resolution N (fine resolution 2N).
/// Per-path seeds derive from (master_seed, path index); the coarse
/// trajectory runs on the exact coarsening of the fine path.
pub fn coupled_error(
    problem: &ProblemSpec,
    coarse_steps: usize,
    n_paths: u64,
    master_seed: u64,
    rules: &KernelRules,
) -> Result<f64> {
    if n_paths == 0 {
        return Err(Error::domain("coupled_error", "n_paths must be >= 1"));
    }
    let fine_grid = Grid::new(2 * coarse_steps, problem.horizon)?;
    let coarse_grid = Grid::new(coarse_steps, problem.horizon)?;

    let sq_diffs: Vec<Result<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let fine_path = sample_path(master_seed, p, &fine_grid, problem.wiener_dim)?;
            let coarse_path = coarsen(&fine_path)?;
            let fine = em_solve(problem, &fine_grid, &fine_path, rules)
                .map_err(|e| Error::evaluation("coupled_error", format!("path {p}, fine level: {e}")))?;
            let coarse = em_solve(problem, &coarse_grid, &coarse_path, rules)
                .map_err(|e| Error::evaluation("coupled_error", format!("path {p}, coarse level: {e}")))?;
            let d2 = fine
                .final_state()
                .iter()
                .zip(coarse.final_state())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            Ok(d2)
        })
        .collect();

    // fixed-order pairwise reduction: schedule-independent and accurate
    let mut values = Vec::with_capacity(n_paths as usize);
    for r in sq_diffs {
        values.push(r?);
    }
    Ok((pairwise_sum(&values) / n_paths as f64).sqrt())
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Ordinary least squares of log2(e) on log2(h). The slope estimates the
/// strong convergence order.
pub fn fit_rate(h_values: &[f64], e_values: &[f64]) -> Result<RateFit> {
    if h_values.len() != e_values.len() || h_values.len() < 3 {
        return Err(Error::domain(
            "fit_rate",
            format!("need >= 3 matching levels, got {}/{}", h_values.len(), e_values.len()),
        ));
    }
    if e_values.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::domain("fit_rate", "all errors must be positive"));
    }
    let xs: Vec<f64> = h_values.iter().map(|h| h.log2()).collect();
    let ys: Vec<f64> = e_values.iter().map(|e| e.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("fit_rate", "all step sizes identical"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(RateFit { slope, intercept, residual })
}

/// Configuration of a study run (already validated by the config layer).
#[derive(Debug, Clone)]
pub struct StudyParams {
    pub levels: Vec<usize>,
    pub n_paths: u64,
    pub master_seed: u64,
    pub quad_order: usize,
}

/// Run the coupled estimator on every level and fit the rate. Per-level
/// fine paths are independent, with seeds derived from
/// (master_seed, level index, path index).
pub fn run_study(problem: &ProblemSpec, params: &StudyParams) -> Result<ConvergenceStudy> {
    if params.levels.len() < 3 {
        return Err(Error::domain("run_study", "need at least 3 levels"));
    }
    for w in params.levels.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(Error::domain(
                "run_study",
                format!("levels must double, got {} -> {}", w[0], w[1]),
            ));
        }
    }
    let rules = KernelRules::build(&problem.orders, params.quad_order)?;
    let mut errors = Vec::with_capacity(params.levels.len());
    for (li, &n) in params.levels.iter().enumerate() {
        let level_seed = derive_stream(params.master_seed, li as u64);
        let e = coupled_error(problem, n, params.n_paths, level_seed, &rules)
            .map_err(|err| Error::evaluation("run_study", format!("level N = {n}: {err}")))?;
        errors.push(e);
    }
    let h: Vec<f64> = params
        .levels
        .iter()
        .map(|&n| problem.horizon / n as f64)
        .collect();
    let fit = fit_rate(&h, &errors)?;
    Ok(ConvergenceStudy {
        levels: params.levels.clone(),
        n_paths: params.n_paths,
        master_seed: params.master_seed,
        quad_order: params.quad_order,
        errors,
        fit,
    })
}

impl ConvergenceStudy {
    /// The `study.csv` payload: metadata header lines prefixed with `#`,
    /// then `N,h,e,log2h,log2e` rows. Byte-deterministic for fixed inputs.
    pub fn to_csv(&self, horizon: f64, generator: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# seed={}", self.master_seed);
        let _ = writeln!(out, "# paths={}", self.n_paths);
        let _ = writeln!(out, "# levels={}", join(&self.levels));
        let _ = writeln!(out, "# quad_order={}", self.quad_order);
        let _ = writeln!(out, "# generator={generator}");
        let _ = writeln!(out, "# slope={}", self.fit.slope);
        let _ = writeln!(out, "# intercept={}", self.fit.intercept);
        let _ = writeln!(out, "# residual={}", self.fit.residual);
        let _ = writeln!(out, "N,h,e,log2h,log2e");
        for (&n, &e) in self.levels.iter().zip(&self.errors) {
            let h = horizon / n as f64;
            let _ = writeln!(out, "{n},{h},{e},{},{}", h.log2(), e.log2());
        }
        out
    }

    /// A static log2-log2 SVG plot of the errors with a dashed reference
    /// line of the given slope.
    pub fn to_svg(&self, horizon: f64, reference_slope: f64) -> String {
        let xs: Vec<f64> = self
            .levels
            .iter()
            .map(|&n| (horizon / n as f64).log2())
            .collect();
        let ys: Vec<f64> = self.errors.iter().map(|e| e.log2()).collect();
        let (w, h, m) = (640.0, 480.0, 60.0);
        let (xmin, xmax) = bounds(&xs);
        let (ymin, ymax) = bounds(&ys);
        let sx = |x: f64| m + (x - xmin) / (xmax - xmin).max(1e-300) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - ymin) / (ymax - ymin).max(1e-300) * (h - 2.0 * m);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            h - m,
            w - m,
            h - m
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#,
            h - m
        );
        let pts: Vec<String> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| format!("{},{}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for (x, y) in xs.iter().zip(&ys) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="4" fill="steelblue"/>"#,
                sx(*x),
                sy(*y)
            );
        }
        // dashed reference line through the last data point
        let (x0, y0) = (xs[0], ys[ys.len() - 1] + reference_slope * (xs[0] - xs[xs.len() - 1]));
        let (x1, y1) = (xs[xs.len() - 1], ys[ys.len() - 1]);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="6,4"/>"#,
            sx(x0),
            sy(y0),
            sx(x1),
            sy(y1)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="14">log2 h</text>"#,
            w / 2.0 - 20.0,
            h - m / 3.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="10" y="{}" font-size="14" transform="rotate(-90 14 {})">log2 e</text>"#,
            h / 2.0,
            h / 2.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" fill="steelblue">fitted slope {:.3}</text>"#,
            m + 10.0,
            m - 10.0,
            self.fit.slope
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="13" fill="gray">reference slope {:.3}</text>"#,
            m + 10.0,
            m + 8.0,
            reference_slope
        );
        svg.push_str("</svg>\n");
        svg
    }

    /// Write study.csv, study_meta.txt and study.svg into `dir`.
    pub fn write_artifacts(
        &self,
        dir: &Path,
        horizon: f64,
        generator: &str,
        reference_slope: f64,
        meta_extra: &str,
    ) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("study.csv"), self.to_csv(horizon, generator))?;
        let mut meta = String::new();
        let _ = writeln!(meta, "seed={}", self.master_seed);
        let _ = writeln!(meta, "paths={}", self.n_paths);
        let _ = writeln!(meta, "levels={}", join(&self.levels));
        let _ = writeln!(meta, "quad_order={}", self.quad_order);
        let _ = writeln!(meta, "generator={generator}");
        let _ = writeln!(meta, "slope={}", self.fit.slope);
        meta.push_str(meta_extra);
        std::fs::write(dir.join("study_meta.txt"), meta)?;
        std::fs::write(dir.join("study.svg"), self.to_svg(horizon, reference_slope))?;
        Ok(())
    }
}

fn join(levels: &[usize]) -> String {
    levels
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    (lo, hi)
}

/// Mean-square sensitivity to the initial value: for each δ run coupled
/// trajectories (same Brownian paths) from z0 and z0 + δ·1 and report the
/// mean-square difference at T.
pub fn continuous_dependence_probe(
    problem: &ProblemSpec,
    deltas: &[f64],
    n_steps: usize,
    n_paths: u64,
    master_seed: u64,
    rules: &KernelRules,
) -> Result<Vec<(f64, f64)>> {
    if deltas.iter().any(|&d| d < 0.0) {
        return Err(Error::domain(
            "continuous_dependence_probe",
            "perturbation sizes must be non-negative",
        ));
    }
    let grid = Grid::new(n_steps, problem.horizon)?;
    let mut table = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut shifted = problem.clone();
        shifted.z0 = problem.z0.iter().map(|z| z + delta).collect();
        let diffs: Vec<Result<f64>> = (0..n_paths)
            .into_par_iter()
            .map(|p| {
                let path = sample_path(master_seed, p, &grid, problem.wiener_dim)?;
                let base = em_solve(problem, &grid, &path, rules)?;
                let pert = em_solve(&shifted, &grid, &path, rules)?;
                Ok(base
                    .final_state()
                    .iter()
                    .zip(pert.final_state())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>())
            })
            .collect();
        let mut values = Vec::with_capacity(n_paths as usize);
        for d in diffs {
            values.push(d?);
        }
        table.push((delta, pairwise_sum(&values) / n_paths as f64));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{example1, fixtures, FractionalOrders};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn orders(alpha: f64, beta1: f64, beta2: f64) -> FractionalOrders {
        FractionalOrders::new(alpha, vec![], beta1, beta2).unwrap()
    }

    #[test]
    fn zero_problem_has_zero_error() {
        let p = fixtures::zero_problem(orders(0.5, 0.5, 0.25), vec![1.0], 1.0);
        let rules = KernelRules::build(&p.orders, 8).unwrap();
        let e = coupled_error(&p, 16, 10, 3, &rules).unwrap();
        assert_abs_diff_eq!(e, 0.0);
    }

    #[test]
    fn deterministic_fixture_error_is_seed_free() {
        let p = fixtures::constant_g0(orders(0.5, 0.5, 0.25), vec![1.0], 1.0, 1.0);
        let rules = KernelRules::build(&p.orders, 8).unwrap();
        let e1 = coupled_error(&p, 32, 1, 3, &rules).unwrap();
        let e2 = coupled_error(&p, 32, 50, 999, &rules).unwrap();
        assert_relative_eq!(e1, e2, max_relative = 1e-13);
        assert!(e1 > 0.0);
    }

    #[test]
    fn example1_error_shrinks_with_refinement() {
        let p = example1(0.4, 0.5, 0.6, 0.4).unwrap();
        let rules = KernelRules::build(&p.orders, 8).unwrap();
        let e6 = coupled_error(&p, 1 << 6, 200, 13, &rules).unwrap();
        let e7 = coupled_error(&p, 1 << 7, 200, 13, &rules).unwrap();
        assert!(e6.is_finite() && e7.is_finite());
        assert!(e7 < e6, "e(2^7) = {e7} not below e(2^6) = {e6}");
    }

    #[test]
    fn coupling_uses_the_exactly_coarsened_path() {
        let p = example1(0.4, 0.5, 0.6, 0.4).unwrap();
        let rules = KernelRules::build(&p.orders, 8).unwrap();
        let fine_grid = Grid::new(64, 1.0).unwrap();
        let coarse_grid = Grid::new(32, 1.0).unwrap();
        for path_idx in [0u64, 1, 2] {
            let fine = sample_path(21, path_idx, &fine_grid, 1).unwrap();
            let coarse = coarsen(&fine).unwrap();
            let a = em_solve(&p, &coarse_grid, &coarse, &rules).unwrap();
            let b = em_solve(&p, &coarse_grid, &coarsen(&fine).unwrap(), &rules).unwrap();
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn fit_rate_exact_log_linear_data() {
        let h: Vec<f64> = (0..5).map(|k| 1.0 / (1 << k) as f64).collect();
        let e1: Vec<f64> = h.iter().map(|&x| 3.0 * x).collect();
        let f1 = fit_rate(&h, &e1).unwrap();
        assert_relative_eq!(f1.slope, 1.0, max_relative = 1e-12);
        let e04: Vec<f64> = h.iter().map(|&x| 0.7 * x.powf(0.4)).collect();
        let f04 = fit_rate(&h, &e04).unwrap();
        assert_relative_eq!(f04.slope, 0.4, max_relative = 1e-12);
        assert!(f04.residual < 1e-20);
    }

    #[test]
    fn fit_rate_rejects_degenerate_input() {
        assert!(fit_rate(&[0.1, 0.1, 0.1], &[1.0, 1.0, 1.0]).is_err());
        assert!(fit_rate(&[0.1, 0.2], &[1.0, 2.0]).is_err());
        assert!(fit_rate(&[0.1, 0.2, 0.4], &[1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn study_runs_and_is_deterministic() {
        let p = example1(0.4, 0.5, 0.6, 0.4).unwrap();
        let params = StudyParams {
            levels: vec![8, 16, 32],
            n_paths: 40,
            master_seed: 7,
            quad_order: 8,
        };
        let s1 = run_study(&p, &params).unwrap();
        let s2 = run_study(&p, &params).unwrap();
        assert_eq!(s1.to_csv(1.0, "g"), s2.to_csv(1.0, "g"));
        assert_eq!(s1.errors.len(), 3);
    }

    #[test]
    fn study_rejects_non_doubling_levels() {
        let p = example1(0.4, 0.5, 0.6, 0.4).unwrap();
        let params = StudyParams {
            levels: vec![8, 16, 24],
            n_paths: 4,
            master_seed: 7,
            quad_order: 8,
        };
        assert!(run_study(&p, &params).is_err());
    }

    #[test]
    fn estimator_statistically_stable_in_m() {
        let p = example1(0.4, 0.5, 0.6, 0.4).unwrap();
        let rules = KernelRules::build(&p.orders, 8).unwrap();
        let m = 200u64;
        let e_m = coupled_error(&p, 32, m, 5, &rules).unwrap();
        let e_2m = coupled_error(&p, 32, 2 * m, 5, &rules).unwrap();
        assert!(
            (e_2m - e_m).abs() < 5.0 * e_m / (m as f64).sqrt(),
            "estimator unstable: {e_m} vs {e_2m}"
        );
    }

    #[test]
    fn deterministic_fixture_slope_near_alpha() {
        // g0 ≡ 1 fixture: fitted slope must not fall below α - 0.05
        let alpha = 0.5;
        let p = fixtures::constant_g0(orders(alpha, 0.5, 0.25), vec![1.0], 1.0, 1.0);
        let params = StudyParams {
            levels: vec![64, 128, 256, 512],
            n_paths: 1,
            master_seed: 1,
            quad_order: 8,
        };
        let s = run_study(&p, &params).unwrap();
        assert!(
            s.fit.slope >= alpha - 0.05,
            "slope {} below {}",
            s.fit.slope,
            alpha - 0.05
        );
    }

    #[test]
    fn continuous_dependence_zero_delta() {
        let p = example1(0.4, 0.5, 0.6, 0.4).unwrap();
        let rules = KernelRules::build(&p.orders, 8).unwrap();
        let table = continuous_dependence_probe(&p, &[0.0], 16, 5, 3, &rules).unwrap();
        assert_abs_diff_eq!(table[0].1, 0.0);
    }

    #[test]
    fn continuous_dependence_rigid_translation() {
        // zero coefficients: trajectories translate rigidly, diff = δ²
        let p = fixtures::zero_problem(orders(0.5, 0.5, 0.25), vec![1.0], 1.0);
        let rules = KernelRules::build(&p.orders, 8).unwrap();
        let table =
            continuous_dependence_probe(&p, &[0.1, 0.05], 16, 5, 3, &rules).unwrap();
        assert_relative_eq!(table[0].1, 0.01, max_relative = 1e-12);
        assert_relative_eq!(table[1].1, 0.0025, max_relative = 1e-12);
    }

    #[test]
    fn continuous_dependence_decreases_with_delta() {
        let p = example1(0.4, 0.5, 0.6, 0.4).unwrap();
        let rules = KernelRules::build(&p.orders, 8).unwrap();
        let table =
            continuous_dependence_probe(&p, &[0.1, 0.05, 0.025], 64, 100, 11, &rules).unwrap();
        assert!(table[0].1 > table[1].1 && table[1].1 > table[2].1, "{table:?}");
    }
}
