//! Run configuration: a plain-text key=value format shared by all CLI
//! subcommands. Unknown keys are errors, validation is fail-fast and
//! collects every offending field before anything is computed, and
//! `emit` -> `parse_config` round-trips exactly (the emitted file doubles
//! as the run metadata record).
//!
//! Schema (all values UTF-8, `#` starts a comment line):
//!
//! ```text
//! command     = solve | converge | gronwall | quadrature
//! problem     = example1 | zero | constant_g0 | constant_g1 | constant_g2
//! alpha       = f64 in (0, 1]
//! alpha_i     = comma-separated f64 list (may be empty)
//! beta1       = f64 in (0, 1)
//! beta2       = f64 in (0, 0.5)
//! z0          = comma-separated f64 list
//! horizon     = f64 > 0
//! coeff       = f64, constant value for the constant_g* fixtures
//! n_steps     = usize (solve)
//! levels      = comma-separated usize list, strictly doubling (converge)
//! paths       = u64
//! seed        = u64 (required)
//! quad_order  = usize in 1..=200
//! workers     = usize, 0 = all cores
//! output_dir  = path
//! k_max       = usize >= 1 (gronwall)
//! tail_tol    = f64 > 0 (gronwall)
//! g           = f64 >= 0 (gronwall inhomogeneity)
//! b           = f64 >= 0 (gronwall b-kernel coefficient)
//! a_i         = comma-separated f64 list, same length as alpha_i (gronwall)
//! times       = comma-separated f64 list (gronwall query times)
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{FractionalOrders, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Solve,
    Converge,
    Gronwall,
    Quadrature,
}

impl Subcommand {
    pub fn as_str(&self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::Converge => "converge",
            Subcommand::Gronwall => "gronwall",
            Subcommand::Quadrature => "quadrature",
        }
    }
}

impl FromStr for Subcommand {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "solve" => Ok(Subcommand::Solve),
            "converge" => Ok(Subcommand::Converge),
            "gronwall" => Ok(Subcommand::Gronwall),
            "quadrature" => Ok(Subcommand::Quadrature),
            other => Err(format!("unknown command {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Example1,
    Zero,
    ConstantG0,
    ConstantG1,
    ConstantG2,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Example1 => "example1",
            ProblemKind::Zero => "zero",
            ProblemKind::ConstantG0 => "constant_g0",
            ProblemKind::ConstantG1 => "constant_g1",
            ProblemKind::ConstantG2 => "constant_g2",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "example1" => Ok(ProblemKind::Example1),
            "zero" => Ok(ProblemKind::Zero),
            "constant_g0" => Ok(ProblemKind::ConstantG0),
            "constant_g1" => Ok(ProblemKind::ConstantG1),
            "constant_g2" => Ok(ProblemKind::ConstantG2),
            other => Err(format!("unknown problem {other:?}")),
        }
    }
}

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Subcommand,
    pub problem: ProblemKind,
    pub alpha: f64,
    pub alpha_i: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub z0: Vec<f64>,
    pub horizon: f64,
    pub coeff: f64,
    pub n_steps: usize,
    pub levels: Vec<usize>,
    pub paths: u64,
    pub seed: u64,
    pub quad_order: usize,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub k_max: usize,
    pub tail_tol: f64,
    pub g: f64,
    pub b: f64,
    pub a_i: Vec<f64>,
    pub times: Vec<f64>,
}

impl RunConfig {
    /// Serialize back to the key=value format; `parse_str` of the result
    /// reproduces `self` exactly.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command={}", self.command.as_str());
        let _ = writeln!(out, "problem={}", self.problem.as_str());
        let _ = writeln!(out, "alpha={}", self.alpha);
        let _ = writeln!(out, "alpha_i={}", join_f64(&self.alpha_i));
        let _ = writeln!(out, "beta1={}", self.beta1);
        let _ = writeln!(out, "beta2={}", self.beta2);
        let _ = writeln!(out, "z0={}", join_f64(&self.z0));
        let _ = writeln!(out, "horizon={}", self.horizon);
        let _ = writeln!(out, "coeff={}", self.coeff);
        let _ = writeln!(out, "n_steps={}", self.n_steps);
        let _ = writeln!(
            out,
            "levels={}",
            self.levels.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(out, "paths={}", self.paths);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "quad_order={}", self.quad_order);
        let _ = writeln!(out, "workers={}", self.workers);
        let _ = writeln!(out, "output_dir={}", self.output_dir.display());
        let _ = writeln!(out, "k_max={}", self.k_max);
        let _ = writeln!(out, "tail_tol={}", self.tail_tol);
        let _ = writeln!(out, "g={}", self.g);
        let _ = writeln!(out, "b={}", self.b);
        let _ = writeln!(out, "a_i={}", join_f64(&self.a_i));
        let _ = writeln!(out, "times={}", join_f64(&self.times));
        out
    }

    /// Instantiate the configured SFNIDE problem.
    pub fn build_problem(&self) -> Result<ProblemSpec> {
        use crate::model::{example1, fixtures};
        let orders = FractionalOrders::new(
            self.alpha,
            self.alpha_i.clone(),
            self.beta1,
            self.beta2,
        )?;
        match self.problem {
            ProblemKind::Example1 => example1(
                self.alpha,
                *self.alpha_i.first().unwrap_or(&self.alpha),
                self.beta1,
                self.beta2,
            ),
            ProblemKind::Zero => Ok(fixtures::zero_problem(orders, self.z0.clone(), self.horizon)),
            ProblemKind::ConstantG0 => Ok(fixtures::constant_g0(
                orders,
                self.z0.clone(),
                self.horizon,
                self.coeff,
            )),
            ProblemKind::ConstantG1 => Ok(fixtures::constant_g1(
                orders,
                self.z0.clone(),
                self.horizon,
                self.coeff,
            )),
            ProblemKind::ConstantG2 => Ok(fixtures::constant_g2(
                orders,
                self.z0.clone(),
                self.horizon,
                self.coeff,
            )),
        }
    }
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

struct RawConfig<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

const KNOWN_KEYS: &[&str] = &[
    "command", "problem", "alpha", "alpha_i", "beta1", "beta2", "z0", "horizon", "coeff",
    "n_steps", "levels", "paths", "seed", "quad_order", "workers", "output_dir", "k_max",
    "tail_tol", "g", "b", "a_i", "times",
];

impl<'a> RawConfig<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().rev().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

/// Parse a config from file contents. Every problem found is reported, not
/// just the first.
pub fn parse_str(contents: &str, command_override: Option<Subcommand>) -> Result<RunConfig> {
    let mut errors: Vec<String> = Vec::new();
    let mut pairs = Vec::new();
    for (lineno, line) in contents.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let k = k.trim();
                if !KNOWN_KEYS.contains(&k) {
                    errors.push(format!("line {}: unknown key {k:?}", lineno + 1));
                } else {
                    pairs.push((k, v.trim()));
                }
            }
            None => errors.push(format!("line {}: expected key=value, got {line:?}", lineno + 1)),
        }
    }
    let raw = RawConfig { pairs };

    // typed accessors that defer errors into the shared list
    let field = |key: &'static str| raw.get(key);

    fn req<T, E: std::fmt::Display>(
        errors: &mut Vec<String>,
        key: &str,
        v: Option<&str>,
        parse: impl Fn(&str) -> std::result::Result<T, E>,
        default: Option<T>,
    ) -> Option<T> {
        match v {
            Some(s) => match parse(s) {
                Ok(t) => Some(t),
                Err(e) => {
                    errors.push(format!("{key}: {e} (value {s:?})"));
                    None
                }
            },
            None => match default {
                Some(d) => Some(d),
                None => {
                    errors.push(format!("{key}: missing required field"));
                    None
                }
            },
        }
    }

    let command = match command_override {
        Some(c) => {
            if let Some(s) = field("command") {
                if Subcommand::from_str(s) != Ok(c) {
                    errors.push(format!(
                        "command: config says {s:?} but the invoked subcommand is {}",
                        c.as_str()
                    ));
                }
            }
            Some(c)
        }
        None => req(&mut errors, "command", field("command"), Subcommand::from_str, None),
    };

    let problem = req(
        &mut errors,
        "problem",
        field("problem"),
        ProblemKind::from_str,
        Some(ProblemKind::Example1),
    );
    let alpha = req(&mut errors, "alpha", field("alpha"), |s| s.parse::<f64>(), Some(0.4));
    let alpha_i = req(&mut errors, "alpha_i", field("alpha_i"), parse_f64_list, Some(vec![0.5]));
    let beta1 = req(&mut errors, "beta1", field("beta1"), |s| s.parse::<f64>(), Some(0.6));
    let beta2 = req(&mut errors, "beta2", field("beta2"), |s| s.parse::<f64>(), Some(0.4));
    let z0 = req(&mut errors, "z0", field("z0"), parse_f64_list, Some(vec![1.0]));
    let horizon = req(&mut errors, "horizon", field("horizon"), |s| s.parse::<f64>(), Some(1.0));
    let coeff = req(&mut errors, "coeff", field("coeff"), |s| s.parse::<f64>(), Some(1.0));
    let n_steps = req(&mut errors, "n_steps", field("n_steps"), |s| s.parse::<usize>(), Some(256));
    let levels = req(
        &mut errors,
        "levels",
        field("levels"),
        parse_usize_list,
        Some(vec![32, 64, 128, 256, 512]),
    );
    let paths = req(&mut errors, "paths", field("paths"), |s| s.parse::<u64>(), Some(1000));
    // seed is deliberately default-free
    let seed = req(&mut errors, "seed", field("seed"), |s| s.parse::<u64>(), None);
    let quad_order = req(
        &mut errors,
        "quad_order",
        field("quad_order"),
        |s| s.parse::<usize>(),
        Some(16),
    );
    let workers = req(&mut errors, "workers", field("workers"), |s| s.parse::<usize>(), Some(0));
    let output_dir = req(
        &mut errors,
        "output_dir",
        field("output_dir"),
        |s| Ok::<_, std::convert::Infallible>(PathBuf::from(s)),
        Some(PathBuf::from(".")),
    );
    let k_max = req(&mut errors, "k_max", field("k_max"), |s| s.parse::<usize>(), Some(120));
    let tail_tol = req(
        &mut errors,
        "tail_tol",
        field("tail_tol"),
        |s| s.parse::<f64>(),
        Some(1e-12),
    );
    let g = req(&mut errors, "g", field("g"), |s| s.parse::<f64>(), Some(1.0));
    let b = req(&mut errors, "b", field("b"), |s| s.parse::<f64>(), Some(1.0));
    let a_i = req(&mut errors, "a_i", field("a_i"), parse_f64_list, Some(vec![]));
    let times = req(&mut errors, "times", field("times"), parse_f64_list, Some(vec![0.25, 0.5, 0.75]));

    // range validation, only on fields that parsed
    if let Some(a) = alpha {
        if !(a > 0.0 && a <= 1.0) {
            errors.push(format!("alpha must lie in (0, 1], got {a}"));
        }
    }
    if let (Some(a), Some(ais)) = (alpha, &alpha_i) {
        for (i, &ai) in ais.iter().enumerate() {
            if !(ai >= a && ai <= 1.0) {
                errors.push(format!("alpha_i[{i}] must lie in [alpha, 1], got {ai}"));
            }
        }
    }
    if let Some(b1) = beta1 {
        if !(b1 > 0.0 && b1 < 1.0) {
            errors.push(format!("beta1 must lie in (0, 1), got {b1}"));
        }
    }
    if let Some(b2) = beta2 {
        if !(b2 > 0.0 && b2 < 0.5) {
            errors.push(format!("beta2 must lie in (0, 0.5), got {b2}"));
        }
    }
    if let Some(t) = horizon {
        if !(t > 0.0 && t.is_finite()) {
            errors.push(format!("horizon must be > 0, got {t}"));
        }
    }
    if let Some(n) = n_steps {
        if n == 0 {
            errors.push("n_steps must be >= 1".into());
        }
    }
    if let Some(ls) = &levels {
        if command == Some(Subcommand::Converge) {
            if ls.len() < 3 {
                errors.push("levels: need at least 3".into());
            }
            for w in ls.windows(2) {
                if w[1] != 2 * w[0] {
                    errors.push(format!("levels must strictly double, got {} -> {}", w[0], w[1]));
                }
            }
        }
    }
    if let Some(p) = paths {
        if p == 0 {
            errors.push("paths must be >= 1".into());
        }
    }
    if let Some(q) = quad_order {
        if q == 0 || q > crate::quadrature::MAX_NODES {
            errors.push(format!(
                "quad_order must lie in 1..={}, got {q}",
                crate::quadrature::MAX_NODES
            ));
        }
    }
    if let Some(k) = k_max {
        if k == 0 {
            errors.push("k_max must be >= 1".into());
        }
    }
    if let Some(tt) = tail_tol {
        if !(tt > 0.0) {
            errors.push(format!("tail_tol must be > 0, got {tt}"));
        }
    }
    if let (Some(gs), Some(bs)) = (g, b) {
        if gs < 0.0 {
            errors.push(format!("g must be >= 0, got {gs}"));
        }
        if bs < 0.0 {
            errors.push(format!("b must be >= 0, got {bs}"));
        }
    }
    if command == Some(Subcommand::Gronwall) {
        if let (Some(ais), Some(avs)) = (&alpha_i, &a_i) {
            if !avs.is_empty() && avs.len() != ais.len() {
                errors.push(format!(
                    "a_i has {} entries but alpha_i has {}",
                    avs.len(),
                    ais.len()
                ));
            }
        }
        if let (Some(ts), Some(t_max)) = (&times, horizon) {
            for &t in ts {
                if !(t > 0.0 && t < t_max) {
                    errors.push(format!("times entry {t} outside (0, horizon={t_max})"));
                }
            }
        }
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }

    Ok(RunConfig {
        command: command.unwrap(),
        problem: problem.unwrap(),
        alpha: alpha.unwrap(),
        alpha_i: alpha_i.unwrap(),
        beta1: beta1.unwrap(),
        beta2: beta2.unwrap(),
        z0: z0.unwrap(),
        horizon: horizon.unwrap(),
        coeff: coeff.unwrap(),
        n_steps: n_steps.unwrap(),
        levels: levels.unwrap(),
        paths: paths.unwrap(),
        seed: seed.unwrap(),
        quad_order: quad_order.unwrap(),
        workers: workers.unwrap(),
        output_dir: output_dir.unwrap(),
        k_max: k_max.unwrap(),
        tail_tol: tail_tol.unwrap(),
        g: g.unwrap(),
        b: b.unwrap(),
        a_i: a_i.unwrap(),
        times: times.unwrap(),
    })
}

/// Read and parse a config file.
pub fn parse_config(path: &Path, command_override: Option<Subcommand>) -> Result<RunConfig> {
    let contents = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_str(&contents, command_override)
}

fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{e} in {p:?}")))
        .collect()
}

fn parse_usize_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{e} in {p:?}")))
        .collect()
}
