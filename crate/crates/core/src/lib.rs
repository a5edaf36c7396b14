//! Numerical toolkit for d-dimensional stochastic fractional neutral
//! integro-differential equations (SFNIDEs) with Abel-type weakly singular
//! kernels.
//!
//! The equation is solved in its equivalent stochastic Volterra integral
//! form with kernels `F_i`, `G_0`, `G_1`, `G_2`, discretized by the
//! Euler-Maruyama scheme on a uniform grid. The crate also measures strong
//! convergence rates with coupled Monte Carlo paths and evaluates a
//! generalized Gronwall bound with multiple weakly singular kernels.
//!
//! Module map:
//! - [`specialfn`]: Gamma, log-Gamma, Beta, Mittag-Leffler.
//! - [`quadrature`]: Gauss-Jacobi rules for the doubly singular inner integrals.
//! - [`model`]: problem data, SVIE kernel evaluation, built-in test problems.
//! - [`brownian`]: reproducible Brownian increments with exact dyadic coarsening.
//! - [`solver`]: the O(N^2) Euler-Maruyama history-sum recursion.
//! - [`gronwall`]: the multi-kernel Gronwall series bound.
//! - [`harness`]: coupled-path convergence studies and rate fitting.
//! - [`config`]: key=value run configuration shared by the CLI subcommands.

pub mod brownian;
pub mod config;
pub mod error;
pub mod gronwall;
pub mod harness;
pub mod model;
pub mod quadrature;
pub mod solver;
pub mod specialfn;

pub use error::{Error, Result};
