//! Field-road front propagation through a Hamilton-Jacobi variational
//! inequality.
//!
//! A population invades the upper half-plane (the field, with advection
//! speed `c`) and a fast line at y = 0 (the road, with transport capacity
//! `a` and drift `b`). In the geometric-optics limit the invasion is
//! described by the obstacle problem
//!
//! ```text
//! min{ v_t + |grad v|^2 + c v_x + 1,  v } = 0        (field)
//! a v_x^2 - v_y + b v_x = 0                          (road, y = 0)
//! ```
//!
//! whose solution has the closed form `v = max(0, phi* - t)`, with `phi*`
//! a one-dimensional minimization over the road-contact budget. This crate
//! provides:
//!
//! - [`minimize`]: exact evaluation of `phi*`, the minimizer `s*`, the
//!   payoff J and value v, with regime classification and an independent
//!   cubic-root cross-check;
//! - [`paths`]: the optimal control triplets behind the formula, payoff
//!   quadrature and the front-point (Freidlin) audits;
//! - [`geometry`]: grid evaluation, level-set extraction and the
//!   convexity / rotational-monotonicity audits of the invaded region;
//! - [`cone`]: the two-road conical extension via the reflection map;
//! - [`hj`]: a monotone finite-difference solver for the obstacle problem
//!   used as an independent oracle against the closed form;
//! - [`kppsim`]: scaled parabolic simulators validating the singular
//!   limits (phase-function convergence and the thin-strip boundary
//!   condition);
//! - [`cli`]: the `fieldroad` command-line surface.
//!
//! Every capability has a runnable example under `examples/`; start with
//! `cargo run --example evaluate_point`.

pub mod checks;
pub mod cli;
pub mod cone;
pub mod contour;
pub mod csvio;
pub mod geometry;
pub mod grid;
pub mod hj;
pub mod kppsim;
pub mod minimize;
pub mod oracle;
pub mod params;
pub mod paths;

pub use minimize::{
    critical_boundary_y, evaluate, homogeneity_check, legendre_forms, minimizer_via_cubic,
    objective, objective_derivatives, solve_minimizer, MinimizeError,
};
pub use params::{DomainError, Evaluation, Params, Regime, SpaceTimePoint};
