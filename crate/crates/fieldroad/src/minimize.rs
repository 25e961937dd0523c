//! Closed-form evaluation of the fundamental solution.
//!
//! The fundamental solution is a one-dimensional variational problem over
//! the road-contact budget s:
//!
//!   phi*(x, y, t) = min over s >= 0 of
//!       f(s) = (-x + b s + c t)^2 / (4 (t + a s)) + (y + s)^2 / (4 t),
//!
//! and the value of the obstacle problem is v = max(0, phi* - t). The
//! objective is strictly convex in s (f_ss > 0 everywhere), so the
//! minimizer s* is unique: either s* = 0, which happens exactly when
//!
//!   y >= (a / 2t) (x - c t)^2 + b (x - c t)       (the critical curve),
//!
//! or s* is the unique positive root of f_s, equivalently of a cubic whose
//! constant term is 2 t^2 (y - critical_boundary_y). This module evaluates
//! all of that, with a safeguarded Newton/bisection root finder for the
//! interior case and the cubic route as an algebraically independent
//! cross-check.

use rayon::prelude::*;
use thiserror::Error;

use crate::params::{DomainError, Evaluation, Params, Regime, SpaceTimePoint};

/// Absolute tolerance on f_s at the accepted root.
pub const TOL_ROOT: f64 = 1e-12;
/// Classification tolerance on (y - critical_boundary_y); ties go to
/// `Rectilinear`, matching the closed "y >=" in the regime dichotomy.
pub const TOL_CLASSIFY: f64 = 1e-12;
/// Relative tolerance for agreement between independent minimizer routes.
pub const TOL_CROSS: f64 = 1e-8;
/// Doubling budget for the root bracket before reporting failure.
const MAX_DOUBLINGS: u32 = 64;
const MAX_NEWTON_ITERS: usize = 200;

/// Errors from the evaluation kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinimizeError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("contact budget must be nonnegative, got s = {0}")]
    NegativeBudget(f64),
    #[error("scale must be positive and finite, got lambda = {0}")]
    NonPositiveScale(f64),
    #[error("no sign change of the root equation found below the search cap {cap}")]
    BracketFailure { cap: f64 },
    #[error("point is Rectilinear (s* = 0); the cubic route applies only to road-assisted points")]
    NotRoadAssisted,
    #[error(
        "cubic root {cubic} disagrees with the direct minimizer {direct} beyond tolerance; \
         this is a correctness alarm"
    )]
    CubicMismatch { cubic: f64, direct: f64 },
}

/// The objective f(s; x, y, t) whose minimum over s >= 0 is phi*.
pub fn objective(params: &Params, p: SpaceTimePoint, s: f64) -> Result<f64, MinimizeError> {
    p.validate()?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(MinimizeError::NegativeBudget(s));
    }
    Ok(objective_raw(params, p, s))
}

#[inline]
fn objective_raw(params: &Params, p: SpaceTimePoint, s: f64) -> f64 {
    let u = -p.x + params.b * s + params.c * p.t;
    let road = p.t + params.a * s;
    u * u / (4.0 * road) + (p.y + s) * (p.y + s) / (4.0 * p.t)
}

/// First and second s-derivatives of the objective, as the pair
/// (f_s, f_ss). f_ss is strictly positive for every valid input.
pub fn objective_derivatives(
    params: &Params,
    p: SpaceTimePoint,
    s: f64,
) -> Result<(f64, f64), MinimizeError> {
    p.validate()?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(MinimizeError::NegativeBudget(s));
    }
    Ok(derivatives_raw(params, p, s))
}

#[inline]
fn derivatives_raw(params: &Params, p: SpaceTimePoint, s: f64) -> (f64, f64) {
    let (a, b) = (params.a, params.b);
    let u = -p.x + b * s + params.c * p.t;
    let road = p.t + a * s;
    let f_s = -a * u * u / (4.0 * road * road) + b * u / (2.0 * road) + (p.y + s) / (2.0 * p.t);
    // f_ss = ((a s + t)^3 + t (a (x - c t) + b t)^2) / (2 t (a s + t)^3)
    let w = a * (p.x - params.c * p.t) + b * p.t;
    let f_ss = (road.powi(3) + p.t * w * w) / (2.0 * p.t * road.powi(3));
    (f_s, f_ss)
}

/// Height of the critical transition curve above x at time t:
/// (a / 2t)(x - c t)^2 + b (x - c t). A negative value means every y >= 0
/// at that abscissa is in the rectilinear regime.
pub fn critical_boundary_y(params: &Params, x: f64, t: f64) -> Result<f64, MinimizeError> {
    if !x.is_finite() {
        return Err(DomainError::NonFiniteAbscissa(x).into());
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(DomainError::NonPositiveTime(t).into());
    }
    let d = x - params.c * t;
    Ok(params.a / (2.0 * t) * d * d + params.b * d)
}

/// Initial affine cap for the sign-change search, doubled on demand.
///
/// The denominator guard keeps the cap usable for b <= 0, where the
/// formulas are still evaluated outside theorem scope.
fn bracket_seed(params: &Params, p: SpaceTimePoint) -> f64 {
    let denom = if params.b > 0.0 { params.b.min(1.0) } else { 1.0 };
    8.0 * (p.x.abs() + params.c.abs() * p.t + params.b.abs() * p.t + p.y + p.t) / denom
}

/// Safeguarded Newton on a monotone-increasing g with g(lo) < 0 < g(hi).
/// Falls back to bisection whenever the Newton step leaves the bracket,
/// and accepts an ulp-tight bracket when |g| cannot reach the absolute
/// tolerance at the local derivative scale.
fn newton_bisect<G>(g: G, mut lo: f64, mut hi: f64) -> f64
where
    G: Fn(f64) -> (f64, f64),
{
    let mut s = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON_ITERS {
        let (val, slope) = g(s);
        if val.abs() <= TOL_ROOT {
            return s;
        }
        if val < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            return 0.5 * (lo + hi);
        }
        let newton = s - val / slope;
        s = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    0.5 * (lo + hi)
}

/// Grows the cap until g becomes positive; the objective grows
/// quadratically in s, so failure here means corrupted inputs and is
/// reported rather than guessed around.
fn bracket_high<G>(g: &G, seed: f64) -> Result<f64, MinimizeError>
where
    G: Fn(f64) -> (f64, f64),
{
    let mut hi = seed.max(f64::MIN_POSITIVE);
    for _ in 0..=MAX_DOUBLINGS {
        if g(hi).0 > 0.0 {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(MinimizeError::BracketFailure { cap: hi })
}

/// Full evaluation at one point: minimizer, fundamental solution, payoff,
/// value and regime.
pub fn solve_minimizer(params: &Params, p: SpaceTimePoint) -> Result<Evaluation, MinimizeError> {
    p.validate()?;
    let crit = critical_boundary_y(params, p.x, p.t)?;
    let margin = p.y - crit;
    let (s_star, regime) = if margin >= -TOL_CLASSIFY {
        (0.0, Regime::Rectilinear)
    } else {
        // Interior minimizer: f_s(0) = margin / 2t < 0 and f_s -> +inf.
        let g = |s: f64| derivatives_raw(params, p, s);
        let hi = bracket_high(&g, bracket_seed(params, p))?;
        (newton_bisect(g, 0.0, hi), Regime::RoadAssisted)
    };
    let phi_star = if regime == Regime::Rectilinear {
        let d = params.c * p.t - p.x;
        (d * d + p.y * p.y) / (4.0 * p.t)
    } else {
        objective_raw(params, p, s_star)
    };
    let payoff = phi_star - p.t;
    Ok(Evaluation {
        s_star,
        phi_star,
        payoff,
        value: payoff.max(0.0),
        regime,
        in_theorem_scope: params.in_theorem_scope(),
    })
}

/// Coefficients (s^3, s^2, s^1, s^0) of the minimizer cubic. The constant
/// term factors as 2 t^2 (y - critical_boundary_y), so its sign mirrors the
/// regime classification.
pub fn cubic_coefficients(params: &Params, p: SpaceTimePoint) -> [f64; 4] {
    let (a, b, c) = (params.a, params.b, params.c);
    let (x, y, t) = (p.x, p.y, p.t);
    [
        2.0 * a * a,
        2.0 * a * a * y + a * b * b * t + 4.0 * a * t,
        4.0 * a * t * y + 2.0 * b * b * t * t + 2.0 * t * t,
        -a * c * c * t.powi(3) + 2.0 * a * c * t * t * x - a * t * x * x
            + 2.0 * b * c * t.powi(3)
            - 2.0 * b * t * t * x
            + 2.0 * t * t * y,
    ]
}

/// Road-assisted minimizer recomputed as the unique nonnegative root of
/// the cubic, an algebraically independent route used as a correctness
/// alarm against `solve_minimizer`.
pub fn minimizer_via_cubic(params: &Params, p: SpaceTimePoint) -> Result<f64, MinimizeError> {
    p.validate()?;
    let crit = critical_boundary_y(params, p.x, p.t)?;
    if p.y - crit >= -TOL_CLASSIFY {
        return Err(MinimizeError::NotRoadAssisted);
    }
    let co = cubic_coefficients(params, p);
    let g = |s: f64| {
        let val = ((co[0] * s + co[1]) * s + co[2]) * s + co[3];
        let slope = (3.0 * co[0] * s + 2.0 * co[1]) * s + co[2];
        (val, slope)
    };
    // The cubic has positive leading coefficient and negative constant
    // term here, so the same doubling bracket applies; Newton is seeded
    // from the bracket midpoint rather than closed-form radicals to avoid
    // discriminant cancellation near the critical curve.
    let hi = bracket_high(&g, bracket_seed(params, p))?;
    let root = newton_bisect(g, 0.0, hi);
    let direct = solve_minimizer(params, p)?.s_star;
    if (root - direct).abs() > TOL_CROSS * (1.0 + direct.abs()) {
        return Err(MinimizeError::CubicMismatch { cubic: root, direct });
    }
    Ok(root)
}

/// Element-wise `solve_minimizer` over a batch; order preserved, one bad
/// point does not abort the rest.
pub fn evaluate(
    params: &Params,
    points: &[SpaceTimePoint],
) -> Vec<Result<Evaluation, MinimizeError>> {
    points
        .par_iter()
        .map(|p| solve_minimizer(params, *p))
        .collect()
}

/// Residuals of the degree-one homogeneity phi*(lambda x, lambda y, lambda)
/// = lambda phi*(x, y, 1), and the matching relation for s*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityResidual {
    pub phi_star: f64,
    pub s_star: f64,
}

impl HomogeneityResidual {
    pub fn max(&self) -> f64 {
        self.phi_star.max(self.s_star)
    }
}

/// Checks degree-one homogeneity in t at the unit-time point (x, y, 1)
/// against the rescaled point (lambda x, lambda y, lambda).
pub fn homogeneity_check(
    params: &Params,
    x: f64,
    y: f64,
    lambda: f64,
) -> Result<HomogeneityResidual, MinimizeError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(MinimizeError::NonPositiveScale(lambda));
    }
    let unit = solve_minimizer(params, SpaceTimePoint::new(x, y, 1.0)?)?;
    let scaled = solve_minimizer(
        params,
        SpaceTimePoint::new(lambda * x, lambda * y, lambda)?,
    )?;
    Ok(HomogeneityResidual {
        phi_star: (scaled.phi_star - lambda * unit.phi_star).abs(),
        s_star: (scaled.s_star - lambda * unit.s_star).abs(),
    })
}

/// Legendre transforms of the field and road Hamiltonians:
/// L(q) = |q|^2/4 - (c/2) q1 + c^2/4 - 1 and G(q1) = (q1 - b)^2 / (4a).
pub fn legendre_forms(params: &Params, q: [f64; 2]) -> (f64, f64) {
    let l = (q[0] * q[0] + q[1] * q[1]) / 4.0 - params.c / 2.0 * q[0]
        + params.c * params.c / 4.0
        - 1.0;
    let g = (q[0] - params.b) * (q[0] - params.b) / (4.0 * params.a);
    (l, g)
}
