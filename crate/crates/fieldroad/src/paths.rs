//! Optimal control triplets and the path-level audits behind the
//! variational formula.
//!
//! For a point (x, y) reached at time t with minimizer s*, the optimal
//! triplet (gamma, eta, l) is explicit:
//!
//! ```text
//! eta = ( -(x + (ac - b) s*) / (t + a s*),  -(y + s*) / t )
//! l   = 0 on the field leg,  (y + s*) / t on the road leg
//! t0  = y t / (y + s*)            (road-hitting time)
//! ```
//!
//! The trajectory is two affine pieces: a straight field leg from (x, y)
//! to (x0, 0) on [0, t0), then a road leg from (x0, 0) to the origin.
//! Rectilinear points collapse to a single straight segment (t0 = t);
//! points already on the road start directly on the road leg (t0 = 0).
//! The payoff integrand L(-eta) + F is constant on each leg, so a
//! two-panel midpoint rule integrates it exactly; its value reproduces
//! phi* - t, which is the identity these audits pin down.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minimize::{legendre_forms, solve_minimizer, MinimizeError};
use crate::params::{DomainError, Params, Regime, SpaceTimePoint};

/// Tolerance for accepting a point as lying on the front {phi* = t}.
pub const FRONT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error("plan was built for ({x}, {y}, {t}), not for the queried point")]
    PlanPointMismatch { x: f64, y: f64, t: f64 },
    #[error("point must lie on the front |phi* - t| <= {tol}, got residual {residual}")]
    NotOnFront { residual: f64, tol: f64 },
    #[error("road perturbation requires y = 0, x > 0 and eps >= 0")]
    BadPerturbation,
    #[error("no front crossing found along the ray (direction {dx}, {dy})")]
    NoFrontCrossing { dx: f64, dy: f64 },
}

/// One affine piece of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub start: [f64; 2],
    pub velocity: [f64; 2],
}

impl Segment {
    fn position(&self, tau: f64) -> [f64; 2] {
        let dt = tau - self.t_start;
        [
            self.start[0] + dt * self.velocity[0],
            self.start[1] + dt * self.velocity[1],
        ]
    }
}

/// The optimal control triplet with its switch data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    /// The point the plan was built for.
    pub point: SpaceTimePoint,
    /// Minimizer used (s* of the point).
    pub s_bar: f64,
    /// Road-hitting time; equals t for rectilinear points with y > 0.
    pub t0: f64,
    /// Road-hitting abscissa.
    pub x0: f64,
    /// Constant running control.
    pub eta: [f64; 2],
    /// Road intensity on the road leg, (y + s*) / t.
    pub l_road: f64,
    /// One or two affine legs covering [0, t].
    pub segments: Vec<Segment>,
    pub regime: Regime,
}

impl PathPlan {
    /// Trajectory position at time tau in [0, t].
    pub fn position(&self, tau: f64) -> [f64; 2] {
        for seg in &self.segments {
            if tau < seg.t_end {
                return seg.position(tau);
            }
        }
        self.segments
            .last()
            .map(|s| s.position(tau))
            .unwrap_or([0.0, 0.0])
    }

    /// Road intensity l at time tau.
    pub fn road_intensity(&self, tau: f64) -> f64 {
        if tau >= self.t0 {
            self.l_road
        } else {
            0.0
        }
    }

    /// Trajectory velocity at time tau.
    pub fn velocity(&self, tau: f64) -> [f64; 2] {
        for seg in &self.segments {
            if tau < seg.t_end {
                return seg.velocity;
            }
        }
        self.segments.last().map(|s| s.velocity).unwrap_or([0.0, 0.0])
    }
}

/// Builds the optimal triplet for a point.
pub fn build_optimal_plan(params: &Params, p: SpaceTimePoint) -> Result<PathPlan, PathError> {
    p.validate()?;
    let ev = solve_minimizer(params, p)?;
    let s = ev.s_star;
    let (a, b, c) = (params.a, params.b, params.c);
    let (x, y, t) = (p.x, p.y, p.t);
    let road_time = t + a * s;
    let eta = [-(x + (a * c - b) * s) / road_time, -(y + s) / t];
    let l_road = (y + s) / t;

    // Degenerate y = 0 with s* = 0: the two leg formulas coincide; treat
    // the whole path as the single road segment.
    let t0 = if y + s > 0.0 { y * t / (y + s) } else { 0.0 };
    let x0 = if y + s > 0.0 {
        x - y * t * (x + (a * c - b) * s) / ((y + s) * road_time)
    } else {
        x
    };
    let road_slope = (t * y * (a * c - b) - x * (road_time + a * y)) / (t * road_time);

    let mut segments = Vec::with_capacity(2);
    if t0 > 0.0 {
        segments.push(Segment {
            t_start: 0.0,
            t_end: t0,
            start: [x, y],
            velocity: eta,
        });
    }
    if t0 < t {
        segments.push(Segment {
            t_start: t0,
            t_end: t,
            start: [x0, 0.0],
            velocity: [road_slope, 0.0],
        });
    }
    Ok(PathPlan {
        point: p,
        s_bar: s,
        t0,
        x0,
        eta,
        l_road,
        segments,
        regime: ev.regime,
    })
}

/// Result of integrating the payoff along a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffQuadrature {
    pub value: f64,
    /// Quadrature descriptor; the integrand is piecewise constant on the
    /// legs, so leg-aligned midpoint panels are exact up to roundoff.
    pub rule: String,
    pub n_samples: usize,
}

fn leg_integrand(params: &Params, eta: [f64; 2], gamma_dot_1: f64, l: f64) -> f64 {
    let (l_running, _) = legendre_forms(params, [-eta[0], -eta[1]]);
    let f_road = if l > 0.0 {
        let num = eta[0] - gamma_dot_1 - params.b * l;
        num * num / (4.0 * params.a * l)
    } else {
        0.0
    };
    l_running + f_road
}

/// Integrates L(-eta) + F(gamma, eta, l) over [0, t] for the plan; exact
/// because the integrand is constant on each leg.
pub fn path_payoff(
    params: &Params,
    plan: &PathPlan,
    p: SpaceTimePoint,
) -> Result<PayoffQuadrature, PathError> {
    if plan.point != p {
        return Err(PathError::PlanPointMismatch {
            x: plan.point.x,
            y: plan.point.y,
            t: plan.point.t,
        });
    }
    let mut value = 0.0;
    for seg in &plan.segments {
        let l = if seg.t_start >= plan.t0 { plan.l_road } else { 0.0 };
        value += (seg.t_end - seg.t_start) * leg_integrand(params, plan.eta, seg.velocity[0], l);
    }
    Ok(PayoffQuadrature {
        value,
        rule: "leg-aligned midpoint".into(),
        n_samples: plan.segments.len(),
    })
}

/// Midpoint-rule payoff with n panels, kept as a diagnostic knob; agrees
/// with `path_payoff` to roundoff for any n >= 1 because the integrand is
/// piecewise constant and panels are aligned to the legs.
pub fn payoff_quadrature(params: &Params, plan: &PathPlan, n_samples: usize) -> PayoffQuadrature {
    let n = n_samples.max(1);
    let mut value = 0.0;
    for seg in &plan.segments {
        let len = seg.t_end - seg.t_start;
        if len <= 0.0 {
            continue;
        }
        let panels = ((n as f64 * len / plan.point.t).round() as usize).max(1);
        let h = len / panels as f64;
        let l = if seg.t_start >= plan.t0 { plan.l_road } else { 0.0 };
        for _ in 0..panels {
            value += h * leg_integrand(params, plan.eta, seg.velocity[0], l);
        }
    }
    PayoffQuadrature {
        value,
        rule: "leg-aligned midpoint".into(),
        n_samples: n,
    }
}

/// Outcome of auditing Freidlin's condition along the optimal path of a
/// front point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreidlinReport {
    pub regime: Regime,
    /// min over sampled tau of phi*(gamma(tau), t - tau) - (t - tau);
    /// Freidlin's condition asks this to be >= 0 up to tolerance.
    pub min_inequality: f64,
    /// Regime I only: max |phi*(gamma(tau), t - tau) - (t - tau)|.
    pub max_equality_error: f64,
    /// Regime II field leg only: max mismatch against the closed-form
    /// surplus a (x - b s - c t)^2 tau s / (4 t (t + a s)^2).
    pub max_surplus_error: f64,
    pub n_samples: usize,
}

/// Samples the optimal path of a front point (phi*(p) = t) and audits the
/// Freidlin inequality plus the regime-wise identities. Never aborts on a
/// violation; the caller reads the report.
pub fn freidlin_check(
    params: &Params,
    p: SpaceTimePoint,
    n_samples: usize,
) -> Result<FreidlinReport, PathError> {
    let ev = solve_minimizer(params, p)?;
    let residual = (ev.phi_star - p.t).abs();
    if residual > FRONT_TOL * (1.0 + p.t) {
        return Err(PathError::NotOnFront {
            residual,
            tol: FRONT_TOL * (1.0 + p.t),
        });
    }
    let plan = build_optimal_plan(params, p)?;
    let s = plan.s_bar;
    let (a, b, c) = (params.a, params.b, params.c);
    let (x, t) = (p.x, p.t);
    let surplus_coeff = {
        let w = x - b * s - c * t;
        a * w * w * s / (4.0 * t * (t + a * s) * (t + a * s))
    };

    let n = n_samples.max(2);
    let mut min_inequality = f64::INFINITY;
    let mut max_equality_error: f64 = 0.0;
    let mut max_surplus_error: f64 = 0.0;
    for k in 0..n {
        let tau = t * k as f64 / n as f64;
        let pos = plan.position(tau);
        let here = SpaceTimePoint::new(pos[0], pos[1].max(0.0), t - tau)?;
        let phi = solve_minimizer(params, here)?.phi_star;
        let excess = phi - (t - tau);
        min_inequality = min_inequality.min(excess);
        match ev.regime {
            Regime::Rectilinear => max_equality_error = max_equality_error.max(excess.abs()),
            Regime::RoadAssisted => {
                if tau <= plan.t0 {
                    max_surplus_error = max_surplus_error.max((excess - surplus_coeff * tau).abs());
                }
            }
        }
    }
    Ok(FreidlinReport {
        regime: ev.regime,
        min_inequality,
        max_equality_error,
        max_surplus_error,
        n_samples: n,
    })
}

/// Locates a front point {phi*(., t) = t} along the ray from the cost
/// minimum (c t, 0) in direction (cos theta, sin theta), theta in [0, pi].
///
/// Rays are anchored at the minimum of phi* rather than the origin: the
/// reference instance a = b = c = 2 has phi*(0, 0, 1) = 1 = t, so the
/// origin itself sits on the front and origin-anchored bisection
/// degenerates. The invaded set is strictly convex around (c t, 0), so
/// each ray crosses the front exactly once.
pub fn locate_front_point(
    params: &Params,
    theta: f64,
    t: f64,
) -> Result<SpaceTimePoint, PathError> {
    let (dx, dy) = (theta.cos(), theta.sin());
    let anchor_x = params.c * t;
    let eval = |lambda: f64| -> Result<f64, PathError> {
        let p = SpaceTimePoint::new(anchor_x + lambda * dx, (lambda * dy).max(0.0), t)?;
        Ok(solve_minimizer(params, p)?.phi_star - t)
    };
    let mut hi = t.max(1.0);
    let mut grew = false;
    for _ in 0..64 {
        if eval(hi)? > 0.0 {
            grew = true;
            break;
        }
        hi *= 2.0;
    }
    if !grew {
        return Err(PathError::NoFrontCrossing { dx, dy });
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    Ok(SpaceTimePoint::new(
        anchor_x + lambda * dx,
        (lambda * dy).max(0.0),
        t,
    )?)
}

/// Report of the two-phase road perturbation of the optimal control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub eps: f64,
    /// Payoff of the perturbed triplet; tends to J(p) as eps -> 0.
    pub payoff: f64,
    /// Payoff of the optimal (unperturbed) triplet, J(p).
    pub payoff_optimal: f64,
    /// min over sampled tau in (0, t) of gamma1_eps - gamma1; positive
    /// means the perturbed path stays strictly downstream of the optimum.
    pub min_separation: f64,
    /// min over sampled tau of phi*(gamma_eps(tau), t - tau) - (t - tau);
    /// strictly positive for front points (interior membership in P).
    pub min_front_excess: f64,
    /// |gamma_eps(t)| endpoint defect, zero up to roundoff.
    pub endpoint_error: f64,
}

/// Builds the two-phase perturbed control for a road point (y = 0, x > 0)
/// and returns its payoff. The first half of the trajectory uses the
/// control of x - eps, the second half that of x + eps; the road intensity
/// is unchanged, the endpoint still lands on the origin, and the payoff
/// exceeds J(p) by a quadratic-in-eps surplus.
pub fn epsilon_road_perturbation(
    params: &Params,
    p: SpaceTimePoint,
    eps: f64,
) -> Result<PerturbationReport, PathError> {
    p.validate()?;
    if p.y != 0.0 || p.x <= 0.0 || !(eps.is_finite() && eps >= 0.0) {
        return Err(PathError::BadPerturbation);
    }
    let ev = solve_minimizer(params, p)?;
    let s = ev.s_star;
    let (a, b, c) = (params.a, params.b, params.c);
    let (x, t) = (p.x, p.t);
    let road_time = t + a * s;
    let l = s / t;

    let eta1 = |shift: f64| -(x + shift + (a * c - b) * s) / road_time;
    // gamma1' = (1 + a l) eta1 + (ac - b) l collapses to -(x -+ eps)/t.
    let slope_first = -(x - eps) / t;
    let slope_second = -(x + eps) / t;
    let gamma1 = |tau: f64| -> f64 {
        if tau < 0.5 * t {
            x + slope_first * tau
        } else {
            x + slope_first * 0.5 * t + slope_second * (tau - 0.5 * t)
        }
    };
    let endpoint_error = gamma1(t).abs();

    let payoff = 0.5
        * t
        * (leg_integrand(params, [eta1(-eps), -s / t], slope_first, l)
            + leg_integrand(params, [eta1(eps), -s / t], slope_second, l));
    let payoff_optimal = ev.payoff;

    let n = 64;
    let mut min_separation = f64::INFINITY;
    let mut min_front_excess = f64::INFINITY;
    for k in 1..n {
        let tau = t * k as f64 / n as f64;
        let base = x * (1.0 - tau / t);
        min_separation = min_separation.min(gamma1(tau) - base);
        let here = SpaceTimePoint::new(gamma1(tau), 0.0, t - tau)?;
        let phi = solve_minimizer(params, here)?.phi_star;
        min_front_excess = min_front_excess.min(phi - (t - tau));
    }
    Ok(PerturbationReport {
        eps,
        payoff,
        payoff_optimal,
        min_separation,
        min_front_excess,
        endpoint_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64, c: f64) -> Params {
        Params::new(a, b, c).unwrap()
    }

    fn pt(x: f64, y: f64, t: f64) -> SpaceTimePoint {
        SpaceTimePoint::new(x, y, t).unwrap()
    }

    // Oracle-frozen switch data for (a=2,b=2,c=2; x=6, y=0.5, t=1).
    const S_BAR_B: f64 = 1.061915702043624;
    const T0_B: f64 = 0.320119708986724;
    const X0_B: f64 = 5.167497150604551;
    const SLOPE_B: f64 = -7.600598544933621;
    const PHI_B: f64 = 0.891601197261445;

    #[test]
    fn rectilinear_plan_is_single_straight_segment() {
        let plan = build_optimal_plan(&params(1.0, 1.0, 1.0), pt(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(plan.regime, Regime::Rectilinear);
        assert_eq!(plan.segments.len(), 1);
        assert_eq!(plan.eta, [-1.0, -1.0]);
        assert_eq!(plan.t0, 1.0);
        assert_eq!(plan.l_road, 1.0);
        assert_eq!(plan.road_intensity(0.5), 0.0);
        let end = plan.position(1.0);
        assert!(end[0].abs() < 1e-15 && end[1].abs() < 1e-15);
    }

    #[test]
    fn road_point_plan_stays_on_road() {
        let plan = build_optimal_plan(&params(2.0, 2.0, 2.0), pt(4.0, 0.0, 1.0)).unwrap();
        assert_eq!(plan.t0, 0.0);
        assert_eq!(plan.segments.len(), 1);
        for k in 0..=8 {
            let pos = plan.position(k as f64 / 8.0);
            assert_eq!(pos[1], 0.0);
        }
        let end = plan.position(1.0);
        assert!(end[0].abs() < 1e-12);
    }

    #[test]
    fn two_leg_plan_matches_frozen_switch_data() {
        let plan = build_optimal_plan(&params(2.0, 2.0, 2.0), pt(6.0, 0.5, 1.0)).unwrap();
        assert_eq!(plan.segments.len(), 2);
        assert!((plan.s_bar - S_BAR_B).abs() < 1e-9);
        assert!((plan.t0 - T0_B).abs() < 1e-9);
        assert!((plan.x0 - X0_B).abs() < 1e-9);
        assert!((plan.segments[1].velocity[0] - SLOPE_B).abs() < 1e-8);
        // gamma(t0) continuous across the switch, gamma(t) = origin.
        let before = plan.segments[0].position(plan.t0);
        assert!((before[0] - plan.x0).abs() < 1e-12);
        assert!(before[1].abs() < 1e-12);
        let end = plan.position(1.0);
        assert!(end[0].abs() < 1e-12 && end[1].abs() < 1e-12);
    }

    #[test]
    fn payoff_reproduces_value_identity() {
        let pr = params(1.0, 1.0, 1.0);
        let p = pt(1.0, 1.0, 1.0);
        let plan = build_optimal_plan(&pr, p).unwrap();
        let q = path_payoff(&pr, &plan, p).unwrap();
        assert!((q.value + 0.75).abs() < 1e-15);

        let pr = params(2.0, 2.0, 2.0);
        for p in [pt(4.0, 0.0, 1.0), pt(6.0, 0.5, 1.0)] {
            let plan = build_optimal_plan(&pr, p).unwrap();
            let q = path_payoff(&pr, &plan, p).unwrap();
            let ev = solve_minimizer(&pr, p).unwrap();
            assert!(
                (q.value - ev.payoff).abs() <= 1e-10 * (1.0 + ev.phi_star.abs()),
                "payoff {} vs J {}",
                q.value,
                ev.payoff
            );
        }
        let plan = build_optimal_plan(&pr, pt(6.0, 0.5, 1.0)).unwrap();
        let ev = solve_minimizer(&pr, pt(6.0, 0.5, 1.0)).unwrap();
        assert!((ev.phi_star - PHI_B).abs() < 1e-9);
        // Dense midpoint sampling agrees with the exact two panels.
        let dense = payoff_quadrature(&pr, &plan, 1000);
        assert!((dense.value - ev.payoff).abs() < 1e-11);
    }

    #[test]
    fn straight_path_identity() {
        // t L(x/t, y/t) = ((x - c t)^2 + y^2) / 4t - t for any point.
        let pr = params(1.0, 0.5, 1.7);
        for &(x, y, t) in &[(0.3, 1.2, 0.8), (-2.0, 0.1, 2.5)] {
            let (l, _) = legendre_forms(&pr, [x / t, y / t]);
            let d = x - pr.c * t;
            let expect = (d * d + y * y) / (4.0 * t) - t;
            assert!((t * l - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_point_mismatch_is_reported() {
        let pr = params(1.0, 1.0, 1.0);
        let plan = build_optimal_plan(&pr, pt(1.0, 1.0, 1.0)).unwrap();
        assert!(matches!(
            path_payoff(&pr, &plan, pt(2.0, 1.0, 1.0)),
            Err(PathError::PlanPointMismatch { .. })
        ));
    }

    #[test]
    fn jensen_equality_along_each_leg() {
        // gamma1' = (1 + a l) eta1 + (ac - b) l must hold identically.
        let pr = params(2.0, 2.0, 2.0);
        for p in [pt(6.0, 0.5, 1.0), pt(4.0, 0.0, 1.0), pt(2.0, 1.5, 1.0)] {
            let plan = build_optimal_plan(&pr, p).unwrap();
            for seg in &plan.segments {
                let l = if seg.t_start >= plan.t0 { plan.l_road } else { 0.0 };
                let rhs = (1.0 + pr.a * l) * plan.eta[0] + (pr.a * pr.c - pr.b) * l;
                assert!(
                    (seg.velocity[0] - rhs).abs() < 1e-10 * (1.0 + rhs.abs()),
                    "leg starting {} violates the equality condition",
                    seg.t_start
                );
            }
        }
    }

    #[test]
    fn freidlin_on_front_points() {
        let pr = params(2.0, 2.0, 2.0);
        // Steep ray: lands in the rectilinear regime.
        let p1 = locate_front_point(&pr, 1.4, 1.0).unwrap();
        let r1 = freidlin_check(&pr, p1, 128).unwrap();
        assert!(r1.min_inequality >= -1e-9);
        if r1.regime == Regime::Rectilinear {
            assert!(r1.max_equality_error <= 1e-9);
        }
        // Shallow ray: road-assisted front point; surplus identity.
        let p2 = locate_front_point(&pr, 0.05, 1.0).unwrap();
        let r2 = freidlin_check(&pr, p2, 128).unwrap();
        assert!(r2.min_inequality >= -1e-9);
        if r2.regime == Regime::RoadAssisted {
            assert!(r2.max_surplus_error <= 1e-8);
        }
        // tau = 0 is the boundary-point precondition itself.
        let phi = solve_minimizer(&pr, p2).unwrap().phi_star;
        assert!((phi - 1.0).abs() <= FRONT_TOL * 2.0);
    }

    #[test]
    fn freidlin_rejects_interior_points() {
        let pr = params(2.0, 2.0, 2.0);
        assert!(matches!(
            freidlin_check(&pr, pt(4.0, 0.0, 1.0), 16),
            Err(PathError::NotOnFront { .. })
        ));
    }

    #[test]
    fn perturbation_payoffs_decrease_toward_optimum() {
        let pr = params(2.0, 2.0, 2.0);
        let p = pt(4.0, 0.0, 1.0);
        let j = solve_minimizer(&pr, p).unwrap().payoff;
        let mut last = f64::INFINITY;
        for &eps in &[0.1, 0.01, 0.001] {
            let rep = epsilon_road_perturbation(&pr, p, eps).unwrap();
            assert!(rep.payoff >= j - 1e-12);
            assert!(rep.payoff < last);
            assert!(rep.min_separation > 0.0);
            assert!(rep.endpoint_error < 1e-12 * (1.0 + p.x));
            last = rep.payoff;
        }
        // eps = 0 degenerately equals the optimal payoff.
        let rep = epsilon_road_perturbation(&pr, p, 0.0).unwrap();
        assert!((rep.payoff - j).abs() < 1e-12);
        // Front point on the road: perturbed path sits strictly inside P.
        let front = locate_front_point(&pr, 0.0, 1.0).unwrap();
        let rep = epsilon_road_perturbation(&pr, front, 0.01).unwrap();
        assert!(rep.min_front_excess > 0.0);
    }

    #[test]
    fn perturbation_preconditions() {
        let pr = params(2.0, 2.0, 2.0);
        assert!(epsilon_road_perturbation(&pr, pt(4.0, 0.5, 1.0), 0.1).is_err());
        assert!(epsilon_road_perturbation(&pr, pt(-1.0, 0.0, 1.0), 0.1).is_err());
        assert!(epsilon_road_perturbation(&pr, pt(4.0, 0.0, 1.0), -0.1).is_err());
    }
}
