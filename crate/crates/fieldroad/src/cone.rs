//! Conical domains with two roads.
//!
//! The cone opens from the horizontal road Gamma_0 (the positive x-axis)
//! to the slanted road Gamma_alpha along direction (cos 2alpha, sin 2alpha),
//! with alpha in (0, pi/2]. The field inside the cone carries no
//! advection; each road has its own transport capacity and drift. The
//! combined payoff is
//!
//! ```text
//! J_alpha(p) = min{ J_road0(p),  J_road_alpha(Psi_alpha(p)) }
//! w_alpha(p) = max{ 0, J_alpha(p) }
//! ```
//!
//! where Psi_alpha is the reflection across the cone bisector, which maps
//! Gamma_alpha isometrically onto Gamma_0 and fixes the bisector. Each
//! branch is the single-road half-plane payoff with c = 0 and that road's
//! coefficients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minimize::{solve_minimizer, MinimizeError};
use crate::params::{DomainError, Params, SpaceTimePoint};

/// Tolerance on the admissibility-condition violation.
pub const TOL_CONDITION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error("opening parameter must lie in (0, pi/2], got alpha = {0}")]
    BadAlpha(f64),
    #[error("road transport capacity must be positive and finite, got {0}")]
    BadRoad(f64),
    #[error("point ({x}, {y}) lies outside the closed cone of opening 2 alpha")]
    PointOutsideCone { x: f64, y: f64 },
    #[error("admissibility condition failed (max violation {max_violation}); pass Unverified to override")]
    ConditionFailed { max_violation: f64 },
    #[error("sample count must be at least 2")]
    TooFewSamples,
}

/// Transport capacity and tangential drift of one road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadParams {
    pub capacity: f64,
    pub drift: f64,
}

/// Cone geometry and the two road coefficient pairs. Field advection is
/// identically zero in this module; the straight-road theory with c > 0
/// does not transfer to cones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeConfig {
    /// Half-geometry parameter in (0, pi/2]; the cone opening is 2 alpha.
    pub alpha: f64,
    /// Road on the positive x-axis.
    pub road0: RoadParams,
    /// Road along (cos 2 alpha, sin 2 alpha).
    pub road_alpha: RoadParams,
}

impl ConeConfig {
    pub fn new(alpha: f64, road0: RoadParams, road_alpha: RoadParams) -> Result<Self, ConeError> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= std::f64::consts::FRAC_PI_2) {
            return Err(ConeError::BadAlpha(alpha));
        }
        for road in [road0, road_alpha] {
            if !(road.capacity.is_finite() && road.capacity > 0.0 && road.drift.is_finite()) {
                return Err(ConeError::BadRoad(road.capacity));
            }
        }
        Ok(Self { alpha, road0, road_alpha })
    }

    fn half_plane_params(road: RoadParams) -> Result<Params, ConeError> {
        Ok(Params::new(road.capacity, road.drift, 0.0)?)
    }

    /// True when (x, y) lies in the closed cone (angle from the positive
    /// x-axis within [0, 2 alpha], up to roundoff).
    pub fn contains(&self, pt: [f64; 2]) -> bool {
        let [x, y] = pt;
        if x == 0.0 && y == 0.0 {
            return true;
        }
        if y < 0.0 {
            return false;
        }
        let angle = y.atan2(x);
        (-1e-12..=2.0 * self.alpha + 1e-12).contains(&angle)
    }
}

/// Reflection across the cone bisector:
/// (x, y) -> (x cos 2a + y sin 2a, x sin 2a - y cos 2a).
/// An involutive isometry that swaps Gamma_0 and Gamma_alpha.
pub fn psi_alpha(cfg: &ConeConfig, pt: [f64; 2]) -> [f64; 2] {
    let (sin2, cos2) = (2.0 * cfg.alpha).sin_cos();
    [pt[0] * cos2 + pt[1] * sin2, pt[0] * sin2 - pt[1] * cos2]
}

/// Single-road half-plane payoff J = phi* - t with zero field advection
/// and the given road coefficients.
pub fn payoff_j_halfplane(road: RoadParams, p: SpaceTimePoint) -> Result<f64, ConeError> {
    let params = ConeConfig::half_plane_params(road)?;
    Ok(solve_minimizer(&params, p)?.payoff)
}

/// The two branch payoffs and their minimum at one point of the cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeBranches {
    /// Half-plane payoff with the Gamma_0 road at the point itself.
    pub j_gamma0: f64,
    /// Half-plane payoff with the Gamma_alpha road at the reflected point.
    pub j_gamma_alpha: f64,
    /// min of the two branches.
    pub j_alpha: f64,
}

/// Combined payoff J_alpha at a point of the closed cone.
pub fn payoff_j_alpha(cfg: &ConeConfig, p: SpaceTimePoint) -> Result<ConeBranches, ConeError> {
    p.validate()?;
    if !cfg.contains([p.x, p.y]) {
        return Err(ConeError::PointOutsideCone { x: p.x, y: p.y });
    }
    let j_gamma0 = payoff_j_halfplane(cfg.road0, p)?;
    let reflected = psi_alpha(cfg, [p.x, p.y]);
    let p_reflected = SpaceTimePoint::new(reflected[0], reflected[1].max(0.0), p.t)?;
    let j_gamma_alpha = payoff_j_halfplane(cfg.road_alpha, p_reflected)?;
    Ok(ConeBranches {
        j_gamma0,
        j_gamma_alpha,
        j_alpha: j_gamma0.min(j_gamma_alpha),
    })
}

/// Report of sampling the admissibility condition along the roads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem5Report {
    pub pass: bool,
    /// max over sampled radii of (Gamma_alpha branch - Gamma_0 branch).
    pub max_violation: f64,
    pub r_at_max: f64,
    pub n_samples: usize,
}

/// Checks the admissibility condition for the min-of-payoffs value
/// formula: at every matched radius r, the Gamma_alpha road payoff (seen
/// through the reflection, which maps its ray onto the positive x-axis)
/// must not exceed the Gamma_0 road payoff:
///
/// ```text
/// J_road_alpha(1, r, 0) <= J_road0(1, r, 0)   for all r in [0, r_max].
/// ```
///
/// With identical road coefficients the two sides tie identically; a
/// faster Gamma_alpha road (larger capacity, same drift) weakly lowers
/// the left side.
pub fn theorem5_condition(
    cfg: &ConeConfig,
    r_max: f64,
    n_samples: usize,
) -> Result<Theorem5Report, ConeError> {
    if n_samples < 2 {
        return Err(ConeError::TooFewSamples);
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut r_at_max = 0.0;
    for k in 0..n_samples {
        let r = r_max * k as f64 / (n_samples - 1) as f64;
        let p = SpaceTimePoint::new(r, 0.0, 1.0)?;
        let lhs = payoff_j_halfplane(cfg.road_alpha, p)?;
        let rhs = payoff_j_halfplane(cfg.road0, p)?;
        if lhs - rhs > max_violation {
            max_violation = lhs - rhs;
            r_at_max = r;
        }
    }
    Ok(Theorem5Report {
        pass: max_violation <= TOL_CONDITION,
        max_violation,
        r_at_max,
        n_samples,
    })
}

/// Caller's evidence for the admissibility condition of `value_w_alpha`.
#[derive(Debug, Clone, Copy)]
pub enum ConditionEvidence<'a> {
    /// A report from `theorem5_condition`; a failing report is an error.
    Verified(&'a Theorem5Report),
    /// Explicit acknowledgment that the condition was not checked; the
    /// result carries `condition_verified = false`.
    Unverified,
}

/// Value of the obstacle problem on the cone together with its payoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeValue {
    pub w_alpha: f64,
    pub j_alpha: f64,
    /// False when the caller overrode the admissibility check.
    pub condition_verified: bool,
}

/// w_alpha = max{0, J_alpha}, valid under the admissibility condition.
pub fn value_w_alpha(
    cfg: &ConeConfig,
    p: SpaceTimePoint,
    evidence: ConditionEvidence<'_>,
) -> Result<ConeValue, ConeError> {
    let condition_verified = match evidence {
        ConditionEvidence::Verified(report) => {
            if !report.pass {
                return Err(ConeError::ConditionFailed { max_violation: report.max_violation });
            }
            true
        }
        ConditionEvidence::Unverified => false,
    };
    let branches = payoff_j_alpha(cfg, p)?;
    Ok(ConeValue {
        w_alpha: branches.j_alpha.max(0.0),
        j_alpha: branches.j_alpha,
        condition_verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn road(capacity: f64, drift: f64) -> RoadParams {
        RoadParams { capacity, drift }
    }

    fn symmetric(alpha: f64) -> ConeConfig {
        ConeConfig::new(alpha, road(2.0, 2.0), road(2.0, 2.0)).unwrap()
    }

    // Oracle-frozen half-plane fixture with c = 0:
    // (capacity 2, drift 2; x = 4, y = 0, t = 1).
    const J_C0_FIXTURE: f64 = -0.451862775494939;

    #[test]
    fn config_validation() {
        assert!(ConeConfig::new(0.0, road(1.0, 0.0), road(1.0, 0.0)).is_err());
        assert!(ConeConfig::new(2.0, road(1.0, 0.0), road(1.0, 0.0)).is_err());
        assert!(ConeConfig::new(1.0, road(0.0, 0.0), road(1.0, 0.0)).is_err());
    }

    #[test]
    fn reflection_is_an_involutive_isometry() {
        let cfg = symmetric(0.7);
        for pt in [[1.0, 0.2], [0.3, 0.9], [-0.5, 0.1], [2.0, 0.0]] {
            let q = psi_alpha(&cfg, pt);
            let back = psi_alpha(&cfg, q);
            assert!((back[0] - pt[0]).abs() < 1e-14);
            assert!((back[1] - pt[1]).abs() < 1e-14);
            let r0 = pt[0].hypot(pt[1]);
            let r1 = q[0].hypot(q[1]);
            assert!((r0 - r1).abs() < 1e-14);
        }
        // alpha = pi/2 reflects across the y-axis.
        let cfg = symmetric(FRAC_PI_2);
        let q = psi_alpha(&cfg, [1.5, 0.4]);
        assert!((q[0] + 1.5).abs() < 1e-14 && (q[1] - 0.4).abs() < 1e-14);
        // Points on the bisector are fixed.
        let cfg = symmetric(0.5);
        let fixed = [0.5f64.cos(), 0.5f64.sin()];
        let q = psi_alpha(&cfg, fixed);
        assert!((q[0] - fixed[0]).abs() < 1e-14 && (q[1] - fixed[1]).abs() < 1e-14);
        // Gamma_alpha maps onto Gamma_0.
        let dir = [(2.0 * 0.5f64).cos(), (2.0 * 0.5f64).sin()];
        let q = psi_alpha(&cfg, dir);
        assert!((q[0] - 1.0).abs() < 1e-14 && q[1].abs() < 1e-14);
    }

    #[test]
    fn halfplane_payoff_values() {
        // With c = 0 and x = y = 0 the objective vanishes at s = 0.
        let p = SpaceTimePoint::new(0.0, 0.0, 1.0).unwrap();
        let j = payoff_j_halfplane(road(1.0, 1.0), p).unwrap();
        assert_eq!(j, -1.0);
        let p = SpaceTimePoint::new(4.0, 0.0, 1.0).unwrap();
        let j = payoff_j_halfplane(road(2.0, 2.0), p).unwrap();
        assert!((j - J_C0_FIXTURE).abs() < 1e-9);
    }

    #[test]
    fn capacity_monotonicity_of_halfplane_payoff() {
        for &(x, y) in &[(3.0, 0.5), (-2.0, 1.0), (6.0, 0.0)] {
            let p = SpaceTimePoint::new(x, y, 1.0).unwrap();
            let j_small = payoff_j_halfplane(road(1.0, 1.5), p).unwrap();
            let j_large = payoff_j_halfplane(road(3.0, 1.5), p).unwrap();
            assert!(j_large <= j_small + 1e-12);
        }
    }

    #[test]
    fn branches_tie_on_the_bisector_of_a_symmetric_cone() {
        let cfg = symmetric(FRAC_PI_4);
        let dir = [FRAC_PI_4.cos(), FRAC_PI_4.sin()];
        let p = SpaceTimePoint::new(2.0 * dir[0], 2.0 * dir[1], 1.0).unwrap();
        let branches = payoff_j_alpha(&cfg, p).unwrap();
        assert!((branches.j_gamma0 - branches.j_gamma_alpha).abs() < 1e-12);
        assert!(branches.j_alpha <= branches.j_gamma0);
        assert!(branches.j_alpha <= branches.j_gamma_alpha);
    }

    #[test]
    fn quarter_turn_cone_reflects_across_y_axis() {
        let cfg = ConeConfig::new(FRAC_PI_2, road(2.0, 1.0), road(3.0, 1.0)).unwrap();
        let p = SpaceTimePoint::new(1.0, 0.7, 1.0).unwrap();
        let branches = payoff_j_alpha(&cfg, p).unwrap();
        let mirrored = SpaceTimePoint::new(-1.0, 0.7, 1.0).unwrap();
        let expect = payoff_j_halfplane(road(3.0, 1.0), mirrored).unwrap();
        assert!((branches.j_gamma_alpha - expect).abs() < 1e-12);
    }

    #[test]
    fn outside_points_are_rejected() {
        let cfg = symmetric(0.3);
        // Angle 0.9 > 2 alpha = 0.6.
        let p = SpaceTimePoint::new(0.9f64.cos(), 0.9f64.sin(), 1.0).unwrap();
        assert!(matches!(
            payoff_j_alpha(&cfg, p),
            Err(ConeError::PointOutsideCone { .. })
        ));
    }

    #[test]
    fn condition_ties_for_identical_roads_and_passes_for_faster_road() {
        let cfg = symmetric(FRAC_PI_4);
        let report = theorem5_condition(&cfg, 10.0, 64).unwrap();
        assert!(report.pass);
        assert!(report.max_violation.abs() < 1e-14);

        let faster = ConeConfig::new(FRAC_PI_4, road(2.0, 2.0), road(8.0, 2.0)).unwrap();
        let report = theorem5_condition(&faster, 10.0, 64).unwrap();
        assert!(report.pass);
        assert!(report.max_violation <= 0.0);

        // A slower slanted road violates the condition.
        let slower = ConeConfig::new(FRAC_PI_4, road(8.0, 2.0), road(1.0, 2.0)).unwrap();
        let report = theorem5_condition(&slower, 10.0, 64).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn value_is_clipped_payoff_and_tracks_evidence() {
        let cfg = symmetric(FRAC_PI_4);
        let report = theorem5_condition(&cfg, 10.0, 32).unwrap();
        // Deep inside the invaded set both branches are negative.
        let p = SpaceTimePoint::new(0.5, 0.2, 4.0).unwrap();
        let v = value_w_alpha(&cfg, p, ConditionEvidence::Verified(&report)).unwrap();
        assert_eq!(v.w_alpha, 0.0);
        assert!(v.j_alpha < 0.0);
        assert!(v.condition_verified);
        // Far point at small t is positive.
        let far = SpaceTimePoint::new(3.0, 1.0, 0.05).unwrap();
        let v = value_w_alpha(&cfg, far, ConditionEvidence::Unverified).unwrap();
        assert!(v.w_alpha > 0.0);
        assert!(!v.condition_verified);
        // w_alpha <= max(0, J_gamma0) pointwise.
        let branches = payoff_j_alpha(&cfg, far).unwrap();
        assert!(v.w_alpha <= branches.j_gamma0.max(0.0) + 1e-15);
        // A failing report is an error unless overridden.
        let bad = ConeConfig::new(FRAC_PI_4, road(8.0, 2.0), road(1.0, 2.0)).unwrap();
        let bad_report = theorem5_condition(&bad, 10.0, 32).unwrap();
        assert!(matches!(
            value_w_alpha(&bad, p, ConditionEvidence::Verified(&bad_report)),
            Err(ConeError::ConditionFailed { .. })
        ));
        assert!(value_w_alpha(&bad, p, ConditionEvidence::Unverified).is_ok());
    }

    #[test]
    fn swap_invariance_of_the_combined_payoff() {
        let cfg = ConeConfig::new(0.6, road(2.0, 1.0), road(4.0, 0.5)).unwrap();
        let swapped = ConeConfig::new(0.6, road(4.0, 0.5), road(2.0, 1.0)).unwrap();
        for pt in [[1.0, 0.3], [0.8, 0.6], [2.0, 0.1]] {
            if !cfg.contains(pt) {
                continue;
            }
            let p = SpaceTimePoint::new(pt[0], pt[1], 1.0).unwrap();
            let refl = psi_alpha(&cfg, pt);
            let q = SpaceTimePoint::new(refl[0], refl[1].max(0.0), 1.0).unwrap();
            let ja = payoff_j_alpha(&cfg, p).unwrap().j_alpha;
            let jb = payoff_j_alpha(&swapped, q).unwrap().j_alpha;
            assert!((ja - jb).abs() < 1e-12, "{ja} vs {jb}");
        }
    }
}
