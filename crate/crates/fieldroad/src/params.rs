//! Model coefficients and the evaluation types shared by every module.
//!
//! The model lives on the upper half-plane: a diffusive field with
//! advection speed `c` in the x-direction, coupled at y = 0 to a road with
//! transport capacity `a` and tangential drift `b`. All three coefficients
//! are dimensionless; `a > 0` is structural (the formulas divide by
//! `t + a s`), while `b > 0` and `c > 0` are only required by the
//! theorem-backed audits. Instances with `b <= 0` or `c <= 0` are still
//! evaluable but carry an outside-theorem-scope flag that the geometry
//! audits refuse to certify against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Validation errors for coefficients and space-time points.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("road transport capacity must be positive and finite, got a = {0}")]
    NonPositiveCapacity(f64),
    #[error("coefficient {name} must be finite, got {value}")]
    NonFiniteCoefficient { name: &'static str, value: f64 },
    #[error("time must be positive and finite, got t = {0}")]
    NonPositiveTime(f64),
    #[error("vertical coordinate must be nonnegative and finite, got y = {0}")]
    NegativeOrdinate(f64),
    #[error("horizontal coordinate must be finite, got x = {0}")]
    NonFiniteAbscissa(f64),
}

/// The model coefficients (a, b, c): road transport capacity, road
/// tangential drift, field advection speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Road transport capacity, strictly positive.
    pub a: f64,
    /// Tangential drift along the road.
    pub b: f64,
    /// Advection speed in the field, positive values pointing in +x.
    pub c: f64,
}

impl Params {
    /// Validates and builds a coefficient triple. `a` must be strictly
    /// positive; `b` and `c` only have to be finite.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, DomainError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(DomainError::NonPositiveCapacity(a));
        }
        if !b.is_finite() {
            return Err(DomainError::NonFiniteCoefficient { name: "b", value: b });
        }
        if !c.is_finite() {
            return Err(DomainError::NonFiniteCoefficient { name: "c", value: c });
        }
        Ok(Self { a, b, c })
    }

    /// True when both drift coefficients are strictly positive, the regime
    /// in which the structural theorems (convexity of the invaded set,
    /// rotational monotonicity) are stated. Outside it the formulas remain
    /// well defined but the audits refuse to certify.
    pub fn in_theorem_scope(&self) -> bool {
        self.b > 0.0 && self.c > 0.0
    }
}

/// A point of the space-time domain: x free, y >= 0, t > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl SpaceTimePoint {
    /// Builds a validated point.
    pub fn new(x: f64, y: f64, t: f64) -> Result<Self, DomainError> {
        let p = Self { x, y, t };
        p.validate()?;
        Ok(p)
    }

    /// Checks the domain invariants (y >= 0, t > 0, everything finite).
    pub fn validate(&self) -> Result<(), DomainError> {
        if !self.x.is_finite() {
            return Err(DomainError::NonFiniteAbscissa(self.x));
        }
        if !(self.y.is_finite() && self.y >= 0.0) {
            return Err(DomainError::NegativeOrdinate(self.y));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(DomainError::NonPositiveTime(self.t));
        }
        Ok(())
    }
}

/// Which side of the critical transition curve a point lies on.
///
/// `Rectilinear` points (the set where y >= (a/2t)(x-ct)^2 + b(x-ct))
/// are reached optimally by a straight segment; `RoadAssisted` points are
/// reached by a path that detours along the road, with minimizer s* > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Rectilinear,
    RoadAssisted,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Rectilinear => write!(f, "Rectilinear"),
            Regime::RoadAssisted => write!(f, "RoadAssisted"),
        }
    }
}

/// The full evaluation bundle at one space-time point.
///
/// `payoff` is J = phi_star - t and `value` is v = max(0, J); the two
/// always differ by exactly t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Minimizer s* >= 0 of the objective.
    pub s_star: f64,
    /// Fundamental-solution value phi* = f(s*).
    pub phi_star: f64,
    /// Payoff J = phi* - t.
    pub payoff: f64,
    /// Value v = max(0, J).
    pub value: f64,
    /// Regime classification of the point.
    pub regime: Regime,
    /// Clear when the instance satisfies b > 0 and c > 0.
    pub in_theorem_scope: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_reject_bad_capacity() {
        assert!(Params::new(0.0, 1.0, 1.0).is_err());
        assert!(Params::new(-1.0, 1.0, 1.0).is_err());
        assert!(Params::new(f64::NAN, 1.0, 1.0).is_err());
        assert!(Params::new(1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn scope_flag_tracks_drift_signs() {
        assert!(Params::new(1.0, 1.0, 1.0).unwrap().in_theorem_scope());
        assert!(!Params::new(1.0, -1.0, 1.0).unwrap().in_theorem_scope());
        assert!(!Params::new(1.0, 1.0, 0.0).unwrap().in_theorem_scope());
    }

    #[test]
    fn point_validation() {
        assert!(SpaceTimePoint::new(0.0, 0.0, 1.0).is_ok());
        assert_eq!(
            SpaceTimePoint::new(0.0, 0.0, 0.0),
            Err(DomainError::NonPositiveTime(0.0))
        );
        assert!(SpaceTimePoint::new(0.0, -0.1, 1.0).is_err());
        assert!(SpaceTimePoint::new(f64::NAN, 0.0, 1.0).is_err());
    }
}
