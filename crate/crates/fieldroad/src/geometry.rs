//! Level-set geometry of the invaded region and the structural audits.
//!
//! The normalized invaded region is the sublevel set
//! Omega = {(x, y): phi*(x, y, 1) < 1}. This module evaluates phi* on
//! grids, extracts its level curves, and audits the two structural facts
//! about Omega: strict convexity, and monotonicity of phi* under rotation
//! from the road toward the vertical. It also reproduces the two
//! parameter sweeps (fixed a = 2, b = 2 with c = 1..10; fixed a = 2,
//! c = 2 with b = 1..10) and their qualitative metrics, the downstream
//! extent of Omega and the extent of the invaded stretch of road.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::{extract_contour_with_sampler, ContourError, ContourPolyline};
use crate::grid::{GridError, GridSpec, Quantity, ScalarField};
use crate::minimize::{solve_minimizer, MinimizeError};
use crate::params::{Params, SpaceTimePoint};

/// Tolerance for the rotational-monotonicity audit.
pub const TOL_ROTATION: f64 = 1e-10;
/// Cross products below (edge length product) x this factor are treated
/// as interpolation noise by the convexity audit; strictness cannot be
/// certified below grid resolution.
pub const CURVATURE_NOISE_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error("{count} grid cells failed to evaluate; first at node ({i}, {j}): {first}")]
    PoisonedCells { count: usize, i: usize, j: usize, first: MinimizeError },
    #[error("polyline needs at least 3 vertices for a convexity audit, got {0}")]
    DegeneratePolyline(usize),
    #[error("audit refused: instance is outside theorem scope (requires b > 0 and c > 0)")]
    OutsideTheoremScope,
    #[error("level {level} is not crossed on the road within the window")]
    LevelNotReached { level: f64 },
}

/// Evaluates phi*(., ., t) on a grid, parallel over rows.
pub fn eval_field(params: &Params, spec: GridSpec, t: f64) -> Result<ScalarField, GeometryError> {
    let mut values = vec![0.0f64; spec.n_nodes()];
    let failures: Vec<(usize, usize, MinimizeError)> = values
        .par_chunks_mut(spec.nx)
        .enumerate()
        .flat_map(|(j, row)| {
            let mut local = Vec::new();
            for (i, slot) in row.iter_mut().enumerate() {
                match SpaceTimePoint::new(spec.x(i), spec.y(j), t)
                    .map_err(MinimizeError::from)
                    .and_then(|p| solve_minimizer(params, p))
                {
                    Ok(ev) => *slot = ev.phi_star,
                    Err(e) => {
                        *slot = f64::NAN;
                        local.push((i, j, e));
                    }
                }
            }
            local
        })
        .collect();
    if let Some((i, j, first)) = failures.first().cloned() {
        return Err(GeometryError::PoisonedCells { count: failures.len(), i, j, first });
    }
    Ok(ScalarField { spec, values, quantity: Quantity::PhiStar })
}

/// Level curves of phi*(., ., t) at the given level, with saddle cells
/// resolved by exact re-evaluation at cell centers.
pub fn phi_contours(
    params: &Params,
    spec: GridSpec,
    t: f64,
    level: f64,
) -> Result<Vec<ContourPolyline>, GeometryError> {
    let field = eval_field(params, spec, t)?;
    let sampler = |x: f64, y: f64| {
        SpaceTimePoint::new(x, y, t)
            .ok()
            .and_then(|p| solve_minimizer(params, p).ok())
            .map(|ev| ev.phi_star)
            .unwrap_or(f64::INFINITY)
    };
    Ok(extract_contour_with_sampler(&field, level, sampler)?)
}

/// Projects contour vertices onto the exact level set along the local
/// gradient direction and drops near-coincident survivors.
///
/// Marching-squares vertices carry O(dx^2) interpolation error, which at
/// short polyline edges turns into angular noise far above any curvature
/// tolerance; a convexity audit of the raw chain is meaningless at flat
/// stretches of the curve. Projection puts every vertex on the exact
/// curve (three ordered points of a strictly convex curve can never turn
/// the wrong way), the same exact-evaluator trick used for saddle cells.
pub fn refine_contour_to_level(
    params: &Params,
    t: f64,
    level: f64,
    polyline: &ContourPolyline,
    min_spacing: f64,
) -> ContourPolyline {
    let phi = |x: f64, y: f64| -> f64 {
        SpaceTimePoint::new(x, y.max(0.0), t)
            .ok()
            .and_then(|p| solve_minimizer(params, p).ok())
            .map(|ev| ev.phi_star)
            .unwrap_or(f64::INFINITY)
    };
    let reach = 3.0 * min_spacing.max(1e-6);
    let mut refined: Vec<[f64; 2]> = Vec::with_capacity(polyline.vertices.len());
    for v in &polyline.vertices {
        let h = 1e-6 * (1.0 + v[0].abs() + v[1].abs());
        let gx = (phi(v[0] + h, v[1]) - phi(v[0] - h, v[1])) / (2.0 * h);
        let gy = if v[1] >= h {
            (phi(v[0], v[1] + h) - phi(v[0], v[1] - h)) / (2.0 * h)
        } else {
            (phi(v[0], v[1] + h) - phi(v[0], v[1])) / h
        };
        let norm = gx.hypot(gy);
        let mut vertex = *v;
        if norm > 1e-9 {
            let (ux, uy) = (gx / norm, gy / norm);
            let val = |tau: f64| phi(v[0] + tau * ux, v[1] + tau * uy) - level;
            let (mut lo, mut hi) = (-reach, reach);
            if val(lo) < 0.0 && val(hi) > 0.0 {
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if val(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let tau = 0.5 * (lo + hi);
                vertex = [v[0] + tau * ux, (v[1] + tau * uy).max(0.0)];
            }
        }
        let keep = refined.last().map_or(true, |last: &[f64; 2]| {
            (vertex[0] - last[0]).hypot(vertex[1] - last[1]) >= min_spacing
        });
        if keep {
            refined.push(vertex);
        }
    }
    if !polyline.closed_by_boundary && refined.len() > 2 {
        let first = refined[0];
        let last = *refined.last().unwrap();
        if (first[0] - last[0]).hypot(first[1] - last[1]) < min_spacing {
            refined.pop();
        }
    }
    ContourPolyline { vertices: refined, closed_by_boundary: polyline.closed_by_boundary }
}

/// Extracts the level-one contour, projects it onto the exact curve, and
/// audits convexity. The main (longest) polyline is audited.
pub fn audit_invaded_region_convexity(
    params: &Params,
    spec: GridSpec,
    level: f64,
) -> Result<ConvexityReport, GeometryError> {
    let polys = phi_contours(params, spec, 1.0, level)?;
    let main = polys
        .iter()
        .max_by_key(|p| p.vertices.len())
        .ok_or(GeometryError::LevelNotReached { level })?;
    let spacing = 0.2 * spec.dx().min(spec.dy());
    let refined = refine_contour_to_level(params, 1.0, level, main, spacing);
    convexity_audit(&refined)
}

/// Outcome of the strict-convexity audit of a level curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub pass: bool,
    /// +1 for counterclockwise turning, -1 for clockwise.
    pub orientation: f64,
    /// Vertex indices whose turn has the wrong sign beyond noise.
    pub violations: Vec<usize>,
    /// Largest wrong-sign cross product, normalized by edge lengths.
    pub max_violation: f64,
}

/// Audits convexity of a polyline by the sign pattern of consecutive
/// edge cross products. The chord along the road that closes a
/// boundary-terminated curve is a boundary face, not a turn, so open
/// chains are audited without wraparound.
pub fn convexity_audit(polyline: &ContourPolyline) -> Result<ConvexityReport, GeometryError> {
    let v = &polyline.vertices;
    if v.len() < 3 {
        return Err(GeometryError::DegeneratePolyline(v.len()));
    }
    let n = v.len();
    let wrap = !polyline.closed_by_boundary;
    let triples = if wrap { n } else { n - 2 };
    let mut crosses = Vec::with_capacity(triples);
    for k in 0..triples {
        let p0 = v[k % n];
        let p1 = v[(k + 1) % n];
        let p2 = v[(k + 2) % n];
        let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
        let e2 = [p2[0] - p1[0], p2[1] - p1[1]];
        let cross = e1[0] * e2[1] - e1[1] * e2[0];
        let scale = (e1[0].hypot(e1[1])) * (e2[0].hypot(e2[1]));
        crosses.push((cross, scale));
    }
    let total: f64 = crosses.iter().map(|(c, _)| c).sum();
    let orientation = if total >= 0.0 { 1.0 } else { -1.0 };
    let mut violations = Vec::new();
    let mut max_violation: f64 = 0.0;
    for (k, (cross, scale)) in crosses.iter().enumerate() {
        let signed = cross * orientation;
        if signed < -CURVATURE_NOISE_FACTOR * scale {
            violations.push(k + 1);
            max_violation = max_violation.max(-signed / scale.max(f64::MIN_POSITIVE));
        }
    }
    Ok(ConvexityReport { pass: violations.is_empty(), orientation, violations, max_violation })
}

/// Angular profile of phi* along the arc of radius r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationalProfile {
    pub r: f64,
    pub t: f64,
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub monotone: bool,
    /// Largest decrease between consecutive samples (0 when monotone).
    pub max_drop: f64,
}

/// Samples phi*(r cos theta, r sin theta, t) on a uniform theta grid over
/// [0, pi/2] and checks that the profile is nondecreasing. Refuses to
/// certify instances outside theorem scope.
pub fn rotational_profile(
    params: &Params,
    r: f64,
    t: f64,
    n_theta: usize,
) -> Result<RotationalProfile, GeometryError> {
    if !params.in_theorem_scope() {
        return Err(GeometryError::OutsideTheoremScope);
    }
    let n = n_theta.max(2);
    let mut thetas = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let theta = std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64;
        let p = SpaceTimePoint::new(r * theta.cos(), (r * theta.sin()).max(0.0), t)
            .map_err(MinimizeError::from)
            .map_err(|e| GeometryError::PoisonedCells { count: 1, i: k, j: 0, first: e })?;
        let phi = solve_minimizer(params, p)
            .map_err(|e| GeometryError::PoisonedCells { count: 1, i: k, j: 0, first: e })?
            .phi_star;
        thetas.push(theta);
        values.push(phi);
    }
    let mut max_drop: f64 = 0.0;
    for w in values.windows(2) {
        max_drop = max_drop.max(w[0] - w[1]);
    }
    Ok(RotationalProfile {
        r,
        t,
        thetas,
        values,
        monotone: max_drop <= TOL_ROTATION,
        max_drop,
    })
}

/// Largest x with phi*(x, 0, t) < level, found by bisection outward from
/// the cost minimum (c t, 0). Grid-free, hence exact to bisection width.
pub fn road_extent(params: &Params, t: f64, level: f64) -> Result<f64, GeometryError> {
    let phi_road = |x: f64| -> f64 {
        SpaceTimePoint::new(x, 0.0, t)
            .ok()
            .and_then(|p| solve_minimizer(params, p).ok())
            .map(|ev| ev.phi_star)
            .unwrap_or(f64::INFINITY)
    };
    let mut lo = params.c * t;
    if phi_road(lo) >= level {
        return Err(GeometryError::LevelNotReached { level });
    }
    let mut hi = lo + t.max(1.0);
    let mut found = false;
    for _ in 0..64 {
        if phi_road(hi) >= level {
            found = true;
            break;
        }
        hi *= 2.0;
    }
    if !found {
        return Err(GeometryError::LevelNotReached { level });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if phi_road(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which coefficient a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    B,
    C,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::B => "b",
            SweepAxis::C => "c",
        }
    }
}

/// Contours and qualitative metrics for one value of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub param_name: &'static str,
    pub param_value: f64,
    pub contours: Vec<ContourPolyline>,
    /// Downstream extent of Omega, max x over contour vertices.
    pub x_max_omega: f64,
    /// Largest x with phi*(x, 0, 1) < level, from bisection.
    pub road_extent: f64,
}

/// Default window for the level-set sweeps: contains the invaded set for
/// all swept values at the reference parameter ranges.
pub fn sweep_window() -> GridSpec {
    GridSpec::new(-5.0, 25.0, 0.0, 12.0, 800, 400).expect("static window is valid")
}

/// Runs a parameter sweep at t = 1: for each value, evaluates phi* on the
/// window, extracts the level curve, and records the downstream and road
/// extents.
pub fn sweep_figure(
    base: Params,
    axis: SweepAxis,
    values: &[f64],
    spec: GridSpec,
    level: f64,
) -> Result<Vec<SweepEntry>, GeometryError> {
    let mut entries = Vec::with_capacity(values.len());
    for &value in values {
        let params = match axis {
            SweepAxis::B => Params { b: value, ..base },
            SweepAxis::C => Params { c: value, ..base },
        };
        let contours = phi_contours(&params, spec, 1.0, level)?;
        let x_max_omega = contours
            .iter()
            .flat_map(|p| p.vertices.iter().map(|v| v[0]))
            .fold(f64::NEG_INFINITY, f64::max);
        let road = road_extent(&params, 1.0, level)?;
        entries.push(SweepEntry {
            param_name: axis.name(),
            param_value: value,
            contours,
            x_max_omega,
            road_extent: road,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::extract_contour;

    fn params(a: f64, b: f64, c: f64) -> Params {
        Params::new(a, b, c).unwrap()
    }

    #[test]
    fn small_field_hits_zero_at_cost_minimum() {
        let pr = params(2.0, 2.0, 2.0);
        // 2x2 grid whose corner (c, 0) carries phi* = 0.
        let spec = GridSpec::new(2.0, 3.0, 0.0, 1.0, 2, 2).unwrap();
        let field = eval_field(&pr, spec, 1.0).unwrap();
        assert_eq!(field.get(0, 0), 0.0);
        assert!(field.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn field_argmin_near_cost_minimum() {
        let pr = params(2.0, 2.0, 2.0);
        let spec = GridSpec::new(-5.0, 25.0, 0.0, 12.0, 160, 80).unwrap();
        let field = eval_field(&pr, spec, 1.0).unwrap();
        let (i, j) = field.argmin();
        // Minimum of phi*(., ., 1) sits at (c, 0); one-cell slack.
        assert!((spec.x(i) - pr.c).abs() <= spec.dx() + 1e-12);
        assert!(spec.y(j) <= spec.dy() + 1e-12);
    }

    #[test]
    fn contour_vertices_lie_on_the_level() {
        let pr = params(2.0, 2.0, 2.0);
        let spec = GridSpec::new(-5.0, 25.0, 0.0, 12.0, 400, 200).unwrap();
        let polys = phi_contours(&pr, spec, 1.0, 1.0).unwrap();
        assert!(!polys.is_empty());
        let tol = (1e-6f64).max(50.0 * spec.dx() * spec.dx());
        let mut checked = 0;
        for poly in &polys {
            for v in &poly.vertices {
                let p = SpaceTimePoint::new(v[0], v[1].max(0.0), 1.0).unwrap();
                let phi = solve_minimizer(&pr, p).unwrap().phi_star;
                assert!((phi - 1.0).abs() < tol, "phi = {phi} at {v:?}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn convexity_audit_passes_on_quarter_circle() {
        let n = 64;
        let vertices: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let th = std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64;
                [th.cos(), th.sin()]
            })
            .collect();
        let poly = ContourPolyline { vertices, closed_by_boundary: true };
        let report = convexity_audit(&poly).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn convexity_audit_localizes_an_inflection() {
        let n = 64;
        let mut vertices: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let th = std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64;
                [th.cos(), th.sin()]
            })
            .collect();
        // Push one vertex outward to force a sign flip.
        vertices[30] = [vertices[30][0] * 1.2, vertices[30][1] * 1.2];
        let poly = ContourPolyline { vertices, closed_by_boundary: true };
        let report = convexity_audit(&poly).unwrap();
        assert!(!report.pass);
        assert!(report.violations.iter().any(|&k| (29..=31).contains(&k)));
    }

    #[test]
    fn convexity_audit_rejects_degenerate_input() {
        let poly = ContourPolyline {
            vertices: vec![[0.0, 0.0], [1.0, 0.0]],
            closed_by_boundary: true,
        };
        assert!(matches!(
            convexity_audit(&poly),
            Err(GeometryError::DegeneratePolyline(2))
        ));
    }

    #[test]
    fn level_one_contour_of_phi_is_convex() {
        let pr = params(2.0, 2.0, 5.0);
        let spec = GridSpec::new(-5.0, 25.0, 0.0, 12.0, 800, 400).unwrap();
        let report = audit_invaded_region_convexity(&pr, spec, 1.0).unwrap();
        assert!(report.pass, "violations at {:?}", report.violations);
    }

    #[test]
    fn refined_vertices_sit_on_the_exact_curve() {
        let pr = params(2.0, 2.0, 2.0);
        let spec = GridSpec::new(-5.0, 25.0, 0.0, 12.0, 200, 100).unwrap();
        let polys = phi_contours(&pr, spec, 1.0, 1.0).unwrap();
        let main = polys.iter().max_by_key(|p| p.vertices.len()).unwrap();
        let refined = refine_contour_to_level(&pr, 1.0, 1.0, main, 0.2 * spec.dx());
        assert!(refined.vertices.len() > 30);
        for v in &refined.vertices {
            if v[1] == 0.0 {
                continue;
            }
            let p = SpaceTimePoint::new(v[0], v[1], 1.0).unwrap();
            let phi = solve_minimizer(&pr, p).unwrap().phi_star;
            assert!((phi - 1.0).abs() < 1e-9, "refined vertex {v:?} has phi {phi}");
        }
    }

    #[test]
    fn rotational_profile_is_monotone_and_refuses_off_scope() {
        let pr = params(2.0, 2.0, 2.0);
        let prof = rotational_profile(&pr, 3.0, 1.0, 64).unwrap();
        assert!(prof.monotone, "max drop {}", prof.max_drop);
        assert!(prof.values.last().unwrap() - prof.values.first().unwrap() >= 0.0);
        // r = 0 gives a constant profile.
        let prof0 = rotational_profile(&pr, 0.0, 1.0, 16).unwrap();
        let v0 = prof0.values[0];
        assert!(prof0.values.iter().all(|&v| (v - v0).abs() < 1e-14));
        // Outside scope: refuse.
        let off = params(2.0, -1.0, 2.0);
        assert!(matches!(
            rotational_profile(&off, 1.0, 1.0, 8),
            Err(GeometryError::OutsideTheoremScope)
        ));
    }

    #[test]
    fn sweep_metrics_move_with_the_coefficients() {
        let spec = GridSpec::new(-5.0, 25.0, 0.0, 12.0, 200, 100).unwrap();
        let base = params(2.0, 2.0, 2.0);
        let left = sweep_figure(base, SweepAxis::C, &[1.0, 10.0], spec, 1.0).unwrap();
        assert!(left[1].x_max_omega > left[0].x_max_omega);
        let right = sweep_figure(base, SweepAxis::B, &[1.0, 10.0], spec, 1.0).unwrap();
        assert!(right[1].road_extent > right[0].road_extent);
        //

        // Single-value sweep delegates to eval + extract.
        let single = sweep_figure(base, SweepAxis::C, &[2.0], spec, 1.0).unwrap();
        let direct = phi_contours(&base, spec, 1.0, 1.0).unwrap();
        assert_eq!(single[0].contours, direct);
    }

    #[test]
    fn plain_extract_matches_sampler_variant_off_saddles() {
        let pr = params(2.0, 2.0, 2.0);
        let spec = GridSpec::new(-4.0, 10.0, 0.0, 5.0, 120, 60).unwrap();
        let field = eval_field(&pr, spec, 1.0).unwrap();
        let plain = extract_contour(&field, 1.0).unwrap();
        let polys = phi_contours(&pr, spec, 1.0, 1.0).unwrap();
        assert_eq!(plain.len(), polys.len());
    }
}
