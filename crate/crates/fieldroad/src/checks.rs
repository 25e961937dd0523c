//! Seeded property suite behind the `check` command.
//!
//! Each check fuzzes one invariant with a deterministic RNG and returns a
//! pass/fail outcome with a diagnostic. The acceptance test suite runs
//! heavier versions of the same audits; this set is sized to finish in a
//! few seconds at the CLI.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cone::{self, ConeConfig, RoadParams};
use crate::geometry;
use crate::grid::GridSpec;
use crate::minimize::{
    critical_boundary_y, cubic_coefficients, homogeneity_check, minimizer_via_cubic,
    objective_derivatives, solve_minimizer,
};
use crate::oracle;
use crate::params::{Params, Regime, SpaceTimePoint};
use crate::paths::{
    build_optimal_plan, epsilon_road_perturbation, freidlin_check, locate_front_point, path_payoff,
};

/// Outcome of one property check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, pass, detail }
}

fn random_params(rng: &mut ChaCha8Rng) -> Params {
    Params::new(
        rng.gen_range(0.05..5.0),
        rng.gen_range(0.05..5.0),
        rng.gen_range(0.05..5.0),
    )
    .unwrap()
}

fn random_point(rng: &mut ChaCha8Rng) -> SpaceTimePoint {
    SpaceTimePoint::new(
        rng.gen_range(-20.0..20.0),
        rng.gen_range(0.0..20.0),
        rng.gen_range(0.1..5.0),
    )
    .unwrap()
}

/// f_ss > 0 on a randomized sample of instances, points and budgets.
pub fn check_strict_convexity(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_fss = f64::INFINITY;
    for _ in 0..n {
        let params = random_params(&mut rng);
        let p = random_point(&mut rng);
        let s = rng.gen_range(0.0..40.0);
        let (_, fss) = objective_derivatives(&params, p, s).unwrap();
        min_fss = min_fss.min(fss);
        if fss <= 0.0 {
            return outcome(
                "strict-convexity",
                false,
                format!("f_ss = {fss} at {params:?}, {p:?}, s = {s}"),
            );
        }
    }
    outcome("strict-convexity", true, format!("min f_ss = {min_fss:.3e} over {n} samples"))
}

/// Newton route, cubic route and the golden-section scan agree on s*.
pub fn check_oracle_equivalence(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let params = random_params(&mut rng);
        let p = random_point(&mut rng);
        let ev = solve_minimizer(&params, p).unwrap();
        let scan = oracle::golden_minimizer(&params, p);
        let tol = 1e-8 * (1.0 + ev.s_star);
        let d_scan = (scan - ev.s_star).abs();
        worst = worst.max(d_scan / tol);
        if d_scan > tol {
            return outcome(
                "oracle-equivalence",
                false,
                format!("scan {scan} vs newton {} at {params:?}, {p:?}", ev.s_star),
            );
        }
        if ev.regime == Regime::RoadAssisted {
            match minimizer_via_cubic(&params, p) {
                Ok(root) => {
                    let d = (root - ev.s_star).abs();
                    worst = worst.max(d / tol);
                    if d > tol {
                        return outcome(
                            "oracle-equivalence",
                            false,
                            format!("cubic {root} vs newton {} at {params:?}, {p:?}", ev.s_star),
                        );
                    }
                }
                Err(e) => {
                    return outcome(
                        "oracle-equivalence",
                        false,
                        format!("cubic route failed at {params:?}, {p:?}: {e}"),
                    )
                }
            }
        }
    }
    outcome(
        "oracle-equivalence",
        true,
        format!("worst deviation {:.2} of tolerance over {n} instances", worst),
    )
}

/// The four regime classifiers agree: curve inequality, f_s(0) sign,
/// cubic constant sign, s* positivity.
pub fn check_regime_trichotomy(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = crate::minimize::TOL_CLASSIFY;
    for _ in 0..n {
        let params = random_params(&mut rng);
        let p = random_point(&mut rng);
        let margin = p.y - critical_boundary_y(&params, p.x, p.t).unwrap();
        // Skip the measure-zero band where every classifier sits at its
        // tolerance edge.
        if margin.abs() <= 10.0 * tol {
            continue;
        }
        let by_curve = margin > 0.0;
        let (fs0, _) = objective_derivatives(&params, p, 0.0).unwrap();
        let by_slope = fs0 > -tol / (2.0 * p.t);
        let by_cubic = cubic_coefficients(&params, p)[3] > -2.0 * p.t * p.t * tol;
        let ev = solve_minimizer(&params, p).unwrap();
        let by_regime = ev.regime == Regime::Rectilinear;
        let by_sstar = ev.s_star == 0.0;
        if !(by_curve == by_slope && by_slope == by_cubic && by_cubic == by_regime
            && by_regime == by_sstar)
        {
            return outcome(
                "regime-trichotomy",
                false,
                format!(
                    "classifiers disagree at {params:?}, {p:?}: curve={by_curve} slope={by_slope} cubic={by_cubic} s*={by_sstar}"
                ),
            );
        }
    }
    outcome("regime-trichotomy", true, format!("{n} instances agree"))
}

/// Degree-one homogeneity of phi* and s* in t.
pub fn check_homogeneity(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let params = random_params(&mut rng);
        let x = rng.gen_range(-20.0..20.0);
        let y = rng.gen_range(0.0..20.0);
        for &lambda in &[0.5, 2.0, 10.0] {
            let res = homogeneity_check(&params, x, y, lambda).unwrap();
            let unit = solve_minimizer(&params, SpaceTimePoint::new(x, y, 1.0).unwrap()).unwrap();
            let tol = 1e-9 * lambda * (1.0 + unit.phi_star.abs());
            worst = worst.max(res.phi_star / tol);
            if res.phi_star > tol {
                return outcome(
                    "homogeneity",
                    false,
                    format!("residual {} at {params:?}, ({x}, {y}), lambda {lambda}", res.phi_star),
                );
            }
        }
    }
    outcome("homogeneity", true, format!("worst residual {:.2} of tolerance", worst))
}

/// One-sided gradients of phi* match to first order across the critical
/// curve: the mismatch shrinks by >= 1.8 when h halves.
pub fn check_c1_matching(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tested = 0usize;
    while tested < n {
        let params = random_params(&mut rng);
        let t = rng.gen_range(0.5..3.0);
        // Points downstream of ct have a positive curve height.
        let x = params.c * t + rng.gen_range(0.2..6.0);
        let yc = critical_boundary_y(&params, x, t).unwrap();
        let h = 1e-3 * (1.0 + yc);
        if yc <= 4.0 * h {
            continue;
        }
        tested += 1;
        let phi = |y: f64| {
            solve_minimizer(&params, SpaceTimePoint::new(x, y, t).unwrap())
                .unwrap()
                .phi_star
        };
        let mismatch = |h: f64| {
            let above = (phi(yc + h) - phi(yc)) / h;
            let below = (phi(yc) - phi(yc - h)) / h;
            (above - below).abs()
        };
        let m1 = mismatch(h);
        let m2 = mismatch(0.5 * h);
        // Already at float precision: nothing to shrink.
        if m2 < 1e-12 {
            continue;
        }
        if m1 / m2 < 1.8 {
            return outcome(
                "c1-matching",
                false,
                format!("mismatch ratio {} at {params:?}, x = {x}, t = {t}", m1 / m2),
            );
        }
    }
    outcome("c1-matching", true, format!("{n} curve points shrink first order"))
}

/// phi* is pointwise nonincreasing in the road capacity a.
pub fn check_monotone_in_capacity(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let params = random_params(&mut rng);
        let p = random_point(&mut rng);
        let bigger = Params::new(params.a * rng.gen_range(1.1..3.0), params.b, params.c).unwrap();
        let phi_small = solve_minimizer(&params, p).unwrap().phi_star;
        let phi_big = solve_minimizer(&bigger, p).unwrap().phi_star;
        if phi_big > phi_small + 1e-10 * (1.0 + phi_small) {
            return outcome(
                "capacity-monotonicity",
                false,
                format!("phi* rose from {phi_small} to {phi_big} at {params:?}, {p:?}"),
            );
        }
    }
    outcome("capacity-monotonicity", true, format!("{n} pairs ordered"))
}

/// v > 0 exactly where phi* > t; the regime label never depends on the
/// obstacle subtraction.
pub fn check_value_threshold(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let params = random_params(&mut rng);
        let p = random_point(&mut rng);
        let ev = solve_minimizer(&params, p).unwrap();
        let positive = ev.value > 0.0;
        let exceeds = ev.phi_star > p.t;
        if positive != exceeds || (ev.payoff - (ev.phi_star - p.t)).abs() > 1e-15 {
            return outcome(
                "value-threshold",
                false,
                format!("value {} vs phi* - t {} at {params:?}, {p:?}", ev.value, ev.payoff),
            );
        }
    }
    outcome("value-threshold", true, format!("{n} instances consistent"))
}

/// Plan endpoint exactness and payoff identity on a fuzz set spanning
/// both regimes.
pub fn check_path_payoff(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let params = random_params(&mut rng);
        let p = random_point(&mut rng);
        let plan = build_optimal_plan(&params, p).unwrap();
        let end = plan.position(p.t);
        let scale = 1.0 + p.x.abs() + p.y;
        if end[0].abs() > 1e-12 * scale || end[1].abs() > 1e-12 * scale {
            return outcome(
                "path-endpoint",
                false,
                format!("endpoint {end:?} at {params:?}, {p:?}"),
            );
        }
        let q = path_payoff(&params, &plan, p).unwrap();
        let ev = solve_minimizer(&params, p).unwrap();
        let tol = 1e-10 * (1.0 + ev.phi_star.abs());
        let d = (q.value - ev.payoff).abs();
        worst = worst.max(d / tol);
        if d > tol {
            return outcome(
                "path-payoff",
                false,
                format!("payoff {} vs J {} at {params:?}, {p:?}", q.value, ev.payoff),
            );
        }
    }
    outcome("path-payoff", true, format!("worst deviation {:.2} of tolerance", worst))
}

/// Freidlin inequality along optimal paths of front points.
pub fn check_freidlin(seed: u64, n_points: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = Params::new(2.0, 2.0, 2.0).unwrap();
    let mut min_excess = f64::INFINITY;
    for k in 0..n_points {
        let theta = std::f64::consts::PI * (k as f64 + rng.gen_range(0.05..0.95)) / n_points as f64;
        let p = match locate_front_point(&params, theta, 1.0) {
            Ok(p) => p,
            Err(e) => {
                return outcome("freidlin", false, format!("front location failed: {e}"));
            }
        };
        let report = freidlin_check(&params, p, 64).unwrap();
        min_excess = min_excess.min(report.min_inequality);
        if report.min_inequality < -1e-9 {
            return outcome(
                "freidlin",
                false,
                format!("inequality violated by {} at theta {theta}", report.min_inequality),
            );
        }
    }
    outcome("freidlin", true, format!("min excess {min_excess:.2e} over {n_points} front points"))
}

/// Road-perturbation payoffs decrease toward the optimum over the decades.
pub fn check_perturbation_trend(_seed: u64) -> CheckOutcome {
    let params = Params::new(2.0, 2.0, 2.0).unwrap();
    let p = SpaceTimePoint::new(4.0, 0.0, 1.0).unwrap();
    let j = solve_minimizer(&params, p).unwrap().payoff;
    let mut last = f64::INFINITY;
    for &eps in &[0.1, 0.01, 0.001] {
        let rep = epsilon_road_perturbation(&params, p, eps).unwrap();
        if rep.payoff < j - 1e-12 || rep.payoff >= last {
            return outcome(
                "perturbation-trend",
                false,
                format!("payoff {} at eps {eps} (J = {j})", rep.payoff),
            );
        }
        last = rep.payoff;
    }
    outcome("perturbation-trend", true, "payoffs decrease toward J across decades".into())
}

/// Reflection involution/isometry and combined-payoff invariances.
pub fn check_cone_invariances(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let alpha = rng.gen_range(0.1..std::f64::consts::FRAC_PI_2);
        let cfg = ConeConfig::new(
            alpha,
            RoadParams { capacity: rng.gen_range(0.5..4.0), drift: rng.gen_range(0.0..3.0) },
            RoadParams { capacity: rng.gen_range(0.5..4.0), drift: rng.gen_range(0.0..3.0) },
        )
        .unwrap();
        let pt = [rng.gen_range(-3.0..3.0), rng.gen_range(0.0..3.0)];
        let q = cone::psi_alpha(&cfg, pt);
        let back = cone::psi_alpha(&cfg, q);
        let iso = (pt[0].hypot(pt[1]) - q[0].hypot(q[1])).abs();
        if (back[0] - pt[0]).abs() > 1e-12 || (back[1] - pt[1]).abs() > 1e-12 || iso > 1e-12 {
            return outcome(
                "cone-reflection",
                false,
                format!("involution/isometry broken at alpha {alpha}, {pt:?}"),
            );
        }
        // Monotonicity in the slanted road capacity.
        let angle = rng.gen_range(0.0..2.0 * alpha);
        let r = rng.gen_range(0.1..4.0);
        let p = SpaceTimePoint::new(r * angle.cos(), r * angle.sin(), 1.0).unwrap();
        let j1 = cone::payoff_j_alpha(&cfg, p).unwrap().j_alpha;
        let faster = ConeConfig {
            road_alpha: RoadParams {
                capacity: cfg.road_alpha.capacity * 2.0,
                drift: cfg.road_alpha.drift,
            },
            ..cfg
        };
        let j2 = cone::payoff_j_alpha(&faster, p).unwrap().j_alpha;
        if j2 > j1 + 1e-10 * (1.0 + j1.abs()) {
            return outcome(
                "cone-reflection",
                false,
                format!("J_alpha rose with capacity at alpha {alpha}, {p:?}: {j1} -> {j2}"),
            );
        }
        // w_alpha >= 0 and zero exactly on {J_alpha <= 0}.
        let w = cone::value_w_alpha(&cfg, p, cone::ConditionEvidence::Unverified).unwrap();
        if w.w_alpha < 0.0 || (w.w_alpha == 0.0) != (w.j_alpha <= 0.0) {
            return outcome(
                "cone-reflection",
                false,
                format!("value clipping inconsistent: {w:?}"),
            );
        }
    }
    outcome("cone-reflection", true, format!("{n} configurations consistent"))
}

/// Contour vertices re-evaluate to the level and the audited curve is
/// convex; road extent is stable under refinement.
pub fn check_contour_fidelity(_seed: u64) -> CheckOutcome {
    let params = Params::new(2.0, 2.0, 2.0).unwrap();
    let spec = GridSpec::new(-5.0, 25.0, 0.0, 12.0, 400, 200).unwrap();
    let polys = match geometry::phi_contours(&params, spec, 1.0, 1.0) {
        Ok(p) => p,
        Err(e) => return outcome("contour-fidelity", false, format!("extraction failed: {e}")),
    };
    let tol = (1e-6f64).max(100.0 * spec.dx() * spec.dx());
    for poly in &polys {
        for v in &poly.vertices {
            let p = SpaceTimePoint::new(v[0], v[1].max(0.0), 1.0).unwrap();
            let phi = solve_minimizer(&params, p).unwrap().phi_star;
            if (phi - 1.0).abs() > tol {
                return outcome(
                    "contour-fidelity",
                    false,
                    format!("vertex {v:?} re-evaluates to {phi}"),
                );
            }
        }
    }
    // Refinement stability of the downstream extent.
    let fine = GridSpec::new(-5.0, 25.0, 0.0, 12.0, 800, 400).unwrap();
    let coarse_entries =
        geometry::sweep_figure(params, geometry::SweepAxis::C, &[2.0], spec, 1.0).unwrap();
    let fine_entries =
        geometry::sweep_figure(params, geometry::SweepAxis::C, &[2.0], fine, 1.0).unwrap();
    let drift = (coarse_entries[0].x_max_omega - fine_entries[0].x_max_omega).abs();
    if drift > 2.0 * spec.dx() {
        return outcome(
            "contour-fidelity",
            false,
            format!("x_max moved by {drift} under refinement"),
        );
    }
    outcome("contour-fidelity", true, format!("refinement drift {drift:.2e}"))
}

/// Rotational monotonicity of phi* for random radii and times.
pub fn check_rotational_monotonicity(seed: u64, n: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let params = random_params(&mut rng);
        let r = rng.gen_range(0.0..15.0);
        let t = rng.gen_range(0.2..4.0);
        let prof = geometry::rotational_profile(&params, r, t, 64).unwrap();
        if !prof.monotone {
            return outcome(
                "rotational-monotonicity",
                false,
                format!("drop {} at {params:?}, r = {r}, t = {t}", prof.max_drop),
            );
        }
    }
    outcome("rotational-monotonicity", true, format!("{n} profiles nondecreasing"))
}

/// The default suite, sized for interactive runs.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_strict_convexity(seed, 100_000),
        check_oracle_equivalence(seed.wrapping_add(1), 1000),
        check_regime_trichotomy(seed.wrapping_add(2), 2000),
        check_homogeneity(seed.wrapping_add(3), 300),
        check_c1_matching(seed.wrapping_add(4), 50),
        check_monotone_in_capacity(seed.wrapping_add(5), 1000),
        check_value_threshold(seed.wrapping_add(6), 2000),
        check_path_payoff(seed.wrapping_add(7), 1000),
        check_freidlin(seed.wrapping_add(8), 20),
        check_perturbation_trend(seed),
        check_cone_invariances(seed.wrapping_add(9), 200),
        check_contour_fidelity(seed),
        check_rotational_monotonicity(seed.wrapping_add(10), 100),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let results = vec![
            check_strict_convexity(0, 2000),
            check_oracle_equivalence(1, 60),
            check_regime_trichotomy(2, 200),
            check_homogeneity(3, 40),
            check_c1_matching(4, 10),
            check_monotone_in_capacity(5, 100),
            check_value_threshold(6, 200),
            check_path_payoff(7, 100),
            check_perturbation_trend(0),
            check_cone_invariances(9, 30),
            check_rotational_monotonicity(10, 15),
        ];
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }
}
