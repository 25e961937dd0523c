//! Audit Freidlin's condition along optimal paths of front points.
//!
//! Front points (where phi* = t) are located by bisection along rays from
//! the cost minimum (c t, 0). Along each optimal path the audit checks
//! phi*(gamma(tau), t - tau) >= t - tau, with equality in the rectilinear
//! regime and the closed-form surplus on road-assisted field legs. The
//! two-phase road perturbation of a road point is run at the end: its
//! payoffs decrease toward J as eps shrinks while the perturbed path
//! stays strictly inside the propagation region.
//!
//!     cargo run --release --example freidlin_front

use fieldroad::params::Regime;
use fieldroad::paths::{epsilon_road_perturbation, freidlin_check, locate_front_point};
use fieldroad::{solve_minimizer, Params};

fn main() {
    let params = Params::new(2.0, 2.0, 2.0).unwrap();
    let n = 12;
    println!("front points at t = 1 and their Freidlin audit (64 samples each):");
    for k in 0..n {
        let theta = std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
        let p = locate_front_point(&params, theta, 1.0).unwrap();
        let report = freidlin_check(&params, p, 64).unwrap();
        let regime_detail = match report.regime {
            Regime::Rectilinear => format!("equality error {:.2e}", report.max_equality_error),
            Regime::RoadAssisted => format!("surplus error {:.2e}", report.max_surplus_error),
        };
        println!(
            "  theta = {theta:>5.3}: ({:>8.5}, {:>8.5})  {:>12}  min excess {:>9.2e}  {}",
            p.x, p.y, report.regime.to_string(), report.min_inequality, regime_detail
        );
    }

    let road_point = locate_front_point(&params, 0.0, 1.0).unwrap();
    let j = solve_minimizer(&params, road_point).unwrap().payoff;
    println!(
        "\nroad perturbation at the downstream front point ({:.5}, 0), J = {j:.8}:",
        road_point.x
    );
    for eps in [0.1, 0.01, 0.001] {
        let rep = epsilon_road_perturbation(&params, road_point, eps).unwrap();
        println!(
            "  eps = {eps:>5}: payoff = {:.10} (surplus {:.3e}), interior excess {:.3e}",
            rep.payoff,
            rep.payoff - j,
            rep.min_front_excess
        );
    }
}
