//! Evaluate the closed-form solution bundle at a few points.
//!
//! For each point this prints the minimizer s*, the fundamental solution
//! phi*, the payoff J = phi* - t, the value v = max(0, J), and whether
//! the optimal path is a straight segment (Rectilinear) or detours along
//! the road (RoadAssisted).
//!
//!     cargo run --release --example evaluate_point

use fieldroad::{solve_minimizer, Params, SpaceTimePoint};

fn main() {
    let params = Params::new(2.0, 2.0, 2.0).unwrap();
    println!("coefficients: a = {}, b = {}, c = {}", params.a, params.b, params.c);
    println!(
        "{:>7} {:>6} {:>5} | {:>10} {:>10} {:>10} {:>8}  regime",
        "x", "y", "t", "s*", "phi*", "J", "v"
    );
    let points = [
        (2.0, 0.0, 1.0),  // the cost minimum (c t, 0)
        (1.0, 1.0, 1.0),
        (4.0, 0.0, 1.0),  // road-assisted reference fixture
        (6.0, 0.5, 1.0),  // two-leg optimal path
        (-3.0, 0.5, 1.0), // upstream of the source
        (8.0, 0.0, 1.0),  // beyond the invaded stretch of road
        (3.0, 3.0, 1.0),  // exactly on the critical transition curve
    ];
    for (x, y, t) in points {
        let p = SpaceTimePoint::new(x, y, t).unwrap();
        let ev = solve_minimizer(&params, p).unwrap();
        println!(
            "{x:>7.2} {y:>6.2} {t:>5.2} | {:>10.6} {:>10.6} {:>10.6} {:>8.4}  {}",
            ev.s_star, ev.phi_star, ev.payoff, ev.value, ev.regime
        );
    }

    // The same batch through the parallel evaluator, with one bad point.
    let mut batch: Vec<SpaceTimePoint> = points
        .iter()
        .map(|&(x, y, t)| SpaceTimePoint::new(x, y, t).unwrap())
        .collect();
    batch.push(SpaceTimePoint { x: 0.0, y: 0.0, t: 0.0 });
    let results = fieldroad::evaluate(&params, &batch);
    let failures = results.iter().filter(|r| r.is_err()).count();
    println!("\nbatch of {}: {} failure(s) isolated per point", batch.len(), failures);
}
