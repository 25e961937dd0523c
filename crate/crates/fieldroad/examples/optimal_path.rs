//! Build the optimal control triplet for a point and verify the payoff
//! identity: integrating L(-eta) + F along the constructed path
//! reproduces phi* - t exactly.
//!
//!     cargo run --release --example optimal_path

use fieldroad::paths::{build_optimal_plan, path_payoff};
use fieldroad::{solve_minimizer, Params, SpaceTimePoint};

fn main() {
    let params = Params::new(2.0, 2.0, 2.0).unwrap();
    for (x, y) in [(1.0, 2.5), (6.0, 0.5), (4.0, 0.0)] {
        let p = SpaceTimePoint::new(x, y, 1.0).unwrap();
        let plan = build_optimal_plan(&params, p).unwrap();
        let ev = solve_minimizer(&params, p).unwrap();
        println!("point ({x}, {y}), t = 1: {} with s* = {:.6}", plan.regime, plan.s_bar);
        println!("  eta = ({:.6}, {:.6}), road intensity l = {:.6}", plan.eta[0], plan.eta[1], plan.l_road);
        if plan.segments.len() == 2 {
            println!("  hits the road at t0 = {:.6}, x0 = {:.6}", plan.t0, plan.x0);
        }
        for k in 0..=8 {
            let tau = p.t * k as f64 / 8.0;
            let pos = plan.position(tau);
            println!("    tau = {tau:.3}: gamma = ({:>9.5}, {:>8.5}), l = {:.4}",
                pos[0], pos[1], plan.road_intensity(tau));
        }
        let q = path_payoff(&params, &plan, p).unwrap();
        println!(
            "  payoff integral = {:.12}, phi* - t = {:.12}, difference = {:.2e}\n",
            q.value,
            ev.payoff,
            (q.value - ev.payoff).abs()
        );
    }
}
