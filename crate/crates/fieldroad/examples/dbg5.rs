use fieldroad::grid::GridSpec;
use fieldroad::hj::{self, Scheme, SolverConfig};
use fieldroad::minimize::solve_minimizer;
use fieldroad::params::{Params, SpaceTimePoint};

fn main() {
    let pr = Params::new(2.0, 2.0, 2.0).unwrap();
    // Padded solve domain, fixed comparison window [-4,10]x[0,5].
    for level in 0..3 {
        let scale = 1 << level; // 1, 2, 4
        let nx = 280 * scale + 1;
        let ny = 100 * scale + 1;
        let spec = GridSpec::new(-10.0, 18.0, 0.0, 10.0, nx, ny).unwrap();
        let cfg = SolverConfig { spec, cfl: 0.45, t_end: 1.0, k_init: 50.0, scheme: Scheme::Godunov };
        let start = std::time::Instant::now();
        let report = hj::solve(&cfg, &pr).unwrap();
        let window = GridSpec::new(-4.0, 10.0, 0.0, 5.0, 2, 2).unwrap();
        let cmp = hj::compare_to_closed_form(&report.field, &pr, 1.0, &window).unwrap();
        println!("pad {nx}x{ny} (dx={:.4}): L_inf = {:.4}, L1 = {:.4}, steps = {}, {:.1}s",
            spec.dx(), cmp.l_inf, cmp.l1, report.steps, start.elapsed().as_secs_f64());
    }
}
