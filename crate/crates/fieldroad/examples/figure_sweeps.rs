//! Reproduce the two level-set parameter sweeps: fixed a = 2, b = 2 with
//! c = 1..10 (advection shifts the invaded region downstream), and fixed
//! a = 2, c = 2 with b = 1..10 (road drift extends the invaded stretch of
//! road).
//!
//!     cargo run --release --example figure_sweeps
//!
//! Writes sweep_c_contours.csv and sweep_b_contours.csv.

use fieldroad::csvio::write_sweep_csv;
use fieldroad::geometry::{sweep_figure, sweep_window, SweepAxis};
use fieldroad::Params;

fn main() {
    let base = Params::new(2.0, 2.0, 2.0).unwrap();
    let values: Vec<f64> = (1..=10).map(f64::from).collect();
    let spec = sweep_window();

    println!("left panel: a = 2, b = 2, c = 1..10");
    let left = sweep_figure(base, SweepAxis::C, &values, spec, 1.0).unwrap();
    for e in &left {
        println!(
            "  c = {:>4}: x_max(Omega) = {:>9.5}, road extent = {:>9.5}",
            e.param_value, e.x_max_omega, e.road_extent
        );
    }
    write_sweep_csv("sweep_c_contours.csv", &left).unwrap();

    println!("right panel: a = 2, c = 2, b = 1..10");
    let right = sweep_figure(base, SweepAxis::B, &values, spec, 1.0).unwrap();
    for e in &right {
        println!(
            "  b = {:>4}: x_max(Omega) = {:>9.5}, road extent = {:>9.5}",
            e.param_value, e.x_max_omega, e.road_extent
        );
    }
    write_sweep_csv("sweep_b_contours.csv", &right).unwrap();
    println!("wrote sweep_c_contours.csv and sweep_b_contours.csv");
}
