//! Extract the invaded region Omega = {phi*(., ., 1) < 1} as a level
//! curve and dump it to CSV, together with the field itself.
//!
//!     cargo run --release --example invaded_region
//!
//! Writes invaded_region_contour.csv and invaded_region_field.csv in the
//! working directory; plot them with any external tool.

use fieldroad::csvio::{write_contour_csv, write_field_csv};
use fieldroad::geometry::{eval_field, phi_contours, road_extent};
use fieldroad::grid::GridSpec;
use fieldroad::Params;

fn main() {
    let params = Params::new(2.0, 2.0, 2.0).unwrap();
    let spec = GridSpec::new(-5.0, 25.0, 0.0, 12.0, 400, 200).unwrap();

    let field = eval_field(&params, spec, 1.0).unwrap();
    let polylines = phi_contours(&params, spec, 1.0, 1.0).unwrap();
    let n_vertices: usize = polylines.iter().map(|p| p.vertices.len()).sum();
    println!(
        "level-1 contour: {} polyline(s), {} vertices",
        polylines.len(),
        n_vertices
    );
    let extent = road_extent(&params, 1.0, 1.0).unwrap();
    println!("invaded stretch of road reaches x = {extent:.6}");

    write_contour_csv("invaded_region_contour.csv", "level", 1.0, &polylines).unwrap();
    write_field_csv("invaded_region_field.csv", &field).unwrap();
    println!("wrote invaded_region_contour.csv and invaded_region_field.csv");
}
