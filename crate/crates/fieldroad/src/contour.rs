//! Marching-squares isocontour extraction with polyline chaining.
//!
//! Level curves are built per cell from linear interpolation along the
//! crossed edges, then chained into ordered polylines through the shared
//! cell edges. Saddle cells (two opposite corners above the level) are
//! disambiguated by a value at the cell center: a caller-provided exact
//! sampler when available, the corner average otherwise.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::ScalarField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContourError {
    #[error("field contains non-finite samples; contouring refused")]
    NonFiniteField,
}

/// Ordered vertex chain of one level curve.
///
/// `closed_by_boundary` marks open chains that terminate on the window
/// boundary (including the road y = 0); when false the polyline is a
/// closed loop whose last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPolyline {
    pub vertices: Vec<[f64; 2]>,
    pub closed_by_boundary: bool,
}

/// Edge of the node graph: H = horizontal edge with left node (i, j),
/// V = vertical edge with bottom node (i, j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

struct Crossings {
    ids: HashMap<EdgeKey, usize>,
    points: Vec<[f64; 2]>,
}

impl Crossings {
    fn intern(&mut self, key: EdgeKey, point: [f64; 2]) -> usize {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.points.len();
        self.ids.insert(key, id);
        self.points.push(point);
        id
    }
}

/// Extracts level curves, resolving saddle cells by corner averages.
pub fn extract_contour(
    field: &ScalarField,
    level: f64,
) -> Result<Vec<ContourPolyline>, ContourError> {
    let avg = |x: f64, y: f64| corner_average(field, x, y, level);
    extract_impl(field, level, &avg)
}

/// Extracts level curves, resolving saddle cells by re-evaluating the
/// underlying function at cell centers. Preferred for exact evaluators
/// like the fundamental solution, where it removes the topological
/// ambiguity instead of guessing from interpolation.
pub fn extract_contour_with_sampler<F>(
    field: &ScalarField,
    level: f64,
    sampler: F,
) -> Result<Vec<ContourPolyline>, ContourError>
where
    F: Fn(f64, f64) -> f64,
{
    extract_impl(field, level, &sampler)
}

fn corner_average(field: &ScalarField, x: f64, y: f64, _level: f64) -> f64 {
    let spec = &field.spec;
    let i = (((x - spec.x_min) / spec.dx()).floor() as usize).min(spec.nx - 2);
    let j = (((y - spec.y_min) / spec.dy()).floor() as usize).min(spec.ny - 2);
    0.25 * (field.get(i, j) + field.get(i + 1, j) + field.get(i + 1, j + 1) + field.get(i, j + 1))
}

fn extract_impl(
    field: &ScalarField,
    level: f64,
    center: &dyn Fn(f64, f64) -> f64,
) -> Result<Vec<ContourPolyline>, ContourError> {
    if !field.all_finite() {
        return Err(ContourError::NonFiniteField);
    }
    let spec = field.spec;
    let above = |i: usize, j: usize| field.get(i, j) >= level;
    let lerp = |v0: f64, v1: f64| (level - v0) / (v1 - v0);

    let mut crossings = Crossings { ids: HashMap::new(), points: Vec::new() };
    let h_cross = |c: &mut Crossings, i: usize, j: usize| -> usize {
        let (v0, v1) = (field.get(i, j), field.get(i + 1, j));
        let t = lerp(v0, v1);
        c.intern(EdgeKey::H(i, j), [spec.x(i) + t * spec.dx(), spec.y(j)])
    };
    let v_cross = |c: &mut Crossings, i: usize, j: usize| -> usize {
        let (v0, v1) = (field.get(i, j), field.get(i, j + 1));
        let t = lerp(v0, v1);
        c.intern(EdgeKey::V(i, j), [spec.x(i), spec.y(j) + t * spec.dy()])
    };

    // Vertex adjacency (each crossing touches at most two segments).
    let mut adj: Vec<Vec<usize>> = Vec::new();

    for j in 0..spec.ny - 1 {
        for i in 0..spec.nx - 1 {
            let code = (above(i, j) as u8)
                | (above(i + 1, j) as u8) << 1
                | (above(i + 1, j + 1) as u8) << 2
                | (above(i, j + 1) as u8) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            let segs: &[(u8, u8)] = match code {
                1 => &[(0, 3)],  // bottom-left corner above
                2 => &[(0, 1)],  // bottom-right
                3 => &[(3, 1)],  // bottom row above
                4 => &[(1, 2)],  // top-right
                6 => &[(0, 2)],  // right column above
                7 => &[(3, 2)],
                8 => &[(2, 3)],  // top-left
                9 => &[(0, 2)],
                11 => &[(1, 2)],
                12 => &[(1, 3)], // top row above
                13 => &[(0, 1)],
                14 => &[(0, 3)],
                5 | 10 => {
                    let cx = spec.x(i) + 0.5 * spec.dx();
                    let cy = spec.y(j) + 0.5 * spec.dy();
                    let center_above = center(cx, cy) >= level;
                    // code 5: BL and TR above; code 10: BR and TL above.
                    if (code == 5) == center_above {
                        &[(0, 1), (2, 3)]
                    } else {
                        &[(0, 3), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(e0, e1) in segs {
                // Edges: 0 = bottom, 1 = right, 2 = top, 3 = left.
                let mut edge_id = |e: u8| match e {
                    0 => h_cross(&mut crossings, i, j),
                    1 => v_cross(&mut crossings, i + 1, j),
                    2 => h_cross(&mut crossings, i, j + 1),
                    _ => v_cross(&mut crossings, i, j),
                };
                let id0 = edge_id(e0);
                let id1 = edge_id(e1);
                if adj.len() <= id0.max(id1) {
                    adj.resize(id0.max(id1) + 1, Vec::new());
                }
                adj[id0].push(id1);
                adj[id1].push(id0);
            }
        }
    }
    adj.resize(crossings.points.len(), Vec::new());

    // Chain segments into polylines: open chains first (they start at
    // degree-1 crossings, which sit on the window boundary), then cycles.
    let n = crossings.points.len();
    let mut visited = vec![false; n];
    let mut polylines = Vec::new();
    let walk = |start: usize, visited: &mut Vec<bool>| -> Vec<usize> {
        let mut chain = vec![start];
        visited[start] = true;
        let mut here = start;
        loop {
            let next = adj[here].iter().copied().find(|&nb| !visited[nb]);
            match next {
                Some(nb) => {
                    visited[nb] = true;
                    chain.push(nb);
                    here = nb;
                }
                None => break,
            }
        }
        chain
    };
    for start in 0..n {
        if visited[start] || adj[start].len() != 1 {
            continue;
        }
        let chain = walk(start, &mut visited);
        push_polyline(&mut polylines, &crossings.points, chain, true);
    }
    for start in 0..n {
        if visited[start] || adj[start].is_empty() {
            continue;
        }
        let chain = walk(start, &mut visited);
        push_polyline(&mut polylines, &crossings.points, chain, false);
    }
    Ok(polylines)
}

fn push_polyline(
    out: &mut Vec<ContourPolyline>,
    points: &[[f64; 2]],
    chain: Vec<usize>,
    closed_by_boundary: bool,
) {
    let mut vertices: Vec<[f64; 2]> = Vec::with_capacity(chain.len());
    for id in chain {
        let p = points[id];
        // Crossings that land exactly on a shared node collapse; keep
        // consecutive vertices distinct.
        if vertices.last().map_or(true, |last| *last != p) {
            vertices.push(p);
        }
    }
    if vertices.len() >= 2 {
        out.push(ContourPolyline { vertices, closed_by_boundary });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, Quantity, ScalarField};

    fn sample_field<F: Fn(f64, f64) -> f64>(spec: GridSpec, f: F) -> ScalarField {
        let mut field = ScalarField::filled(spec, 0.0, Quantity::PhiStar);
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                field.set(i, j, f(spec.x(i), spec.y(j)));
            }
        }
        field
    }

    #[test]
    fn constant_field_has_no_contour() {
        let spec = GridSpec::new(0.0, 1.0, 0.0, 1.0, 8, 8).unwrap();
        let field = ScalarField::filled(spec, 2.0, Quantity::PhiStar);
        assert!(extract_contour(&field, 1.0).unwrap().is_empty());
        assert!(extract_contour(&field, 2.5).unwrap().is_empty());
    }

    #[test]
    fn non_finite_field_is_refused() {
        let spec = GridSpec::new(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let mut field = ScalarField::filled(spec, 1.0, Quantity::PhiStar);
        field.set(2, 2, f64::NAN);
        assert_eq!(extract_contour(&field, 1.0), Err(ContourError::NonFiniteField));
    }

    #[test]
    fn quarter_circle_is_recovered() {
        let spec = GridSpec::new(0.0, 1.5, 0.0, 1.5, 151, 151).unwrap();
        let field = sample_field(spec, |x, y| x * x + y * y);
        let polys = extract_contour(&field, 1.0).unwrap();
        assert_eq!(polys.len(), 1);
        let poly = &polys[0];
        assert!(poly.closed_by_boundary);
        assert!(poly.vertices.len() > 50);
        let dx = spec.dx();
        for v in &poly.vertices {
            let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
            assert!((r - 1.0).abs() < 2.0 * dx, "radial deviation {r}");
        }
        // Chain endpoints terminate on the window boundary.
        let first = poly.vertices.first().unwrap();
        let last = poly.vertices.last().unwrap();
        for p in [first, last] {
            let on_boundary = p[0] == 0.0 || p[1] == 0.0 || p[0] == 1.5 || p[1] == 1.5;
            assert!(on_boundary);
        }
        // Consecutive vertices distinct.
        for w in poly.vertices.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn closed_loop_inside_window() {
        let spec = GridSpec::new(-2.0, 2.0, 0.0, 4.0, 101, 101).unwrap();
        let field = sample_field(spec, |x, y| x * x + (y - 2.0) * (y - 2.0));
        let polys = extract_contour(&field, 1.0).unwrap();
        assert_eq!(polys.len(), 1);
        assert!(!polys[0].closed_by_boundary);
        for v in &polys[0].vertices {
            let r = (v[0] * v[0] + (v[1] - 2.0) * (v[1] - 2.0)).sqrt();
            assert!((r - 1.0).abs() < 2.0 * spec.dx());
        }
    }

    #[test]
    fn saddle_cells_follow_center_sampler() {
        // A single cell with alternating corners; center decides topology.
        let spec = GridSpec::new(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let mut field = ScalarField::filled(spec, 0.0, Quantity::PhiStar);
        field.set(0, 0, 1.0);
        field.set(1, 1, 1.0);
        let hi = extract_contour_with_sampler(&field, 0.5, |_, _| 1.0).unwrap();
        let lo = extract_contour_with_sampler(&field, 0.5, |_, _| 0.0).unwrap();
        assert_eq!(hi.len(), 2);
        assert_eq!(lo.len(), 2);
        assert_ne!(hi, lo);
    }
}
