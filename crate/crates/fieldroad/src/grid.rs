//! Uniform rectangular grids over a window of the upper half-plane.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("window bounds must satisfy x_min < x_max and 0 <= y_min < y_max")]
    InvalidBounds,
    #[error("sample counts must be at least 2, got nx = {nx}, ny = {ny}")]
    TooFewSamples { nx: usize, ny: usize },
}

/// Node-based discretization of a window: nx x ny samples including both
/// endpoints of each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, GridError> {
        let finite =
            x_min.is_finite() && x_max.is_finite() && y_min.is_finite() && y_max.is_finite();
        if !finite || !(x_min < x_max) || !(0.0 <= y_min && y_min < y_max) {
            return Err(GridError::InvalidBounds);
        }
        if nx < 2 || ny < 2 {
            return Err(GridError::TooFewSamples { nx, ny });
        }
        Ok(Self { x_min, x_max, y_min, y_max, nx, ny })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy()
    }

    /// Row-major index of node (i, j): rows are y-levels.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }
}

/// What a field's values represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    PhiStar,
    Value,
    PdeIterate,
}

/// Scalar samples on a grid, row-major with rows along y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub quantity: Quantity,
}

impl ScalarField {
    pub fn filled(spec: GridSpec, value: f64, quantity: Quantity) -> Self {
        Self { spec, values: vec![value; spec.n_nodes()], quantity }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.spec.index(i, j);
        self.values[idx] = v;
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Grid coordinates of the smallest sample.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut best_v = f64::INFINITY;
        for j in 0..self.spec.ny {
            for i in 0..self.spec.nx {
                let v = self.get(i, j);
                if v < best_v {
                    best_v = v;
                    best = (i, j);
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation_and_spacing() {
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 1, 5).is_err());
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 5, 5).is_err());
        assert!(GridSpec::new(0.0, 1.0, -0.5, 1.0, 5, 5).is_err());
        let g = GridSpec::new(-1.0, 1.0, 0.0, 1.0, 5, 3).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.dy(), 0.5);
        assert_eq!(g.x(4), 1.0);
        assert_eq!(g.y(2), 1.0);
        assert_eq!(g.index(4, 2), 2 * 5 + 4);
    }

    #[test]
    fn argmin_scans_row_major() {
        let g = GridSpec::new(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        let mut f = ScalarField::filled(g, 1.0, Quantity::PhiStar);
        f.set(2, 1, -3.0);
        assert_eq!(f.argmin(), (2, 1));
    }
}
