use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::KernelFit;

/// Regular lattice over a rectangle, `nx × ny` nodes including the corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2d {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl Grid2d {
    pub fn new(x: (f64, f64), nx: usize, y: (f64, f64), ny: usize) -> Result<Self> {
        let g = Self { x_min: x.0, x_max: x.1, nx, y_min: y.0, y_max: y.1, ny };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(Error::param("grid needs at least 2 nodes per axis and a non-empty range"));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (self.y_max - self.y_min) * j as f64 / (self.ny - 1) as f64
    }

    pub fn cell_width(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn cell_height(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Nodes in x-major order.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        (0..self.nx).flat_map(|i| (0..self.ny).map(move |j| [self.x(i), self.y(j)])).collect()
    }
}

/// Points where `f` crosses `level` along lattice edges, located by linear
/// interpolation between the two edge endpoints.
pub fn level_crossings(grid: &Grid2d, level: f64, f: impl Fn(f64, f64) -> f64) -> Result<Vec<[f64; 2]>> {
    grid.validate()?;
    let v: Vec<Vec<f64>> = (0..grid.nx).map(|i| (0..grid.ny).map(|j| f(grid.x(i), grid.y(j))).collect()).collect();
    let mut out = Vec::new();
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let a = v[i][j] - level;
            if a == 0.0 {
                out.push([grid.x(i), grid.y(j)]);
                continue;
            }
            if i + 1 < grid.nx {
                let b = v[i + 1][j] - level;
                if a * b < 0.0 {
                    let t = a / (a - b);
                    out.push([grid.x(i) + t * grid.cell_width(), grid.y(j)]);
                }
            }
            if j + 1 < grid.ny {
                let b = v[i][j + 1] - level;
                if a * b < 0.0 {
                    let t = a / (a - b);
                    out.push([grid.x(i), grid.y(j) + t * grid.cell_height()]);
                }
            }
        }
    }
    Ok(out)
}

/// Points where the predictive probability equals 0.5.
pub fn decision_contour(fit: &KernelFit, grid: &Grid2d) -> Result<Vec<[f64; 2]>> {
    if fit.base_points.first().is_some_and(|b| b.len() != 2) {
        return Err(Error::param("decision contours need 2-D inputs"));
    }
    level_crossings(grid, 0.5, |x, y| fit.probability(&[x, y]))
}

/// `(x, y, probability)` at every lattice node.
pub fn probability_grid(fit: &KernelFit, grid: &Grid2d) -> Result<Vec<[f64; 3]>> {
    grid.validate()?;
    Ok(grid.nodes().into_iter().map(|[x, y]| [x, y, fit.probability(&[x, y])]).collect())
}
