//! Node-centred grids and the row-major field container shared by the strip
//! and plane solvers. Row 0 is the bottom edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field2 {
    pub ncols: usize,
    pub nrows: usize,
    pub values: Vec<f64>,
}

impl Field2 {
    pub fn new(ncols: usize, nrows: usize, fill: f64) -> Self {
        Self { ncols, nrows, values: vec![fill; ncols * nrows] }
    }

    pub fn from_fn(ncols: usize, nrows: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(ncols * nrows);
        for j in 0..nrows {
            for i in 0..ncols {
                values.push(f(i, j));
            }
        }
        Self { ncols, nrows, values }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ncols + i
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.ncols + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.values[k] = v;
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.nrows).map(|j| self.at(i, j)).collect()
    }

    pub fn same_shape(&self, other: &Field2) -> bool {
        self.ncols == other.ncols && self.nrows == other.nrows
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2 {
        Field2 { ncols: self.ncols, nrows: self.nrows, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Field2, f: impl Fn(f64, f64) -> f64) -> Field2 {
        assert!(self.same_shape(other));
        Field2 {
            ncols: self.ncols,
            nrows: self.nrows,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Field2) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Rectangle `[-x_max, x_max] × [-y_max, y_max]` with `(nx+1)×(ny+1)` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid {
    pub x_max: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl PlaneGrid {
    pub fn new(x_max: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_max > 0.0 && y_max > 0.0) || nx < 8 || ny < 8 || !nx.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "plane grid needs positive extents, even nx >= 8 and ny >= 8 (got {x_max}, {y_max}, {nx}, {ny})"
            )));
        }
        Ok(Self { x_max, y_max, nx, ny })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_max / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.y_max / self.ny as f64
    }

    pub fn ncols(&self) -> usize {
        self.nx + 1
    }

    pub fn nrows(&self) -> usize {
        self.ny + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.x_max + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.y_max + j as f64 * self.dy()
    }

    /// Column holding `x = 0`.
    pub fn center_column(&self) -> usize {
        self.nx / 2
    }

    pub fn field(&self, f: impl Fn(f64, f64) -> f64) -> Field2 {
        Field2::from_fn(self.ncols(), self.nrows(), |i, j| f(self.x(i), self.y(j)))
    }

    /// Whether the cone boundary through the apex `(0, l)` leaves through the
    /// lateral sides inside the vertical extent.
    pub fn cone_fits(&self, alpha: f64) -> bool {
        self.x_max * (alpha.cos() / alpha.sin()).abs() < self.y_max
    }

    pub fn scaled(&self, factor: usize) -> Self {
        Self { nx: self.nx * factor, ny: self.ny * factor, ..*self }
    }

    /// Columns `x ≥ 0` of a full field.
    pub fn right_half(&self, full: &Field2) -> Field2 {
        let c = self.center_column();
        Field2::from_fn(self.nx + 1 - c, full.nrows, |i, j| full.at(i + c, j))
    }

    /// Even extension of a right-half field.
    pub fn mirror(&self, half: &Field2) -> Field2 {
        let c = self.center_column() as isize;
        Field2::from_fn(self.ncols(), half.nrows, |i, j| half.at((i as isize - c).unsigned_abs(), j))
    }

    /// Largest `|u(x, y) - u(-x, y)|`.
    pub fn asymmetry(&self, full: &Field2) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..full.nrows {
            for i in 0..self.center_column() {
                worst = worst.max((full.at(i, j) - full.at(self.nx - i, j)).abs());
            }
        }
        worst
    }
}

/// Strip `[0, L) × [-y_max, y_max]`, periodic in X, with `nx×(ny+1)` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicStripGrid {
    pub period: f64,
    pub nx: usize,
    pub y_max: f64,
    pub ny: usize,
}

impl PeriodicStripGrid {
    pub fn new(period: f64, nx: usize, y_max: f64, ny: usize) -> Result<Self> {
        if !(period > 0.0 && y_max > 0.0) || nx < 16 || ny < 16 {
            return Err(Error::InvalidInput(format!(
                "strip grid needs positive extents and nx, ny >= 16 (got {period}, {nx}, {y_max}, {ny})"
            )));
        }
        Ok(Self { period, nx, y_max, ny })
    }

    pub fn dx(&self) -> f64 {
        self.period / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.y_max / self.ny as f64
    }

    pub fn ncols(&self) -> usize {
        self.nx
    }

    pub fn nrows(&self) -> usize {
        self.ny + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.y_max + j as f64 * self.dy()
    }

    pub fn scaled(&self, factor: usize) -> Self {
        Self { nx: self.nx * factor, ny: self.ny * factor, ..*self }
    }
}
