//! Uniform cell-centered grids and the fields that live on them.
//!
//! Storage is row-major with `x` fastest everywhere. Cell `(j, k)` occupies
//! `[x0 + j dx, x0 + (j+1) dx] × [y0 + k dy, y0 + (k+1) dy]`. The face between
//! cells `j-1` and `j` is x-face `j`, so the half-index face `j+1/2` is stored
//! at `j+1`; vertices follow the same shift in both directions.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    origin: (f64, f64),
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        Self::with_origin(nx, ny, dx, dy, (0.0, 0.0))
    }

    pub fn with_origin(nx: usize, ny: usize, dx: f64, dy: f64, origin: (f64, f64)) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per direction, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite() && dy > 0.0 && dy.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacings must be positive and finite, got dx={dx}, dy={dy}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dy,
            origin,
        })
    }

    /// Grid covering `[0, lx] × [0, ly]` with `nx × ny` cells.
    pub fn from_extent(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid("zero cell count".into()));
        }
        Self::new(nx, ny, lx / nx as f64, ly / ny as f64)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn extent(&self) -> (f64, f64) {
        (self.nx as f64 * self.dx, self.ny as f64 * self.dy)
    }

    pub fn area(&self) -> f64 {
        let (lx, ly) = self.extent();
        lx * ly
    }

    #[inline]
    pub fn cell_index(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < self.nx && k < self.ny);
        k * self.nx + j
    }

    pub fn cell_center(&self, j: usize, k: usize) -> (f64, f64) {
        (
            self.origin.0 + (j as f64 + 0.5) * self.dx,
            self.origin.1 + (k as f64 + 0.5) * self.dy,
        )
    }

    pub fn vertex_position(&self, j: usize, k: usize) -> (f64, f64) {
        (
            self.origin.0 + j as f64 * self.dx,
            self.origin.1 + k as f64 * self.dy,
        )
    }

    /// Number of x-faces: `(nx+1)·ny`.
    pub fn x_face_count(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    /// Number of y-faces: `nx·(ny+1)`.
    pub fn y_face_count(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn vertex_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// x-face `j` (0..=nx) in row `k`.
    #[inline]
    pub fn x_face(&self, j: usize, k: usize) -> usize {
        k * (self.nx + 1) + j
    }

    /// y-face `k` (0..=ny) in column `j`.
    #[inline]
    pub fn y_face(&self, j: usize, k: usize) -> usize {
        k * self.nx + j
    }

    #[inline]
    pub fn vertex(&self, j: usize, k: usize) -> usize {
        k * (self.nx + 1) + j
    }

    /// Whether cell `(j, k)` touches the domain boundary.
    pub fn is_boundary_cell(&self, j: usize, k: usize) -> bool {
        j == 0 || k == 0 || j + 1 == self.nx || k + 1 == self.ny
    }
}

/// Per-cell scalar averages.
#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl CellField {
    pub fn constant(grid: Grid2D, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.cell_count()],
        }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::ShapeMismatch {
                expected: grid.cell_count(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Builds a field from a function of the cell indices.
    pub fn from_cells(grid: Grid2D, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cell_count());
        for k in 0..grid.ny() {
            for j in 0..grid.nx() {
                values.push(f(j, k));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[self.grid.cell_index(j, k)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `a·self + b·other`, element-wise.
    pub fn lin_comb(&self, a: f64, other: &CellField, b: f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| a * u + b * v)
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for CellField {
    type Output = f64;

    fn index(&self, (j, k): (usize, usize)) -> &f64 {
        &self.values[self.grid.cell_index(j, k)]
    }
}

impl IndexMut<(usize, usize)> for CellField {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut f64 {
        let i = self.grid.cell_index(j, k);
        &mut self.values[i]
    }
}

/// Normal Darcy velocity on cell faces (m/day), positive along +x / +y.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceVelocityField {
    grid: Grid2D,
    /// `(nx+1)·ny` values indexed by [`Grid2D::x_face`].
    pub x: Vec<f64>,
    /// `nx·(ny+1)` values indexed by [`Grid2D::y_face`].
    pub y: Vec<f64>,
}

impl FaceVelocityField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.x_face_count()],
            y: vec![0.0; grid.y_face_count()],
        }
    }

    /// Uniform velocity `(vx, vy)` on every face, boundary faces included.
    pub fn uniform(grid: Grid2D, vx: f64, vy: f64) -> Self {
        Self {
            grid,
            x: vec![vx; grid.x_face_count()],
            y: vec![vy; grid.y_face_count()],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn vx(&self, j: usize, k: usize) -> f64 {
        self.x[self.grid.x_face(j, k)]
    }

    #[inline]
    pub fn vy(&self, j: usize, k: usize) -> f64 {
        self.y[self.grid.y_face(j, k)]
    }

    /// Sets the normal velocity to zero on every boundary face.
    pub fn close_boundary(&mut self) {
        let g = self.grid;
        for k in 0..g.ny() {
            self.x[g.x_face(0, k)] = 0.0;
            self.x[g.x_face(g.nx(), k)] = 0.0;
        }
        for j in 0..g.nx() {
            self.y[g.y_face(j, 0)] = 0.0;
            self.y[g.y_face(j, g.ny())] = 0.0;
        }
    }

    pub fn max_abs(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        (m(&self.x), m(&self.y))
    }
}

/// Velocity components sampled at cell vertices (m/day).
#[derive(Clone, Debug, PartialEq)]
pub struct VertexVelocityField {
    grid: Grid2D,
    /// `(nx+1)·(ny+1)` values indexed by [`Grid2D::vertex`].
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl VertexVelocityField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self::uniform(grid, 0.0, 0.0)
    }

    pub fn uniform(grid: Grid2D, vx: f64, vy: f64) -> Self {
        Self {
            grid,
            vx: vec![vx; grid.vertex_count()],
            vy: vec![vy; grid.vertex_count()],
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(usize, usize) -> (f64, f64)) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..=grid.ny() {
            for j in 0..=grid.nx() {
                let (u, v) = f(j, k);
                let i = grid.vertex(j, k);
                out.vx[i] = u;
                out.vy[i] = v;
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn vx_at(&self, j: usize, k: usize) -> f64 {
        self.vx[self.grid.vertex(j, k)]
    }

    #[inline]
    pub fn vy_at(&self, j: usize, k: usize) -> f64 {
        self.vy[self.grid.vertex(j, k)]
    }

    pub fn max_abs(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        (m(&self.vx), m(&self.vy))
    }
}

/// Cell averages of `f` by the midpoint rule.
///
/// Exact for functions that are linear in each coordinate separately; the
/// error on a smooth `f` is `O(dx² + dy²)`.
pub fn project_to_cell_averages(f: impl Fn(f64, f64) -> f64, grid: &Grid2D) -> CellField {
    CellField::from_cells(*grid, |j, k| {
        let (x, y) = grid.cell_center(j, k);
        f(x, y)
    })
}

/// `Σ S̄·dx·dy` over all cells.
pub fn total_mass(s: &CellField) -> f64 {
    s.values().iter().sum::<f64>() * s.grid().cell_area()
}
