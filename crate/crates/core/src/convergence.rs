//! Built-in smooth advection problems for measuring convergence rates.
//!
//! Linear flux `f(s) = s` on the unit square with constant velocity and
//! periodic boundaries, so the exact solution is a translate of the initial
//! data. Rates are reported both against the exact solution and as
//! self-convergence between consecutive resolutions.

use std::f64::consts::PI;
use std::fmt;

use crate::error::Result;
use crate::flow::LinearFlux;
use crate::grid::{project_to_cell_averages, CellField, FaceVelocityField, Grid2D, VertexVelocityField};
use crate::integrator::advance;
use crate::reconstruction::Periodicity;
use crate::scheme::{Boundary, SchemeKind, Transport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    /// `s0 = sin(2πx)`, `v = (1, 0)`, a few cells in y.
    Advection1d,
    /// `s0 = sin(2π(x + y))`, `v = (1, 1)`.
    AdvectionDiagonal,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Advection1d => "advection_1d",
            Problem::AdvectionDiagonal => "advection_diagonal",
        }
    }

    fn velocity(self) -> (f64, f64) {
        match self {
            Problem::Advection1d => (1.0, 0.0),
            Problem::AdvectionDiagonal => (1.0, 1.0),
        }
    }

    fn initial(self, x: f64, y: f64) -> f64 {
        match self {
            Problem::Advection1d => (2.0 * PI * x).sin(),
            Problem::AdvectionDiagonal => (2.0 * PI * (x + y)).sin(),
        }
    }

    fn grid(self, n: usize) -> Result<Grid2D> {
        match self {
            Problem::Advection1d => Grid2D::new(n, 4, 1.0 / n as f64, 0.25),
            Problem::AdvectionDiagonal => Grid2D::new(n, n, 1.0 / n as f64, 1.0 / n as f64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceOptions {
    pub theta: f64,
    pub cfl: f64,
    pub final_time: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            theta: 1.8,
            cfl: 0.4,
            final_time: 0.5,
        }
    }
}

/// Solves `problem` on an `n`-cell resolution to the final time.
pub fn solve(problem: Problem, kind: SchemeKind, n: usize, opts: &ConvergenceOptions) -> Result<CellField> {
    let grid = problem.grid(n)?;
    let (vx, vy) = problem.velocity();
    let transport = Transport::new(
        LinearFlux,
        kind,
        opts.theta,
        Boundary::periodic(Periodicity::BOTH),
        VertexVelocityField::uniform(grid, vx, vy),
        FaceVelocityField::uniform(grid, vx, vy),
    );
    let s0 = project_to_cell_averages(|x, y| problem.initial(x, y), &grid);
    let speed = vx.abs() / grid.dx() + vy.abs() / grid.dy();
    let steps = (opts.final_time * speed / opts.cfl).ceil().max(1.0);
    let dt = opts.final_time / steps;
    let out = advance(&s0, 0.0, opts.final_time, |s| transport.rhs(s), |_| dt, steps as usize + 1)?;
    Ok(out.state)
}

/// Averages `fine` onto the grid of `coarse` (the resolution ratio must be 2
/// in each refined direction).
pub fn restrict(fine: &CellField, coarse: &Grid2D) -> CellField {
    let rx = fine.grid().nx() / coarse.nx();
    let ry = fine.grid().ny() / coarse.ny();
    let w = 1.0 / (rx * ry) as f64;
    CellField::from_cells(*coarse, |j, k| {
        let mut sum = 0.0;
        for b in 0..ry {
            for a in 0..rx {
                sum += fine.get(rx * j + a, ry * k + b);
            }
        }
        w * sum
    })
}

/// `Σ |a - b| · |cell|`.
pub fn l1_distance(a: &CellField, b: &CellField) -> f64 {
    let area = a.grid().cell_area();
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum::<f64>() * area
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub exact_error: f64,
    pub exact_rate: Option<f64>,
    /// Distance to the next finer solution restricted to this grid.
    pub self_difference: Option<f64>,
    pub self_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub problem: Problem,
    pub scheme: SchemeKind,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// The last available self-convergence rate.
    pub fn self_rate(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.self_rate)
    }

    pub fn exact_rate(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.exact_rate)
    }
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} / {}", self.problem.name(), self.scheme)?;
        writeln!(f, "{:>6} {:>12} {:>7} {:>12} {:>7}", "cells", "L1 exact", "rate", "L1 self", "rate")?;
        let opt = |v: Option<f64>, w: usize, p: usize| v.map_or(format!("{:>w$}", "-"), |x| format!("{x:>w$.p$}"));
        for r in &self.rows {
            writeln!(
                f,
                "{:>6} {:>12.4e} {} {} {}",
                r.cells,
                r.exact_error,
                opt(r.exact_rate, 7, 3),
                r.self_difference.map_or(format!("{:>12}", "-"), |x| format!("{x:>12.4e}")),
                opt(r.self_rate, 7, 3)
            )?;
        }
        Ok(())
    }
}

/// Runs `problem` at each resolution (each twice the previous one) and
/// tabulates errors and rates.
pub fn convergence_table(
    problem: Problem,
    kind: SchemeKind,
    resolutions: &[usize],
    opts: &ConvergenceOptions,
) -> Result<ConvergenceTable> {
    let (vx, vy) = problem.velocity();
    let t = opts.final_time;
    let mut solutions = Vec::with_capacity(resolutions.len());
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let s = solve(problem, kind, n, opts)?;
        let exact = project_to_cell_averages(|x, y| problem.initial(x - vx * t, y - vy * t), s.grid());
        rows.push(ConvergenceRow {
            cells: n,
            exact_error: l1_distance(&s, &exact),
            exact_rate: None,
            self_difference: None,
            self_rate: None,
        });
        solutions.push(s);
    }
    for i in 1..rows.len() {
        rows[i].exact_rate = Some((rows[i - 1].exact_error / rows[i].exact_error).log2());
        let d = l1_distance(&solutions[i - 1], &restrict(&solutions[i], solutions[i - 1].grid()));
        rows[i - 1].self_difference = Some(d);
        if i >= 2 {
            rows[i - 1].self_rate = Some((rows[i - 2].self_difference.unwrap() / d).log2());
        }
    }
    Ok(ConvergenceTable {
        problem,
        scheme: kind,
        rows,
    })
}
