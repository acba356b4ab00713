//! Cell-centered two-point flux discretization of
//! `∇·v = q, v = -λ(s) K ∇p`, solved with Jacobi-preconditioned CG, plus the
//! face → vertex velocity interpolation used by the two-dimensional schemes.

use crate::error::{Error, Result};
use crate::flow::RockFluidModel;
use crate::grid::{CellField, FaceVelocityField, Grid2D, VertexVelocityField};

/// Harmonic-mean mobilities `λK` per face; `v = -T·Δp/h` with `h` the
/// center-to-center distance. Boundary faces hold zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissibilityField {
    grid: Grid2D,
    pub tx: Vec<f64>,
    pub ty: Vec<f64>,
}

impl TransmissibilityField {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Harmonic mean of the cell-wise mobility-permeability products.
    pub fn from_cell_mobility(mobility: &CellField) -> Self {
        let g = *mobility.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let mut tx = vec![0.0; g.x_face_count()];
        let mut ty = vec![0.0; g.y_face_count()];
        for k in 0..ny {
            for fj in 1..nx {
                tx[g.x_face(fj, k)] = harmonic_mean(mobility.get(fj - 1, k), mobility.get(fj, k));
            }
        }
        for fk in 1..ny {
            for j in 0..nx {
                ty[g.y_face(j, fk)] = harmonic_mean(mobility.get(j, fk - 1), mobility.get(j, fk));
            }
        }
        Self { grid: g, tx, ty }
    }
}

#[inline]
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

/// A point source or sink occupying one cell. `rate` is the volume rate per
/// unit depth (m²/day); positive injects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Well {
    pub cell: (usize, usize),
    pub rate: f64,
}

impl Well {
    pub fn is_injector(&self) -> bool {
        self.rate > 0.0
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WellSet {
    wells: Vec<Well>,
}

impl WellSet {
    /// Wells must balance: `|Σ rate| <= 1e-12 · Σ|rate|`.
    pub fn new(wells: Vec<Well>) -> Result<Self> {
        let net: f64 = wells.iter().map(|w| w.rate).sum();
        let total: f64 = wells.iter().map(|w| w.rate.abs()).sum();
        if net.abs() > 1e-12 * total {
            return Err(Error::IncompatibleWells { net, total });
        }
        Ok(Self { wells })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn wells(&self) -> &[Well] {
        &self.wells
    }

    pub fn is_empty(&self) -> bool {
        self.wells.is_empty()
    }

    /// Per-cell source rates divided by the cell area (1/day).
    pub fn source_density(&self, grid: &Grid2D) -> CellField {
        let mut q = CellField::zeros(*grid);
        for w in &self.wells {
            q[w.cell] += w.rate / grid.cell_area();
        }
        q
    }
}

/// Assembled five-point system `A p = b`.
///
/// Row `i` reads `Σ_faces c_f (p_i - p_nb) = b_i` with `c_f = T·dy/dx` on
/// x-faces and `T·dx/dy` on y-faces; `b` collects well rates and the
/// prescribed boundary inflow, projected onto the compatible subspace.
#[derive(Clone, Debug)]
pub struct PressureSystem {
    trans: TransmissibilityField,
    boundary_velocity: FaceVelocityField,
    cx: Vec<f64>,
    cy: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
}

/// Builds the pressure system for saturation `s`, permeability `perm`,
/// point wells and prescribed normal velocities on boundary faces (interior
/// entries of `boundary_velocity` are ignored).
pub fn assemble(
    s: &CellField,
    perm: &CellField,
    model: &RockFluidModel,
    wells: &WellSet,
    boundary_velocity: &FaceVelocityField,
) -> Result<PressureSystem> {
    let g = *s.grid();
    if perm.grid() != s.grid() || boundary_velocity.grid() != s.grid() {
        return Err(Error::InvalidGrid("pressure inputs live on different grids".into()));
    }
    if let Some(bad) = perm.values().iter().find(|&&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::Config(format!("permeability must be positive, found {bad}")));
    }
    let lambda_k = CellField::from_cells(g, |j, k| model.mobility(s.get(j, k)) * perm.get(j, k));
    let trans = TransmissibilityField::from_cell_mobility(&lambda_k);

    let (nx, ny) = (g.nx(), g.ny());
    let (dx, dy) = (g.dx(), g.dy());
    let cx: Vec<f64> = trans.tx.iter().map(|t| t * dy / dx).collect();
    let cy: Vec<f64> = trans.ty.iter().map(|t| t * dx / dy).collect();
    let mut diag = vec![0.0; g.cell_count()];
    for k in 0..ny {
        for j in 0..nx {
            let w = cx[g.x_face(j, k)];
            let e = cx[g.x_face(j + 1, k)];
            let so = cy[g.y_face(j, k)];
            let no = cy[g.y_face(j, k + 1)];
            diag[g.cell_index(j, k)] = (w + e) + (so + no);
        }
    }

    let mut rhs = vec![0.0; g.cell_count()];
    for w in wells.wells() {
        let (j, k) = w.cell;
        if j >= nx || k >= ny {
            return Err(Error::Config(format!("well cell ({j}, {k}) outside the {nx}x{ny} grid")));
        }
        rhs[g.cell_index(j, k)] += w.rate;
    }
    for k in 0..ny {
        rhs[g.cell_index(0, k)] += boundary_velocity.vx(0, k) * dy;
        rhs[g.cell_index(nx - 1, k)] -= boundary_velocity.vx(nx, k) * dy;
    }
    for j in 0..nx {
        rhs[g.cell_index(j, 0)] += boundary_velocity.vy(j, 0) * dx;
        rhs[g.cell_index(j, ny - 1)] -= boundary_velocity.vy(j, ny) * dx;
    }
    let net: f64 = rhs.iter().sum();
    let total: f64 = rhs.iter().map(|b| b.abs()).sum();
    if net.abs() > 1e-12 * total {
        return Err(Error::IncompatibleWells { net, total });
    }
    let mean = net / rhs.len() as f64;
    for b in &mut rhs {
        *b -= mean;
    }

    let mut bv = FaceVelocityField::zeros(g);
    for k in 0..ny {
        bv.x[g.x_face(0, k)] = boundary_velocity.vx(0, k);
        bv.x[g.x_face(nx, k)] = boundary_velocity.vx(nx, k);
    }
    for j in 0..nx {
        bv.y[g.y_face(j, 0)] = boundary_velocity.vy(j, 0);
        bv.y[g.y_face(j, ny)] = boundary_velocity.vy(j, ny);
    }

    Ok(PressureSystem {
        trans,
        boundary_velocity: bv,
        cx,
        cy,
        diag,
        rhs,
    })
}

impl PressureSystem {
    pub fn grid(&self) -> &Grid2D {
        self.trans.grid()
    }

    pub fn transmissibility(&self) -> &TransmissibilityField {
        &self.trans
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let g = *self.grid();
        let (nx, ny) = (g.nx(), g.ny());
        for k in 0..ny {
            let row = k * nx;
            let xr = &x[row..row + nx];
            let cxr = &self.cx[g.x_face(0, k)..g.x_face(nx, k) + 1];
            let yr = &mut y[row..row + nx];
            // (west + east) first, then (south + north) added as one term.
            if nx == 1 {
                yr[0] = 0.0;
            } else {
                yr[0] = 0.0 + cxr[1] * (xr[0] - xr[1]);
                for j in 1..nx - 1 {
                    yr[j] = cxr[j] * (xr[j] - xr[j - 1]) + cxr[j + 1] * (xr[j] - xr[j + 1]);
                }
                yr[nx - 1] = cxr[nx - 1] * (xr[nx - 1] - xr[nx - 2]) + 0.0;
            }
            let cs = &self.cy[g.y_face(0, k)..g.y_face(0, k) + nx];
            let cn = &self.cy[g.y_face(0, k + 1)..g.y_face(0, k + 1) + nx];
            match (k > 0, k + 1 < ny) {
                (true, true) => {
                    let (xb, xa) = (&x[row - nx..row], &x[row + nx..row + 2 * nx]);
                    for j in 0..nx {
                        yr[j] += cs[j] * (xr[j] - xb[j]) + cn[j] * (xr[j] - xa[j]);
                    }
                }
                (true, false) => {
                    let xb = &x[row - nx..row];
                    for j in 0..nx {
                        yr[j] += cs[j] * (xr[j] - xb[j]) + 0.0;
                    }
                }
                (false, true) => {
                    let xa = &x[row + nx..row + 2 * nx];
                    for j in 0..nx {
                        yr[j] += 0.0 + cn[j] * (xr[j] - xa[j]);
                    }
                }
                (false, false) => {
                    for v in yr.iter_mut() {
                        *v += 0.0;
                    }
                }
            }
        }
    }

    /// Dense copy of the matrix; for tests on small grids.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.diag.len();
        let mut out = vec![vec![0.0; n]; n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            self.apply(&e, &mut col);
            for r in 0..n {
                out[r][c] = col[r];
            }
            e[c] = 0.0;
        }
        out
    }

    /// Darcy velocities on faces: `-T·(p_high - p_low)/h` inside, the
    /// prescribed values on the boundary.
    pub fn face_velocities(&self, pressure: &CellField) -> FaceVelocityField {
        face_velocities(pressure, &self.trans, &self.boundary_velocity)
    }
}

/// Solver settings for [`solve_pressure_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    /// Target `‖b - A p‖ / ‖b‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 50_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PressureSolution {
    pub pressure: CellField,
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn solve_pressure(system: &PressureSystem) -> Result<CellField> {
    Ok(solve_pressure_with(system, None, CgOptions::default())?.pressure)
}

/// Inner product with four interleaved partial sums, which breaks the
/// floating-point add dependency chain.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ac, bc) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ac.remainder().iter().zip(bc.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ac.zip(bc) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// Jacobi-preconditioned conjugate gradients, optionally warm-started. The
/// returned pressure has zero mean.
pub fn solve_pressure_with(
    system: &PressureSystem,
    initial: Option<&CellField>,
    opts: CgOptions,
) -> Result<PressureSolution> {
    let g = *system.grid();
    let n = g.cell_count();
    let b = &system.rhs;
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(PressureSolution {
            pressure: CellField::zeros(g),
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let mut x = match initial {
        Some(p) if p.grid() == &g => p.values().to_vec(),
        _ => vec![0.0; n],
    };
    let inv_diag: Vec<f64> = system.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
    let mut ap = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut iterations = 0;
    let mut residual;

    // The recursive residual can drift from the true one; restart from the
    // true residual until it agrees.
    loop {
        system.apply(&x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        if residual <= opts.tolerance {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence { iterations, residual });
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
            p[i] = z[i];
        }
        let mut rz = dot(&r, &z);
        let tol2 = (opts.tolerance * b_norm).powi(2);
        while iterations < opts.max_iterations {
            iterations += 1;
            system.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = inv_diag[i] * r[i];
            }
            let rr = dot(&r, &r);
            let rz_new = dot(&r, &z);
            if rr <= tol2 {
                break;
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }

    let mean = x.iter().sum::<f64>() / n as f64;
    for v in &mut x {
        *v -= mean;
    }
    Ok(PressureSolution {
        pressure: CellField::from_values(g, x)?,
        iterations,
        relative_residual: residual,
    })
}

/// Face velocities from a pressure field; boundary faces are copied from
/// `boundary_velocity`.
pub fn face_velocities(
    pressure: &CellField,
    trans: &TransmissibilityField,
    boundary_velocity: &FaceVelocityField,
) -> FaceVelocityField {
    let g = *pressure.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut v = FaceVelocityField::zeros(g);
    for k in 0..ny {
        for fj in 1..nx {
            let f = g.x_face(fj, k);
            v.x[f] = -trans.tx[f] * (pressure.get(fj, k) - pressure.get(fj - 1, k)) / g.dx();
        }
        v.x[g.x_face(0, k)] = boundary_velocity.vx(0, k);
        v.x[g.x_face(nx, k)] = boundary_velocity.vx(nx, k);
    }
    for fk in 1..ny {
        for j in 0..nx {
            let f = g.y_face(j, fk);
            v.y[f] = -trans.ty[f] * (pressure.get(j, fk) - pressure.get(j, fk - 1)) / g.dy();
        }
    }
    for j in 0..nx {
        v.y[g.y_face(j, 0)] = boundary_velocity.vy(j, 0);
        v.y[g.y_face(j, ny)] = boundary_velocity.vy(j, ny);
    }
    v
}

/// `(v^x_{j+1} - v^x_j)/dx + (v^y_{k+1} - v^y_k)/dy` per cell.
pub fn discrete_divergence(vf: &FaceVelocityField) -> CellField {
    let g = *vf.grid();
    CellField::from_cells(g, |j, k| {
        (vf.vx(j + 1, k) - vf.vx(j, k)) / g.dx() + (vf.vy(j, k + 1) - vf.vy(j, k)) / g.dy()
    })
}

/// Vertex velocities as the mean of the cell-center velocities of the cells
/// sharing the vertex; cell-center values average the two opposite faces.
/// At interior vertices this is the equal-weight sum of eight face samples
/// divided by 8; on the boundary the mean runs over the existing cells.
pub fn vertex_velocities(vf: &FaceVelocityField) -> VertexVelocityField {
    let g = *vf.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let center_x = CellField::from_cells(g, |j, k| 0.5 * (vf.vx(j, k) + vf.vx(j + 1, k)));
    let center_y = CellField::from_cells(g, |j, k| 0.5 * (vf.vy(j, k) + vf.vy(j, k + 1)));

    let mut out = VertexVelocityField::zeros(g);
    for vk in 0..=ny {
        for vj in 0..=nx {
            let has_left = vj > 0;
            let has_right = vj < nx;
            let has_below = vk > 0;
            let has_above = vk < ny;
            let pick = |c: &CellField, ok: bool, j: usize, k: usize| if ok { c.get(j, k) } else { 0.0 };
            let ll = has_left && has_below;
            let lr = has_right && has_below;
            let ul = has_left && has_above;
            let ur = has_right && has_above;
            let count = [ll, lr, ul, ur].iter().filter(|&&b| b).count() as f64;
            let (jl, kb) = (vj.wrapping_sub(1), vk.wrapping_sub(1));
            // Diagonal pairs first: the sum is then invariant under x/y
            // transposition.
            let sum = |c: &CellField| {
                (pick(c, ll, jl, kb) + pick(c, ur, vj, vk)) + (pick(c, lr, vj, kb) + pick(c, ul, jl, vk))
            };
            let i = g.vertex(vj, vk);
            out.vx[i] = sum(&center_x) / count;
            out.vy[i] = sum(&center_y) / count;
        }
    }
    out
}
