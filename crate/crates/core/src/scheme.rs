//! Semi-discrete central schemes for `s_t + (v^x f(s))_x + (v^y f(s))_y = 0`.
//!
//! Three flux families are provided:
//!
//! * [`SchemeKind::Sd2`]: the genuinely two-dimensional second-order scheme.
//!   Face fluxes average `v·f` over the two vertices bounding the face, with
//!   `f` evaluated at the reconstructed corner values, and are stabilized by
//!   the local speed `c^x` (resp. `d^y`) gathered from the neighboring
//!   Riemann problems.
//! * [`SchemeKind::Sd1`]: its first-order (Rusanov) reduction with zero
//!   slopes.
//! * [`SchemeKind::KtDxd`]: the dimension-by-dimension Kurganov–Tadmor flux,
//!   driven by the face-normal velocities.
//!
//! The two-dimensional fluxes see the Darcy field through the pair of vertex
//! velocities bounding each face. Before use, each interior pair is shifted
//! by a common amount so that its mean equals the face velocity from the
//! pressure solve ([`FaceVertexVelocity::balanced`]). The transport is then
//! in flux form with a discretely divergence-free field away from wells:
//! uniform states stay uniform and mass changes only through wells and
//! boundary faces. Well cells act as volumetric sources, injecting at
//! `f(s_inj)` and producing at `f(S̄)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::flow::FluxFunction;
use crate::grid::{CellField, FaceVelocityField, Grid2D, VertexVelocityField};
use crate::reconstruction::{
    bound_corner_values, compute_slopes_with, corner_values, face_neighbors, interface_values, CornerValues, InterfaceValues,
    Periodicity, SlopeField,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "sd2_2d")]
    Sd2,
    #[serde(rename = "sd1_2d")]
    Sd1,
    #[serde(rename = "kt_dxd")]
    KtDxd,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Sd2, SchemeKind::Sd1, SchemeKind::KtDxd];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Sd2 => "sd2_2d",
            SchemeKind::Sd1 => "sd1_2d",
            SchemeKind::KtDxd => "kt_dxd",
        }
    }

    /// Whether transport is driven by vertex velocities.
    pub fn uses_vertex_velocity(self) -> bool {
        !matches!(self, SchemeKind::KtDxd)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sd2_2d" | "sd2" => Ok(SchemeKind::Sd2),
            "sd1_2d" | "sd1" | "rusanov" => Ok(SchemeKind::Sd1),
            "kt_dxd" | "ktdxd" => Ok(SchemeKind::KtDxd),
            _ => Err(format!("unknown scheme `{s}` (expected sd2_2d, sd1_2d or kt_dxd)")),
        }
    }
}

/// Numerical boundary treatment shared by all schemes.
///
/// On non-periodic edges the normal face velocity decides the flux: faces
/// with inflow carry `v·f(s_inj)`, outflow faces the upwind `v·f(S̄)` of the
/// adjacent cell, closed faces nothing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Boundary {
    pub periodicity: Periodicity,
    pub injected_saturation: f64,
}

impl Boundary {
    pub fn closed(injected_saturation: f64) -> Self {
        Self {
            periodicity: Periodicity::NONE,
            injected_saturation,
        }
    }

    pub fn periodic(periodicity: Periodicity) -> Self {
        Self {
            periodicity,
            injected_saturation: 0.0,
        }
    }
}

/// The two vertex velocities bounding each face as seen by the
/// two-dimensional fluxes: `(lower, upper)` normal components on x-faces and
/// `(left, right)` on y-faces.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceVertexVelocity {
    grid: Grid2D,
    pub x_low: Vec<f64>,
    pub x_up: Vec<f64>,
    pub y_left: Vec<f64>,
    pub y_right: Vec<f64>,
}

impl FaceVertexVelocity {
    /// Pairs read straight from the vertex field.
    pub fn from_vertex(v: &VertexVelocityField) -> Self {
        let g = *v.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let mut out = Self {
            grid: g,
            x_low: vec![0.0; g.x_face_count()],
            x_up: vec![0.0; g.x_face_count()],
            y_left: vec![0.0; g.y_face_count()],
            y_right: vec![0.0; g.y_face_count()],
        };
        for k in 0..ny {
            for fj in 0..=nx {
                let f = g.x_face(fj, k);
                out.x_low[f] = v.vx_at(fj, k);
                out.x_up[f] = v.vx_at(fj, k + 1);
            }
        }
        for fk in 0..=ny {
            for j in 0..nx {
                let f = g.y_face(j, fk);
                out.y_left[f] = v.vy_at(j, fk);
                out.y_right[f] = v.vy_at(j + 1, fk);
            }
        }
        out
    }

    /// Pairs shifted by `v_face - (v_a + v_b)/2` on every face that carries
    /// a numerical flux, so each pair averages to the face velocity. A
    /// uniform field is left unchanged.
    pub fn balanced(v: &VertexVelocityField, faces: &FaceVelocityField, periodicity: Periodicity) -> Self {
        let mut out = Self::from_vertex(v);
        let g = *v.grid();
        for k in 0..g.ny() {
            for fj in interior_faces(g.nx(), periodicity.x) {
                let f = g.x_face(fj, k);
                let shift = faces.x[f] - 0.5 * (out.x_up[f] + out.x_low[f]);
                out.x_up[f] += shift;
                out.x_low[f] += shift;
            }
        }
        for fk in interior_faces(g.ny(), periodicity.y) {
            for j in 0..g.nx() {
                let f = g.y_face(j, fk);
                let shift = faces.y[f] - 0.5 * (out.y_right[f] + out.y_left[f]);
                out.y_right[f] += shift;
                out.y_left[f] += shift;
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// `(lower, upper)` on x-face `fj` of row `k`.
    #[inline]
    pub fn x(&self, fj: usize, k: usize) -> (f64, f64) {
        let f = self.grid.x_face(fj, k);
        (self.x_low[f], self.x_up[f])
    }

    /// `(left, right)` on y-face `fk` of column `j`.
    #[inline]
    pub fn y(&self, j: usize, fk: usize) -> (f64, f64) {
        let f = self.grid.y_face(j, fk);
        (self.y_left[f], self.y_right[f])
    }

    /// Mean of the pair on every face.
    pub fn face_means(&self) -> FaceVelocityField {
        let mut out = FaceVelocityField::zeros(self.grid);
        for (o, (u, l)) in out.x.iter_mut().zip(self.x_up.iter().zip(&self.x_low)) {
            *o = 0.5 * (u + l);
        }
        for (o, (r, l)) in out.y.iter_mut().zip(self.y_right.iter().zip(&self.y_left)) {
            *o = 0.5 * (r + l);
        }
        out
    }

    pub fn max_abs(&self) -> (f64, f64) {
        let m = |a: &[f64], b: &[f64]| a.iter().chain(b).fold(0.0f64, |acc, v| acc.max(v.abs()));
        (m(&self.x_low, &self.x_up), m(&self.y_left, &self.y_right))
    }
}

/// Dissipation coefficients per face: `cx` on x-faces, `dy` on y-faces.
/// Non-periodic boundary faces hold zero; their flux is the physical one.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSpeeds {
    grid: Grid2D,
    pub cx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl LocalSpeeds {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn cx_at(&self, j: usize, k: usize) -> f64 {
        self.cx[self.grid.x_face(j, k)]
    }

    #[inline]
    pub fn dy_at(&self, j: usize, k: usize) -> f64 {
        self.dy[self.grid.y_face(j, k)]
    }
}

/// Local speeds of propagation.
///
/// The one-dimensional speed across x-face `(j+1/2, k)` is
/// `a^x = max|f'| over [S̄_{j,k}, S̄_{j+1,k}] · max(|v^x|)` over the two
/// vertices bounding the face. The vertex maxima
/// `b^x_{j+1/2,k±1/2} = max(a^x_{j+1/2,k}, a^x_{j+1/2,k±1})` are combined
/// into `c^x_{j+1/2,k} = max(b^x_{j+1/2,k-1/2}, b^x_{j+1/2,k+1/2})`; `d^y` is
/// the mirror image.
pub fn local_speeds<F: FluxFunction>(
    s: &CellField,
    v: &FaceVertexVelocity,
    model: &F,
    periodicity: Periodicity,
) -> LocalSpeeds {
    let g = *s.grid();
    let (nx, ny) = (g.nx(), g.ny());

    // |f'| at each cell state, shared by the four faces of the cell.
    let own: Vec<f64> = s.values().iter().map(|&x| model.wave_speed(x)).collect();
    let bound = |i: usize, k: usize| {
        let (a, b) = (s.values()[i], s.values()[k]);
        own[i].max(own[k]).max(model.interior_speed_bound(a, b))
    };
    let mut ax = vec![0.0; g.x_face_count()];
    for k in 0..ny {
        for fj in 0..=nx {
            if let (Some(l), Some(r)) = face_neighbors(fj, nx, periodicity.x) {
                let (low, up) = v.x(fj, k);
                let vmax = low.abs().max(up.abs());
                ax[g.x_face(fj, k)] = bound(g.cell_index(l, k), g.cell_index(r, k)) * vmax;
            }
        }
    }
    let mut ay = vec![0.0; g.y_face_count()];
    for fk in 0..=ny {
        if let (Some(b), Some(t)) = face_neighbors(fk, ny, periodicity.y) {
            for j in 0..nx {
                let (left, right) = v.y(j, fk);
                let vmax = left.abs().max(right.abs());
                ay[g.y_face(j, fk)] = bound(g.cell_index(j, b), g.cell_index(j, t)) * vmax;
            }
        }
    }

    let mut cx = vec![0.0; g.x_face_count()];
    for k in 0..ny {
        let (below, above) = neighbors(k, ny, periodicity.y);
        for fj in 0..=nx {
            let mut c = ax[g.x_face(fj, k)];
            if let Some(b) = below {
                c = c.max(ax[g.x_face(fj, b)]);
            }
            if let Some(a) = above {
                c = c.max(ax[g.x_face(fj, a)]);
            }
            cx[g.x_face(fj, k)] = c;
        }
    }
    let mut dy = vec![0.0; g.y_face_count()];
    for fk in 0..=ny {
        for j in 0..nx {
            let (left, right) = neighbors(j, nx, periodicity.x);
            let mut d = ay[g.y_face(j, fk)];
            if let Some(l) = left {
                d = d.max(ay[g.y_face(l, fk)]);
            }
            if let Some(r) = right {
                d = d.max(ay[g.y_face(r, fk)]);
            }
            dy[g.y_face(j, fk)] = d;
        }
    }
    // Non-periodic boundary faces carry physical fluxes only.
    if !periodicity.x {
        for k in 0..ny {
            cx[g.x_face(0, k)] = 0.0;
            cx[g.x_face(nx, k)] = 0.0;
        }
    }
    if !periodicity.y {
        for j in 0..nx {
            dy[g.y_face(j, 0)] = 0.0;
            dy[g.y_face(j, ny)] = 0.0;
        }
    }
    LocalSpeeds { grid: g, cx, dy }
}

/// Previous and next cell index along one direction.
#[inline]
fn neighbors(i: usize, n: usize, periodic: bool) -> (Option<usize>, Option<usize>) {
    let prev = if i > 0 {
        Some(i - 1)
    } else if periodic {
        Some(n - 1)
    } else {
        None
    };
    let next = if i + 1 < n {
        Some(i + 1)
    } else if periodic {
        Some(0)
    } else {
        None
    };
    (prev, next)
}

/// Second-order flux across x-face `fj` of row `k` (the face `j+1/2` with
/// `fj = j+1`).
pub fn flux_sd2_x<F: FluxFunction>(
    fj: usize,
    k: usize,
    corners: &CornerValues,
    iv: &InterfaceValues,
    v: &FaceVertexVelocity,
    speeds: &LocalSpeeds,
    model: &F,
) -> f64 {
    sd2_x(fj, k, &corners.map(|c| model.flux(c)), iv, v, speeds)
}

/// Second-order flux across y-face `fk` of column `j`.
pub fn flux_sd2_y<F: FluxFunction>(
    j: usize,
    fk: usize,
    corners: &CornerValues,
    iv: &InterfaceValues,
    v: &FaceVertexVelocity,
    speeds: &LocalSpeeds,
    model: &F,
) -> f64 {
    sd2_y(j, fk, &corners.map(|c| model.flux(c)), iv, v, speeds)
}

/// SD2 x-flux from precomputed `f` at the corners.
#[inline]
fn sd2_x(fj: usize, k: usize, cf: &CornerValues, iv: &InterfaceValues, v: &FaceVertexVelocity, speeds: &LocalSpeeds) -> f64 {
    let upper = cf.at(fj, k + 1);
    let lower = cf.at(fj, k);
    let pair = iv.x_face(fj, k);
    let (v_low, v_up) = v.x(fj, k);
    0.25 * (v_up * (upper.pm + upper.mm) + v_low * (lower.pp + lower.mp)) - 0.5 * speeds.cx_at(fj, k) * (pair.plus - pair.minus)
}

#[inline]
fn sd2_y(j: usize, fk: usize, cf: &CornerValues, iv: &InterfaceValues, v: &FaceVertexVelocity, speeds: &LocalSpeeds) -> f64 {
    let right = cf.at(j + 1, fk);
    let left = cf.at(j, fk);
    let pair = iv.y_face(j, fk);
    let (v_left, v_right) = v.y(j, fk);
    0.25 * (v_right * (right.mp + right.mm) + v_left * (left.pp + left.pm)) - 0.5 * speeds.dy_at(j, fk) * (pair.plus - pair.minus)
}

/// Rusanov flux across x-face `fj` of row `k`, from cell averages.
pub fn flux_rusanov_x<F: FluxFunction>(
    fj: usize,
    k: usize,
    s: &CellField,
    v: &FaceVertexVelocity,
    speeds: &LocalSpeeds,
    model: &F,
    periodicity: Periodicity,
) -> f64 {
    let g = s.grid();
    let (Some(l), Some(r)) = face_neighbors(fj, g.nx(), periodicity.x) else {
        return f64::NAN;
    };
    let (sl, sr) = (s.get(l, k), s.get(r, k));
    let (fl, fr) = (model.flux(sl), model.flux(sr));
    let (v_low, v_up) = v.x(fj, k);
    0.25 * (v_up * (fr + fl) + v_low * (fr + fl)) - 0.5 * speeds.cx_at(fj, k) * (sr - sl)
}

/// Rusanov flux across y-face `fk` of column `j`.
pub fn flux_rusanov_y<F: FluxFunction>(
    j: usize,
    fk: usize,
    s: &CellField,
    v: &FaceVertexVelocity,
    speeds: &LocalSpeeds,
    model: &F,
    periodicity: Periodicity,
) -> f64 {
    let g = s.grid();
    let (Some(b), Some(t)) = face_neighbors(fk, g.ny(), periodicity.y) else {
        return f64::NAN;
    };
    let (sb, st) = (s.get(j, b), s.get(j, t));
    let (fb, ft) = (model.flux(sb), model.flux(st));
    let (v_left, v_right) = v.y(j, fk);
    0.25 * (v_right * (ft + fb) + v_left * (ft + fb)) - 0.5 * speeds.dy_at(j, fk) * (st - sb)
}

/// One-dimensional Kurganov–Tadmor flux with the face-normal velocity `v`.
#[inline]
pub fn flux_kt<F: FluxFunction>(minus: f64, plus: f64, v: f64, model: &F) -> f64 {
    let a = v.abs() * model.wave_speed_bound(minus, plus);
    0.5 * v * (model.flux(plus) + model.flux(minus)) - 0.5 * a * (plus - minus)
}

pub fn flux_ktdxd_x<F: FluxFunction>(
    fj: usize,
    k: usize,
    iv: &InterfaceValues,
    vface: &FaceVelocityField,
    model: &F,
) -> f64 {
    let p = iv.x_face(fj, k);
    flux_kt(p.minus, p.plus, vface.vx(fj, k), model)
}

pub fn flux_ktdxd_y<F: FluxFunction>(
    j: usize,
    fk: usize,
    iv: &InterfaceValues,
    vface: &FaceVelocityField,
    model: &F,
) -> f64 {
    let p = iv.y_face(j, fk);
    flux_kt(p.minus, p.plus, vface.vy(j, fk), model)
}

fn boundary_inflow_exists(faces: &FaceVelocityField, p: Periodicity) -> bool {
    let g = faces.grid();
    let (nx, ny) = (g.nx(), g.ny());
    (!p.x && (0..ny).any(|k| faces.vx(0, k) > 0.0 || faces.vx(nx, k) < 0.0))
        || (!p.y && (0..nx).any(|j| faces.vy(j, 0) > 0.0 || faces.vy(j, ny) < 0.0))
}

/// Physical flux through a non-periodic boundary face with normal velocity
/// `v` (along +x or +y). `low_side` is true on the x = 0 / y = 0 edges.
#[inline]
pub fn boundary_flux<F: FluxFunction>(v: f64, interior: f64, injected: f64, low_side: bool, model: &F) -> f64 {
    let inflow = if low_side { v > 0.0 } else { v < 0.0 };
    if v == 0.0 {
        0.0
    } else if inflow {
        v * model.flux(injected)
    } else {
        v * model.flux(interior)
    }
}

/// Time derivative of the cell averages plus the water volume rate
/// (m²/day per unit depth) entering through the boundary and sources.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub rate: CellField,
    pub water_inflow: f64,
}

/// Water and total volume rates leaving through outflow faces and sinks.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Production {
    pub water: f64,
    pub total: f64,
}

impl Production {
    /// Water cut of the produced stream; zero when nothing is produced.
    pub fn water_fraction(&self) -> f64 {
        if self.total > 0.0 {
            self.water / self.total
        } else {
            0.0
        }
    }
}

/// The semi-discrete convection operator for a frozen velocity field.
#[derive(Clone, Debug)]
pub struct Transport<F> {
    model: F,
    kind: SchemeKind,
    theta: f64,
    boundary: Boundary,
    vertex: VertexVelocityField,
    faces: FaceVelocityField,
    pairs: FaceVertexVelocity,
    /// Divergence of the effective transport velocity, per cell (1/day).
    sources: Vec<f64>,
    /// Whether water at `injected_saturation` enters through sources or
    /// inflow boundary faces.
    injects: bool,
}

impl<F: FluxFunction> Transport<F> {
    pub fn new(
        model: F,
        kind: SchemeKind,
        theta: f64,
        boundary: Boundary,
        vertex: VertexVelocityField,
        faces: FaceVelocityField,
    ) -> Self {
        let pairs = FaceVertexVelocity::balanced(&vertex, &faces, boundary.periodicity);
        let eff = effective_face_velocity(kind, &boundary, &pairs, &faces);
        let sources = crate::pressure::discrete_divergence(&eff).into_values();
        let injects = sources.iter().any(|&q| q > 0.0) || boundary_inflow_exists(&faces, boundary.periodicity);
        Self {
            model,
            kind,
            theta,
            boundary,
            vertex,
            faces,
            pairs,
            sources,
            injects,
        }
    }

    /// `max|f'|` over the saturation range of `s`, widened to include the
    /// injected saturation when water is injected.
    pub fn wave_speed(&self, s: &CellField) -> f64 {
        let (mut lo, mut hi) = (s.min(), s.max());
        if self.injects {
            lo = lo.min(self.boundary.injected_saturation);
            hi = hi.max(self.boundary.injected_saturation);
        }
        self.model.wave_speed_bound(lo, hi)
    }

    pub fn model(&self) -> &F {
        &self.model
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid2D {
        self.faces.grid()
    }

    pub fn vertex_velocity(&self) -> &VertexVelocityField {
        &self.vertex
    }

    pub fn face_velocity(&self) -> &FaceVelocityField {
        &self.faces
    }

    /// Balanced vertex-velocity pairs used by the two-dimensional fluxes.
    pub fn vertex_pairs(&self) -> &FaceVertexVelocity {
        &self.pairs
    }

    /// Per-cell volumetric source rate seen by the scheme.
    pub fn sources(&self) -> &[f64] {
        &self.sources
    }

    /// Largest transport speeds `(max|v^x|, max|v^y|)` entering the CFL
    /// bound: balanced vertex pairs (and physical boundary faces) for the
    /// two-dimensional schemes, face velocities for KT.
    pub fn max_velocity(&self) -> (f64, f64) {
        if !self.kind.uses_vertex_velocity() {
            return self.faces.max_abs();
        }
        let g = self.grid();
        let (mut mx, mut my) = self.pairs.max_abs();
        if !self.boundary.periodicity.x {
            for k in 0..g.ny() {
                mx = mx.max(self.faces.vx(0, k).abs()).max(self.faces.vx(g.nx(), k).abs());
            }
        }
        if !self.boundary.periodicity.y {
            for j in 0..g.nx() {
                my = my.max(self.faces.vy(j, 0).abs()).max(self.faces.vy(j, g.ny()).abs());
            }
        }
        (mx, my)
    }

    pub fn slopes(&self, s: &CellField) -> SlopeField {
        match self.kind {
            SchemeKind::Sd1 => SlopeField::zeros(*s.grid(), self.boundary.periodicity),
            SchemeKind::Sd2 => {
                let mut sl = compute_slopes_with(s, self.theta, self.boundary.periodicity);
                bound_corner_values(s, &mut sl);
                sl
            }
            SchemeKind::KtDxd => compute_slopes_with(s, self.theta, self.boundary.periodicity),
        }
    }

    /// Numerical fluxes on every face: `(x-faces, y-faces)`.
    pub fn face_fluxes(&self, s: &CellField) -> (Vec<f64>, Vec<f64>) {
        self.face_fluxes_with_slopes(s, &self.slopes(s))
    }

    pub fn face_fluxes_with_slopes(&self, s: &CellField, slopes: &SlopeField) -> (Vec<f64>, Vec<f64>) {
        let g = *s.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let p = self.boundary.periodicity;
        let m = &self.model;
        let mut hx = vec![0.0; g.x_face_count()];
        let mut hy = vec![0.0; g.y_face_count()];

        let iv = interface_values(s, slopes);
        match self.kind {
            SchemeKind::Sd2 | SchemeKind::Sd1 => {
                let speeds = local_speeds(s, &self.pairs, m, p);
                if self.kind == SchemeKind::Sd2 {
                    // Each corner value feeds one x-face and one y-face.
                    let cf = corner_values(s, slopes).map(|c| m.flux(c));
                    for k in 0..ny {
                        for fj in interior_faces(nx, p.x) {
                            hx[g.x_face(fj, k)] = sd2_x(fj, k, &cf, &iv, &self.pairs, &speeds);
                        }
                    }
                    for fk in interior_faces(ny, p.y) {
                        for j in 0..nx {
                            hy[g.y_face(j, fk)] = sd2_y(j, fk, &cf, &iv, &self.pairs, &speeds);
                        }
                    }
                } else {
                    for k in 0..ny {
                        for fj in interior_faces(nx, p.x) {
                            hx[g.x_face(fj, k)] = flux_rusanov_x(fj, k, s, &self.pairs, &speeds, m, p);
                        }
                    }
                    for fk in interior_faces(ny, p.y) {
                        for j in 0..nx {
                            hy[g.y_face(j, fk)] = flux_rusanov_y(j, fk, s, &self.pairs, &speeds, m, p);
                        }
                    }
                }
            }
            SchemeKind::KtDxd => {
                for k in 0..ny {
                    for fj in interior_faces(nx, p.x) {
                        hx[g.x_face(fj, k)] = flux_ktdxd_x(fj, k, &iv, &self.faces, m);
                    }
                }
                for fk in interior_faces(ny, p.y) {
                    for j in 0..nx {
                        hy[g.y_face(j, fk)] = flux_ktdxd_y(j, fk, &iv, &self.faces, m);
                    }
                }
            }
        }

        let s_inj = self.boundary.injected_saturation;
        if p.x {
            for k in 0..ny {
                hx[g.x_face(nx, k)] = hx[g.x_face(0, k)];
            }
        } else {
            for k in 0..ny {
                hx[g.x_face(0, k)] = boundary_flux(self.faces.vx(0, k), s.get(0, k), s_inj, true, m);
                hx[g.x_face(nx, k)] = boundary_flux(self.faces.vx(nx, k), s.get(nx - 1, k), s_inj, false, m);
            }
        }
        if p.y {
            for j in 0..nx {
                hy[g.y_face(j, ny)] = hy[g.y_face(j, 0)];
            }
        } else {
            for j in 0..nx {
                hy[g.y_face(j, 0)] = boundary_flux(self.faces.vy(j, 0), s.get(j, 0), s_inj, true, m);
                hy[g.y_face(j, ny)] = boundary_flux(self.faces.vy(j, ny), s.get(j, ny - 1), s_inj, false, m);
            }
        }
        (hx, hy)
    }

    #[inline]
    fn source_term(&self, q: f64, s: f64) -> f64 {
        if q > 0.0 {
            q * self.model.flux(self.boundary.injected_saturation)
        } else if q < 0.0 {
            q * self.model.flux(s)
        } else {
            0.0
        }
    }

    /// `dS̄/dt = -(H^x_{j+1/2} - H^x_{j-1/2})/dx - (H^y_{k+1/2} - H^y_{k-1/2})/dy + sources`.
    pub fn rhs(&self, s: &CellField) -> Tendency {
        let (hx, hy) = self.face_fluxes(s);
        self.assemble(s, &hx, &hy)
    }

    fn assemble(&self, s: &CellField, hx: &[f64], hy: &[f64]) -> Tendency {
        let g = *s.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let (dx, dy) = (g.dx(), g.dy());
        let mut rate = CellField::zeros(g);
        let mut source_inflow = 0.0;
        for k in 0..ny {
            for j in 0..nx {
                let i = g.cell_index(j, k);
                let ddx = hx[g.x_face(j + 1, k)] - hx[g.x_face(j, k)];
                let ddy = hy[g.y_face(j, k + 1)] - hy[g.y_face(j, k)];
                let src = self.source_term(self.sources[i], s.values()[i]);
                source_inflow += src;
                rate.values_mut()[i] = src - (ddx / dx + ddy / dy);
            }
        }
        let mut boundary_inflow = 0.0;
        if !self.boundary.periodicity.x {
            for k in 0..ny {
                boundary_inflow += (hx[g.x_face(0, k)] - hx[g.x_face(nx, k)]) * dy;
            }
        }
        if !self.boundary.periodicity.y {
            for j in 0..nx {
                boundary_inflow += (hy[g.y_face(j, 0)] - hy[g.y_face(j, ny)]) * dx;
            }
        }
        Tendency {
            rate,
            water_inflow: boundary_inflow + source_inflow * g.cell_area(),
        }
    }

    /// Produced water and total volume rates for the state `s`.
    pub fn production(&self, s: &CellField) -> Production {
        let g = *s.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let m = &self.model;
        let mut out = Production::default();
        let mut add = |q: f64, sat: f64| {
            out.total += q;
            out.water += q * m.flux(sat);
        };
        for (i, &q) in self.sources.iter().enumerate() {
            if q < 0.0 {
                add(-q * g.cell_area(), s.values()[i]);
            }
        }
        if !self.boundary.periodicity.x {
            for k in 0..ny {
                let (w, e) = (self.faces.vx(0, k), self.faces.vx(nx, k));
                if w < 0.0 {
                    add(-w * g.dy(), s.get(0, k));
                }
                if e > 0.0 {
                    add(e * g.dy(), s.get(nx - 1, k));
                }
            }
        }
        if !self.boundary.periodicity.y {
            for j in 0..nx {
                let (so, no) = (self.faces.vy(j, 0), self.faces.vy(j, ny));
                if so < 0.0 {
                    add(-so * g.dx(), s.get(j, 0));
                }
                if no > 0.0 {
                    add(no * g.dx(), s.get(j, ny - 1));
                }
            }
        }
        out
    }
}

#[inline]
fn interior_faces(n: usize, periodic: bool) -> std::ops::Range<usize> {
    if periodic {
        0..n
    } else {
        1..n
    }
}

/// Effective face velocities the scheme transports with: pair means on flux
/// faces for the two-dimensional schemes, face velocities otherwise.
pub fn effective_face_velocity(
    kind: SchemeKind,
    boundary: &Boundary,
    pairs: &FaceVertexVelocity,
    faces: &FaceVelocityField,
) -> FaceVelocityField {
    let mut eff = faces.clone();
    if !kind.uses_vertex_velocity() {
        return eff;
    }
    let g = *faces.grid();
    let p = boundary.periodicity;
    let means = pairs.face_means();
    for k in 0..g.ny() {
        for fj in interior_faces(g.nx(), p.x) {
            eff.x[g.x_face(fj, k)] = means.x[g.x_face(fj, k)];
        }
        if p.x {
            eff.x[g.x_face(g.nx(), k)] = eff.x[g.x_face(0, k)];
        }
    }
    for fk in interior_faces(g.ny(), p.y) {
        for j in 0..g.nx() {
            eff.y[g.y_face(j, fk)] = means.y[g.y_face(j, fk)];
        }
    }
    if p.y {
        for j in 0..g.nx() {
            eff.y[g.y_face(j, g.ny())] = eff.y[g.y_face(j, 0)];
        }
    }
    eff
}

/// Semi-discrete right-hand side for one state and velocity field.
#[allow(clippy::too_many_arguments)]
pub fn rhs<F: FluxFunction + Clone>(
    s: &CellField,
    v: &VertexVelocityField,
    vface: &FaceVelocityField,
    model: &F,
    theta: f64,
    kind: SchemeKind,
    boundary: Boundary,
) -> Tendency {
    Transport::new(model.clone(), kind, theta, boundary, v.clone(), vface.clone()).rhs(s)
}
