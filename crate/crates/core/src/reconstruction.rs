//! Piecewise-linear MUSCL reconstruction with the three-argument θ-minmod
//! limiter.
//!
//! Inside cell `(j, k)` the reconstruction is
//! `S̄ + sx·(x - x_j) + sy·(y - y_k)`, centered on the cell center, so its
//! cell mean is `S̄` whatever the slopes are.

use crate::grid::{CellField, Grid2D};

/// Which directions wrap around.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Periodicity {
    pub x: bool,
    pub y: bool,
}

impl Periodicity {
    pub const NONE: Periodicity = Periodicity { x: false, y: false };
    pub const X: Periodicity = Periodicity { x: true, y: false };
    pub const BOTH: Periodicity = Periodicity { x: true, y: true };
}

/// Least-magnitude argument when all three share a sign, zero otherwise.
#[inline]
pub fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

#[inline]
fn limited_slope(left: f64, center: f64, right: f64, h: f64, theta: f64) -> f64 {
    let dm = center - left;
    let dp = right - center;
    minmod3(theta * dp / h, (dm + dp) / (2.0 * h), theta * dm / h)
}

/// Limited slopes per cell (saturation per meter).
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeField {
    grid: Grid2D,
    periodicity: Periodicity,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
}

impl SlopeField {
    /// All-zero slopes: the piecewise-constant reconstruction.
    pub fn zeros(grid: Grid2D, periodicity: Periodicity) -> Self {
        Self {
            grid,
            periodicity,
            sx: vec![0.0; grid.cell_count()],
            sy: vec![0.0; grid.cell_count()],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn periodicity(&self) -> Periodicity {
        self.periodicity
    }

    #[inline]
    pub fn at(&self, j: usize, k: usize) -> (f64, f64) {
        let i = self.grid.cell_index(j, k);
        (self.sx[i], self.sy[i])
    }
}

/// θ-minmod slopes with a non-periodic domain; boundary cells get zero slope
/// in the direction that lacks a full three-cell stencil.
pub fn compute_slopes(s: &CellField, theta: f64) -> SlopeField {
    compute_slopes_with(s, theta, Periodicity::NONE)
}

pub fn compute_slopes_with(s: &CellField, theta: f64, periodicity: Periodicity) -> SlopeField {
    let g = *s.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = SlopeField::zeros(g, periodicity);
    let v = s.values();
    for k in 0..ny {
        for j in 0..nx {
            let i = g.cell_index(j, k);
            let west = if j > 0 {
                Some(j - 1)
            } else if periodicity.x {
                Some(nx - 1)
            } else {
                None
            };
            let east = if j + 1 < nx {
                Some(j + 1)
            } else if periodicity.x {
                Some(0)
            } else {
                None
            };
            if let (Some(w), Some(e)) = (west, east) {
                out.sx[i] = limited_slope(v[g.cell_index(w, k)], v[i], v[g.cell_index(e, k)], g.dx(), theta);
            }

            let south = if k > 0 {
                Some(k - 1)
            } else if periodicity.y {
                Some(ny - 1)
            } else {
                None
            };
            let north = if k + 1 < ny {
                Some(k + 1)
            } else if periodicity.y {
                Some(0)
            } else {
                None
            };
            if let (Some(so), Some(no)) = (south, north) {
                out.sy[i] = limited_slope(v[g.cell_index(j, so)], v[i], v[g.cell_index(j, no)], g.dy(), theta);
            }
        }
    }
    out
}

/// Scales both slopes of each cell by one factor in `[0, 1]` so that every
/// corner value stays within the range of the cell averages sharing that
/// vertex.
///
/// The θ-minmod limiter bounds each direction separately; with `θ > 1` the
/// two contributions can add up at a corner and leave that range. Linear data
/// and data varying in one direction only are left untouched.
pub fn bound_corner_values(s: &CellField, sl: &mut SlopeField) {
    let g = *s.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let p = sl.periodicity();
    let (hx, hy) = (0.5 * g.dx(), 0.5 * g.dy());
    // Cells on either side of vertex line `v` (column or row), if any.
    let sides = |v: usize, n: usize, periodic: bool| -> [Option<usize>; 2] {
        let before = if v > 0 { Some(v - 1) } else { periodic.then(|| n - 1) };
        let after = if v < n { Some(v) } else { periodic.then_some(0) };
        [before, after]
    };
    // Range of the cell averages around each vertex.
    let vw = nx + 1;
    let mut vlo = vec![f64::INFINITY; vw * (ny + 1)];
    let mut vhi = vec![f64::NEG_INFINITY; vw * (ny + 1)];
    for vk in 0..=ny {
        let rows = sides(vk, ny, p.y);
        for vj in 0..=nx {
            let cols = sides(vj, nx, p.x);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for ck in rows.into_iter().flatten() {
                for cj in cols.into_iter().flatten() {
                    let v = s.get(cj, ck);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            vlo[vk * vw + vj] = lo;
            vhi[vk * vw + vj] = hi;
        }
    }
    for k in 0..ny {
        for j in 0..nx {
            let i = g.cell_index(j, k);
            let (sx, sy) = (sl.sx[i], sl.sy[i]);
            if sx == 0.0 && sy == 0.0 {
                continue;
            }
            let center = s.values()[i];
            let mut alpha: f64 = 1.0;
            for (dj, dk) in [(-1, -1), (1, -1), (-1, 1), (1, 1)] {
                let d = sx * (f64::from(dj) * hx) + sy * (f64::from(dk) * hy);
                let vi = (k + usize::from(dk > 0)) * vw + j + usize::from(dj > 0);
                let (lo, hi) = (vlo[vi], vhi[vi]);
                if d > hi - center {
                    alpha = alpha.min((hi - center) / d);
                } else if d < lo - center {
                    alpha = alpha.min((lo - center) / d);
                }
            }
            if alpha < 1.0 {
                sl.sx[i] = alpha * sx;
                sl.sy[i] = alpha * sy;
            }
        }
    }
}

/// Value of the reconstruction in cell `(j, k)` at offset `(ox, oy)` from
/// the cell center.
#[inline]
pub fn reconstruct(s: &CellField, sl: &SlopeField, j: usize, k: usize, ox: f64, oy: f64) -> f64 {
    let (sx, sy) = sl.at(j, k);
    // Grouping the two slope terms keeps x/y-transposed inputs bitwise
    // transposed.
    s.get(j, k) + (sx * ox + sy * oy)
}

/// One-sided reconstructed values at a face: `minus` from the cell on the
/// low side, `plus` from the cell on the high side. Missing sides on a
/// non-periodic boundary hold NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FacePair {
    pub minus: f64,
    pub plus: f64,
}

#[derive(Clone, Debug)]
pub struct InterfaceValues {
    grid: Grid2D,
    /// Indexed by [`Grid2D::x_face`].
    pub x: Vec<FacePair>,
    /// Indexed by [`Grid2D::y_face`].
    pub y: Vec<FacePair>,
}

impl InterfaceValues {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn x_face(&self, j: usize, k: usize) -> FacePair {
        self.x[self.grid.x_face(j, k)]
    }

    #[inline]
    pub fn y_face(&self, j: usize, k: usize) -> FacePair {
        self.y[self.grid.y_face(j, k)]
    }
}

/// Neighbor cell indices across face `f` (0..=n) along one direction.
#[inline]
pub(crate) fn face_neighbors(f: usize, n: usize, periodic: bool) -> (Option<usize>, Option<usize>) {
    let low = if f > 0 {
        Some(f - 1)
    } else if periodic {
        Some(n - 1)
    } else {
        None
    };
    let high = if f < n {
        Some(f)
    } else if periodic {
        Some(0)
    } else {
        None
    };
    (low, high)
}

pub fn interface_values(s: &CellField, sl: &SlopeField) -> InterfaceValues {
    let g = *s.grid();
    let p = sl.periodicity();
    let (hx, hy) = (0.5 * g.dx(), 0.5 * g.dy());
    let mut x = vec![FacePair { minus: f64::NAN, plus: f64::NAN }; g.x_face_count()];
    for k in 0..g.ny() {
        for fj in 0..=g.nx() {
            let (lo, hi) = face_neighbors(fj, g.nx(), p.x);
            let pair = &mut x[g.x_face(fj, k)];
            if let Some(l) = lo {
                pair.minus = reconstruct(s, sl, l, k, hx, 0.0);
            }
            if let Some(r) = hi {
                pair.plus = reconstruct(s, sl, r, k, -hx, 0.0);
            }
        }
    }
    let mut y = vec![FacePair { minus: f64::NAN, plus: f64::NAN }; g.y_face_count()];
    for fk in 0..=g.ny() {
        let (lo, hi) = face_neighbors(fk, g.ny(), p.y);
        for j in 0..g.nx() {
            let pair = &mut y[g.y_face(j, fk)];
            if let Some(b) = lo {
                pair.minus = reconstruct(s, sl, j, b, 0.0, hy);
            }
            if let Some(t) = hi {
                pair.plus = reconstruct(s, sl, j, t, 0.0, -hy);
            }
        }
    }
    InterfaceValues { grid: g, x, y }
}

/// The four reconstructions meeting at a vertex. The first sign is the x
/// side and the second the y side of the contributing cell: `mm` comes
/// from the lower-left cell, `pm` lower-right, `mp` upper-left, `pp`
/// upper-right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corners {
    pub mm: f64,
    pub pm: f64,
    pub mp: f64,
    pub pp: f64,
}

#[derive(Clone, Debug)]
pub struct CornerValues {
    grid: Grid2D,
    /// Indexed by [`Grid2D::vertex`]; cells outside a non-periodic domain
    /// contribute NaN.
    pub values: Vec<Corners>,
}

impl CornerValues {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn at(&self, j: usize, k: usize) -> Corners {
        self.values[self.grid.vertex(j, k)]
    }

    /// Applies `f` to every corner value (NaN placeholders stay NaN for any
    /// `f` that propagates NaN).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CornerValues {
        let values = self
            .values
            .iter()
            .map(|c| Corners {
                mm: if c.mm.is_nan() { c.mm } else { f(c.mm) },
                pm: if c.pm.is_nan() { c.pm } else { f(c.pm) },
                mp: if c.mp.is_nan() { c.mp } else { f(c.mp) },
                pp: if c.pp.is_nan() { c.pp } else { f(c.pp) },
            })
            .collect();
        CornerValues { grid: self.grid, values }
    }
}

pub fn corner_values(s: &CellField, sl: &SlopeField) -> CornerValues {
    let g = *s.grid();
    let p = sl.periodicity();
    let (hx, hy) = (0.5 * g.dx(), 0.5 * g.dy());
    let mut values = vec![
        Corners {
            mm: f64::NAN,
            pm: f64::NAN,
            mp: f64::NAN,
            pp: f64::NAN,
        };
        g.vertex_count()
    ];
    for vk in 0..=g.ny() {
        let (below, above) = face_neighbors(vk, g.ny(), p.y);
        for vj in 0..=g.nx() {
            let (left, right) = face_neighbors(vj, g.nx(), p.x);
            let c = &mut values[g.vertex(vj, vk)];
            if let (Some(l), Some(b)) = (left, below) {
                c.mm = reconstruct(s, sl, l, b, hx, hy);
            }
            if let (Some(r), Some(b)) = (right, below) {
                c.pm = reconstruct(s, sl, r, b, -hx, hy);
            }
            if let (Some(l), Some(a)) = (left, above) {
                c.mp = reconstruct(s, sl, l, a, hx, -hy);
            }
            if let (Some(r), Some(a)) = (right, above) {
                c.pp = reconstruct(s, sl, r, a, -hx, -hy);
            }
        }
    }
    CornerValues { grid: g, values }
}
