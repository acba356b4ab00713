//! Plain-text field snapshots.
//!
//! CSV layout: a first line `nx,ny,dx,dy,t` holding those values, then `ny`
//! lines of `nx` values with row `k = 0` first. Numbers use Rust's shortest
//! round-trip formatting, so a write/read cycle is bitwise exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid2D};

pub fn snapshot_csv(s: &CellField, t: f64) -> String {
    let g = s.grid();
    let mut out = String::new();
    let _ = writeln!(out, "{},{},{},{},{}", g.nx(), g.ny(), g.dx(), g.dy(), t);
    for row in s.values().chunks_exact(g.nx()) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_snapshot(s: &CellField, t: f64, path: &Path) -> Result<()> {
    std::fs::write(path, snapshot_csv(s, t)).map_err(|e| Error::io(path, e))
}

pub fn parse_snapshot(text: &str, path: &Path) -> Result<(CellField, f64)> {
    let bad = |message: String| Error::Snapshot {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let parts: Vec<&str> = header.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(bad(format!("header has {} fields, expected nx,ny,dx,dy,t", parts.len())));
    }
    let nx: usize = parts[0].parse().map_err(|_| bad(format!("bad nx `{}`", parts[0])))?;
    let ny: usize = parts[1].parse().map_err(|_| bad(format!("bad ny `{}`", parts[1])))?;
    let num = |i: usize| -> Result<f64> { parts[i].parse().map_err(|_| bad(format!("bad number `{}`", parts[i]))) };
    let (dx, dy, t) = (num(2)?, num(3)?, num(4)?);
    let grid = Grid2D::new(nx, ny, dx, dy).map_err(|e| bad(e.to_string()))?;

    let mut values = Vec::with_capacity(nx * ny);
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if k >= ny {
            return Err(bad(format!("more than {ny} data rows")));
        }
        let before = values.len();
        for item in line.split(',') {
            let v: f64 = item
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {k}: bad value `{item}`")))?;
            values.push(v);
        }
        if values.len() - before != nx {
            return Err(bad(format!("row {k} has {} values, expected {nx}", values.len() - before)));
        }
    }
    if values.len() != nx * ny {
        return Err(bad(format!("found {} rows, expected {ny}", values.len() / nx.max(1))));
    }
    Ok((CellField::from_values(grid, values)?, t))
}

pub fn read_snapshot(path: &Path) -> Result<(CellField, f64)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text, path)
}

/// Legacy ASCII VTK structured-points file with one cell scalar.
pub fn snapshot_vtk(s: &CellField, t: f64, name: &str) -> String {
    let g = s.grid();
    let (x0, y0) = g.origin();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{name} t={t}");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {} {} 1", g.nx() + 1, g.ny() + 1);
    let _ = writeln!(out, "ORIGIN {x0} {y0} 0");
    let _ = writeln!(out, "SPACING {} {} 1", g.dx(), g.dy());
    let _ = writeln!(out, "CELL_DATA {}", g.cell_count());
    let _ = writeln!(out, "SCALARS {name} double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for v in s.values() {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn write_vtk(s: &CellField, t: f64, name: &str, path: &Path) -> Result<()> {
    std::fs::write(path, snapshot_vtk(s, t, name)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_layout() {
        let g = Grid2D::new(2, 2, 1.0, 1.0).unwrap();
        let s = CellField::from_values(g, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(snapshot_csv(&s, 0.0), "2,2,1,1,0\n0,1\n2,3\n");
    }

    #[test]
    fn malformed_input_is_reported() {
        let p = Path::new("x.csv");
        for text in ["", "2,2,1,1\n0,1\n2,3\n", "2,2,1,1,0\n0,1\n2\n", "2,2,1,1,0\n0,1\n", "2,2,1,1,0\n0,a\n2,3\n"] {
            assert!(matches!(parse_snapshot(text, p), Err(Error::Snapshot { .. })), "{text:?}");
        }
    }

    #[test]
    fn vtk_header() {
        let g = Grid2D::new(3, 2, 0.5, 2.0).unwrap();
        let text = snapshot_vtk(&CellField::constant(g, 0.25), 1.5, "saturation");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[4], "DIMENSIONS 4 3 1");
        assert_eq!(lines[6], "SPACING 0.5 2 1");
        assert_eq!(lines[7], "CELL_DATA 6");
        assert_eq!(lines.len(), 10 + 6);
    }

    #[test]
    fn missing_file_has_path_context() {
        let err = read_snapshot(Path::new("/nonexistent/dir/s.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/s.csv"));
    }

    proptest! {
        #[test]
        fn round_trip_is_bitwise(
            values in proptest::collection::vec(prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1.0f64..1.0], 12),
            t in 0.0f64..1e4,
        ) {
            let g = Grid2D::new(4, 3, 0.3, 1.7).unwrap();
            let s = CellField::from_values(g, values).unwrap();
            let (back, tb) = parse_snapshot(&snapshot_csv(&s, t), Path::new("mem")).unwrap();
            prop_assert_eq!(tb.to_bits(), t.to_bits());
            prop_assert_eq!(back.grid(), s.grid());
            for (a, b) in back.values().iter().zip(s.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
