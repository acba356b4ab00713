use crate::driver::config::{ScenarioKind, SimulationConfig};
use crate::driver::snapshot::read_snapshot;
use crate::error::{Error, Result};
use crate::geostats;
use crate::grid::{CellField, FaceVelocityField, Grid2D};
use crate::pressure::{Well, WellSet};
use crate::scheme::Boundary;

/// Geometry, rock, initial state and driving terms of one run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: Grid2D,
    pub permeability: CellField,
    pub initial: CellField,
    /// Prescribed normal velocities on boundary faces (zero means no flow).
    pub boundary_velocity: FaceVelocityField,
    pub wells: WellSet,
    pub boundary: Boundary,
}

impl Scenario {
    /// Injected volume rate (m²/day per unit depth).
    pub fn injection_rate(&self) -> f64 {
        let g = &self.grid;
        let wells: f64 = self.wells.wells().iter().filter(|w| w.rate > 0.0).map(|w| w.rate).sum();
        let mut edges = 0.0;
        for k in 0..g.ny() {
            edges += self.boundary_velocity.vx(0, k).max(0.0) * g.dy();
            edges += (-self.boundary_velocity.vx(g.nx(), k)).max(0.0) * g.dy();
        }
        for j in 0..g.nx() {
            edges += self.boundary_velocity.vy(j, 0).max(0.0) * g.dx();
            edges += (-self.boundary_velocity.vy(j, g.ny())).max(0.0) * g.dx();
        }
        wells + edges
    }
}

/// Injection rate in m²/day for `pv_per_year` pore volumes per year over a
/// domain of `area` (porosity scaled out).
pub fn volume_rate(pv_per_year: f64, area: f64) -> f64 {
    pv_per_year * area / 365.0
}

pub fn build_scenario(cfg: &SimulationConfig) -> Result<Scenario> {
    cfg.validate()?;
    let (nx, ny) = cfg.cells();
    let (lx, ly) = cfg.extent();
    let grid = Grid2D::from_extent(nx, ny, lx, ly)?;

    let permeability = match &cfg.permeability_file {
        Some(path) => {
            let (k, _) = read_snapshot(path)?;
            if k.grid().nx() != nx || k.grid().ny() != ny {
                return Err(Error::Config(format!(
                    "permeability file {} is {}x{}, grid is {nx}x{ny}",
                    path.display(),
                    k.grid().nx(),
                    k.grid().ny()
                )));
            }
            if let Some(bad) = k.values().iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("permeability file {} has non-positive value {bad}", path.display())));
            }
            CellField::from_values(grid, k.into_values())?
        }
        None => geostats::generate_on(&cfg.field_spec(), grid)?,
    };

    let q = volume_rate(cfg.injection_rate, grid.area());
    let mut boundary_velocity = FaceVelocityField::zeros(grid);
    let wells = match cfg.scenario {
        ScenarioKind::Slab => {
            let v = q / ly;
            for k in 0..ny {
                boundary_velocity.x[grid.x_face(0, k)] = v;
                boundary_velocity.x[grid.x_face(nx, k)] = v;
            }
            WellSet::empty()
        }
        ScenarioKind::FiveSpotDiagonal => WellSet::new(vec![
            Well { cell: (0, 0), rate: q },
            Well { cell: (nx - 1, ny - 1), rate: -q },
        ])?,
        ScenarioKind::FiveSpotParallel => {
            let h = 0.5 * q;
            WellSet::new(vec![
                Well { cell: (0, 0), rate: h },
                Well { cell: (nx - 1, ny - 1), rate: h },
                Well { cell: (nx - 1, 0), rate: -h },
                Well { cell: (0, ny - 1), rate: -h },
            ])?
        }
    };

    Ok(Scenario {
        grid,
        permeability,
        initial: CellField::constant(grid, cfg.initial_saturation),
        boundary_velocity,
        wells,
        boundary: Boundary::closed(cfg.injected_saturation),
    })
}
