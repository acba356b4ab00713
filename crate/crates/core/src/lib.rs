//! Central-upwind finite-volume transport for incompressible two-phase flow
//! in porous media, coupled to a two-point pressure solver.

pub mod convergence;
pub mod driver;
pub mod error;
pub mod flow;
pub mod geostats;
pub mod grid;
pub mod integrator;
pub mod pressure;
pub mod reconstruction;
pub mod scheme;

pub use error::{Error, Result};
pub use flow::{FluxFunction, LinearFlux, RockFluidModel};
pub use grid::{CellField, FaceVelocityField, Grid2D, VertexVelocityField};
pub use reconstruction::Periodicity;
pub use scheme::{Boundary, SchemeKind, Transport};
