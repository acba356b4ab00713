//! Compiles and runs the code samples of the guide in `book/src` as
//! doc-tests, so the guide cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/running.md")]
pub mod running {}
#[doc = include_str!("../../../book/src/fluid-model.md")]
pub mod fluid_model {}
#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}
#[doc = include_str!("../../../book/src/reconstruction.md")]
pub mod reconstruction {}
#[doc = include_str!("../../../book/src/central-schemes.md")]
pub mod central_schemes {}
#[doc = include_str!("../../../book/src/pressure.md")]
pub mod pressure {}
#[doc = include_str!("../../../book/src/time-stepping.md")]
pub mod time_stepping {}
#[doc = include_str!("../../../book/src/permeability.md")]
pub mod permeability {}
#[doc = include_str!("../../../book/src/output.md")]
pub mod output {}
#[doc = include_str!("../../../book/src/convergence.md")]
pub mod convergence {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
