//! Numerical lab for sublinear indefinite problems `-Δu = a(x) u^q`,
//! `0 < q < 1`, with Dirichlet or Neumann conditions on intervals and balls.

pub mod analysis;
pub mod continuation;
pub mod domain;
pub mod error;
pub mod linalg;
pub mod nonlinear;
pub mod oracles;
pub mod weights;

pub use domain::{build_grid, BoundaryCondition, Geometry, Grid, ScalarField};
pub use error::{Error, Result};
