//! Simulation and recovery of deformed isotropic Gaussian random fields.

pub mod bessel;
pub mod conformal;
pub mod covariance;
pub mod deformation;
pub mod dilatation;
pub mod disk;
pub mod error;
pub mod flow;
pub mod grid;
pub mod increments;
pub mod likelihood;
pub mod linalg;
pub mod optimize;
pub mod poisson;
pub mod simulate;

pub use error::{Error, Result};
pub use grid::{ComplexGrid, Field, Grid, Lattice};
