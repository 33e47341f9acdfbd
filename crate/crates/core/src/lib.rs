//! Two-phase incompressible flow with a Boussinesq-Scriven surface fluid,
//! surface mass density and insoluble surfactant, using a parametric
//! interface on an adaptive bulk mesh.

pub mod assembly;
pub mod config;
pub mod error;
pub mod exact;
pub mod fem;
pub mod geom;
pub mod interface;
pub mod mesh;
pub mod output;
pub mod params;
pub mod runner;
pub mod solver;
pub mod surface;
pub mod timestep;

pub use error::{Error, Result};
