//! Stationary states, linear stability thresholds and delayed radial
//! dynamics for a free-boundary tumor model with angiogenesis.
//!
//! The nutrient obeys a modified Helmholtz equation with a Robin (vascular
//! supply) condition, the pressure a Poisson equation whose source is the
//! nutrient surplus evaluated a delay `tau` in the past along cell
//! trajectories, and the boundary moves with the Darcy velocity.

pub mod besselkit;
pub mod error;
pub mod io;
pub mod modes;
pub mod params;
pub mod quad;
pub mod radialsim;
pub mod roots;
pub mod stationary;
pub mod tau1;
pub mod verify;

pub use error::{Error, Result};
pub use params::ModelParams;
pub use quad::RadialProfile;
