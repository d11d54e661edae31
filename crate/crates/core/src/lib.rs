//! Staggered discontinuous Galerkin (SDG) discretization of the stationary
//! incompressible Navier-Stokes equations on polygonal meshes.
//!
//! The discrete velocity is exactly divergence-free and the scheme is
//! pressure-robust. Polynomial order `k >= 1` is arbitrary.
//!
//! Layout:
//! - [`mesh`]: primal polygon meshes, interior points and the staggered sub-triangulation.
//! - [`quadrature`]: quadrature rules and orthonormal polynomial bases.
//! - [`spaces`]: global degrees of freedom, finite element fields and interpolation.
//! - [`forms`]: sparse assembly of the bilinear/trilinear forms and right-hand sides.
//! - [`solver`]: saddle-point solves and the Picard iteration.
//! - [`analysis`]: error norms, divergence diagnostics, rates and streamfunctions.
//! - [`cases`]: manufactured solutions and benchmark problems.
//! - [`io`]: CSV, VTK and config-file helpers used by the `sdg` binary.

pub mod analysis;
pub mod cases;
pub mod error;
pub mod forms;
pub mod io;
pub mod mesh;
pub mod par;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod spaces;

pub use error::{Error, Result};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];
