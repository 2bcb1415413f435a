//! Immersed-boundary dynamics of closed elastic shells.
//!
//! The crate couples a Lagrangian membrane, represented either by a
//! global spherical-harmonic interpolant or by a triangulated surface,
//! to a periodic Stokes fluid solved spectrally on a uniform grid.
//! Membrane forces come from hyperelastic energy functionals
//! (neo-Hookean, surface tension, bending) evaluated as continuous
//! variational derivatives on the interpolant, or from per-triangle
//! constant-strain elasticity on the mesh.

pub mod error;
pub mod fluid;
pub mod geometry;
pub mod harmonics;
pub mod hull;
pub mod ldsm;
pub mod linalg;
pub mod material;
pub mod nnls;
pub mod points;
pub mod quadrature;
pub mod shapes;
pub mod shell;
pub mod sim;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::Vec3;
