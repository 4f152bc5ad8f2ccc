//! Numerical laboratory for torsional rigidity of smooth planar convex bodies.
//!
//! Bodies are stored through their support functions; the torsion problem
//! `Laplace(U) = -2`, `U = 0` on the boundary is solved on an embedded
//! Cartesian grid, and the Brunn-Minkowski inequality for torsional rigidity,
//! its first and second variations and the resulting Poincare-type
//! inequality on the boundary are checked numerically. Closed-form ellipsoid
//! solutions extend the checks to three dimensions.

pub mod bodyfile;
pub mod cli;
pub mod config;
pub mod ellipsoid;
pub mod error;
pub mod field;
pub mod geometry;
pub mod poisson;
pub mod quadrature;
pub mod report;
pub mod torsion;
pub mod trig;
pub mod variation;
pub mod verify;

pub use error::{Error, Result};
pub use field::BoundaryField;
pub use geometry::{ConvexBody2D, TestFunction};
pub use trig::TrigSupport;
