//! Rays, laminations, Yoccoz puzzles, renormalization, straightening and tuning
//! for polynomials in normal form.

pub mod admissible;
pub mod angle;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod internal;
pub mod lamination;
pub mod poly;
pub mod potential;
pub mod puzzle;
pub mod render;
pub mod renorm;
pub mod tuning;

pub use angle::{Angle, AngleOrbit, RayPair};
pub use error::{Error, Result};
pub use poly::{Cycle, CycleClass, Polynomial};
