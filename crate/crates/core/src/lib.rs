//! Numerical study of a free-boundary Plateau problem in graph form: an
//! inner convex graph-area minimization nested in an outer search over
//! convex symmetric profiles, cross-checked against a parametric disc-type
//! Plateau solver, with threshold estimation and assembly of the relaxed
//! area of the vortex-map graph.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`];
//! `f64` aliases for the main types live at the crate root.

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod inner_solver;
pub mod linalg;
pub mod outer_optimizer;
pub mod parametric_plateau;
pub mod projection;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Profile64 = geometry::ConvexProfile<f64>;
pub type HalfProfile64 = geometry::HalfProfile<f64>;
pub type Mesh64 = discretization::FittedMesh<f64>;
pub type Grid64 = discretization::GridFunction<f64>;
pub type Breakdown64 = functional::FunctionalBreakdown<f64>;
pub type Report64 = outer_optimizer::SolveReport<f64>;

pub type Profile32 = geometry::ConvexProfile<f32>;
pub type Grid32 = discretization::GridFunction<f32>;
