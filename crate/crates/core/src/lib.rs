//! Finite-difference solvers for two-dimensional semilinear
//! advection-diffusion-reaction systems
//!
//! ```text
//! u_t = a u_xx + b u_yy - c u_x - d u_y + R(u) + xi   on (0, X) x (0, Y)
//! ```
//!
//! with Dirichlet data, discretized by a second-order central scheme or a
//! fourth-order compact scheme, advanced in time by the theta-method with
//! inexact Newton-Krylov solves, and optionally improved by Richardson
//! extrapolation.

pub mod airchem;
pub mod analysis;
pub mod cds;
pub mod cfds;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod model;
pub mod richardson;
pub mod stencil;
pub mod stepper;

pub use cfds::CompactVariant;
pub use error::{Error, Result};
pub use grid::{FieldVector, Grid2D, TimeGrid};
pub use model::{make_example1, make_example2, BoundaryMode, ProblemSpec};
pub use stepper::{integrate, SchemeKind, SolverConfig, SolverReport};
