//! Finite-element solvers for the variational phase-field model of brittle
//! fracture.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: structured P1 triangulations of rectangles.
//! - [`model`]: damage and dissipation functions, plane-stress elasticity and
//!   closed-form critical loads.
//! - [`fem`]: assembly of the energy, its gradients and Hessian blocks.
//! - [`linalg`]: compressed-row matrices, Krylov solvers, direct factorization
//!   and the block field-split preconditioner.
//! - [`vi`]: complementarity residuals and the reduced-space active-set method.
//! - [`solver`]: alternate minimization, its over-relaxed variant and the
//!   composition with the coupled active-set Newton method.
//! - [`cases`]: surfing, traction bar and thermal shock benchmarks.
//! - [`io`]: configuration files, run orchestration and output files.

pub mod cases;
pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod solver;
pub mod vi;

pub use error::{Error, Result};
