//! Sparse linear algebra used by the nonlinear solvers.

mod csr;
mod direct;
mod fieldsplit;
mod krylov;
pub mod mm;
mod precond;

pub use csr::{CsrMatrix, TripletBuilder};
pub use direct::{direct_factorize, direct_solve, reverse_cuthill_mckee, LuFactorization};
pub use fieldsplit::{fieldsplit_apply, BlockJacobian, FieldSplit, InnerSolver, InnerSolverKind};
pub use krylov::{cg_solve, minres_solve, KrylovOptions, LinearSolveReport};
pub use precond::{stationary_precond, StationaryKind, StationaryPrecond};

use crate::error::Result;

/// A square linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Approximate inverse `z = M⁻¹ r`.
pub trait Preconditioner {
    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

impl Preconditioner for LuFactorization {
    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        self.solve_into(r, z);
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
