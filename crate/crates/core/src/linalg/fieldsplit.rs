use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{
    cg_solve, direct_factorize, stationary_precond, CsrMatrix, KrylovOptions, LinearOperator,
    LuFactorization, Preconditioner, StationaryKind, StationaryPrecond,
};

/// Symmetric 2×2 block matrix `[[A, B], [Bᵀ, C]]`.
#[derive(Debug, Clone)]
pub struct BlockJacobian {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub c: CsrMatrix,
}

impl BlockJacobian {
    pub fn new(a: CsrMatrix, b: CsrMatrix, c: CsrMatrix) -> Result<Self> {
        let ok = a.nrows() == a.ncols()
            && c.nrows() == c.ncols()
            && b.nrows() == a.nrows()
            && b.ncols() == c.nrows();
        if !ok {
            return Err(Error::invalid(format!(
                "non-conforming blocks: A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(BlockJacobian { a, b, c })
    }

    pub fn split(&self) -> usize {
        self.a.nrows()
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let bt = self.b.transpose();
        let (n, m) = (self.a.nrows(), self.c.nrows());
        CsrMatrix::from_blocks((n, m, n, m), [[Some(&self.a), Some(&self.b)], [Some(&bt), Some(&self.c)]])
    }
}

impl LinearOperator for BlockJacobian {
    fn dim(&self) -> usize {
        self.a.nrows() + self.c.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.split();
        let (xu, xa) = x.split_at(n);
        let (yu, ya) = y.split_at_mut(n);
        self.a.mul_vec_into(xu, yu);
        let bxa = self.b.mul_vec(xa);
        for (yi, bi) in yu.iter_mut().zip(&bxa) {
            *yi += bi;
        }
        self.c.mul_vec_into(xa, ya);
        let btxu = self.b.mul_transpose_vec(xu);
        for (yi, bi) in ya.iter_mut().zip(&btxu) {
            *yi += bi;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InnerSolverKind {
    /// Sparse LU factorization.
    #[default]
    Direct,
    /// A fixed number of preconditioned CG steps.
    Cg {
        iterations: usize,
        precond: StationaryKind,
    },
}

#[derive(Debug, Clone)]
pub enum InnerSolver {
    Direct(LuFactorization),
    Cg {
        matrix: CsrMatrix,
        precond: StationaryPrecond,
        iterations: usize,
    },
}

impl InnerSolver {
    pub fn new(m: &CsrMatrix, kind: InnerSolverKind) -> Result<Self> {
        Ok(match kind {
            InnerSolverKind::Direct => InnerSolver::Direct(direct_factorize(m)?),
            InnerSolverKind::Cg { iterations, precond } => InnerSolver::Cg {
                matrix: m.clone(),
                precond: stationary_precond(m, precond)?,
                iterations,
            },
        })
    }

    /// Approximate `M⁻¹ r`; returns the vector and the Krylov steps spent.
    pub fn solve(&self, r: &[f64]) -> Result<(Vec<f64>, usize)> {
        match self {
            InnerSolver::Direct(lu) => Ok((lu.solve(r), 0)),
            InnerSolver::Cg {
                matrix,
                precond,
                iterations,
            } => {
                let (x, rep) = cg_solve(matrix, r, precond, &KrylovOptions::fixed_budget(*iterations))?;
                Ok((x, rep.iterations))
            }
        }
    }
}

/// Block preconditioner built from `A⁻¹` and the Schur approximation `S ≈ C`.
#[derive(Debug, Clone)]
pub struct FieldSplit {
    b: CsrMatrix,
    a_solver: InnerSolver,
    c_solver: InnerSolver,
}

impl FieldSplit {
    pub fn new(jac: &BlockJacobian, a_kind: InnerSolverKind, c_kind: InnerSolverKind) -> Result<Self> {
        let wrap = |block: &'static str| {
            move |e: Error| Error::InnerSolve {
                block,
                source: Box::new(e),
            }
        };
        Ok(FieldSplit {
            b: jac.b.clone(),
            a_solver: InnerSolver::new(&jac.a, a_kind).map_err(wrap("A"))?,
            c_solver: InnerSolver::new(&jac.c, c_kind).map_err(wrap("C"))?,
        })
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let n = self.b.nrows();
        let (ru, ra) = r.split_at(n);
        let inner = |s: &InnerSolver, block: &'static str, v: &[f64]| {
            s.solve(v).map(|(x, _)| x).map_err(|e| Error::InnerSolve {
                block,
                source: Box::new(e),
            })
        };
        let y1 = inner(&self.a_solver, "A", ru)?;
        let bty1 = self.b.mul_transpose_vec(&y1);
        let rhs: Vec<f64> = ra.iter().zip(&bty1).map(|(a, b)| a - b).collect();
        let z = inner(&self.c_solver, "C", &rhs)?;
        let bz = self.b.mul_vec(&z);
        let corr = inner(&self.a_solver, "A", &bz)?;
        let mut out: Vec<f64> = y1.iter().zip(&corr).map(|(y, c)| y - c).collect();
        out.extend_from_slice(&z);
        Ok(out)
    }
}

impl Preconditioner for FieldSplit {
    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(&self.apply(r)?);
        Ok(())
    }
}

/// `P⁻¹ r` for the block-triangular factorization with `S ≈ C`.
pub fn fieldsplit_apply(p: &FieldSplit, r: &[f64]) -> Result<Vec<f64>> {
    p.apply(r)
}
