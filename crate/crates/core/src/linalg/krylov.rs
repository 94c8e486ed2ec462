use crate::error::{Error, Result};

use super::{axpy, dot, norm2, LinearOperator, Preconditioner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            rtol: 1e-10,
            atol: 1e-14,
            max_iter: 1000,
        }
    }
}

impl KrylovOptions {
    /// Runs exactly `iterations` steps unless the residual vanishes first.
    pub fn fixed_budget(iterations: usize) -> Self {
        KrylovOptions {
            rtol: 0.0,
            atol: 0.0,
            max_iter: iterations,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearSolveReport {
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    /// Residual norm monitored by the method, starting with the initial one.
    pub residual_history: Vec<f64>,
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Convergence is declared when `‖b − Ax‖₂ ≤ max(rtol·‖b‖₂, atol)`, using
/// the recursively updated residual.
pub fn cg_solve(
    a: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn Preconditioner,
    opts: &KrylovOptions,
) -> Result<(Vec<f64>, LinearSolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::invalid(format!(
            "rhs has length {} but the operator has dimension {n}",
            b.len()
        )));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];

    let tol = (opts.rtol * norm2(b)).max(opts.atol);
    let mut rnorm = norm2(&r);
    let mut report = LinearSolveReport {
        residual_history: vec![rnorm],
        ..Default::default()
    };
    if rnorm <= tol || rnorm == 0.0 {
        report.converged = true;
        report.final_residual_norm = rnorm;
        return Ok((x, report));
    }

    precond.precondition(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=opts.max_iter {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Breakdown {
                iteration: it,
                reason: format!("non-positive curvature pᵀAp = {pq:.3e}"),
            });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        rnorm = norm2(&r);
        report.iterations = it;
        report.residual_history.push(rnorm);
        if rnorm <= tol || rnorm == 0.0 {
            report.converged = true;
            break;
        }
        precond.precondition(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        if !(rz_new > 0.0) {
            return Err(Error::Breakdown {
                iteration: it,
                reason: format!("preconditioner is not positive definite (rᵀz = {rz_new:.3e})"),
            });
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    report.final_residual_norm = rnorm;
    Ok((x, report))
}

/// Preconditioned MINRES (Paige and Saunders) from a zero initial guess.
///
/// The monitored quantity is the preconditioned residual norm
/// `‖b − Ax‖_{M⁻¹}`, which is nonincreasing. Convergence is declared when it
/// drops below `max(rtol·‖b‖_{M⁻¹}, atol)`. Hitting `max_iter` yields a
/// non-converged report rather than an error.
pub fn minres_solve(
    a: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn Preconditioner,
    opts: &KrylovOptions,
) -> Result<(Vec<f64>, LinearSolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::invalid(format!(
            "rhs has length {} but the operator has dimension {n}",
            b.len()
        )));
    }
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    precond.precondition(&r1, &mut y)?;
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < 0.0 {
        return Err(Error::Breakdown {
            iteration: 0,
            reason: "preconditioner is not positive definite".into(),
        });
    }
    let beta1 = beta1_sq.sqrt();
    let mut report = LinearSolveReport {
        residual_history: vec![beta1],
        ..Default::default()
    };
    let tol = (opts.rtol * beta1).max(opts.atol);
    if beta1 <= tol || beta1 == 0.0 {
        report.converged = true;
        report.final_residual_norm = beta1;
        return Ok((x, report));
    }

    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);

    for it in 1..=opts.max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.apply(&v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond.precondition(&r2, &mut y)?;
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(Error::Breakdown {
                iteration: it,
                reason: "preconditioner is not positive definite".into(),
            });
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }

        report.iterations = it;
        report.residual_history.push(phibar);
        if phibar <= tol {
            report.converged = true;
            break;
        }
        if beta == 0.0 {
            // Krylov space exhausted; x is the minimizer over it.
            report.converged = phibar <= tol;
            break;
        }
    }
    report.final_residual_norm = phibar;
    Ok((x, report))
}
