//! Mixed complementarity problems and the reduced-space active-set method.
//!
//! A point `x` with `l ≤ x ≤ u` solves the MCP for `F` when every component
//! satisfies one of `x = l, F ≥ 0`, `l < x < u, F = 0` or `x = u, F ≤ 0`.
//! Solutions are characterized as zeros of a Fischer-Burmeister residual.

use crate::error::{Error, Result};
use crate::linalg::{
    cg_solve, direct_factorize, stationary_precond, CsrMatrix, KrylovOptions, StationaryKind,
};
use crate::mesh::IndexSet;

/// `φ(a, b) = √(a² + b²) − a − b`; zero exactly when `a ≥ 0`, `b ≥ 0` and
/// `ab = 0`.
#[inline]
pub fn fb_phi(a: f64, b: f64) -> f64 {
    a.hypot(b) - a - b
}

/// Partial derivatives of [`fb_phi`], using the generalized gradient at the
/// origin.
#[inline]
pub fn fb_grad(a: f64, b: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        let s = std::f64::consts::FRAC_1_SQRT_2 - 1.0;
        (s, s)
    } else {
        (a / r - 1.0, b / r - 1.0)
    }
}

/// Residual callback, Jacobian callback and componentwise bounds.
pub trait MCProblem {
    fn dim(&self) -> usize;
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, x: &[f64]) -> Result<CsrMatrix>;
}

/// `F(x) = M x + q` with box bounds.
#[derive(Debug, Clone)]
pub struct AffineMcp {
    pub matrix: CsrMatrix,
    pub q: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AffineMcp {
    pub fn new(matrix: CsrMatrix, q: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || q.len() != n || lower.len() != n || upper.len() != n {
            return Err(Error::invalid("affine MCP with inconsistent dimensions"));
        }
        check_bounds(&lower, &upper)?;
        Ok(AffineMcp {
            matrix,
            q,
            lower,
            upper,
        })
    }
}

impl MCProblem for AffineMcp {
    fn dim(&self) -> usize {
        self.q.len()
    }
    fn lower(&self) -> &[f64] {
        &self.lower
    }
    fn upper(&self) -> &[f64] {
        &self.upper
    }
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut f = self.matrix.mul_vec(x);
        for (fi, qi) in f.iter_mut().zip(&self.q) {
            *fi += qi;
        }
        Ok(f)
    }
    fn jacobian(&self, _x: &[f64]) -> Result<CsrMatrix> {
        Ok(self.matrix.clone())
    }
}

pub(crate) fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<()> {
    if let Some(i) = lower.iter().zip(upper).position(|(l, u)| !(l <= u)) {
        return Err(Error::invalid(format!(
            "lower bound {} exceeds upper bound {} at index {i}",
            lower[i], upper[i]
        )));
    }
    Ok(())
}

/// Componentwise complementarity residual: `F` on unbounded components,
/// `φ(x−l, F)` with only a lower bound, `−φ(u−x, −F)` with only an upper
/// bound and `φ(x−l, φ(u−x, −F))` with both.
pub fn mcp_residual(x: &[f64], f: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = (0..x.len()).find(|&i| !(x[i] >= lower[i] && x[i] <= upper[i])) {
        return Err(Error::invalid(format!(
            "x[{i}] = {} outside [{}, {}]",
            x[i], lower[i], upper[i]
        )));
    }
    Ok((0..x.len())
        .map(|i| component(x[i], f[i], lower[i], upper[i]).0)
        .collect())
}

/// Value and partial derivatives `(Φ, ∂Φ/∂x, ∂Φ/∂F)` of one component.
#[inline]
fn component(x: f64, f: f64, l: f64, u: f64) -> (f64, f64, f64) {
    match (l.is_finite(), u.is_finite()) {
        (false, false) => (f, 0.0, 1.0),
        (true, false) => {
            let (pa, pb) = fb_grad(x - l, f);
            (fb_phi(x - l, f), pa, pb)
        }
        (false, true) => {
            let (pa, pb) = fb_grad(u - x, -f);
            (-fb_phi(u - x, -f), pa, pb)
        }
        (true, true) => {
            let g = fb_phi(u - x, -f);
            let (ga, gb) = fb_grad(u - x, -f);
            let (pa, pb) = fb_grad(x - l, g);
            (fb_phi(x - l, g), pa - pb * ga, -pb * gb)
        }
    }
}

/// Active and inactive index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivePartition {
    pub active: IndexSet,
    pub inactive: IndexSet,
}

/// A component is active when it sits within `zeta` of a bound and the
/// residual pushes it further out.
pub fn classify_active(x: &[f64], f: &[f64], lower: &[f64], upper: &[f64], zeta: f64) -> ActivePartition {
    let (mut active, mut inactive) = (Vec::new(), Vec::new());
    for i in 0..x.len() {
        let at_lower = x[i] <= lower[i] + zeta && f[i] > 0.0;
        let at_upper = x[i] >= upper[i] - zeta && f[i] < 0.0;
        if at_lower || at_upper {
            active.push(i);
        } else {
            inactive.push(i);
        }
    }
    ActivePartition {
        active: IndexSet::from_sorted(active).expect("increasing"),
        inactive: IndexSet::from_sorted(inactive).expect("increasing"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VIConfig {
    /// `ζ`; `None` selects `1e-10 (1 + ‖x₀‖∞)`.
    pub zero_tol: Option<f64>,
    pub abs_tol: f64,
    pub max_iterations: usize,
    pub backtrack: f64,
    pub min_step: f64,
    pub armijo: f64,
}

impl Default for VIConfig {
    fn default() -> Self {
        VIConfig {
            zero_tol: None,
            abs_tol: 1e-9,
            max_iterations: 50,
            backtrack: 0.5,
            min_step: 1e-10,
            armijo: 1e-4,
        }
    }
}

impl VIConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.zero_tol.is_none_or(|z| z > 0.0)
            && self.abs_tol > 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.min_step > 0.0
            && self.armijo > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid VI solver configuration {self:?}")))
        }
    }
}

/// Solution of the Newton system restricted to the inactive set.
pub trait ReducedSolver {
    /// Solves `J[N, N] d = rhs`. Returns the step, the Krylov iterations
    /// spent and whether the linear solve met its tolerance.
    fn solve_reduced(&mut self, jac: &CsrMatrix, inactive: &IndexSet, rhs: &[f64]) -> Result<ReducedSolution>;
}

#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub step: Vec<f64>,
    pub krylov_iterations: usize,
    pub converged: bool,
}

/// Sparse LU on the extracted inactive block.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectReduced;

impl ReducedSolver for DirectReduced {
    fn solve_reduced(&mut self, jac: &CsrMatrix, inactive: &IndexSet, rhs: &[f64]) -> Result<ReducedSolution> {
        let sub = jac.extract(inactive, inactive)?;
        let lu = direct_factorize(&sub)?;
        Ok(ReducedSolution {
            step: lu.solve(rhs),
            krylov_iterations: 0,
            converged: true,
        })
    }
}

/// Preconditioned CG on the extracted inactive block; meant for symmetric
/// positive definite Jacobians.
#[derive(Debug, Clone, Copy)]
pub struct CgReduced {
    pub precond: StationaryKind,
    pub options: KrylovOptions,
}

impl ReducedSolver for CgReduced {
    fn solve_reduced(&mut self, jac: &CsrMatrix, inactive: &IndexSet, rhs: &[f64]) -> Result<ReducedSolution> {
        let sub = jac.extract(inactive, inactive)?;
        let pc = stationary_precond(&sub, self.precond)?;
        let (step, rep) = cg_solve(&sub, rhs, &pc, &self.options)?;
        Ok(ReducedSolution {
            step,
            krylov_iterations: rep.iterations,
            converged: rep.converged,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VIReport {
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
    /// `‖Φ‖` at the start and after every accepted step.
    pub residual_history: Vec<f64>,
    pub krylov_iterations: usize,
    pub steepest_descent_steps: usize,
    /// Iterations whose linear solve failed outright.
    pub linear_failures: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

struct Eval {
    f: Vec<f64>,
    phi: Vec<f64>,
    merit: f64,
}

fn evaluate(problem: &dyn MCProblem, x: &[f64]) -> Result<Eval> {
    let f = problem.residual(x)?;
    let phi = mcp_residual(x, &f, problem.lower(), problem.upper())?;
    let merit = sq_norm(&phi);
    Ok(Eval { f, phi, merit })
}

/// Reduced-space active-set Newton method with a projected backtracking
/// search on `‖Φ‖²`.
///
/// Iterates are clamped into the bounds and accepted only when they decrease
/// the merit, so the returned point is always feasible and the residual
/// history is nonincreasing. Exhausting the iteration budget or stagnating in
/// the line search yields a non-converged report.
pub fn rsls_solve(
    problem: &dyn MCProblem,
    x0: &[f64],
    config: &VIConfig,
    linear: &mut dyn ReducedSolver,
) -> Result<(Vec<f64>, VIReport)> {
    config.validate()?;
    let n = problem.dim();
    let (lower, upper) = (problem.lower(), problem.upper());
    if x0.len() != n || lower.len() != n || upper.len() != n {
        return Err(Error::invalid("MCP dimensions do not match the initial guess"));
    }
    check_bounds(lower, upper)?;
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let zeta = config
        .zero_tol
        .unwrap_or_else(|| 1e-10 * (1.0 + x0.iter().fold(0.0f64, |m, v| m.max(v.abs()))));

    let mut cur = evaluate(problem, &x)?;
    let mut report = VIReport {
        residual_history: vec![cur.merit.sqrt()],
        ..Default::default()
    };

    for it in 0..=config.max_iterations {
        if cur.merit.sqrt() <= config.abs_tol {
            report.converged = true;
            break;
        }
        if it == config.max_iterations {
            break;
        }
        report.iterations = it + 1;
        let jac = problem.jacobian(&x)?;
        let part = classify_active(&x, &cur.f, lower, upper, zeta);

        let mut accepted = None;
        if !part.inactive.is_empty() {
            let rhs: Vec<f64> = part.inactive.iter().map(|i| -cur.f[i]).collect();
            match linear.solve_reduced(&jac, &part.inactive, &rhs) {
                Ok(sol) => {
                    report.krylov_iterations += sol.krylov_iterations;
                    let mut d = vec![0.0; n];
                    for (k, i) in part.inactive.iter().enumerate() {
                        d[i] = sol.step[k];
                    }
                    if d.iter().all(|v| v.is_finite()) {
                        accepted = line_search(problem, &x, &d, cur.merit, config, |mu| {
                            cur.merit * (1.0 - config.armijo * mu)
                        })?;
                    }
                }
                Err(e) => {
                    log::debug!("reduced linear solve failed: {e}");
                    report.linear_failures += 1;
                }
            }
        }
        if accepted.is_none() {
            let grad = merit_gradient(&x, &cur, &jac, lower, upper);
            let d: Vec<f64> = grad.iter().map(|g| -g).collect();
            let slope = -sq_norm(&grad);
            if slope < 0.0 {
                accepted = line_search(problem, &x, &d, cur.merit, config, |mu| {
                    cur.merit + config.armijo * mu * slope
                })?;
                if accepted.is_some() {
                    report.steepest_descent_steps += 1;
                }
            }
        }
        match accepted {
            Some((xn, en)) => {
                x = xn;
                cur = en;
                report.residual_history.push(cur.merit.sqrt());
            }
            None => {
                log::debug!("active-set line search stagnated at ‖Φ‖ = {:.3e}", cur.merit.sqrt());
                break;
            }
        }
    }
    report.residual_norm = cur.merit.sqrt();
    Ok((x, report))
}

/// Backtracks from `μ = 1` until the projected trial point satisfies
/// `merit(trial) ≤ target(μ)` and strictly decreases the merit.
fn line_search(
    problem: &dyn MCProblem,
    x: &[f64],
    d: &[f64],
    merit: f64,
    config: &VIConfig,
    target: impl Fn(f64) -> f64,
) -> Result<Option<(Vec<f64>, Eval)>> {
    let (lower, upper) = (problem.lower(), problem.upper());
    let mut mu = 1.0;
    while mu >= config.min_step {
        let mut trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + mu * di).collect();
        project(&mut trial, lower, upper);
        let e = evaluate(problem, &trial)?;
        if e.merit.is_finite() && e.merit < merit && e.merit <= target(mu) {
            return Ok(Some((trial, e)));
        }
        mu *= config.backtrack;
    }
    Ok(None)
}

/// Gradient of `½‖Φ‖²`: `D_x Φ + Jᵀ (D_F Φ)` applied to `Φ`.
fn merit_gradient(x: &[f64], cur: &Eval, jac: &CsrMatrix, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut direct = vec![0.0; n];
    let mut through_f = vec![0.0; n];
    for i in 0..n {
        let (_, px, pf) = component(x[i], cur.f[i], lower[i], upper[i]);
        let phi = cur.phi[i];
        direct[i] = px * phi;
        through_f[i] = pf * phi;
    }
    let jt = jac.mul_transpose_vec(&through_f);
    direct.iter().zip(&jt).map(|(a, b)| a + b).collect()
}
