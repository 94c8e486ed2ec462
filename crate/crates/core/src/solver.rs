//! Alternate minimization, its over-relaxed variant, the coupled active-set
//! Newton method and their composition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_kuu, assemble_residual_u, EnergyBreakdown, Problem, State};
use crate::linalg::{
    cg_solve, direct_factorize, minres_solve, stationary_precond, BlockJacobian, CsrMatrix,
    FieldSplit, InnerSolverKind, KrylovOptions, StationaryKind,
};
use crate::mesh::IndexSet;
use crate::vi::{
    mcp_residual, rsls_solve, AffineMcp, CgReduced, DirectReduced, MCProblem, ReducedSolution,
    ReducedSolver, VIConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Plain alternate minimization; forces `omega = 1`.
    Am,
    #[default]
    Oram,
    OramN,
    NewtonOnly,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Am => "am",
            Method::Oram => "oram",
            Method::OramN => "oram_n",
            Method::NewtonOnly => "newton_only",
        })
    }
}

/// Solver for symmetric positive definite subproblem systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum LinearSolverKind {
    Direct,
    Cg {
        #[serde(default)]
        precond: StationaryKind,
        #[serde(default = "default_cg_rtol")]
        rtol: f64,
        #[serde(default = "default_cg_max_iter")]
        max_iter: usize,
    },
}

fn default_cg_rtol() -> f64 {
    1e-12
}

fn default_cg_max_iter() -> usize {
    5000
}

impl Default for LinearSolverKind {
    fn default() -> Self {
        LinearSolverKind::Direct
    }
}

/// Solver for the reduced coupled Newton system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum CoupledSolverKind {
    Direct,
    MinresFieldsplit {
        #[serde(default)]
        inner_a: InnerSolverKind,
        #[serde(default)]
        inner_c: InnerSolverKind,
        #[serde(default = "default_minres_rtol")]
        rtol: f64,
        #[serde(default = "default_minres_max_iter")]
        max_iter: usize,
    },
}

fn default_minres_rtol() -> f64 {
    1e-8
}

fn default_minres_max_iter() -> usize {
    500
}

impl Default for CoupledSolverKind {
    fn default() -> Self {
        CoupledSolverKind::MinresFieldsplit {
            inner_a: InnerSolverKind::Direct,
            inner_c: InnerSolverKind::Direct,
            rtol: default_minres_rtol(),
            max_iter: default_minres_max_iter(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    omega: f64,
    /// Relative residual reduction after which ORAM-N hands over to Newton.
    pub am_rtol: f64,
    /// Absolute tolerance on `‖Φ‖₂`.
    pub outer_atol: f64,
    /// Per load step, counted over all AM sweeps.
    pub max_am_iterations: usize,
    /// Per Newton attempt.
    pub max_newton_iterations: usize,
    /// Tolerance of the damage subproblem.
    pub damage_atol: f64,
    pub elastic_solver: LinearSolverKind,
    pub damage_solver: LinearSolverKind,
    pub coupled_solver: CoupledSolverKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Oram,
            omega: 1.0,
            am_rtol: 0.1,
            outer_atol: 1e-7,
            max_am_iterations: 2000,
            max_newton_iterations: 30,
            damage_atol: 1e-10,
            elastic_solver: LinearSolverKind::Direct,
            damage_solver: LinearSolverKind::Direct,
            coupled_solver: CoupledSolverKind::default(),
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method, omega: f64) -> Result<Self> {
        let mut c = SolverConfig {
            method,
            ..Default::default()
        };
        c.set_omega(omega)?;
        Ok(c)
    }

    pub fn omega(&self) -> f64 {
        if self.method == Method::Am {
            1.0
        } else {
            self.omega
        }
    }

    /// Over-relaxation must lie in the open interval (0, 2).
    pub fn set_omega(&mut self, omega: f64) -> Result<()> {
        if !(omega > 0.0 && omega < 2.0) {
            return Err(Error::invalid(format!(
                "omega = {omega} is outside (0, 2), where over-relaxation can converge"
            )));
        }
        self.omega = omega;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::invalid(format!("omega = {} is outside (0, 2)", self.omega)));
        }
        let positive = [
            ("am_rtol", self.am_rtol),
            ("outer_atol", self.outer_atol),
            ("damage_atol", self.damage_atol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_am_iterations == 0 {
            return Err(Error::invalid("max_am_iterations must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationKind {
    Am,
    Newton,
}

/// One per-iteration log record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub kind: IterationKind,
    pub iteration: usize,
    pub residual_norm: f64,
    pub energy: EnergyBreakdown,
    /// Damage relaxation actually used; `None` for Newton steps.
    pub omega_bar: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NonlinearReport {
    pub am_iterations: usize,
    pub newton_iterations: usize,
    pub newton_attempts: usize,
    pub total_krylov_iterations: usize,
    pub converged: bool,
    pub final_residual_norm: f64,
    /// Total energy after every AM iteration.
    pub energy_history: Vec<f64>,
    /// `‖Φ‖` at the start of every Newton attempt and after each accepted
    /// Newton step, one vector per attempt.
    pub newton_residuals: Vec<Vec<f64>>,
    /// Smallest damage relaxation used; `None` when no AM iteration ran.
    pub omega_bar_min: Option<f64>,
    /// Total energy after the AM iterations of each plain-AM sweep at
    /// `omega = 1`, one vector per sweep.
    pub unrelaxed_sweeps: Vec<Vec<f64>>,
}

impl NonlinearReport {
    fn absorb(&mut self, other: NonlinearReport) {
        self.am_iterations += other.am_iterations;
        self.newton_iterations += other.newton_iterations;
        self.newton_attempts += other.newton_attempts;
        self.total_krylov_iterations += other.total_krylov_iterations;
        self.energy_history.extend(other.energy_history);
        self.newton_residuals.extend(other.newton_residuals);
        self.unrelaxed_sweeps.extend(other.unrelaxed_sweeps);
        self.omega_bar_min = match (self.omega_bar_min, other.omega_bar_min) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.converged = other.converged;
        self.final_residual_norm = other.final_residual_norm;
    }
}

/// Stacked residual: the displacement gradient on free dofs followed by the
/// complementarity residual of the damage gradient on `[alpha_lb, 1]`.
pub fn residual_vector(state: &State, problem: &Problem) -> Result<Vec<f64>> {
    let gu = problem.gradient_u(state);
    let mut out: Vec<f64> = problem.free_u_dofs().iter().map(|i| gu[i]).collect();
    let ga = problem.gradient_alpha(state);
    let ones = vec![1.0; ga.len()];
    out.extend(mcp_residual(&state.alpha, &ga, &state.alpha_lb, &ones)?);
    Ok(out)
}

/// `‖Φ‖₂` of [`residual_vector`].
pub fn residual_norm(state: &State, problem: &Problem) -> Result<f64> {
    Ok(residual_vector(state, problem)?
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt())
}

fn solve_spd(m: &CsrMatrix, rhs: &[f64], kind: LinearSolverKind) -> Result<(Vec<f64>, usize)> {
    match kind {
        LinearSolverKind::Direct => Ok((direct_factorize(m)?.solve(rhs), 0)),
        LinearSolverKind::Cg {
            precond,
            rtol,
            max_iter,
        } => {
            let pc = stationary_precond(m, precond)?;
            let opts = KrylovOptions {
                rtol,
                atol: 0.0,
                max_iter,
            };
            let (x, rep) = cg_solve(m, rhs, &pc, &opts)?;
            if !rep.converged {
                return Err(Error::NotConverged {
                    iterations: rep.iterations,
                    residual: rep.final_residual_norm,
                });
            }
            Ok((x, rep.iterations))
        }
    }
}

/// Minimizes the energy in `u` at fixed damage and returns the new
/// displacement together with the Krylov iterations spent. The input state
/// must already carry the prescribed boundary values.
pub fn elastic_step(state: &State, problem: &Problem, config: &SolverConfig) -> Result<(Vec<f64>, usize)> {
    let k = assemble_kuu(state, problem);
    let rhs: Vec<f64> = assemble_residual_u(state, problem).iter().map(|r| -r).collect();
    let (du, iters) = solve_spd(&k, &rhs, config.elastic_solver)?;
    let u = state.u.iter().zip(&du).map(|(u, d)| u + d).collect();
    Ok((u, iters))
}

/// Minimizes the energy in `alpha` over `[alpha_lb, 1]` at fixed
/// displacement. The damage residual is affine in `alpha`, so the
/// subproblem is a bound-constrained convex quadratic program.
pub fn damage_step(state: &State, problem: &Problem, config: &SolverConfig) -> Result<(Vec<f64>, usize)> {
    let m = problem.hessian_aa(state);
    let g = problem.gradient_alpha(state);
    let ma = m.mul_vec(&state.alpha);
    let q: Vec<f64> = g.iter().zip(&ma).map(|(g, m)| g - m).collect();
    let n = state.alpha.len();
    let mcp = AffineMcp::new(m, q, state.alpha_lb.clone(), vec![1.0; n])?;
    let vi = VIConfig {
        abs_tol: config.damage_atol,
        max_iterations: 200,
        ..Default::default()
    };
    let (alpha, rep) = match config.damage_solver {
        LinearSolverKind::Direct => rsls_solve(&mcp, &state.alpha, &vi, &mut DirectReduced)?,
        LinearSolverKind::Cg {
            precond,
            rtol,
            max_iter,
        } => {
            let mut lin = CgReduced {
                precond,
                options: KrylovOptions {
                    rtol,
                    atol: 0.0,
                    max_iter,
                },
            };
            rsls_solve(&mcp, &state.alpha, &vi, &mut lin)?
        }
    };
    if !rep.converged {
        return Err(Error::NotConverged {
            iterations: rep.iterations,
            residual: rep.residual_norm,
        });
    }
    Ok((alpha, rep.krylov_iterations))
}

/// Bisects the relaxation towards one until `alpha + ω̄ δα` is feasible.
fn feasible_relaxation(alpha: &[f64], delta: &[f64], lb: &[f64], omega: f64) -> f64 {
    let feasible = |w: f64| {
        alpha
            .iter()
            .zip(delta)
            .zip(lb)
            .all(|((&a, &d), &l)| {
                let v = a + w * d;
                v >= l && v <= 1.0
            })
    };
    let mut w = omega;
    for _ in 0..10 {
        if w <= 1.0 || feasible(w) {
            return w;
        }
        w = 0.5 * (1.0 + w);
    }
    if feasible(w) {
        w
    } else {
        1.0
    }
}

fn noop(_: &IterationRecord) {}

/// Over-relaxed alternate minimization until `‖Φ‖ ≤ outer_atol`.
pub fn am_solve(state: &mut State, problem: &Problem, config: &SolverConfig) -> Result<NonlinearReport> {
    am_solve_observed(state, problem, config, None, &mut noop)
}

/// As [`am_solve`]; additionally stops once `‖Φ‖ ≤ stop_ratio · ‖Φ⁰‖` and
/// reports every iteration to `observer`.
pub fn am_solve_observed(
    state: &mut State,
    problem: &Problem,
    config: &SolverConfig,
    stop_ratio: Option<f64>,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<NonlinearReport> {
    am_sweep(state, problem, config, stop_ratio, config.max_am_iterations, observer)
}

fn am_sweep(
    state: &mut State,
    problem: &Problem,
    config: &SolverConfig,
    stop_ratio: Option<f64>,
    budget: usize,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<NonlinearReport> {
    let omega = config.omega();
    let mut report = NonlinearReport::default();
    let phi0 = residual_norm(state, problem)?;
    report.final_residual_norm = phi0;
    if phi0 <= config.outer_atol {
        report.converged = true;
        return Ok(report);
    }
    for k in 1..=budget {
        let (u_new, ki) = elastic_step(state, problem, config)?;
        for (u, un) in state.u.iter_mut().zip(&u_new) {
            *u += omega * (un - *u);
        }
        let (alpha_new, kd) = damage_step(state, problem, config)?;
        let delta: Vec<f64> = alpha_new.iter().zip(&state.alpha).map(|(n, o)| n - o).collect();
        let omega_bar = feasible_relaxation(&state.alpha, &delta, &state.alpha_lb, omega);
        if omega_bar == 1.0 {
            state.alpha = alpha_new;
        } else {
            for ((a, d), &lb) in state.alpha.iter_mut().zip(&delta).zip(&state.alpha_lb) {
                *a = (*a + omega_bar * d).clamp(lb, 1.0);
            }
        }

        report.am_iterations = k;
        report.total_krylov_iterations += ki + kd;
        report.omega_bar_min = Some(report.omega_bar_min.map_or(omega_bar, |m: f64| m.min(omega_bar)));
        let energy = problem.energy(state);
        report.energy_history.push(energy.total);
        let norm = residual_norm(state, problem)?;
        report.final_residual_norm = norm;
        observer(&IterationRecord {
            kind: IterationKind::Am,
            iteration: k,
            residual_norm: norm,
            energy,
            omega_bar: Some(omega_bar),
        });
        if norm <= config.outer_atol {
            report.converged = true;
            break;
        }
        if stop_ratio.is_some_and(|r| norm <= r * phi0) {
            break;
        }
    }
    if omega == 1.0 {
        report.unrelaxed_sweeps.push(report.energy_history.clone());
    }
    Ok(report)
}

/// The stationarity conditions in the stacked unknown
/// `x = (u on free dofs, alpha)`.
struct CoupledMcp<'a> {
    problem: &'a Problem,
    template: State,
    free: IndexSet,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> CoupledMcp<'a> {
    fn new(problem: &'a Problem, state: &State) -> Self {
        let free = problem.free_u_dofs();
        let nf = free.len();
        let n = state.alpha.len();
        let mut lower = vec![f64::NEG_INFINITY; nf];
        lower.extend_from_slice(&state.alpha_lb);
        let mut upper = vec![f64::INFINITY; nf];
        upper.extend(std::iter::repeat_n(1.0, n));
        CoupledMcp {
            problem,
            template: state.clone(),
            free,
            lower,
            upper,
        }
    }

    fn pack(&self, state: &State) -> Vec<f64> {
        let mut x: Vec<f64> = self.free.iter().map(|i| state.u[i]).collect();
        x.extend_from_slice(&state.alpha);
        x
    }

    fn unpack_into(&self, x: &[f64], state: &mut State) {
        let nf = self.free.len();
        for (k, i) in self.free.iter().enumerate() {
            state.u[i] = x[k];
        }
        state.alpha.copy_from_slice(&x[nf..]);
    }

    fn state_at(&self, x: &[f64]) -> State {
        let mut s = self.template.clone();
        self.unpack_into(x, &mut s);
        s
    }
}

impl MCProblem for CoupledMcp<'_> {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.state_at(x);
        let gu = self.problem.gradient_u(&s);
        let mut f: Vec<f64> = self.free.iter().map(|i| gu[i]).collect();
        f.extend(self.problem.gradient_alpha(&s));
        Ok(f)
    }

    fn jacobian(&self, x: &[f64]) -> Result<CsrMatrix> {
        let s = self.state_at(x);
        let all_alpha = IndexSet::range(0, s.alpha.len());
        let a = self.problem.hessian_uu(&s).extract(&self.free, &self.free)?;
        let b = self.problem.hessian_ua(&s).extract(&self.free, &all_alpha)?;
        let bt = b.transpose();
        let c = self.problem.hessian_aa(&s);
        let (nf, n) = (self.free.len(), s.alpha.len());
        Ok(CsrMatrix::from_blocks((nf, n, nf, n), [[Some(&a), Some(&b)], [Some(&bt), Some(&c)]]))
    }
}

/// Reduced coupled solves: splits the inactive set into its displacement
/// and damage parts.
struct CoupledLinear {
    split: usize,
    kind: CoupledSolverKind,
}

impl ReducedSolver for CoupledLinear {
    fn solve_reduced(&mut self, jac: &CsrMatrix, inactive: &IndexSet, rhs: &[f64]) -> Result<ReducedSolution> {
        match self.kind {
            CoupledSolverKind::Direct => DirectReduced.solve_reduced(jac, inactive, rhs),
            CoupledSolverKind::MinresFieldsplit {
                inner_a,
                inner_c,
                rtol,
                max_iter,
            } => {
                let block = split_inactive(jac, inactive, self.split)?;
                let pc = FieldSplit::new(&block, inner_a, inner_c)?;
                let opts = KrylovOptions {
                    rtol,
                    atol: 0.0,
                    max_iter,
                };
                let (step, rep) = minres_solve(&block, rhs, &pc, &opts)?;
                Ok(ReducedSolution {
                    step,
                    krylov_iterations: rep.iterations,
                    converged: rep.converged,
                })
            }
        }
    }
}

/// Partitions `J[N, N]` into displacement and damage blocks; indices below
/// `split` are displacement unknowns.
pub fn split_inactive(jac: &CsrMatrix, inactive: &IndexSet, split: usize) -> Result<BlockJacobian> {
    let s = inactive.as_slice();
    let k = s.partition_point(|&i| i < split);
    let nu = IndexSet::from_sorted(s[..k].to_vec())?;
    let na = IndexSet::from_sorted(s[k..].to_vec())?;
    BlockJacobian::new(jac.extract(&nu, &nu)?, jac.extract(&nu, &na)?, jac.extract(&na, &na)?)
}

/// The converged-state Jacobian restricted to its inactive set, in block
/// form.
pub fn inactive_jacobian(state: &State, problem: &Problem) -> Result<BlockJacobian> {
    let mcp = CoupledMcp::new(problem, state);
    let x = mcp.pack(state);
    let f = mcp.residual(&x)?;
    let jac = mcp.jacobian(&x)?;
    let zeta = 1e-10 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let part = crate::vi::classify_active(&x, &f, &mcp.lower, &mcp.upper, zeta);
    split_inactive(&jac, &part.inactive, mcp.free.len())
}

/// Active-set Newton on the coupled stationarity conditions. The state is
/// only ever replaced by iterates that decreased `‖Φ‖`.
pub fn coupled_newton_solve(state: &mut State, problem: &Problem, config: &SolverConfig) -> Result<NonlinearReport> {
    coupled_newton_observed(state, problem, config, &mut noop)
}

fn coupled_newton_observed(
    state: &mut State,
    problem: &Problem,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<NonlinearReport> {
    let mcp = CoupledMcp::new(problem, state);
    let x0 = mcp.pack(state);
    let vi = VIConfig {
        abs_tol: config.outer_atol,
        max_iterations: config.max_newton_iterations,
        ..Default::default()
    };
    let mut lin = CoupledLinear {
        split: mcp.free.len(),
        kind: config.coupled_solver,
    };
    let (x, rep) = rsls_solve(&mcp, &x0, &vi, &mut lin)?;
    mcp.unpack_into(&x, state);
    for (k, &r) in rep.residual_history.iter().enumerate().skip(1) {
        observer(&IterationRecord {
            kind: IterationKind::Newton,
            iteration: k,
            residual_norm: r,
            energy: if k + 1 == rep.residual_history.len() {
                problem.energy(state)
            } else {
                EnergyBreakdown::default()
            },
            omega_bar: None,
        });
    }
    Ok(NonlinearReport {
        newton_iterations: rep.residual_history.len() - 1,
        newton_attempts: 1,
        total_krylov_iterations: rep.krylov_iterations,
        converged: rep.converged,
        final_residual_norm: rep.residual_norm,
        newton_residuals: vec![rep.residual_history],
        ..Default::default()
    })
}

/// ORAM until the residual has dropped by `am_rtol`, then Newton; a failed
/// Newton attempt hands the last accepted iterate back to ORAM.
pub fn oram_n_solve(state: &mut State, problem: &Problem, config: &SolverConfig) -> Result<NonlinearReport> {
    oram_n_observed(state, problem, config, &mut noop)
}

fn oram_n_observed(
    state: &mut State,
    problem: &Problem,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<NonlinearReport> {
    let mut report = NonlinearReport {
        final_residual_norm: residual_norm(state, problem)?,
        ..Default::default()
    };
    if report.final_residual_norm <= config.outer_atol {
        report.converged = true;
        return Ok(report);
    }
    while report.am_iterations < config.max_am_iterations {
        let budget = config.max_am_iterations - report.am_iterations;
        let am = am_sweep(state, problem, config, Some(config.am_rtol), budget, observer)?;
        report.absorb(am);
        if report.converged {
            break;
        }
        let newton = coupled_newton_observed(state, problem, config, observer)?;
        report.absorb(newton);
        if report.converged {
            break;
        }
        log::debug!(
            "newton attempt stopped at ‖Φ‖ = {:.3e}; resuming alternate minimization",
            report.final_residual_norm
        );
    }
    Ok(report)
}

/// Runs the method selected in `config`.
pub fn solve(
    state: &mut State,
    problem: &Problem,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<NonlinearReport> {
    config.validate()?;
    match config.method {
        Method::Am | Method::Oram => am_solve_observed(state, problem, config, None, observer),
        Method::OramN => oram_n_observed(state, problem, config, observer),
        Method::NewtonOnly => coupled_newton_observed(state, problem, config, observer),
    }
}
