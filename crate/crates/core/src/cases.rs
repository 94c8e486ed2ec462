//! Benchmark problems: the surfing crack, the traction bar and the thermal
//! shock of a slab, together with the quasi-static driver.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{DirichletBC, EnergyBreakdown, Problem, State};
use crate::mesh::{banded_rect_mesh, rect_mesh, BoundaryTag, Mesh};
use crate::model::{critical_shock, Material};
use crate::solver::{solve, IterationRecord, NonlinearReport, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Surfing,
    Traction,
    ThermalShock,
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseKind::Surfing => "surfing",
            CaseKind::Traction => "traction",
            CaseKind::ThermalShock => "thermal_shock",
        })
    }
}

impl FromStr for CaseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "surfing" => Ok(CaseKind::Surfing),
            "traction" => Ok(CaseKind::Traction),
            "thermal_shock" => Ok(CaseKind::ThermalShock),
            _ => Err(Error::invalid(format!(
                "unknown case `{s}` (expected surfing, traction or thermal_shock)"
            ))),
        }
    }
}

/// Complementary error function.
pub fn erfc(z: f64) -> f64 {
    libm::erfc(z)
}

/// Load values `start, ..., end` in `increments` equal steps.
pub fn uniform_schedule(start: f64, end: f64, increments: usize) -> Vec<f64> {
    if increments == 0 {
        return vec![start];
    }
    (0..=increments)
        .map(|k| start + (end - start) * k as f64 / increments as f64)
        .collect()
}

/// `count` values from `start` to `end` in geometric progression.
pub fn geometric_schedule(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let ratio = (end / start).powf(1.0 / (count - 1) as f64);
            let mut s: Vec<f64> = (0..count).map(|k| start * ratio.powi(k as i32)).collect();
            s[count - 1] = end;
            s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfingLoad {
    pub stress_intensity: f64,
    pub speed: f64,
    pub crack_length: f64,
    pub shear_modulus: f64,
    pub poisson: f64,
}

/// Mode-I crack-tip displacement about the moving tip `(L_c + v t, 0)`.
pub fn surfing_displacement(x: [f64; 2], t: f64, p: &SurfingLoad) -> [f64; 2] {
    let dx = x[0] - p.crack_length - p.speed * t;
    let dy = x[1];
    let r = dx.hypot(dy);
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let theta = dy.atan2(dx);
    let kappa = (3.0 - p.poisson) / (1.0 + p.poisson);
    let amp = p.stress_intensity / (2.0 * p.shear_modulus) * (r / (2.0 * PI)).sqrt() * (kappa - theta.cos());
    [amp * (0.5 * theta).cos(), amp * (0.5 * theta).sin()]
}

/// Isotropic inelastic strain coefficient `s` with `ε₀ = s I`, for the
/// temperature `−ΔT erfc(x2 / (ℓ τ))`.
pub fn thermal_strain(x2: f64, tau: f64, expansion: f64, delta_t: f64, ell: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("dimensionless time must be positive, got {tau}")));
    }
    Ok(-expansion * delta_t * erfc(x2 / (ell * tau)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfingParams {
    /// Element size in the refined band; defaults to `ℓ/5`.
    pub h: Option<f64>,
    pub length: f64,
    pub height: f64,
    /// `K_I / K_Ic` with `K_Ic = sqrt(G_c E)`.
    pub ki_ratio: f64,
    pub speed: f64,
    pub crack_length: f64,
    /// Half-width of the refined band; defaults to `2.5 ℓ`.
    pub band_halfwidth: Option<f64>,
    /// Outer element size as a multiple of `h`.
    pub coarse_factor: f64,
    pub t_end: f64,
    pub increments: usize,
}

impl Default for SurfingParams {
    fn default() -> Self {
        SurfingParams {
            h: None,
            length: 2.0,
            height: 1.0,
            ki_ratio: 1.0,
            speed: 1.0,
            crack_length: 0.05,
            band_halfwidth: None,
            coarse_factor: 5.0,
            t_end: 1.0,
            increments: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TractionParams {
    /// Defaults to `ℓ/5`.
    pub h: Option<f64>,
    pub length: f64,
    pub height: f64,
    /// Final load as a multiple of `t_c`.
    pub t_max_factor: f64,
    pub increments: usize,
    /// Damage floor placed on the mid-bar vertex column at the first step
    /// past `t_c`; zero disables it.
    pub nucleation_seed: f64,
}

impl Default for TractionParams {
    fn default() -> Self {
        TractionParams {
            h: None,
            length: 1.0,
            height: 0.3,
            t_max_factor: 1.5,
            increments: 30,
            nucleation_seed: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThermalParams {
    /// Defaults to `ℓ/4`.
    pub h: Option<f64>,
    pub length: f64,
    pub height: f64,
    /// `ΔT / ΔT_c`.
    pub shock_ratio: f64,
    pub tau_start: f64,
    pub tau_end: f64,
    pub steps: usize,
}

impl Default for ThermalParams {
    fn default() -> Self {
        ThermalParams {
            h: None,
            length: 10.0,
            height: 4.0,
            shock_ratio: 4.0,
            tau_start: 0.05,
            tau_end: 3.0,
            steps: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Program {
    Surfing(SurfingLoad),
    Traction {
        length: f64,
        critical: f64,
        seed_vertices: Vec<usize>,
        seed: f64,
    },
    Thermal {
        delta_t: f64,
    },
}

/// A benchmark ready to run: discretized problem, initial state, load
/// schedule and the rule that turns a load value into boundary data.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub case: CaseKind,
    pub problem: Problem,
    pub initial: State,
    pub schedule: Vec<f64>,
    program: Program,
}

impl ProblemSetup {
    pub fn mesh(&self) -> &Mesh {
        &self.problem.mesh
    }

    pub fn material(&self) -> &Material {
        &self.problem.material
    }

    /// Overrides the load schedule; values must increase strictly.
    pub fn with_schedule(mut self, schedule: Vec<f64>) -> Result<Self> {
        check_schedule(&schedule)?;
        self.schedule = schedule;
        Ok(self)
    }

    /// Updates boundary data and inelastic strain for `load`, imposes the
    /// prescribed displacement on `state`, and applies any nucleation seed
    /// due at this step. `previous` is the preceding load, if any.
    pub fn apply_load(&self, problem: &mut Problem, state: &mut State, load: f64, previous: Option<f64>) -> Result<()> {
        let mesh = &problem.mesh;
        match &self.program {
            Program::Surfing(p) => {
                let verts = mesh.all_boundary_vertices();
                let mut dofs = Vec::with_capacity(2 * verts.len());
                let mut vals = Vec::with_capacity(2 * verts.len());
                for v in verts {
                    let d = surfing_displacement(mesh.vertices[v], load, p);
                    dofs.extend([2 * v, 2 * v + 1]);
                    vals.extend(d);
                }
                problem.set_bc(DirichletBC::new(dofs, vals)?)?;
            }
            Program::Traction {
                length,
                critical,
                seed_vertices,
                seed,
            } => {
                let bc = traction_bc(mesh, load * length)?;
                problem.set_bc(bc)?;
                let crossed = load > *critical && previous.is_none_or(|p| p <= *critical);
                if crossed && *seed > 0.0 {
                    for &v in seed_vertices {
                        state.alpha_lb[v] = state.alpha_lb[v].max(*seed);
                        state.alpha[v] = state.alpha[v].max(*seed);
                    }
                }
            }
            Program::Thermal { delta_t } => {
                let m = &problem.material;
                let strain = (0..mesh.num_triangles())
                    .map(|t| thermal_strain(mesh.centroid(t)[1], load, m.expansion, *delta_t, m.ell))
                    .collect::<Result<Vec<f64>>>()?;
                problem.set_thermal(Some(strain))?;
            }
        }
        problem.bc().impose(&mut state.u);
        state.load = load;
        Ok(())
    }
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.iter().any(|v| !v.is_finite()) || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("load schedule must be finite and strictly increasing"));
    }
    Ok(())
}

fn traction_bc(mesh: &Mesh, end_displacement: f64) -> Result<DirichletBC> {
    let mut dofs = Vec::new();
    let mut vals = Vec::new();
    for v in mesh.boundary_vertices(BoundaryTag::Left) {
        dofs.push(2 * v);
        vals.push(0.0);
    }
    for v in mesh.boundary_vertices(BoundaryTag::Right) {
        dofs.push(2 * v);
        vals.push(end_displacement);
    }
    let corner = nearest_vertex(mesh, [mesh.rect.x1_min, mesh.rect.x2_min]);
    dofs.push(2 * corner + 1);
    vals.push(0.0);
    DirichletBC::new(dofs, vals)
}

fn nearest_vertex(mesh: &Mesh, p: [f64; 2]) -> usize {
    (0..mesh.num_vertices())
        .min_by(|&a, &b| {
            let da = (mesh.vertices[a][0] - p[0]).hypot(mesh.vertices[a][1] - p[1]);
            let db = (mesh.vertices[b][0] - p[0]).hypot(mesh.vertices[b][1] - p[1]);
            da.total_cmp(&db)
        })
        .expect("mesh has vertices")
}

fn resolve_h(h: Option<f64>, default: f64) -> Result<f64> {
    let h = h.unwrap_or(default);
    if !(h > 0.0) {
        return Err(Error::invalid(format!("element size must be positive, got {h}")));
    }
    Ok(h)
}

/// Steady crack propagation driven by the moving Mode-I displacement on the
/// whole boundary of `[0, L] x [-H/2, H/2]`. The pre-existing crack is
/// represented by a damage floor of one within `h` of the segment
/// `{x2 = 0, 0 ≤ x1 ≤ L_c}`.
pub fn setup_surfing(material: Material, params: &SurfingParams) -> Result<ProblemSetup> {
    let h = resolve_h(params.h, material.ell / 5.0)?;
    let bhw = params.band_halfwidth.unwrap_or(2.5 * material.ell);
    let mesh = banded_rect_mesh(params.length, params.height, h, params.coarse_factor * h, bhw)?;
    let load = SurfingLoad {
        stress_intensity: params.ki_ratio * (material.toughness * material.young).sqrt(),
        speed: params.speed,
        crack_length: params.crack_length,
        shear_modulus: material.shear_modulus(),
        poisson: material.poisson,
    };
    let mut initial = State::zeros(mesh.num_vertices());
    let tol = h * (1.0 + 1e-9);
    for (v, p) in mesh.vertices.iter().enumerate() {
        let dx = (p[0] - params.crack_length).max(0.0);
        if dx.hypot(p[1]) <= tol && p[0] >= -tol {
            initial.alpha_lb[v] = 1.0;
            initial.alpha[v] = 1.0;
        }
    }
    let schedule = uniform_schedule(0.0, params.t_end, params.increments);
    check_schedule(&schedule)?;
    Ok(ProblemSetup {
        case: CaseKind::Surfing,
        problem: Problem::new(mesh, material)?,
        initial,
        schedule,
        program: Program::Surfing(load),
    })
}

/// Uniaxial traction of `[0, L] x [0, H]` by an end displacement `t L`,
/// with the schedule spanning `[0, t_max_factor · t_c]`.
pub fn setup_traction(material: Material, params: &TractionParams) -> Result<ProblemSetup> {
    let h = resolve_h(params.h, material.ell / 5.0)?;
    let mesh = rect_mesh(params.length, params.height, h, 0.0)?;
    let critical = material.critical_traction();
    let mid = 0.5 * params.length;
    let column_x = mesh
        .vertices
        .iter()
        .map(|p| p[0])
        .min_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()))
        .expect("mesh has vertices");
    let seed_vertices = (0..mesh.num_vertices())
        .filter(|&v| mesh.vertices[v][0] == column_x)
        .collect();
    let schedule = uniform_schedule(0.0, params.t_max_factor * critical, params.increments);
    check_schedule(&schedule)?;
    let initial = State::zeros(mesh.num_vertices());
    Ok(ProblemSetup {
        case: CaseKind::Traction,
        problem: Problem::new(mesh, material)?,
        initial,
        schedule,
        program: Program::Traction {
            length: params.length,
            critical,
            seed_vertices,
            seed: params.nucleation_seed,
        },
    })
}

/// Slab `[0, L] x [0, H]` cooled on its bottom face. `u1 = 0` on both
/// lateral sides and `u2 = 0` on the top; the shocked face is free and the
/// damage carries no boundary condition.
pub fn setup_thermal_shock(material: Material, params: &ThermalParams) -> Result<ProblemSetup> {
    let h = resolve_h(params.h, material.ell / 4.0)?;
    if !(params.tau_start > 0.0 && params.tau_end > params.tau_start) {
        return Err(Error::invalid("thermal schedule needs 0 < tau_start < tau_end"));
    }
    let mesh = rect_mesh(params.length, params.height, h, 0.0)?;
    let delta_t = params.shock_ratio * critical_shock(&material)?;
    let mut dofs = Vec::new();
    for tag in [BoundaryTag::Left, BoundaryTag::Right] {
        dofs.extend(mesh.boundary_vertices(tag).into_iter().map(|v| 2 * v));
    }
    dofs.extend(mesh.boundary_vertices(BoundaryTag::Top).into_iter().map(|v| 2 * v + 1));
    let vals = vec![0.0; dofs.len()];
    let mut problem = Problem::new(mesh, material)?;
    problem.set_bc(DirichletBC::new(dofs, vals)?)?;
    let schedule = geometric_schedule(params.tau_start, params.tau_end, params.steps);
    check_schedule(&schedule)?;
    let initial = State::zeros(problem.num_vertices());
    Ok(ProblemSetup {
        case: CaseKind::ThermalShock,
        problem,
        initial,
        schedule,
        program: Program::Thermal { delta_t },
    })
}

/// Number of connected components of `{alpha > threshold}` (over mesh
/// edges) that contain a vertex on the bottom face.
pub fn count_crack_bands(mesh: &Mesh, alpha: &[f64], threshold: f64) -> usize {
    let n = mesh.num_vertices();
    let neighbors = mesh.vertex_neighbors();
    let y0 = mesh.rect.x2_min;
    let tol = 1e-9 * (mesh.rect.x2_max - y0);
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] || alpha[start] <= threshold {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut touches = false;
        while let Some(v) = stack.pop() {
            touches |= (mesh.vertices[v][1] - y0).abs() <= tol;
            for &w in &neighbors[v] {
                if !seen[w] && alpha[w] > threshold {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if touches {
            count += 1;
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub load: f64,
    pub energy: EnergyBreakdown,
    pub report: NonlinearReport,
    pub max_alpha: f64,
}

/// Hooks called while a quasi-static run progresses.
pub trait RunObserver {
    fn iteration(&mut self, _step: usize, _record: &IterationRecord) {}
    fn step(&mut self, _record: &StepRecord, _state: &State, _problem: &Problem) {}
}

impl RunObserver for () {}

/// Result of a quasi-static run. `failure` holds the error of the step that
/// stopped the run, if any; `records` then covers the completed steps.
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<StepRecord>,
    pub state: State,
    pub problem: Problem,
    pub failure: Option<Error>,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.failure.is_none() && self.records.iter().all(|r| r.report.converged)
    }
}

pub fn run_quasistatic(setup: &ProblemSetup, config: &SolverConfig) -> Result<RunOutcome> {
    run_quasistatic_observed(setup, config, &mut ())
}

/// Solves the incremental problems of `setup.schedule` in order, each one
/// warm-started from the previous step with the previous damage as floor.
pub fn run_quasistatic_observed(
    setup: &ProblemSetup,
    config: &SolverConfig,
    observer: &mut dyn RunObserver,
) -> Result<RunOutcome> {
    config.validate()?;
    check_schedule(&setup.schedule)?;
    let mut problem = setup.problem.clone();
    let mut state = setup.initial.clone();
    let mut records = Vec::with_capacity(setup.schedule.len());
    let mut previous = None;
    for (step, &load) in setup.schedule.iter().enumerate() {
        state.alpha_lb.clone_from(&state.alpha);
        for (lb, &init) in state.alpha_lb.iter_mut().zip(&setup.initial.alpha_lb) {
            *lb = lb.max(init);
        }
        setup.apply_load(&mut problem, &mut state, load, previous)?;
        previous = Some(load);

        let outcome = solve(&mut state, &problem, config, &mut |rec| observer.iteration(step, rec));
        let report = match outcome {
            Ok(r) if r.converged => r,
            Ok(r) => {
                let failure = Error::Step {
                    step,
                    source: Box::new(Error::NotConverged {
                        iterations: r.am_iterations + r.newton_iterations,
                        residual: r.final_residual_norm,
                    }),
                };
                records.push(record(step, load, &state, &problem, r));
                observer.step(records.last().unwrap(), &state, &problem);
                return Ok(RunOutcome {
                    records,
                    state,
                    problem,
                    failure: Some(failure),
                });
            }
            Err(e) => {
                return Ok(RunOutcome {
                    records,
                    state,
                    problem,
                    failure: Some(Error::Step {
                        step,
                        source: Box::new(e),
                    }),
                })
            }
        };
        records.push(record(step, load, &state, &problem, report));
        observer.step(records.last().unwrap(), &state, &problem);
    }
    Ok(RunOutcome {
        records,
        state,
        problem,
        failure: None,
    })
}

fn record(step: usize, load: f64, state: &State, problem: &Problem, report: NonlinearReport) -> StepRecord {
    StepRecord {
        step,
        load,
        energy: problem.energy(state),
        report,
        max_alpha: state.max_alpha(),
    }
}
