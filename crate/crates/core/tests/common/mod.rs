#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;

use phasefield::fem::{Problem, State};
use phasefield::linalg::CsrMatrix;
use phasefield::mesh::tensor_mesh;
use phasefield::model::Material;

/// Traction bar geometry on a 4 x 4 cell grid, with a random inelastic
/// strain so that every assembly term is exercised.
pub fn small_problem(rng: &mut StdRng) -> Problem {
    let mesh = tensor_mesh(&[0.0, 0.25, 0.5, 0.75, 1.0], &[0.0, 0.075, 0.15, 0.225, 0.3]);
    let mut problem = Problem::new(mesh, Material::default()).unwrap();
    let strain = (0..problem.mesh.num_triangles()).map(|_| rng.random_range(-0.2..0.2)).collect();
    problem.set_thermal(Some(strain)).unwrap();
    problem
}

/// Random feasible state: `0 <= alpha_lb <= alpha <= 1`.
pub fn random_state(problem: &Problem, rng: &mut StdRng) -> State {
    let nv = problem.num_vertices();
    let mut s = State::zeros(nv);
    for u in s.u.iter_mut() {
        *u = rng.random_range(-0.1..0.1);
    }
    for v in 0..nv {
        let a: f64 = rng.random_range(0.0..1.0);
        s.alpha[v] = a;
        s.alpha_lb[v] = a * rng.random_range(0.0..1.0);
    }
    s
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖a - b‖∞ / max(‖b‖∞, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    max_abs(&d) / max_abs(b).max(floor)
}

pub fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i][j])
}

pub fn random_spd(rng: &mut StdRng, n: usize, shift: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    g.transpose() * g + DMatrix::identity(n, n) * shift
}

pub fn to_csr(m: &DMatrix<f64>) -> CsrMatrix {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    CsrMatrix::from_dense(&rows)
}

/// Box-constrained strictly convex QP `min ½xᵀMx + qᵀx, l <= x <= u` with
/// a mix of one-sided, two-sided and absent bounds.
pub struct RandomQp {
    pub m: DMatrix<f64>,
    pub q: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn random_qp(rng: &mut StdRng, n: usize) -> RandomQp {
    let m = random_spd(rng, n, 0.1);
    let q = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    for i in 0..n {
        let l = rng.random_range(-1.0..0.5);
        match rng.random_range(0..4) {
            0 => {}
            1 => lower[i] = l,
            2 => upper[i] = l + 0.5,
            _ => {
                lower[i] = l;
                upper[i] = l + rng.random_range(0.0..1.5);
            }
        }
    }
    RandomQp { m, q, lower, upper }
}

/// Exact solution by enumerating every assignment of components to
/// {free, lower, upper} and keeping the one satisfying the KKT conditions.
pub fn enumerate_qp(qp: &RandomQp) -> Vec<f64> {
    let n = qp.q.len();
    let total = 3usize.pow(n as u32);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut x = vec![0.0; n];
        let mut ok = true;
        for i in 0..n {
            match state[i] {
                1 if qp.lower[i].is_finite() => x[i] = qp.lower[i],
                2 if qp.upper[i].is_finite() => x[i] = qp.upper[i],
                0 => {}
                _ => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        if !free.is_empty() {
            let a = DMatrix::from_fn(free.len(), free.len(), |r, c| qp.m[(free[r], free[c])]);
            let b = DVector::from_fn(free.len(), |r, _| {
                let i = free[r];
                -qp.q[i] - (0..n).filter(|j| state[*j] != 0).map(|j| qp.m[(i, j)] * x[j]).sum::<f64>()
            });
            let sol = a.lu().solve(&b).expect("principal submatrix of an SPD matrix");
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        let xv = DVector::from_vec(x.clone());
        let f = &qp.m * &xv + DVector::from_vec(qp.q.clone());
        let tol = 1e-12;
        let kkt = (0..n).all(|i| {
            let inside = x[i] >= qp.lower[i] - tol && x[i] <= qp.upper[i] + tol;
            inside
                && match state[i] {
                    0 => true,
                    1 => f[i] >= -tol,
                    _ => f[i] <= tol,
                }
        });
        if kkt {
            let obj = 0.5 * xv.dot(&(&qp.m * &xv)) + xv.dot(&DVector::from_vec(qp.q.clone()));
            if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                best = Some((obj, x));
            }
        }
    }
    best.expect("a strictly convex QP has a KKT point").1
}

/// Largest relative mismatch between the assembled derivatives at `state`
/// and central finite differences: (gradient vs energy, Hessian vs gradient).
pub fn fd_mismatch(problem: &Problem, state: &State) -> (f64, f64) {
    let nu = problem.num_u();
    let nv = problem.num_vertices();
    let eps = 1e-6;
    let perturb = |k: usize, d: f64| {
        let mut s = state.clone();
        if k < nu {
            s.u[k] += d;
        } else {
            s.alpha[k - nu] += d;
        }
        s
    };
    let grad = |s: &State| {
        let mut g = problem.gradient_u(s);
        g.extend(problem.gradient_alpha(s));
        g
    };

    let g = grad(state);
    let g_fd: Vec<f64> = (0..nu + nv)
        .map(|k| (problem.energy(&perturb(k, eps)).total - problem.energy(&perturb(k, -eps)).total) / (2.0 * eps))
        .collect();
    let grad_err = rel_err(&g, &g_fd, 1e-8);

    let huu = dense(&problem.hessian_uu(state));
    let hua = dense(&problem.hessian_ua(state));
    let haa = dense(&problem.hessian_aa(state));
    let full = DMatrix::from_fn(nu + nv, nu + nv, |i, j| match (i < nu, j < nu) {
        (true, true) => huu[(i, j)],
        (true, false) => hua[(i, j - nu)],
        (false, true) => hua[(j, i - nu)],
        (false, false) => haa[(i - nu, j - nu)],
    });
    let mut hess_err: f64 = 0.0;
    let scale = full.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for k in 0..nu + nv {
        let gp = grad(&perturb(k, eps));
        let gm = grad(&perturb(k, -eps));
        for i in 0..nu + nv {
            let fd = (gp[i] - gm[i]) / (2.0 * eps);
            hess_err = hess_err.max((full[(i, k)] - fd).abs() / scale);
        }
    }
    (grad_err, hess_err)
}

/// Solves `qp` with the active-set method from a feasible start.
pub fn rsls_on_qp(qp: &RandomQp) -> (Vec<f64>, phasefield::vi::VIReport) {
    use phasefield::vi::{rsls_solve, AffineMcp, DirectReduced, VIConfig};
    let n = qp.q.len();
    let mcp = AffineMcp::new(to_csr(&qp.m), qp.q.clone(), qp.lower.clone(), qp.upper.clone()).unwrap();
    let x0: Vec<f64> = (0..n).map(|i| 0.0f64.clamp(qp.lower[i], qp.upper[i])).collect();
    let config = VIConfig {
        abs_tol: 1e-12,
        ..VIConfig::default()
    };
    rsls_solve(&mcp, &x0, &config, &mut DirectReduced).unwrap()
}
