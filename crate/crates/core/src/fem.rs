//! P1 assembly of the regularized energy, its first variations and the
//! Hessian blocks.
//!
//! All element integrals use the one-point centroid rule: the damage and the
//! degradation are evaluated at the centroid from the nodal values, and the
//! strain is elementwise constant. Energy, residuals and matrices are exact
//! derivatives of one another under this rule.

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{IndexSet, Mesh};
use crate::model::{DamageModel, Material, Sym2};

/// Displacement, damage and the irreversibility floor at one load value.
///
/// `u` is interleaved per vertex (`u[2v + c]`), `alpha` and `alpha_lb` are
/// indexed by vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_lb: Vec<f64>,
    pub load: f64,
}

impl State {
    pub fn zeros(num_vertices: usize) -> Self {
        State {
            u: vec![0.0; 2 * num_vertices],
            alpha: vec![0.0; num_vertices],
            alpha_lb: vec![0.0; num_vertices],
            load: 0.0,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.alpha.len()
    }

    /// Checks `alpha_lb ≤ alpha ≤ 1` up to `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.alpha
            .iter()
            .zip(&self.alpha_lb)
            .all(|(&a, &lb)| a >= lb - tol && a <= 1.0 + tol)
    }

    pub fn max_alpha(&self) -> f64 {
        self.alpha.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub dissipated: f64,
    pub total: f64,
}

/// Prescribed values on a set of displacement dofs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirichletBC {
    dofs: IndexSet,
    values: Vec<f64>,
}

impl DirichletBC {
    /// Accepts dofs in any order; repeated dofs must carry identical values.
    pub fn new(dofs: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dofs.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} dirichlet dofs but {} values",
                dofs.len(),
                values.len()
            )));
        }
        let mut pairs: Vec<(usize, f64)> = dofs.into_iter().zip(values).collect();
        pairs.sort_by_key(|p| p.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (d, v) in pairs {
            match out.last() {
                Some(&(ld, lv)) if ld == d => {
                    if lv != v {
                        return Err(Error::invalid(format!(
                            "dof {d} prescribed twice with different values ({lv} and {v})"
                        )));
                    }
                }
                _ => out.push((d, v)),
            }
        }
        let (dofs, values): (Vec<usize>, Vec<f64>) = out.into_iter().unzip();
        Ok(DirichletBC {
            dofs: IndexSet::from_sorted(dofs)?,
            values,
        })
    }

    pub fn dofs(&self) -> &IndexSet {
        &self.dofs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.dofs.iter().zip(self.values.iter().copied())
    }

    /// Writes the prescribed values into `u`.
    pub fn impose(&self, u: &mut [f64]) {
        for (d, v) in self.iter() {
            u[d] = v;
        }
    }

    /// Same dofs with every value set to zero.
    pub fn homogeneous(&self) -> DirichletBC {
        DirichletBC {
            dofs: self.dofs.clone(),
            values: vec![0.0; self.values.len()],
        }
    }
}

/// CSR pattern of a block together with, for every element, the storage
/// position of each local entry.
#[derive(Debug, Clone)]
struct Pattern<const N: usize> {
    matrix: CsrMatrix,
    slots: Vec<[usize; N]>,
}

impl<const N: usize> Pattern<N> {
    fn build(
        nrows: usize,
        ncols: usize,
        local: &[([usize; 6], [usize; 3])],
        row_is_u: bool,
        col_is_u: bool,
    ) -> Self {
        let mut b = crate::linalg::TripletBuilder::new(nrows, ncols);
        let dofs = |e: &([usize; 6], [usize; 3]), is_u: bool| -> Vec<usize> {
            if is_u {
                e.0.to_vec()
            } else {
                e.1.to_vec()
            }
        };
        for e in local {
            for &r in &dofs(e, row_is_u) {
                for &c in &dofs(e, col_is_u) {
                    b.push(r, c, 0.0);
                }
            }
        }
        let matrix = b.build();
        let slots = local
            .iter()
            .map(|e| {
                let mut s = [0usize; N];
                let mut k = 0;
                for &r in &dofs(e, row_is_u) {
                    let (cols, _) = matrix.row(r);
                    let base = matrix.indptr()[r];
                    for &c in &dofs(e, col_is_u) {
                        s[k] = base + cols.binary_search(&c).expect("pattern entry");
                        k += 1;
                    }
                }
                s
            })
            .collect();
        Pattern { matrix, slots }
    }
}

/// Mesh, material, boundary data and inelastic strain of one load step.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub material: Material,
    pub damage: DamageModel,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
    bc: DirichletBC,
    /// Isotropic inelastic strain `ε₀ = s I`, one value per element.
    thermal: Option<Vec<f64>>,
    uu: Pattern<36>,
    ua: Pattern<18>,
    aa: Pattern<9>,
}

struct Kinematics {
    alpha_c: f64,
    eps_eff: Sym2,
    grad_alpha: [f64; 2],
}

impl Problem {
    pub fn new(mesh: Mesh, material: Material) -> Result<Self> {
        material.validate()?;
        let mut areas = Vec::with_capacity(mesh.num_triangles());
        let mut grads = Vec::with_capacity(mesh.num_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let area = mesh.signed_area(t);
            if !(area > 0.0) {
                return Err(Error::invalid(format!("triangle {t} has non-positive area {area}")));
            }
            let [p0, p1, p2] = tri.map(|v| mesh.vertices[v]);
            let s = 1.0 / (2.0 * area);
            grads.push([
                [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
                [(p2[1] - p0[1]) * s, (p0[0] - p2[0]) * s],
                [(p0[1] - p1[1]) * s, (p1[0] - p0[0]) * s],
            ]);
            areas.push(area);
        }
        let nv = mesh.num_vertices();
        let local: Vec<([usize; 6], [usize; 3])> = mesh
            .triangles
            .iter()
            .map(|tri| {
                let mut u = [0usize; 6];
                for (i, &v) in tri.iter().enumerate() {
                    u[2 * i] = 2 * v;
                    u[2 * i + 1] = 2 * v + 1;
                }
                (u, *tri)
            })
            .collect();
        let uu = Pattern::build(2 * nv, 2 * nv, &local, true, true);
        let ua = Pattern::build(2 * nv, nv, &local, true, false);
        let aa = Pattern::build(nv, nv, &local, false, false);
        Ok(Problem {
            damage: DamageModel::new(material.k_ell),
            mesh,
            material,
            areas,
            grads,
            bc: DirichletBC::default(),
            thermal: None,
            uu,
            ua,
            aa,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn num_u(&self) -> usize {
        2 * self.mesh.num_vertices()
    }

    pub fn bc(&self) -> &DirichletBC {
        &self.bc
    }

    pub fn set_bc(&mut self, bc: DirichletBC) -> Result<()> {
        if bc.dofs().bound() > self.num_u() {
            return Err(Error::invalid("dirichlet dof outside the displacement range"));
        }
        self.bc = bc;
        Ok(())
    }

    /// Displacement dofs without a prescribed value.
    pub fn free_u_dofs(&self) -> IndexSet {
        self.bc.dofs().complement(self.num_u())
    }

    pub fn thermal(&self) -> Option<&[f64]> {
        self.thermal.as_deref()
    }

    /// Sets the per-element isotropic inelastic strain, or clears it.
    pub fn set_thermal(&mut self, strain: Option<Vec<f64>>) -> Result<()> {
        if let Some(s) = &strain {
            if s.len() != self.mesh.num_triangles() {
                return Err(Error::invalid(format!(
                    "inelastic strain has {} entries for {} elements",
                    s.len(),
                    self.mesh.num_triangles()
                )));
            }
        }
        self.thermal = strain;
        Ok(())
    }

    pub fn element_area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn element_gradients(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.grads[t]
    }

    fn check(&self, state: &State) {
        assert_eq!(state.alpha.len(), self.num_vertices(), "damage vector length");
        assert_eq!(state.u.len(), self.num_u(), "displacement vector length");
    }

    #[inline]
    fn kinematics(&self, t: usize, state: &State) -> Kinematics {
        let tri = &self.mesh.triangles[t];
        let g = &self.grads[t];
        let mut eps = Sym2::default();
        let mut grad_alpha = [0.0; 2];
        let mut alpha_c = 0.0;
        for i in 0..3 {
            let v = tri[i];
            let (ux, uy) = (state.u[2 * v], state.u[2 * v + 1]);
            eps.xx += ux * g[i][0];
            eps.yy += uy * g[i][1];
            eps.xy += 0.5 * (ux * g[i][1] + uy * g[i][0]);
            let a = state.alpha[v];
            grad_alpha[0] += a * g[i][0];
            grad_alpha[1] += a * g[i][1];
            alpha_c += a;
        }
        if let Some(s) = &self.thermal {
            eps = eps - Sym2::identity().scaled(s[t]);
        }
        Kinematics {
            alpha_c: alpha_c / 3.0,
            eps_eff: eps,
            grad_alpha,
        }
    }

    /// Strain of the displacement basis function of local vertex `i`,
    /// component `c`.
    #[inline]
    fn basis_strain(g: &[[f64; 2]; 3], i: usize, c: usize) -> Sym2 {
        if c == 0 {
            Sym2::new(g[i][0], 0.0, 0.5 * g[i][1])
        } else {
            Sym2::new(0.0, g[i][1], 0.5 * g[i][0])
        }
    }

    pub fn energy(&self, state: &State) -> EnergyBreakdown {
        self.check(state);
        let k = self.material.dissipation_scale();
        let ell = self.material.ell;
        let (mut elastic, mut dissipated) = (0.0, 0.0);
        for t in 0..self.mesh.num_triangles() {
            let kin = self.kinematics(t, state);
            let area = self.areas[t];
            let (a, _, _) = self.damage.a(kin.alpha_c);
            let (w, _, _) = self.damage.w(kin.alpha_c);
            elastic += area * 0.5 * a * self.material.energy_density2(kin.eps_eff);
            let ga2 = kin.grad_alpha[0].powi(2) + kin.grad_alpha[1].powi(2);
            dissipated += area * k * (w / ell + ell * ga2);
        }
        EnergyBreakdown {
            elastic,
            dissipated,
            total: elastic + dissipated,
        }
    }

    /// Derivative of the energy with respect to every displacement dof.
    pub fn gradient_u(&self, state: &State) -> Vec<f64> {
        self.check(state);
        let mut r = vec![0.0; self.num_u()];
        for t in 0..self.mesh.num_triangles() {
            let kin = self.kinematics(t, state);
            let (a, _, _) = self.damage.a(kin.alpha_c);
            let sigma = self.material.stress(kin.eps_eff).scaled(a * self.areas[t]);
            let g = &self.grads[t];
            for (i, &v) in self.mesh.triangles[t].iter().enumerate() {
                for c in 0..2 {
                    r[2 * v + c] += sigma.ddot(Self::basis_strain(g, i, c));
                }
            }
        }
        r
    }

    /// Derivative of the energy with respect to every damage dof.
    pub fn gradient_alpha(&self, state: &State) -> Vec<f64> {
        self.check(state);
        let k = self.material.dissipation_scale();
        let ell = self.material.ell;
        let mut r = vec![0.0; self.num_vertices()];
        for t in 0..self.mesh.num_triangles() {
            let kin = self.kinematics(t, state);
            let area = self.areas[t];
            let (_, da, _) = self.damage.a(kin.alpha_c);
            let (_, dw, _) = self.damage.w(kin.alpha_c);
            let local = area * (0.5 * da * self.material.energy_density2(kin.eps_eff) + k * dw / ell) / 3.0;
            let g = &self.grads[t];
            for (i, &v) in self.mesh.triangles[t].iter().enumerate() {
                let diff = kin.grad_alpha[0] * g[i][0] + kin.grad_alpha[1] * g[i][1];
                r[v] += local + area * 2.0 * k * ell * diff;
            }
        }
        r
    }

    /// Displacement Hessian without boundary conditions.
    pub fn hessian_uu(&self, state: &State) -> CsrMatrix {
        self.check(state);
        let mut m = self.uu.matrix.clone();
        let vals = m.values_mut();
        for t in 0..self.mesh.num_triangles() {
            let kin = self.kinematics(t, state);
            let (a, _, _) = self.damage.a(kin.alpha_c);
            let scale = a * self.areas[t];
            let g = &self.grads[t];
            let strains: [Sym2; 6] = std::array::from_fn(|k| Self::basis_strain(g, k / 2, k % 2));
            let stresses: [Sym2; 6] = strains.map(|e| self.material.stress(e));
            let slots = &self.uu.slots[t];
            for r in 0..6 {
                for c in 0..6 {
                    vals[slots[6 * r + c]] += scale * stresses[c].ddot(strains[r]);
                }
            }
        }
        m
    }

    /// Mixed displacement-damage Hessian block, `2n × n`, without boundary
    /// conditions.
    pub fn hessian_ua(&self, state: &State) -> CsrMatrix {
        self.check(state);
        let mut m = self.ua.matrix.clone();
        let vals = m.values_mut();
        for t in 0..self.mesh.num_triangles() {
            let kin = self.kinematics(t, state);
            let (_, da, _) = self.damage.a(kin.alpha_c);
            let sigma = self.material.stress(kin.eps_eff).scaled(da * self.areas[t] / 3.0);
            let g = &self.grads[t];
            let slots = &self.ua.slots[t];
            for r in 0..6 {
                let val = sigma.ddot(Self::basis_strain(g, r / 2, r % 2));
                for c in 0..3 {
                    vals[slots[3 * r + c]] += val;
                }
            }
        }
        m
    }

    pub fn hessian_aa(&self, state: &State) -> CsrMatrix {
        self.check(state);
        let k = self.material.dissipation_scale();
        let ell = self.material.ell;
        let mut m = self.aa.matrix.clone();
        let vals = m.values_mut();
        for t in 0..self.mesh.num_triangles() {
            let kin = self.kinematics(t, state);
            let area = self.areas[t];
            let (_, _, dda) = self.damage.a(kin.alpha_c);
            let (_, _, ddw) = self.damage.w(kin.alpha_c);
            let reaction = area * (0.5 * dda * self.material.energy_density2(kin.eps_eff) + k * ddw / ell) / 9.0;
            let g = &self.grads[t];
            let slots = &self.aa.slots[t];
            for i in 0..3 {
                for j in 0..3 {
                    let diff = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    vals[slots[3 * i + j]] += reaction + area * 2.0 * k * ell * diff;
                }
            }
        }
        m
    }
}

pub fn assemble_energy(state: &State, problem: &Problem) -> EnergyBreakdown {
    problem.energy(state)
}

/// Displacement residual with prescribed rows replaced by `u − ū`.
pub fn assemble_residual_u(state: &State, problem: &Problem) -> Vec<f64> {
    let mut r = problem.gradient_u(state);
    for (d, v) in problem.bc().iter() {
        r[d] = state.u[d] - v;
    }
    r
}

pub fn assemble_residual_alpha(state: &State, problem: &Problem) -> Vec<f64> {
    problem.gradient_alpha(state)
}

/// Displacement Hessian with prescribed rows and columns eliminated
/// symmetrically (unit diagonal).
pub fn assemble_kuu(state: &State, problem: &Problem) -> CsrMatrix {
    let mut k = problem.hessian_uu(state);
    eliminate_symmetric(&mut k, problem.bc().dofs());
    k
}

/// Coupling block with prescribed displacement rows zeroed.
pub fn assemble_kua(state: &State, problem: &Problem) -> CsrMatrix {
    let mut k = problem.hessian_ua(state);
    zero_rows(&mut k, problem.bc().dofs());
    k
}

pub fn assemble_kaa(state: &State, problem: &Problem) -> CsrMatrix {
    problem.hessian_aa(state)
}

fn eliminate_symmetric(m: &mut CsrMatrix, dofs: &IndexSet) {
    let n = m.nrows();
    let mut fixed = vec![false; n];
    for d in dofs.iter() {
        fixed[d] = true;
    }
    let indptr = m.indptr().to_vec();
    let indices = m.indices().to_vec();
    let vals = m.values_mut();
    for i in 0..n {
        for k in indptr[i]..indptr[i + 1] {
            let j = indices[k];
            if fixed[i] || fixed[j] {
                vals[k] = if i == j { 1.0 } else { 0.0 };
            }
        }
    }
}

fn zero_rows(m: &mut CsrMatrix, rows: &IndexSet) {
    let indptr = m.indptr().to_vec();
    let vals = m.values_mut();
    for i in rows.iter() {
        vals[indptr[i]..indptr[i + 1]].iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Eliminates the prescribed dofs of `matrix · x = rhs` symmetrically: the
/// known columns move to the right-hand side and the prescribed rows become
/// `x_d = value`.
pub fn apply_dirichlet(matrix: &CsrMatrix, rhs: &[f64], bc: &DirichletBC) -> Result<(CsrMatrix, Vec<f64>)> {
    let n = matrix.nrows();
    if matrix.ncols() != n || rhs.len() != n {
        return Err(Error::invalid("dirichlet elimination needs a square system"));
    }
    if bc.dofs().bound() > n {
        return Err(Error::invalid("dirichlet dof out of range"));
    }
    let mut prescribed = vec![None; n];
    for (d, v) in bc.iter() {
        prescribed[d] = Some(v);
    }
    let mut b = rhs.to_vec();
    for i in 0..n {
        if prescribed[i].is_some() {
            continue;
        }
        let (cols, vals) = matrix.row(i);
        for (&j, &a) in cols.iter().zip(vals) {
            if let Some(v) = prescribed[j] {
                b[i] -= a * v;
            }
        }
    }
    for (d, v) in bc.iter() {
        b[d] = v;
    }
    let mut m = matrix.clone();
    eliminate_symmetric(&mut m, bc.dofs());
    Ok((m, b))
}
