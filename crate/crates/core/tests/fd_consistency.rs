mod common;

use common::{fd_mismatch, random_state, small_problem};
use phasefield::fem::{assemble_kaa, assemble_kua, assemble_kuu, assemble_residual_alpha, assemble_residual_u, DirichletBC};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = StdRng::seed_from_u64(11);
    let problem = small_problem(&mut rng);
    for _ in 0..5 {
        let state = random_state(&problem, &mut rng);
        let (g, h) = fd_mismatch(&problem, &state);
        assert!(g < 1e-5 && h < 1e-5, "gradient {g:.2e}, hessian {h:.2e}");
    }
}

#[test]
fn dirichlet_rows_are_eliminated() {
    let mut rng = StdRng::seed_from_u64(3);
    let mut problem = small_problem(&mut rng);
    let state = random_state(&problem, &mut rng);
    let bc = DirichletBC::new(vec![0, 1, 7], vec![0.01, -0.02, 0.03]).unwrap();
    problem.set_bc(bc).unwrap();

    let r = assemble_residual_u(&state, &problem);
    let raw = problem.gradient_u(&state);
    for (d, v) in problem.bc().iter() {
        assert_eq!(r[d], state.u[d] - v);
    }
    for d in problem.free_u_dofs().iter() {
        assert_eq!(r[d], raw[d]);
    }
    assert_eq!(assemble_residual_alpha(&state, &problem), problem.gradient_alpha(&state));

    let kuu = assemble_kuu(&state, &problem);
    assert!(kuu.asymmetry() < 1e-14);
    for d in problem.bc().dofs().iter() {
        let (cols, vals) = kuu.row(d);
        for (&c, &v) in cols.iter().zip(vals) {
            assert_eq!(v, if c == d { 1.0 } else { 0.0 });
        }
    }
    let kua = assemble_kua(&state, &problem);
    for d in problem.bc().dofs().iter() {
        assert!(kua.row(d).1.iter().all(|&v| v == 0.0));
    }
    assert!(assemble_kaa(&state, &problem).asymmetry() < 1e-14);
}

#[test]
fn rigid_translation_costs_nothing() {
    let mut rng = StdRng::seed_from_u64(5);
    let mut problem = small_problem(&mut rng);
    problem.set_thermal(None).unwrap();
    let mut state = random_state(&problem, &mut rng);
    let e0 = problem.energy(&state);
    for v in 0..problem.num_vertices() {
        state.u[2 * v] += 0.3;
        state.u[2 * v + 1] -= 0.7;
    }
    let e1 = problem.energy(&state);
    assert!((e1.total - e0.total).abs() <= 1e-12 * e0.total.abs().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fd_consistency_random_states(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let problem = small_problem(&mut rng);
        let state = random_state(&problem, &mut rng);
        let (g, h) = fd_mismatch(&problem, &state);
        prop_assert!(g < 1e-5, "gradient mismatch {}", g);
        prop_assert!(h < 1e-5, "hessian mismatch {}", h);
    }

    #[test]
    fn energy_parts_nonnegative(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let problem = small_problem(&mut rng);
        let state = random_state(&problem, &mut rng);
        let e = problem.energy(&state);
        prop_assert!(e.elastic >= 0.0 && e.dissipated >= 0.0);
        prop_assert!((e.total - e.elastic - e.dissipated).abs() <= 1e-15 * e.total);
    }
}
