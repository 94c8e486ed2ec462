mod common;

use common::{enumerate_qp, max_abs, random_qp, random_spd, rsls_on_qp, to_csr};
use phasefield::linalg::{KrylovOptions, StationaryKind};
use phasefield::vi::{
    classify_active, fb_phi, mcp_residual, rsls_solve, AffineMcp, CgReduced, VIConfig,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn matches_enumeration_on_random_qps() {
    let mut rng = StdRng::seed_from_u64(2024);
    for trial in 0..100 {
        let n = rng.random_range(1..=8);
        let qp = random_qp(&mut rng, n);
        let exact = enumerate_qp(&qp);
        let (x, report) = rsls_on_qp(&qp);
        assert!(report.converged, "trial {trial}: {report:?}");
        let err = x.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "trial {trial}: error {err:.2e}");
    }
}

#[test]
fn cg_reduced_solver_agrees_with_direct() {
    let mut rng = StdRng::seed_from_u64(77);
    for _ in 0..20 {
        let qp = random_qp(&mut rng, 6);
        let mcp = AffineMcp::new(to_csr(&qp.m), qp.q.clone(), qp.lower.clone(), qp.upper.clone()).unwrap();
        let x0: Vec<f64> = (0..6).map(|i| 0.0f64.clamp(qp.lower[i], qp.upper[i])).collect();
        let mut cg = CgReduced {
            precond: StationaryKind::Jacobi,
            options: KrylovOptions {
                rtol: 1e-14,
                atol: 1e-16,
                max_iter: 200,
            },
        };
        let config = VIConfig {
            abs_tol: 1e-11,
            ..VIConfig::default()
        };
        let (x, rep) = rsls_solve(&mcp, &x0, &config, &mut cg).unwrap();
        assert!(rep.converged);
        let exact = enumerate_qp(&qp);
        assert!(x.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-8));
    }
}

#[test]
fn fb_function_values() {
    assert_eq!(fb_phi(0.0, 0.0), 0.0);
    assert_eq!(fb_phi(3.0, 0.0), 0.0);
    assert_eq!(fb_phi(0.0, 2.0), 0.0);
    assert!((fb_phi(3.0, 4.0) - (5.0 - 7.0)).abs() < 1e-15);
    assert!((fb_phi(-1.0, -1.0) - (2f64.sqrt() + 2.0)).abs() < 1e-15);
}

#[test]
fn residual_rejects_infeasible_points() {
    assert!(mcp_residual(&[2.0], &[0.0], &[0.0], &[1.0]).is_err());
    assert!(mcp_residual(&[-0.1], &[0.0], &[0.0], &[f64::INFINITY]).is_err());
}

#[test]
fn active_set_classification() {
    let x = [0.0, 1.0, 0.5, 0.0];
    let f = [1.0, -1.0, 3.0, -2.0];
    let lo = [0.0, 0.0, 0.0, 0.0];
    let hi = [1.0, 1.0, 1.0, 1.0];
    let p = classify_active(&x, &f, &lo, &hi, 1e-12);
    assert_eq!(p.active.as_slice(), &[0, 1]);
    assert_eq!(p.inactive.as_slice(), &[2, 3]);
}

fn solution_characterisation(x: f64, f: f64, l: f64, u: f64) -> bool {
    let tol = 1e-12;
    (x - l).abs() < tol && f >= 0.0 || (u - x).abs() < tol && f <= 0.0 || f == 0.0
}

proptest! {
    #[test]
    fn residual_vanishes_exactly_on_solutions(
        l in -2.0f64..0.0, width in 0.0f64..2.0, t in 0.0f64..1.0, f in -3.0f64..3.0,
        lower_on in any::<bool>(), upper_on in any::<bool>(),
    ) {
        let lo = if lower_on { l } else { f64::NEG_INFINITY };
        let hi = if upper_on { l + width } else { f64::INFINITY };
        let candidates = [l, l + width, l + t * width];
        for x in candidates {
            if x < lo || x > hi {
                continue;
            }
            let phi = mcp_residual(&[x], &[f], &[lo], &[hi]).unwrap()[0];
            if solution_characterisation(x, f, lo, hi) {
                prop_assert!(phi.abs() < 1e-12, "x={} f={} [{}, {}] phi={}", x, f, lo, hi, phi);
            } else {
                prop_assert!(phi.abs() > 0.0);
            }
        }
    }

    #[test]
    fn residual_history_nonincreasing(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = StdRng::seed_from_u64(seed);
        let qp = random_qp(&mut rng, n);
        let (x, rep) = rsls_on_qp(&qp);
        prop_assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((0..n).all(|i| x[i] >= qp.lower[i] && x[i] <= qp.upper[i]));
    }

    #[test]
    fn unconstrained_reduces_to_linear_solve(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = random_spd(&mut rng, n, 0.5);
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mcp = AffineMcp::new(to_csr(&m), q.clone(), vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]).unwrap();
        let (x, rep) = rsls_solve(&mcp, &vec![0.0; n], &VIConfig::default(), &mut phasefield::vi::DirectReduced).unwrap();
        prop_assert!(rep.converged && rep.iterations <= 2);
        let r: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum::<f64>() + q[i]).collect();
        prop_assert!(max_abs(&r) < 1e-9);
    }
}
