//! Invariants over randomly drawn meshes, states and parameters.

use kdvb_lab::control::CutoffFunction;
use kdvb_lab::evolution::evolve;
use kdvb_lab::observability::assemble_gramians;
use kdvb_lab::{build_operator, inner_product, Grid, OperatorKind, StateVector};
use proptest::prelude::*;

fn state(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn mesh_and_state() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (0.5f64..3.0, 8usize..96).prop_flat_map(|(l, n)| (Just(l), state(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_and_adjoint_forms_are_nonpositive((l, u) in mesh_and_state()) {
        let g = Grid::symmetric(l, u.len()).unwrap();
        for kind in [OperatorKind::Forward, OperatorKind::Adjoint] {
            let op = build_operator(&g, kind).unwrap();
            let q = op.quadratic_form(&u);
            prop_assert!(q <= 1e-12 * g.dot(&u, &u) * op.matrix().dim() as f64, "{kind:?}: {q}");
        }
    }

    #[test]
    fn adjoint_is_the_discrete_transpose((l, u) in mesh_and_state(), seed in 0u64..1000) {
        let g = Grid::symmetric(l, u.len()).unwrap();
        let v: Vec<f64> = u.iter().enumerate().map(|(i, x)| (x + (seed + i as u64) as f64).sin()).collect();
        let a = build_operator(&g, OperatorKind::Forward).unwrap();
        let b = build_operator(&g, OperatorKind::Adjoint).unwrap();
        let lhs = g.dot(&a.apply(&u), &v);
        let rhs = g.dot(&u, &b.apply(&v));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (lhs.abs() + rhs.abs() + 1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn crank_nicolson_never_increases_the_norm((l, u) in mesh_and_state(), nt in 1usize..64) {
        let g = Grid::symmetric(l, u.len()).unwrap();
        let op = build_operator(&g, OperatorKind::Forward).unwrap();
        let u0 = StateVector::new(g, u).unwrap();
        let traj = evolve(&op, &u0, 0.0, 0.5, nt).unwrap();
        prop_assert!(traj.max_step_ratio() <= 1.0 + 1e-10);
    }

    #[test]
    fn evolution_is_linear((l, u) in mesh_and_state(), factor in -4.0f64..4.0) {
        let g = Grid::symmetric(l, u.len()).unwrap();
        let op = build_operator(&g, OperatorKind::Forward).unwrap();
        let u0 = StateVector::new(g, u).unwrap();
        let a = evolve(&op, &u0, 0.0, 0.25, 16).unwrap();
        let b = evolve(&op, &u0.scaled(factor), 0.0, 0.25, 16).unwrap();
        let d: Vec<f64> = a.last().iter().zip(b.last()).map(|(x, y)| factor * x - y).collect();
        prop_assert!(g.norm(&d) <= 1e-12 * (1.0 + factor.abs()) * u0.norm());
    }

    #[test]
    fn inner_product_is_symmetric((l, u) in mesh_and_state()) {
        let g = Grid::symmetric(l, u.len()).unwrap();
        let v: Vec<f64> = u.iter().rev().copied().collect();
        let (su, sv) = (StateVector::new(g, u).unwrap(), StateVector::new(g, v).unwrap());
        prop_assert_eq!(inner_product(&su, &sv).unwrap(), inner_product(&sv, &su).unwrap());
    }

    #[test]
    fn cutoff_stays_in_unit_interval(eps_prime in 0.05f64..0.9, t in 0.0f64..2.0) {
        let phi = CutoffFunction::new(eps_prime, 2.0).unwrap();
        let v = phi.value(t);
        prop_assert!((0.0..=1.0).contains(&v));
        if t <= eps_prime {
            prop_assert_eq!(v, 1.0);
        }
        if t >= 2.0 - eps_prime {
            prop_assert_eq!(v, 0.0);
        }
        prop_assert!(phi.derivative(t) <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn observed_ratio_is_at_least_one(u in state(16), a in -0.9f64..0.0, w in 0.1f64..0.9) {
        let g = Grid::symmetric(1.0, 16).unwrap();
        let region = (a, (a + w).min(1.0));
        prop_assume!(g.mask(region.0, region.1).iter().any(|&m| m));
        prop_assume!(u.iter().any(|v| *v != 0.0));
        let gr = assemble_gramians(&g, 0.5, 32, region).unwrap();
        prop_assert!(gr.ratio(&u, 0.0).unwrap() >= 1.0 - 1e-12);
    }
}
