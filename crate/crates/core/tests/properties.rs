use std::f64::consts::PI;

use proptest::prelude::*;
use sublinear_core::analysis::{classify, v_transform, Thresholds};
use sublinear_core::continuation::t_star;
use sublinear_core::domain::{apply_laplacian, sample};
use sublinear_core::linalg::principal_eigenpair;
use sublinear_core::nonlinear::{energy, ground_state_with_starts, residual_inf, SolverOptions};
use sublinear_core::oracles::exact_example;
use sublinear_core::{build_grid, BoundaryCondition, Geometry, Grid, ScalarField};

fn zero_pi(n: usize) -> Grid {
    build_grid(Geometry::Line { lo: 0.0, hi: PI }, n).unwrap()
}

fn cosine_weight(g: &Grid, c: &[f64]) -> ScalarField {
    sample(|x| c[0] + c[1] * x.cos() + c[2] * (2.0 * x).cos(), g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn classification_is_scale_invariant(q in 0.2f64..0.8, c in -3.0f64..3.0) {
        let g = zero_pi(127);
        let u = exact_example(q, &g).unwrap().u;
        let th = Thresholds::default();
        let base = classify(&u, BoundaryCondition::Dirichlet, &th).unwrap().kind;
        let scaled = classify(&u.scale(10f64.powf(c)), BoundaryCondition::Dirichlet, &th).unwrap().kind;
        prop_assert_eq!(base, scaled);
    }

    #[test]
    fn v_transform_preserves_order(q in 0.05f64..0.95, values in prop::collection::vec(0.0f64..1e3, 17)) {
        let g = zero_pi(15);
        let u = ScalarField::new(g, values.clone()).unwrap();
        let v = v_transform(&u, q);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] <= values[j] {
                    prop_assert!(v.values()[i] <= v.values()[j]);
                }
            }
        }
    }

    #[test]
    fn t_star_scales_inversely_with_phi(c in 0.05f64..20.0, shift in 0.1f64..0.6) {
        let g = zero_pi(127);
        let a = sample(|x| x.cos() - shift, &g).unwrap();
        let phi = principal_eigenpair(&a, BoundaryCondition::Neumann).unwrap().phi;
        let t1 = t_star(&a, &phi).unwrap();
        let tc = t_star(&a, &phi.scale(c)).unwrap();
        prop_assert!((tc * c - t1).abs() <= 1e-10 * t1);
        let ta = t_star(&a.scale(c), &phi).unwrap();
        prop_assert!((ta - t1).abs() <= 1e-10 * t1);
    }

    #[test]
    fn eigenvalue_scales_inversely_with_weight(c in 0.1f64..10.0, shift in -0.5f64..0.5) {
        let g = zero_pi(63);
        let a = sample(|x| x.cos() + shift, &g).unwrap();
        let m1 = principal_eigenpair(&a, BoundaryCondition::Dirichlet).unwrap().mu;
        let mc = principal_eigenpair(&a.scale(c), BoundaryCondition::Dirichlet).unwrap().mu;
        prop_assert!((mc * c - m1).abs() <= 1e-9 * m1);
    }

    #[test]
    fn stiffness_is_symmetric(u in prop::collection::vec(-1.0f64..1.0, 33), v in prop::collection::vec(-1.0f64..1.0, 33),
                              radial in any::<bool>(), neumann in any::<bool>()) {
        let geometry = if radial { Geometry::Radial { radius: 1.0, dim: 3 } } else { Geometry::Line { lo: 0.0, hi: 2.0 } };
        let g = build_grid(geometry, 31).unwrap();
        let bc = if neumann { BoundaryCondition::Neumann } else { BoundaryCondition::Dirichlet };
        let mut u = u;
        let mut v = v;
        for i in 0..g.len() {
            if g.is_dirichlet_node(i, bc) {
                u[i] = 0.0;
                v[i] = 0.0;
            }
        }
        let ku = g.stiffness_apply(&u, bc);
        let kv = g.stiffness_apply(&v, bc);
        let lhs: f64 = ku.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs: f64 = kv.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ground_state_is_lowest_converged_candidate(c0 in -2.0f64..2.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0,
                                                  q in 0.2f64..0.8, seed in 0u64..1000) {
        let g = zero_pi(63);
        let a = cosine_weight(&g, &[c0, c1, c2]);
        let opts = SolverOptions { seed, ..Default::default() };
        let bc = BoundaryCondition::Dirichlet;
        let gs = ground_state_with_starts(q, &a, bc, &opts, &[]).unwrap();
        let best = &gs.best;
        prop_assert!(best.u.min() >= 0.0);
        prop_assert_eq!(best.u.values()[0], 0.0);
        prop_assert_eq!(*best.u.values().last().unwrap(), 0.0);
        if best.converged {
            let res = residual_inf(q, &a, &best.u, bc).unwrap();
            prop_assert!(res <= opts.tol_res * best.u.norm_inf().max(1.0));
            prop_assert!((energy(q, &a, &best.u, bc).unwrap() - best.energy).abs() <= 1e-12 * best.energy.abs().max(1.0));
            for cand in gs.candidates.iter().filter(|c| c.converged) {
                prop_assert!(best.energy <= cand.energy);
            }
        }
    }
}

fn example_residual(q: f64, n: usize) -> f64 {
    let g = zero_pi(n);
    let p = exact_example(q, &g).unwrap();
    residual_inf(q, &p.a, &p.u, BoundaryCondition::Dirichlet).unwrap()
}

#[test]
fn smooth_residuals_are_second_order() {
    for q in [0.5, 0.7] {
        let ratio = example_residual(q, 255) / example_residual(q, 511);
        assert!((3.5..=4.5).contains(&ratio), "q = {q}: ratio {ratio}");
    }
    // -Δ cos(πr/2) in three dimensions
    let err = |n: usize| {
        let g = build_grid(Geometry::Radial { radius: 1.0, dim: 3 }, n).unwrap();
        let u = sample(|r| (PI * r / 2.0).cos(), &g).unwrap();
        let lap = apply_laplacian(&u, BoundaryCondition::Dirichlet);
        let exact = |r: f64| {
            let k = PI / 2.0;
            if r == 0.0 {
                -3.0 * k * k
            } else {
                -k * k * (k * r).cos() - 2.0 * k * (k * r).sin() / r
            }
        };
        g.unknowns(BoundaryCondition::Dirichlet)
            .map(|i| (lap.values()[i] - exact(g.coord(i))).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(255) / err(511);
    assert!((3.5..=4.5).contains(&ratio), "radial ratio {ratio}");
}

/// For `q < 1/3` the closed form `sin^r x / r` has `r - 2 < 2`, so the fourth
/// derivative blows up at the ends and the max-norm order drops to `r - 2`.
#[test]
fn rough_example_residual_has_reduced_order() {
    let q = 0.3;
    let order = 2.0 * q / (1.0 - q);
    let ratio = example_residual(q, 255) / example_residual(q, 511);
    let expected = 2f64.powf(order);
    assert!((ratio / expected - 1.0).abs() < 0.1, "ratio {ratio}, expected {expected}");
}
