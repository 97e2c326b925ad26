use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use sublinear_core::domain::sample;
use sublinear_core::linalg::principal_eigenpair;
use sublinear_core::nonlinear::{energy, ground_state, SolverOptions};
use sublinear_core::oracles::{brute_force_ground_state, exact_example, BruteForceOptions};
use sublinear_core::{build_grid, BoundaryCondition, Geometry, Grid, ScalarField};

/// Smallest eigenvalue of `-Δφ = μ a φ` for `a > 0` from a dense symmetric
/// eigensolve of `(WA)^{-1/2} K (WA)^{-1/2}`.
fn dense_mu(a: &ScalarField, bc: BoundaryCondition) -> f64 {
    let g = a.grid();
    let k = g.stiffness(bc);
    let idx: Vec<usize> = g.unknowns(bc).collect();
    let n = idx.len();
    let s: Vec<f64> = idx.iter().map(|&i| 1.0 / (g.weight(i) * a.values()[i]).sqrt()).collect();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        m[(r, r)] = k.diag[r] * s[r] * s[r];
        if r + 1 < n {
            let v = k.off[r] * s[r] * s[r + 1];
            m[(r, r + 1)] = v;
            m[(r + 1, r)] = v;
        }
    }
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn principal_eigenvalue_matches_dense_solver() {
    let cases: [(Geometry, BoundaryCondition); 3] = [
        (Geometry::Line { lo: 0.0, hi: PI }, BoundaryCondition::Dirichlet),
        (Geometry::Radial { radius: 1.0, dim: 3 }, BoundaryCondition::Dirichlet),
        (Geometry::Radial { radius: 2.0, dim: 2 }, BoundaryCondition::Dirichlet),
    ];
    for (geometry, bc) in cases {
        let g = build_grid(geometry, 63).unwrap();
        let a = sample(|x| 1.0 + 0.5 * x.cos(), &g).unwrap();
        let mu = principal_eigenpair(&a, bc).unwrap().mu;
        let dense = dense_mu(&a, bc);
        assert!((mu - dense).abs() <= 1e-9 * dense, "{geometry:?}: {mu} vs {dense}");
    }
}

#[test]
fn radial_dirichlet_eigenvalue_matches_bessel_zero() {
    // first zero of j_0 in three dimensions is π, so μ = π² on the unit ball
    let g: Grid = build_grid(Geometry::Radial { radius: 1.0, dim: 3 }, 1023).unwrap();
    let mu = principal_eigenpair(&ScalarField::constant(g, 1.0), BoundaryCondition::Dirichlet).unwrap().mu;
    assert!((mu - PI * PI).abs() < 1e-4 * PI * PI, "{mu}");
}

#[test]
fn brute_force_beats_sampled_exact_solution() {
    let g = build_grid(Geometry::Line { lo: 0.0, hi: PI }, 31).unwrap();
    let bc = BoundaryCondition::Dirichlet;
    for q in [0.3, 0.5] {
        let pair = exact_example(q, &g).unwrap();
        let exact_energy = energy(q, &pair.a, &pair.u, bc).unwrap();
        let brute = brute_force_ground_state(q, &pair.a, bc, &BruteForceOptions { starts: 16, ..Default::default() }).unwrap();
        assert!(brute.energy <= exact_energy + 1e-12, "q = {q}: {} > {exact_energy}", brute.energy);
        let main = ground_state(q, &pair.a, bc, &SolverOptions::default()).unwrap();
        assert!((main.energy - brute.energy).abs() <= 1e-8 * brute.energy.abs().max(1.0));
    }
}
