//! Tridiagonal solves, the Poisson solution operator, principal eigenpairs
//! for indefinite weights, and the linearized stability eigenvalue.

use crate::domain::{integrate, BoundaryCondition, Grid, ScalarField};
use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        debug_assert!(diag.is_empty() || off.len() + 1 == diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `self + diag(shift)`.
    pub fn add_diagonal(&self, shift: &[f64]) -> Self {
        Self {
            diag: self.diag.iter().zip(shift).map(|(d, s)| d + s).collect(),
            off: self.off.clone(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Thomas algorithm. Fails on an exactly zero pivot.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularPivot(0));
        }
        if n > 1 {
            c[0] = self.off[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.off[i - 1] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularPivot(i));
            }
            if i + 1 < n {
                c[i] = self.off[i] / pivot;
            }
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Number of negative pivots of the LDLᵀ factorization of
    /// `self - sigma * diag(mass)`, i.e. the number of eigenvalues of the
    /// pencil `(self, mass)` below `sigma` when `mass > 0`, and the inertia of
    /// `self - sigma * diag(mass)` in general (Sylvester).
    pub fn negative_pivots(&self, sigma: f64, mass: &[f64]) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut d = self.diag[0] - sigma * mass[0];
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let prev = if d == 0.0 { f64::MIN_POSITIVE } else { d };
            d = self.diag[i] - sigma * mass[i] - self.off[i - 1] * self.off[i - 1] / prev;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }
}

pub(crate) fn extend(unknown_values: &[f64], grid: &Grid, bc: BoundaryCondition) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    let range = grid.unknowns(bc);
    out[range].copy_from_slice(unknown_values);
    out
}

/// `S(f)`: solves `-Δu = f`, `u = 0` on the boundary.
pub fn solve_poisson(f: &ScalarField, bc: BoundaryCondition) -> Result<ScalarField> {
    if bc != BoundaryCondition::Dirichlet {
        return Err(Error::UnsupportedBc(
            "Poisson solves need Dirichlet data (Neumann compatibility is not handled)",
        ));
    }
    let grid = *f.grid();
    let k = grid.stiffness(bc);
    let rhs: Vec<f64> = grid
        .unknowns(bc)
        .map(|i| grid.weight(i) * f.values()[i])
        .collect();
    let u = k.solve(&rhs)?;
    Ok(ScalarField::from_raw(grid, extend(&u, &grid, bc)))
}

/// `‖S‖` as an operator on `L^∞`, which is `‖S(1)‖_∞` because the discrete
/// inverse is entrywise nonnegative.
pub fn operator_norm_s(grid: &Grid) -> f64 {
    let one = ScalarField::constant(*grid, 1.0);
    solve_poisson(&one, BoundaryCondition::Dirichlet)
        .expect("stiffness matrix is an M-matrix")
        .norm_inf()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub mu: f64,
    pub phi: ScalarField,
}

const EIGEN_LOWER: f64 = 1e-8;
const EIGEN_REL_TOL: f64 = 1e-12;

/// Principal positive eigenpair of `-Δφ = μ a φ`.
///
/// `μ` is located by bisection on the inertia of `K - μ W a`: the count of
/// negative pivots jumps from 0 to 1 exactly at the principal eigenvalue.
/// The eigenfunction then comes from inverse iteration at that shift.
pub fn principal_eigenpair(a: &ScalarField, bc: BoundaryCondition) -> Result<EigenPair> {
    let grid = *a.grid();
    let range = grid.unknowns(bc);
    let k = grid.stiffness(bc);
    let mass: Vec<f64> = range
        .clone()
        .map(|i| grid.weight(i) * a.values()[i])
        .collect();
    if mass.iter().all(|m| *m <= 0.0) {
        return Err(Error::NoPositiveEigenvalue);
    }
    let count = |mu: f64| k.negative_pivots(mu, &mass);

    let mut lo = EIGEN_LOWER;
    if count(lo) != 0 {
        // Neumann with ∫a >= 0: only the trivial eigenvalue is principal
        return Err(Error::NoPositiveEigenvalue);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while count(hi) == 0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 || !hi.is_finite() {
            return Err(Error::NoPositiveEigenvalue);
        }
    }
    for _ in 0..400 {
        if hi - lo <= EIGEN_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match count(mid) {
            0 => lo = mid,
            _ => hi = mid,
        }
    }
    if hi - lo > EIGEN_REL_TOL * hi {
        return Err(Error::NonconvergedBisection(format!("bracket [{lo}, {hi}]")));
    }
    if count(hi) > 1 {
        log::warn!("inertia jumped by {} across the principal eigenvalue", count(hi));
    }
    let mu = 0.5 * (lo + hi);

    let w: Vec<f64> = range.clone().map(|i| grid.weight(i)).collect();
    let shifted = k.add_diagonal(&mass.iter().map(|m| -mu * m).collect::<Vec<_>>());
    let mut x = vec![1.0; range.len()];
    for _ in 0..4 {
        let rhs: Vec<f64> = x.iter().zip(&w).map(|(xi, wi)| xi * wi).collect();
        let y = match shifted.solve(&rhs) {
            Ok(y) => y,
            Err(_) => {
                // exact hit: perturb the shift by the bracket width
                let nudged =
                    k.add_diagonal(&mass.iter().map(|m| -(mu * (1.0 - 1e-13)) * m).collect::<Vec<_>>());
                nudged.solve(&rhs)?
            }
        };
        let norm = y.iter().zip(&w).map(|(v, wi)| wi * v * v).sum::<f64>().sqrt();
        let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        x = y.iter().map(|v| sign * v / norm).collect();
    }
    for v in x.iter_mut() {
        // round-off negatives in exponentially small tails
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let phi = ScalarField::from_raw(grid, extend(&x, &grid, bc));
    let norm = integrate(&phi.map_unchecked(|v| v * v)).sqrt();
    Ok(EigenPair {
        mu,
        phi: phi.scale(1.0 / norm),
    })
}

/// Max-norm residual `‖-Δφ - μ a φ‖_∞` over the unknown nodes.
pub fn eigen_residual(pair: &EigenPair, a: &ScalarField, bc: BoundaryCondition) -> f64 {
    let grid = *a.grid();
    let ku = grid.stiffness_apply(pair.phi.values(), bc);
    grid.unknowns(bc)
        .map(|i| (ku[i] / grid.weight(i) - pair.mu * a.values()[i] * pair.phi.values()[i]).abs())
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue `γ` of `(K + diag(potential_mass)) x = γ W x` on the
/// unknowns, by Sturm bisection.
pub(crate) fn smallest_generalized(k: &SymTridiag, potential_mass: &[f64], w: &[f64]) -> f64 {
    let m = k.add_diagonal(potential_mass);
    // Gershgorin bounds for W^{-1/2} M W^{-1/2}
    let n = m.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += m.off[i - 1].abs() / (w[i] * w[i - 1]).sqrt();
        }
        if i + 1 < n {
            r += m.off[i].abs() / (w[i] * w[i + 1]).sqrt();
        }
        let d = m.diag[i] / w[i];
        lo = lo.min(d - r);
        hi = hi.max(d + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    for _ in 0..300 {
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if m.negative_pivots(mid, w) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Relative clamp applied to `u` inside `u^{q-1}`.
pub const POTENTIAL_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedEigen {
    pub gamma1: f64,
    pub clamp: f64,
    pub clamped_nodes: usize,
}

/// First eigenvalue of `-Δ - q a u^{q-1}` with the boundary condition `bc`.
pub fn linearized_eigenvalue(
    q: f64,
    u: &ScalarField,
    a: &ScalarField,
    bc: BoundaryCondition,
) -> Result<LinearizedEigen> {
    let grid = *u.grid();
    a.ensure_grid(&grid)?;
    if u.min() < -1e-12 * u.norm_inf().max(1.0) {
        return Err(Error::NegativeValues(u.min()));
    }
    let unorm = u.norm_inf();
    if unorm == 0.0 {
        return Err(Error::ZeroField);
    }
    let floor = POTENTIAL_CLAMP * unorm;
    let range = grid.unknowns(bc);
    let mut clamped_nodes = 0;
    let potential: Vec<f64> = range
        .clone()
        .map(|i| {
            let ui = u.values()[i];
            let base = if ui <= floor {
                clamped_nodes += 1;
                floor
            } else {
                ui
            };
            -grid.weight(i) * q * a.values()[i] * base.powf(q - 1.0)
        })
        .collect();
    let w: Vec<f64> = range.map(|i| grid.weight(i)).collect();
    let gamma1 = smallest_generalized(&grid.stiffness(bc), &potential, &w);
    Ok(LinearizedEigen {
        gamma1,
        clamp: POTENTIAL_CLAMP,
        clamped_nodes,
    })
}

/// Dense `W^{-1/2} (K + P) W^{-1/2}` for cross-checks.
#[doc(hidden)]
pub fn symmetric_scaled(k: &SymTridiag, potential_mass: &[f64], w: &[f64]) -> SymTridiag {
    let n = k.len();
    let diag = (0..n).map(|i| (k.diag[i] + potential_mass[i]) / w[i]).collect();
    let off = (0..n.saturating_sub(1))
        .map(|i| k.off[i] / (w[i] * w[i + 1]).sqrt())
        .collect();
    SymTridiag::new(diag, off)
}
