//! Uniform grids on an interval or a ball (radial), nodal fields, quadrature
//! and the discrete Laplacian.
//!
//! Every operator here is assembled from two ingredients: edge conductances
//! `c_e` (edge `e` joins nodes `e` and `e + 1`) and nodal quadrature weights
//! `w_i`. The stiffness matrix is `K = sum_e c_e (u_{e+1} - u_e)^2 / 2` in
//! quadratic-form sense and `-Δu = K u / w`. On a line this is the usual
//! three-point stencil with trapezoid weights. On a ball it is the
//! conservative form of `u'' + (N-1)/r u'` with dual-cell volumes, which
//! reduces to `Δu(0) = N u''(0)` at the centre with ghost symmetry.

use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::SymTridiag;
use crate::weights::omega_sphere;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// The interval `[lo, hi]`.
    Line { lo: f64, hi: f64 },
    /// The ball of the given radius in `R^dim`, for radial functions.
    Radial { radius: f64, dim: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    geometry: Geometry,
    n_interior: usize,
    h: f64,
}

pub fn build_grid(geometry: Geometry, n_interior: usize) -> Result<Grid> {
    if n_interior < 3 {
        return Err(Error::TooFewNodes(n_interior));
    }
    let h = match geometry {
        Geometry::Line { lo, hi } => {
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                return Err(Error::DegenerateInterval { lo, hi });
            }
            (hi - lo) / (n_interior + 1) as f64
        }
        Geometry::Radial { radius, dim } => {
            if !(radius.is_finite() && radius > 0.0) || dim < 1 {
                return Err(Error::InvalidRadial { radius, dim });
            }
            radius / (n_interior + 1) as f64
        }
    };
    Ok(Grid {
        geometry,
        n_interior,
        h,
    })
}

impl Grid {
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total node count, boundary nodes included.
    pub fn len(&self) -> usize {
        self.n_interior + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` (`x` on a line, `r` on a ball).
    pub fn coord(&self, i: usize) -> f64 {
        match self.geometry {
            Geometry::Line { lo, hi } => {
                if i == self.len() - 1 {
                    hi
                } else {
                    lo + i as f64 * self.h
                }
            }
            Geometry::Radial { radius, .. } => {
                if i == self.len() - 1 {
                    radius
                } else {
                    i as f64 * self.h
                }
            }
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.coord(i)).collect()
    }

    /// Spatial dimension (1 for a line).
    pub fn dim(&self) -> u32 {
        match self.geometry {
            Geometry::Line { .. } => 1,
            Geometry::Radial { dim, .. } => dim,
        }
    }

    /// Diameter of the physical domain.
    pub fn diameter(&self) -> f64 {
        match self.geometry {
            Geometry::Line { lo, hi } => hi - lo,
            Geometry::Radial { radius, .. } => 2.0 * radius,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.geometry, Geometry::Radial { .. })
    }

    /// Distance of node `i` to the boundary of the physical domain.
    pub fn boundary_distance(&self, i: usize) -> f64 {
        match self.geometry {
            Geometry::Line { lo, hi } => {
                let x = self.coord(i);
                (x - lo).min(hi - x)
            }
            Geometry::Radial { radius, .. } => radius - self.coord(i),
        }
    }

    /// Nodes carrying unknowns for the given boundary condition.
    pub fn unknowns(&self, bc: BoundaryCondition) -> Range<usize> {
        let last = self.len() - 1;
        match (self.geometry, bc) {
            (Geometry::Line { .. }, BoundaryCondition::Dirichlet) => 1..last,
            (Geometry::Radial { .. }, BoundaryCondition::Dirichlet) => 0..last,
            (_, BoundaryCondition::Neumann) => 0..last + 1,
        }
    }

    /// Whether node `i` carries a homogeneous Dirichlet value.
    pub fn is_dirichlet_node(&self, i: usize, bc: BoundaryCondition) -> bool {
        !self.unknowns(bc).contains(&i)
    }

    /// Conductance of edge `e` (between nodes `e` and `e + 1`).
    pub fn conductance(&self, e: usize) -> f64 {
        match self.geometry {
            Geometry::Line { .. } => 1.0 / self.h,
            Geometry::Radial { dim, .. } => {
                let mid = 0.5 * (self.coord(e) + self.coord(e + 1));
                omega_sphere(dim) * mid.powi(dim as i32 - 1) / self.h
            }
        }
    }

    /// Quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let last = self.len() - 1;
        match self.geometry {
            Geometry::Line { .. } => {
                if i == 0 || i == last {
                    0.5 * self.h
                } else {
                    self.h
                }
            }
            Geometry::Radial { dim, radius } => {
                let lo = if i == 0 { 0.0 } else { self.coord(i) - 0.5 * self.h };
                let hi = if i == last {
                    radius
                } else {
                    self.coord(i) + 0.5 * self.h
                };
                let n = dim as i32;
                omega_sphere(dim) * (hi.powi(n) - lo.powi(n)) / dim as f64
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Stiffness matrix restricted to the unknowns of `bc`.
    pub fn stiffness(&self, bc: BoundaryCondition) -> SymTridiag {
        let range = self.unknowns(bc);
        let mut diag = Vec::with_capacity(range.len());
        let mut off = Vec::with_capacity(range.len().saturating_sub(1));
        for i in range.clone() {
            let mut d = 0.0;
            if i > 0 {
                d += self.conductance(i - 1);
            }
            if i + 1 < self.len() {
                d += self.conductance(i);
            }
            diag.push(d);
            if i + 1 < range.end {
                off.push(-self.conductance(i));
            }
        }
        SymTridiag::new(diag, off)
    }

    /// `K u` at every node; zero at Dirichlet nodes. Dirichlet values are
    /// taken as 0 whatever is stored in `u`.
    pub fn stiffness_apply(&self, u: &[f64], bc: BoundaryCondition) -> Vec<f64> {
        let n = self.len();
        let val = |i: usize| {
            if self.is_dirichlet_node(i, bc) {
                0.0
            } else {
                u[i]
            }
        };
        let mut out = vec![0.0; n];
        for i in self.unknowns(bc) {
            // flux form keeps the differences exact for nearby values
            let mut s = 0.0;
            if i > 0 {
                s += self.conductance(i - 1) * (val(i) - val(i - 1));
            }
            if i + 1 < n {
                s += self.conductance(i) * (val(i) - val(i + 1));
            }
            out[i] = s;
        }
        out
    }

    /// Dirichlet energy `sum_e c_e (u_{e+1} - u_e)^2`, i.e. `∫ |∇u|^2`.
    pub fn gradient_energy(&self, u: &[f64], bc: BoundaryCondition) -> f64 {
        let val = |i: usize| {
            if self.is_dirichlet_node(i, bc) {
                0.0
            } else {
                u[i]
            }
        };
        (0..self.len() - 1)
            .map(|e| {
                let d = val(e + 1) - val(e);
                self.conductance(e) * d * d
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index,
                coord: grid.coord(index),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn positive_part(&self) -> Self {
        self.map_unchecked(|v| v.max(0.0))
    }

    pub fn negative_part(&self) -> Self {
        self.map_unchecked(|v| (-v).max(0.0))
    }

    pub(crate) fn map_unchecked(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn ensure_grid(&self, grid: &Grid) -> Result<()> {
        if &self.grid == grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Max-norm distance to another field on the same grid.
    pub fn distance_inf(&self, other: &ScalarField) -> Result<f64> {
        other.ensure_grid(&self.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        other.ensure_grid(&self.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        ))
    }
}

/// Samples a pointwise function of the node coordinate.
pub fn sample(expr: impl Fn(f64) -> f64, grid: &Grid) -> Result<ScalarField> {
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.coord(i);
            let v = expr(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { index: i, coord: x })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalarField::from_raw(*grid, values))
}

/// `∫_Ω f`. Trapezoid on a line; dual-cell rule against `ω_{N-1} r^{N-1}` on
/// a ball.
pub fn integrate(field: &ScalarField) -> f64 {
    let grid = field.grid();
    field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| grid.weight(i) * v)
        .sum()
}

/// Discrete `Δu`. Dirichlet nodes carry 0.
pub fn apply_laplacian(u: &ScalarField, bc: BoundaryCondition) -> ScalarField {
    let grid = *u.grid();
    let ku = grid.stiffness_apply(u.values(), bc);
    let values = ku
        .iter()
        .enumerate()
        .map(|(i, k)| {
            if grid.is_dirichlet_node(i, bc) {
                0.0
            } else {
                -k / grid.weight(i)
            }
        })
        .collect();
    ScalarField::from_raw(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(n: usize) -> Grid {
        build_grid(Geometry::Line { lo: 0.0, hi: PI }, n).unwrap()
    }

    #[test]
    fn grid_spacing() {
        assert!((line(3).h() - PI / 4.0).abs() < 1e-15);
        let g = build_grid(Geometry::Radial { radius: 1.0, dim: 3 }, 9).unwrap();
        assert!((g.h() - 0.1).abs() < 1e-15);
        assert_eq!(g.len(), 11);
        assert_eq!(g.coord(10), 1.0);
    }

    #[test]
    fn grid_errors() {
        assert_eq!(
            build_grid(Geometry::Line { lo: 1.0, hi: 1.0 }, 8),
            Err(Error::DegenerateInterval { lo: 1.0, hi: 1.0 })
        );
        assert_eq!(
            build_grid(Geometry::Line { lo: 0.0, hi: 1.0 }, 2),
            Err(Error::TooFewNodes(2))
        );
        assert!(build_grid(Geometry::Radial { radius: 1.0, dim: 0 }, 8).is_err());
        assert!(build_grid(Geometry::Radial { radius: -1.0, dim: 2 }, 8).is_err());
    }

    #[test]
    fn sample_sin_peak() {
        let g = line(63);
        let f = sample(f64::sin, &g).unwrap();
        assert!((f.values()[32] - 1.0).abs() < 1e-15);
        assert!(sample(|x| 1.0 / (x - PI / 2.0), &line(3)).is_err());
    }

    #[test]
    fn integrals() {
        let g = line(2047);
        let f = sample(f64::sin, &g).unwrap();
        assert!((integrate(&f) - 2.0).abs() < 1e-5);
        let b = build_grid(Geometry::Radial { radius: 1.0, dim: 3 }, 2047).unwrap();
        let one = ScalarField::constant(b, 1.0);
        assert!((integrate(&one) - 4.0 * PI / 3.0).abs() < 1e-4);
        assert_eq!(integrate(&ScalarField::zeros(b)), 0.0);
    }

    #[test]
    fn radial_integral_of_r2() {
        // ∫_{B_1} |x|^2 dx = 4π/5 in 3D, 2π/4 in 2D
        for (dim, exact) in [(3u32, 4.0 * PI / 5.0), (2, PI / 2.0)] {
            let g = build_grid(Geometry::Radial { radius: 1.0, dim }, 1023).unwrap();
            let f = sample(|r| r * r, &g).unwrap();
            assert!((integrate(&f) - exact).abs() < 1e-5, "dim {dim}");
        }
    }

    #[test]
    fn laplacian_of_parabola_is_exact() {
        let g = line(63);
        let u = sample(|x| x * (PI - x) / 2.0, &g).unwrap();
        let lap = apply_laplacian(&u, BoundaryCondition::Dirichlet);
        for i in g.unknowns(BoundaryCondition::Dirichlet) {
            assert!((-lap.values()[i] - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn laplacian_of_constant_neumann() {
        for geometry in [
            Geometry::Line { lo: -1.0, hi: 2.0 },
            Geometry::Radial { radius: 2.0, dim: 3 },
        ] {
            let g = build_grid(geometry, 31).unwrap();
            let u = ScalarField::constant(g, 3.7);
            let lap = apply_laplacian(&u, BoundaryCondition::Neumann);
            assert!(lap.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn radial_laplacian_of_r2_is_2n() {
        for dim in 1..=4 {
            let g = build_grid(Geometry::Radial { radius: 1.0, dim }, 31).unwrap();
            let u = sample(|r| r * r, &g).unwrap();
            let lap = apply_laplacian(&u, BoundaryCondition::Dirichlet);
            // interior nodes only; Dirichlet treats u(R) as 0
            for i in 0..g.len() - 2 {
                let expect = 2.0 * dim as f64;
                assert!(
                    (lap.values()[i] - expect).abs() < 1e-9,
                    "dim {dim} node {i}: {}",
                    lap.values()[i]
                );
            }
        }
    }

    #[test]
    fn laplacian_second_order_refinement() {
        // radial u = cos(r) in 3D: Δu = -cos r - 2 sin r / r
        let err = |n: usize| {
            let g = build_grid(Geometry::Radial { radius: 1.0, dim: 3 }, n).unwrap();
            let u = sample(|r| r.cos(), &g).unwrap();
            let lap = apply_laplacian(&u, BoundaryCondition::Neumann);
            (1..g.len() - 1)
                .map(|i| {
                    let r = g.coord(i);
                    (lap.values()[i] - (-r.cos() - 2.0 * r.sin() / r)).abs()
                })
                .fold(0.0_f64, f64::max)
        };
        let ratio = err(63) / err(127);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn integration_by_parts_is_symmetric() {
        let g = build_grid(Geometry::Radial { radius: 1.5, dim: 2 }, 40).unwrap();
        let bc = BoundaryCondition::Dirichlet;
        let u = sample(|r| (1.5 - r) * (1.0 + r * r), &g).unwrap();
        let v = sample(|r| (2.25 - r * r).sin(), &g).unwrap();
        let lu = apply_laplacian(&u, bc);
        let lv = apply_laplacian(&v, bc);
        let lhs: f64 = (0..g.len()).map(|i| lu.values()[i] * v.values()[i] * g.weight(i)).sum();
        let rhs: f64 = (0..g.len()).map(|i| lv.values()[i] * u.values()[i] * g.weight(i)).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
