//! Positivity classification, positivity-set sweeps, uniqueness checks and
//! dead-core prediction.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{BoundaryCondition, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::{linearized_eigenvalue, operator_norm_s};
use crate::nonlinear::{ground_state, ground_state_with_starts, Ball, SolverOptions};
use crate::weights::{outward_slopes, omega_sphere};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Absolute, relative to a weight of unit size.
    pub trivial: f64,
    pub dead_core: f64,
    pub positive: f64,
    pub derivative: f64,
    pub uniqueness: f64,
    /// Smallest dead-core run as a fraction of the node count (at least 3
    /// nodes in any case).
    pub dead_core_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            trivial: 1e-10,
            dead_core: 1e-7,
            positive: 1e-8,
            derivative: 1e-6,
            uniqueness: 1e-6,
            dead_core_fraction: 0.02,
        }
    }
}

impl Thresholds {
    pub fn min_dead_core_run(&self, nodes: usize) -> usize {
        ((self.dead_core_fraction * nodes as f64).ceil() as usize).max(3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassKind {
    Trivial,
    /// Inclusive node-index intervals where `u` vanishes to threshold.
    DeadCore { regions: Vec<(usize, usize)> },
    PositiveNotStrong,
    StronglyPositive,
}

impl ClassKind {
    pub fn label(&self) -> &'static str {
        match self {
            ClassKind::Trivial => "trivial",
            ClassKind::DeadCore { .. } => "dead_core",
            ClassKind::PositiveNotStrong => "positive_not_strong",
            ClassKind::StronglyPositive => "strongly_positive",
        }
    }

    pub fn is_strongly_positive(&self) -> bool {
        matches!(self, ClassKind::StronglyPositive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: ClassKind,
    pub min_interior: f64,
    /// Outward normal derivatives at the boundary (Dirichlet only).
    pub boundary_derivatives: Vec<f64>,
}

pub fn classify(u: &ScalarField, bc: BoundaryCondition, th: &Thresholds) -> Result<Classification> {
    let grid = u.grid();
    let norm = u.norm_inf();
    if u.min() < -1e-12 * norm.max(1.0) {
        return Err(Error::NegativeValues(u.min()));
    }
    let interior = grid.unknowns(BoundaryCondition::Dirichlet);
    let scan = match bc {
        BoundaryCondition::Dirichlet => interior.clone(),
        BoundaryCondition::Neumann => 0..grid.len(),
    };
    let min_interior = scan.clone().map(|i| u.values()[i]).fold(f64::INFINITY, f64::min);
    let boundary_derivatives = match bc {
        BoundaryCondition::Dirichlet => outward_slopes(u),
        BoundaryCondition::Neumann => Vec::new(),
    };
    let kind = if norm <= th.trivial {
        ClassKind::Trivial
    } else {
        let regions = dead_core_runs(u, th);
        if !regions.is_empty() {
            ClassKind::DeadCore { regions }
        } else {
            let strong = match bc {
                BoundaryCondition::Dirichlet => {
                    let bound = th.derivative * norm / grid.diameter();
                    min_interior > 0.0 && boundary_derivatives.iter().all(|d| *d <= -bound)
                }
                BoundaryCondition::Neumann => min_interior > th.positive * norm,
            };
            if strong {
                ClassKind::StronglyPositive
            } else {
                ClassKind::PositiveNotStrong
            }
        }
    };
    Ok(Classification {
        kind,
        min_interior,
        boundary_derivatives,
    })
}

fn dead_core_runs(u: &ScalarField, th: &Thresholds) -> Vec<(usize, usize)> {
    let v = u.values();
    let cut = th.dead_core * u.norm_inf();
    let min_run = th.min_dead_core_run(v.len());
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        if v[i] <= cut {
            let s = i;
            while i < v.len() && v[i] <= cut {
                i += 1;
            }
            if i - s >= min_run {
                out.push((s, i - 1));
            }
        } else {
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub q: f64,
    pub kind: ClassKind,
    pub norm_inf: f64,
    pub min_u: f64,
    pub energy: f64,
    pub gamma1: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub q_grid: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub q_hat: Option<f64>,
    pub interval_ok: bool,
}

/// Solve and classify at one exponent.
pub fn sweep_point(q: f64, a: &ScalarField, bc: BoundaryCondition, opts: &SolverOptions) -> Result<SweepPoint> {
    let res = ground_state(q, a, bc, opts)?;
    let th = Thresholds::default();
    let class = match res.classification {
        Some(c) => c,
        None => classify(&res.u, bc, &th)?,
    };
    let gamma1 = if res.u.norm_inf() > th.trivial {
        linearized_eigenvalue(q, &res.u, a, bc).ok().map(|l| l.gamma1)
    } else {
        None
    };
    Ok(SweepPoint {
        q,
        kind: class.kind,
        norm_inf: res.u.norm_inf(),
        min_u: class.min_interior,
        energy: res.energy,
        gamma1,
        converged: res.converged,
    })
}

const Q_HAT_RESOLUTION: f64 = 1e-3;

pub fn positivity_sweep(
    a: &ScalarField,
    bc: BoundaryCondition,
    q_grid: &[f64],
    opts: &SolverOptions,
) -> Result<SweepReport> {
    positivity_sweep_with(a, bc, q_grid, opts, true)
}

/// Sweep with optional bisection refinement of `q_hat`.
pub fn positivity_sweep_with(
    a: &ScalarField,
    bc: BoundaryCondition,
    q_grid: &[f64],
    opts: &SolverOptions,
    refine: bool,
) -> Result<SweepReport> {
    if q_grid.is_empty() {
        return Err(Error::OutOfRange("empty q grid".into()));
    }
    if q_grid.iter().any(|q| !(*q > 0.0 && *q < 1.0)) || q_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("q grid must be increasing inside (0, 1)".into()));
    }
    let points = q_grid
        .par_iter()
        .map(|&q| sweep_point(q, a, bc, opts))
        .collect::<Result<Vec<_>>>()?;
    let strong: Vec<bool> = points.iter().map(|p| p.converged && p.kind.is_strongly_positive()).collect();
    let first_strong = strong.iter().position(|&s| s);
    let suffix_start = strong.iter().rposition(|&s| !s).map_or(0, |i| i + 1);
    let interval_ok = match first_strong {
        None => true,
        Some(f) => f == suffix_start,
    };
    let q_hat = if suffix_start >= points.len() {
        None
    } else if suffix_start == 0 {
        Some(q_grid[0])
    } else {
        let (mut lo, mut hi) = (q_grid[suffix_start - 1], q_grid[suffix_start]);
        if refine {
            while hi - lo > Q_HAT_RESOLUTION {
                let mid = 0.5 * (lo + hi);
                let p = sweep_point(mid, a, bc, opts)?;
                if p.converged && p.kind.is_strongly_positive() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        Some(hi)
    };
    Ok(SweepReport {
        q_grid: q_grid.to_vec(),
        points,
        q_hat,
        interval_ok,
    })
}

/// `v = u^{1-q}/(1-q)`.
pub fn v_transform(u: &ScalarField, q: f64) -> ScalarField {
    u.map_unchecked(|x| x.max(0.0).powf(1.0 - q) / (1.0 - q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub max_gap: f64,
    pub consistent: bool,
}

pub fn uniqueness_check(
    u1: &ScalarField,
    u2: &ScalarField,
    _q: f64,
    bc: BoundaryCondition,
) -> Result<UniquenessReport> {
    let grid = u1.grid();
    u2.ensure_grid(grid)?;
    let interior = match bc {
        BoundaryCondition::Dirichlet => grid.unknowns(BoundaryCondition::Dirichlet),
        BoundaryCondition::Neumann => 0..grid.len(),
    };
    for u in [u1, u2] {
        if interior.clone().any(|i| !(u.values()[i] > 0.0)) {
            return Err(Error::NotPositive);
        }
    }
    let max_gap = u1.distance_inf(u2)?;
    let scale = u1.norm_inf().max(u2.norm_inf());
    Ok(UniquenessReport {
        max_gap,
        consistent: max_gap <= Thresholds::default().uniqueness * scale,
    })
}

/// `C_{N,q} = (1-q)² / (2 (N(1-q) + 2q))`.
pub fn c_nq(dim: u32, q: f64) -> f64 {
    let n = dim as f64;
    (1.0 - q).powi(2) / (2.0 * (n * (1.0 - q) + 2.0 * q))
}

/// `(C_{N,q} a_lo |x - x0|²)^{1/(1-q)}` at every node.
pub fn barrier(grid: &Grid, x0: f64, a_lo: f64, q: f64) -> ScalarField {
    let c = c_nq(grid.dim(), q);
    let values = grid
        .coords()
        .iter()
        .map(|x| (c * a_lo * (x - x0).powi(2)).powf(1.0 / (1.0 - q)))
        .collect();
    ScalarField::from_raw(*grid, values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeadCorePrediction {
    pub c_nq: f64,
    pub threshold_ia: f64,
    /// Smallest `a⁻` over the closed ball.
    pub a_lo: f64,
    pub condition_met: bool,
    #[serde(skip)]
    pub barrier: ScalarField,
}

/// Node indices of the closed ball.
pub fn closed_ball_nodes(grid: &Grid, ball: Ball) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| (grid.coord(i) - ball.center).abs() <= ball.radius)
        .collect()
}

pub fn deadcore_predict(a: &ScalarField, ball: Ball, q: f64) -> Result<DeadCorePrediction> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::OutOfRange(format!("q = {q} must lie in (0, 1)")));
    }
    let grid = *a.grid();
    crate::nonlinear::ball_nodes(&grid, ball)?;
    let nodes = closed_ball_nodes(&grid, ball);
    if nodes.iter().any(|&i| a.values()[i] > 0.0) {
        return Err(Error::BallIntersectsPositive);
    }
    let a_lo = nodes.iter().map(|&i| -a.values()[i]).fold(f64::INFINITY, f64::min);
    let c = c_nq(grid.dim(), q);
    let threshold_ia = operator_norm_s(&grid) * a.positive_part().norm_inf() / (ball.radius * ball.radius * c);
    Ok(DeadCorePrediction {
        c_nq: c,
        threshold_ia,
        a_lo,
        condition_met: a_lo >= threshold_ia,
        barrier: barrier(&grid, ball.center, a_lo, q),
    })
}

/// Volume of the ball of radius `r` in `R^dim`.
pub fn ball_volume(dim: u32, r: f64) -> f64 {
    omega_sphere(dim) * r.powi(dim as i32) / dim as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaPoint {
    pub delta: f64,
    pub nontrivial_found: usize,
    pub vanishes_on_core: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSweepReport {
    /// Nodes of `G^ρ = {x ∈ {b2 > 0} : dist(x, ∂G) > ρ}`.
    pub core_nodes: usize,
    pub points: Vec<DeltaPoint>,
    pub delta_first_deadcore: Option<f64>,
}

/// Nodes of `{b2 > 0}` farther than `rho` from every node outside it.
pub fn inner_region(b2: &ScalarField, rho: f64) -> Vec<usize> {
    let grid = b2.grid();
    let xs = grid.coords();
    let outside: Vec<f64> = (0..grid.len()).filter(|&i| b2.values()[i] <= 0.0).map(|i| xs[i]).collect();
    (0..grid.len())
        .filter(|&i| b2.values()[i] > 0.0)
        .filter(|&i| outside.iter().all(|x| (x - xs[i]).abs() > rho))
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn deadcore_delta_sweep(
    b1: &ScalarField,
    b2: &ScalarField,
    q: f64,
    rho: f64,
    deltas: &[f64],
    bc: BoundaryCondition,
    opts: &SolverOptions,
) -> Result<DeltaSweepReport> {
    crate::weights::check_disjoint(b1, b2)?;
    if deltas.windows(2).any(|w| w[0] >= w[1]) || deltas.iter().any(|d| *d < 0.0) {
        return Err(Error::OutOfRange("δ list must be increasing and nonnegative".into()));
    }
    let core = inner_region(b2, rho);
    let th = Thresholds::default();
    let points = deltas
        .par_iter()
        .map(|&delta| {
            let values = b1.values().iter().zip(b2.values()).map(|(p, m)| p - delta * m).collect();
            let a = ScalarField::new(*b1.grid(), values)?;
            let gs = ground_state_with_starts(q, &a, bc, opts, &[])?;
            let nontrivial: Vec<_> = gs.nontrivial().collect();
            let vanishes = nontrivial.iter().all(|c| {
                let cut = th.dead_core * c.u.norm_inf();
                core.iter().all(|&i| c.u.values()[i] <= cut)
            });
            Ok(DeltaPoint {
                delta,
                nontrivial_found: nontrivial.len(),
                vanishes_on_core: vanishes,
                converged: gs.best.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let delta_first_deadcore = points.iter().find(|p| p.vanishes_on_core).map(|p| p.delta);
    Ok(DeltaSweepReport {
        core_nodes: core.len(),
        points,
        delta_first_deadcore,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, sample, Geometry};
    use std::f64::consts::PI;

    fn line(lo: f64, hi: f64, n: usize) -> Grid {
        build_grid(Geometry::Line { lo, hi }, n).unwrap()
    }

    #[test]
    fn classify_examples() {
        let th = Thresholds::default();
        let bc = BoundaryCondition::Dirichlet;
        let g = line(0.0, PI, 2047);
        let ex = sample(|x| x.sin().powi(4) / 4.0, &g).unwrap();
        assert_eq!(classify(&ex, bc, &th).unwrap().kind, ClassKind::PositiveNotStrong);
        let s = sample(|x| x.sin(), &g).unwrap();
        assert_eq!(classify(&s, bc, &th).unwrap().kind, ClassKind::StronglyPositive);
        let wide = line(-1.0, PI + 1.0, 2047);
        let ext = sample(|x| if (0.0..=PI).contains(&x) { x.sin().powi(4) / 4.0 } else { 0.0 }, &wide).unwrap();
        match classify(&ext, bc, &th).unwrap().kind {
            ClassKind::DeadCore { regions } => {
                assert_eq!(regions.len(), 2);
                assert_eq!(regions[0].0, 0);
                assert_eq!(regions[1].1, wide.len() - 1);
            }
            k => panic!("unexpected {k:?}"),
        }
        assert_eq!(classify(&ScalarField::zeros(g), bc, &th).unwrap().kind, ClassKind::Trivial);
        assert!(classify(&ScalarField::constant(g, -1.0), bc, &th).is_err());
    }

    #[test]
    fn v_transform_cases() {
        let g = line(0.0, PI, 127);
        assert!(v_transform(&ScalarField::constant(g, 1.0), 0.5).values().iter().all(|v| (v - 2.0).abs() < 1e-15));
        assert_eq!(v_transform(&ScalarField::zeros(g), 0.5).norm_inf(), 0.0);
        let u = sample(|x| x.sin().powi(4) / 4.0, &g).unwrap();
        let v = v_transform(&u, 0.5);
        for (i, x) in g.coords().iter().enumerate() {
            assert!((v.values()[i] - x.sin().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn uniqueness_cases() {
        let g = line(0.0, PI, 127);
        let u = sample(|x| x.sin(), &g).unwrap();
        let bc = BoundaryCondition::Dirichlet;
        let same = uniqueness_check(&u, &u, 0.5, bc).unwrap();
        assert!(same.consistent && same.max_gap == 0.0);
        let twice = uniqueness_check(&u, &u.scale(2.0), 0.5, bc).unwrap();
        assert!(!twice.consistent);
        assert!((twice.max_gap - u.norm_inf()).abs() < 1e-15);
        assert_eq!(uniqueness_check(&u, &ScalarField::zeros(g), 0.5, bc), Err(Error::NotPositive));
    }

    #[test]
    fn dead_core_constants() {
        assert!((c_nq(1, 0.5) - 1.0 / 12.0).abs() < 1e-15);
        assert!(c_nq(3, 0.999) < 1e-5);
        let g = line(-2.0, 2.0, 399);
        let w = barrier(&g, 0.0, 12.0, 0.5);
        assert!(w.values()[200].abs() < 1e-30);
        let i = g.coords().iter().position(|x| (x - 1.0).abs() < 1e-12).unwrap();
        assert!((w.values()[i] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predict_rejects_positive_ball() {
        let g = line(0.0, PI, 255);
        let a = sample(|x| x.cos(), &g).unwrap();
        assert_eq!(
            deadcore_predict(&a, Ball { center: 0.5, radius: 0.3 }, 0.5).unwrap_err(),
            Error::BallIntersectsPositive
        );
        let p = deadcore_predict(&a, Ball { center: 2.6, radius: 0.4 }, 0.5).unwrap();
        assert!(!p.condition_met);
        let p2 = deadcore_predict(&a, Ball { center: 2.6, radius: 0.4 }, 0.99).unwrap();
        assert!(p2.threshold_ia > p.threshold_ia);
    }

    #[test]
    fn inner_region_shrinks_with_rho() {
        let g = line(0.0, 4.0, 399);
        let b2 = sample(|x| if (1.0..3.0).contains(&x) { 1.0 } else { 0.0 }, &g).unwrap();
        let wide = inner_region(&b2, 0.1).len();
        let narrow = inner_region(&b2, 0.5).len();
        assert!(wide > narrow && narrow > 0);
        assert!(inner_region(&b2, 1.5).is_empty());
    }
}
