//! Closed-form references and a deliberately plain brute-force minimizer
//! used to cross-check the main solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::c_nq;
use crate::domain::{sample, BoundaryCondition, Geometry, Grid, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePair {
    pub a: ScalarField,
    pub u: ScalarField,
    pub meta: String,
}

fn require_zero_pi(grid: &Grid) -> Result<()> {
    match grid.geometry() {
        Geometry::Line { lo, hi } if lo.abs() <= 1e-12 && (hi - std::f64::consts::PI).abs() <= 1e-12 => Ok(()),
        g => Err(Error::DomainMismatch(format!("expected [0, π], got {g:?}"))),
    }
}

/// `a = r^{1-2/r}(1 - r cos²x)`, `u = sin^r x / r`, `r = 2/(1-q)` on `[0, π]`.
pub fn exact_example(q: f64, grid: &Grid) -> Result<OraclePair> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::OutOfRange(format!("q = {q} must lie in (0, 1)")));
    }
    require_zero_pi(grid)?;
    let r = 2.0 / (1.0 - q);
    let a = sample(|x| r.powf(1.0 - 2.0 / r) * (1.0 - r * x.cos().powi(2)), grid)?;
    let u = sample(|x| x.sin().abs().powf(r) / r, grid)?;
    Ok(OraclePair {
        a,
        u,
        meta: format!("cosine example, q = {q}, r = {r}"),
    })
}

/// `x² - πx + 1 - cos 2x`, the solution of `-u'' = a_{1/2}`, `u(0) = u(π) = 0`.
pub fn exact_poisson_reference(grid: &Grid) -> Result<ScalarField> {
    require_zero_pi(grid)?;
    sample(|x| x * x - std::f64::consts::PI * x + 1.0 - (2.0 * x).cos(), grid)
}

pub fn barrier_w(x0: f64, a_lo: f64, q: f64, dim: u32, grid: &Grid) -> Result<ScalarField> {
    if !(a_lo > 0.0) {
        return Err(Error::OutOfRange(format!("a_lo = {a_lo} must be positive")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::OutOfRange(format!("q = {q} must lie in (0, 1)")));
    }
    let c = c_nq(dim, q);
    sample(|x| (c * a_lo * (x - x0) * (x - x0)).powf(1.0 / (1.0 - q)), grid)
}

pub const BRUTE_FORCE_MAX_INTERIOR: usize = 63;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOptions {
    pub starts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        BruteForceOptions {
            starts: 64,
            tol: 1e-13,
            max_iter: 200_000,
            seed: 12345,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub u: ScalarField,
    pub energy: f64,
    pub converged: bool,
}

/// Energy written out term by term over the free nodes.
fn plain_energy(q: f64, c: &[f64], w: &[f64], a: &[f64], free: &[bool], u: &[f64]) -> f64 {
    let mut grad = 0.0;
    for e in 0..c.len() {
        let l = if free[e] { u[e] } else { 0.0 };
        let r = if free[e + 1] { u[e + 1] } else { 0.0 };
        grad += c[e] * (r - l) * (r - l);
    }
    let mut pot = 0.0;
    for i in 0..u.len() {
        if free[i] {
            pot += w[i] * a[i] * u[i].abs().powf(q + 1.0);
        }
    }
    0.5 * grad - pot / (q + 1.0)
}

/// Minimizer over `v ≥ 0` of `k v²/2 - s v - m v^{q+1}/(q+1)` where `m` is
/// the lumped weight times `a` at the node.
fn nodal_minimizer(q: f64, k: f64, s: f64, m: f64) -> f64 {
    let slope = |v: f64| k * v - s - m * v.powf(q);
    let curvature = |v: f64| k - q * m * v.powf(q - 1.0);
    let (lo, hi) = if m <= 0.0 {
        if s <= 0.0 {
            return 0.0;
        }
        (0.0, s / k)
    } else {
        let vm = (q * m / k).powf(1.0 / (1.0 - q));
        if slope(vm) >= 0.0 {
            return 0.0;
        }
        let mut hi = 2.0 * vm.max(s.abs() / k);
        while slope(hi) <= 0.0 {
            hi *= 2.0;
        }
        (vm, hi)
    };
    let (mut lo, mut hi) = (lo, hi);
    let mut v = hi;
    for _ in 0..200 {
        let f = slope(v);
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let newton = v - f / curvature(v);
        v = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    if m > 0.0 && s < 0.0 {
        let e = 0.5 * k * v * v - s * v - m * v.powf(q + 1.0) / (q + 1.0);
        if e >= 0.0 {
            return 0.0;
        }
    }
    v
}

/// Multi-start nonlinear Gauss-Seidel: every node in turn is set to the exact
/// minimizer of the energy with its neighbours frozen (over-relaxed when that
/// still lowers the energy), sweeping until no node moves.
pub fn brute_force_ground_state(
    q: f64,
    a: &ScalarField,
    bc: BoundaryCondition,
    opts: &BruteForceOptions,
) -> Result<BruteForceResult> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::OutOfRange(format!("q = {q} must lie in (0, 1)")));
    }
    let grid = *a.grid();
    if grid.n_interior() > BRUTE_FORCE_MAX_INTERIOR {
        return Err(Error::OutOfRange(format!(
            "brute force is limited to {BRUTE_FORCE_MAX_INTERIOR} interior nodes"
        )));
    }
    let n = grid.len();
    let c: Vec<f64> = (0..n - 1).map(|e| grid.conductance(e)).collect();
    let w: Vec<f64> = (0..n).map(|i| grid.weight(i)).collect();
    let free: Vec<bool> = (0..n).map(|i| !grid.is_dirichlet_node(i, bc)).collect();
    let av = a.values();
    let apos = av.iter().fold(0.0_f64, |m, x| m.max(*x));
    let scale = (apos * grid.diameter().powi(2) / 8.0).powf(1.0 / (1.0 - q)).clamp(1e-3, 1e6);

    let omega = 2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin());
    let relax = |u: &mut [f64], i: usize| -> f64 {
        let (mut k, mut s) = (0.0, 0.0);
        if i > 0 {
            k += c[i - 1];
            s += c[i - 1] * u[i - 1];
        }
        if i + 1 < n {
            k += c[i];
            s += c[i] * u[i + 1];
        }
        let m = w[i] * av[i];
        let local = |v: f64| 0.5 * k * v * v - s * v - m * v.powf(q + 1.0) / (q + 1.0);
        let exact = nodal_minimizer(q, k, s, m);
        // over-relaxed move, kept only if the nodal energy still drops
        let over = (u[i] + omega * (exact - u[i])).max(0.0);
        let v = if local(over) <= local(u[i]) { over } else { exact };
        let d = (v - u[i]).abs();
        u[i] = v;
        d
    };

    let runs: Vec<(Vec<f64>, f64, bool)> = (0..opts.starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
            let level = scale * (k + 1) as f64 / opts.starts as f64;
            let mut u: Vec<f64> = (0..n)
                .map(|i| if free[i] { level * rng.gen::<f64>() } else { 0.0 })
                .collect();
            let mut converged = false;
            for _ in 0..opts.max_iter {
                let mut change = 0.0_f64;
                for i in 0..n {
                    if free[i] {
                        change = change.max(relax(&mut u, i));
                    }
                }
                let unorm = u.iter().fold(0.0_f64, |m, x| m.max(*x));
                if change <= opts.tol * unorm.max(1.0) {
                    converged = true;
                    break;
                }
            }
            let e = plain_energy(q, &c, &w, av, &free, &u);
            
            (u, e, converged)
        })
        .collect();

    // the trivial field is always a critical point
    let mut runs = runs;
    runs.push((vec![0.0; n], 0.0, true));
    let best = runs
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1).then(x.0.cmp(&y.0)))
        .map(|(_, r)| r.clone())
        .ok_or_else(|| Error::OutOfRange("no starts requested".into()))?;
    Ok(BruteForceResult {
        u: ScalarField::new(grid, best.0)?,
        energy: best.1,
        converged: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;
    use std::f64::consts::PI;

    fn zero_pi(n: usize) -> Grid {
        build_grid(Geometry::Line { lo: 0.0, hi: PI }, n).unwrap()
    }

    #[test]
    fn example_values() {
        let g = zero_pi(63);
        let p = exact_example(0.5, &g).unwrap();
        let mid = 32;
        assert!((p.u.values()[mid] - 0.25).abs() < 1e-15);
        assert!((p.a.values()[mid] - 2.0).abs() < 1e-12);
        assert!((p.a.values()[0] + 6.0).abs() < 1e-12);
        assert_eq!(p.u.values()[0], 0.0);
        let other = build_grid(Geometry::Line { lo: 0.0, hi: 1.0 }, 63).unwrap();
        assert!(exact_example(0.5, &other).is_err());
    }

    #[test]
    fn poisson_reference_values() {
        let g = zero_pi(63);
        let s = exact_poisson_reference(&g).unwrap();
        assert!(s.values()[0].abs() < 1e-15);
        assert!((s.values()[32] - (2.0 - PI * PI / 4.0)).abs() < 1e-12);
        assert!(s.values()[1..63].iter().all(|v| *v < 0.0));
    }

    #[test]
    fn barrier_values() {
        let g = build_grid(Geometry::Line { lo: -1.0, hi: 1.0 }, 199).unwrap();
        let w = barrier_w(0.0, 12.0, 0.5, 1, &g).unwrap();
        assert_eq!(w.values()[100], 0.0);
        assert!((w.values()[200] - 1.0).abs() < 1e-12);
        assert!(barrier_w(0.0, 0.0, 0.5, 1, &g).is_err());
    }

    #[test]
    fn brute_force_negative_weight_gives_zero() {
        let g = zero_pi(15);
        let a = ScalarField::constant(g, -1.0);
        let opts = BruteForceOptions { starts: 8, ..Default::default() };
        let r = brute_force_ground_state(0.5, &a, BoundaryCondition::Dirichlet, &opts).unwrap();
        assert_eq!(r.u.norm_inf(), 0.0);
    }

    #[test]
    fn brute_force_rejects_large_grids() {
        let g = zero_pi(127);
        let a = ScalarField::constant(g, 1.0);
        assert!(brute_force_ground_state(0.5, &a, BoundaryCondition::Dirichlet, &BruteForceOptions::default()).is_err());
    }
}
