//! Energy, residual, nonnegative ground states and sub/supersolution
//! iteration for `-Δu = a (u⁺)^q`.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify, Classification, Thresholds};
use crate::domain::{BoundaryCondition, Geometry, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::{
    extend, operator_norm_s, principal_eigenpair, smallest_generalized, solve_poisson, SymTridiag,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tol_res: f64,
    pub max_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Relative size below which a node that already satisfies its equation
    /// is held fixed by Newton.
    pub newton_active_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_res: 1e-10,
            max_starts: 8,
            seed: 0,
            max_iter: 20_000,
            newton_active_threshold: 1e-8,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_res > 0.0) || !(self.newton_active_threshold > 0.0) {
            return Err(Error::OutOfRange("solver tolerances must be positive".into()));
        }
        if self.max_starts == 0 || self.max_iter == 0 {
            return Err(Error::OutOfRange("max_starts and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: ScalarField,
    pub residual_inf: f64,
    pub energy: f64,
    pub starts_used: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Present only for converged results.
    pub classification: Option<Classification>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Supersolution,
    Eigenfunction,
    Provided,
    Random,
}

/// Outcome of one start of the multi-start minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub start: usize,
    pub kind: StartKind,
    pub u: ScalarField,
    pub energy: f64,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub best: SolveResult,
    pub candidates: Vec<Candidate>,
}

impl GroundState {
    /// Converged candidates with `‖u‖_∞ > θ_triv`.
    pub fn nontrivial(&self) -> impl Iterator<Item = &Candidate> {
        let triv = Thresholds::default().trivial;
        self.candidates
            .iter()
            .filter(move |c| c.converged && c.u.norm_inf() > triv)
    }
}

fn check_q(q: f64, upper_inclusive: bool) -> Result<()> {
    let ok = q > 0.0 && (q < 1.0 || (upper_inclusive && q == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("q = {q} outside the admissible range")))
    }
}

/// Discrete `I_q(u) = ½∫|∇u|² − 1/(q+1) ∫ a |u|^{q+1}`.
pub fn energy(q: f64, a: &ScalarField, u: &ScalarField, bc: BoundaryCondition) -> Result<f64> {
    check_q(q, true)?;
    a.ensure_grid(u.grid())?;
    let grid = u.grid();
    let dirichlet = 0.5 * grid.gradient_energy(u.values(), bc);
    let potential: f64 = grid
        .unknowns(bc)
        .map(|i| grid.weight(i) * a.values()[i] * u.values()[i].abs().powf(q + 1.0))
        .sum();
    Ok(dirichlet - potential / (q + 1.0))
}

/// `F(u) = -Δu - a (u⁺)^q` at unknown nodes; Dirichlet nodes carry `u` itself.
pub fn residual(q: f64, a: &ScalarField, u: &ScalarField, bc: BoundaryCondition) -> Result<ScalarField> {
    a.ensure_grid(u.grid())?;
    let grid = *u.grid();
    let ku = grid.stiffness_apply(u.values(), bc);
    let values = (0..grid.len())
        .map(|i| {
            if grid.is_dirichlet_node(i, bc) {
                u.values()[i]
            } else {
                ku[i] / grid.weight(i) - a.values()[i] * u.values()[i].max(0.0).powf(q)
            }
        })
        .collect();
    Ok(ScalarField::from_raw(grid, values))
}

pub fn residual_inf(q: f64, a: &ScalarField, u: &ScalarField, bc: BoundaryCondition) -> Result<f64> {
    Ok(residual(q, a, u, bc)?.norm_inf())
}

/// `(‖S(1)‖_∞ ‖a⁺‖_∞)^{1/(1-q)}`, the bound on every Dirichlet solution.
pub fn a_priori_bound(a: &ScalarField, q: f64) -> f64 {
    (operator_norm_s(a.grid()) * a.positive_part().norm_inf()).powf(1.0 / (1.0 - q))
}

const ARMIJO_C: f64 = 1e-4;
const DIVERGENCE_NORM: f64 = 1e150;
const NEWTON_MAX_ITER: usize = 60;
const PHASE_TOLERANCES: [f64; 4] = [1e-3, 1e-6, 1e-9, 1e-12];
const MAX_REVIVALS: usize = 4;
const BINDING_FRACTION: f64 = 1e-2;
const UNBOUNDED_BUDGET: usize = 200;

/// Data of one problem instance in the form the iterations use.
struct Problem<'a> {
    q: f64,
    a: &'a [f64],
    grid: Grid,
    bc: BoundaryCondition,
    range: Range<usize>,
    stiffness: SymTridiag,
    precond: SymTridiag,
    theta_act: f64,
}

impl<'a> Problem<'a> {
    fn new(q: f64, a: &'a ScalarField, bc: BoundaryCondition, theta_act: f64) -> Self {
        let grid = *a.grid();
        let range = grid.unknowns(bc);
        let stiffness = grid.stiffness(bc);
        let precond = match bc {
            BoundaryCondition::Dirichlet => stiffness.clone(),
            BoundaryCondition::Neumann => {
                let w: Vec<f64> = range.clone().map(|i| grid.weight(i)).collect();
                stiffness.add_diagonal(&w)
            }
        };
        Problem {
            q,
            a: a.values(),
            grid,
            bc,
            range,
            stiffness,
            precond,
            theta_act,
        }
    }

    fn project(&self, u: &mut [f64]) {
        for (i, v) in u.iter_mut().enumerate() {
            if self.grid.is_dirichlet_node(i, self.bc) || *v < 0.0 || !v.is_finite() {
                *v = 0.0;
            }
        }
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let q = self.q;
        let pot: f64 = self
            .range
            .clone()
            .map(|i| self.grid.weight(i) * self.a[i] * u[i].max(0.0).powf(q + 1.0))
            .sum();
        0.5 * self.grid.gradient_energy(u, self.bc) - pot / (q + 1.0)
    }

    /// Euclidean gradient of the energy, `K u - W a (u⁺)^q`.
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.grid.stiffness_apply(u, self.bc);
        for i in self.range.clone() {
            g[i] -= self.grid.weight(i) * self.a[i] * u[i].max(0.0).powf(self.q);
        }
        g
    }

    fn nodal_residual(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.gradient(u);
        for (i, v) in g.iter_mut().enumerate() {
            if self.grid.is_dirichlet_node(i, self.bc) {
                *v = u[i];
            } else {
                *v /= self.grid.weight(i);
            }
        }
        g
    }

    fn restrict(&self, v: &[f64]) -> Vec<f64> {
        v[self.range.clone()].to_vec()
    }

    fn tolerance(&self, u: &[f64], tol: f64) -> f64 {
        tol * norm_inf(u).max(1.0)
    }

    /// Two-metric projected descent with Armijo backtracking: nodes close to
    /// zero and pushed down take a diagonally scaled step, the rest a
    /// Sobolev-preconditioned one with the former held at zero. Returns
    /// `false` in the flag when the iterates blow up.
    fn descend(&self, u: &mut Vec<f64>, budget: usize, rel_tol: f64) -> (usize, bool) {
        let start = self.range.start;
        let m = self.range.len();
        for it in 0..budget {
            let g = self.gradient(u);
            let nrm = norm_inf(u);
            let gap = self
                .range
                .clone()
                .map(|i| (u[i] - (u[i] - g[i] / self.precond.diag[i - start]).max(0.0)).abs())
                .fold(0.0, f64::max);
            let eps = gap.min(BINDING_FRACTION * nrm);
            // vanishing nodes nobody pulls up stay put as well
            let binding: Vec<bool> = self
                .range
                .clone()
                .map(|i| u[i] <= eps && (g[i] > 0.0 || (u[i] == 0.0 && g[i] >= 0.0)))
                .collect();
            let mut diag = self.precond.diag.clone();
            let mut off = self.precond.off.clone();
            let mut rhs = self.restrict(&g);
            for j in 0..m {
                if binding[j] {
                    rhs[j] /= diag[j];
                    diag[j] = 1.0;
                    if j > 0 {
                        off[j - 1] = 0.0;
                    }
                    if j + 1 < m {
                        off[j] = 0.0;
                    }
                }
            }
            let dir = match SymTridiag::new(diag, off).solve(&rhs) {
                Ok(d) => extend(&d, &self.grid, self.bc),
                Err(_) => return (it, false),
            };
            let e0 = self.energy(u);
            let mut t = 1.0;
            let mut cand = u.clone();
            loop {
                for i in self.range.clone() {
                    cand[i] = (u[i] - t * dir[i]).max(0.0);
                }
                let e = self.energy(&cand);
                let dec: f64 = self.range.clone().map(|i| g[i] * (cand[i] - u[i])).sum();
                // a full collapse onto 0 is only taken as a last resort
                let collapsed = norm_inf(&cand) == 0.0 && nrm > 0.0;
                if (e <= e0 + ARMIJO_C * dec && !collapsed) || t < 1e-14 {
                    break;
                }
                t *= 0.5;
            }
            let change = cand.iter().zip(u.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            *u = cand;
            let nrm = norm_inf(u);
            if !nrm.is_finite() || nrm > DIVERGENCE_NORM {
                return (it + 1, false);
            }
            if change <= rel_tol * nrm || nrm == 0.0 {
                return (it + 1, true);
            }
        }
        (budget, true)
    }

    /// Zero nodes whose neighbours pull them upward (residual below
    /// `-tol_abs`) get the root of their own scalar equation, sweeping in
    /// both directions so a reactivated node can release the next one.
    fn reactivate(&self, u: &mut [f64], tol_abs: f64) {
        let n = self.grid.len();
        let local = |u: &[f64], i: usize| -> (f64, f64) {
            let left = if i > 0 { self.grid.conductance(i - 1) } else { 0.0 };
            let right = if i + 1 < n { self.grid.conductance(i) } else { 0.0 };
            let val = |j: usize| if self.grid.is_dirichlet_node(j, self.bc) { 0.0 } else { u[j] };
            let mut pull = 0.0;
            if i > 0 {
                pull += left * val(i - 1);
            }
            if i + 1 < n {
                pull += right * val(i + 1);
            }
            (pull, left + right)
        };
        let order: Vec<usize> = self.range.clone().chain(self.range.clone().rev()).collect();
        for i in order {
            if u[i] != 0.0 {
                continue;
            }
            let (pull, kii) = local(u, i);
            let w = self.grid.weight(i);
            if pull / w <= tol_abs {
                continue;
            }
            u[i] = self.scalar_root(pull, kii, w, self.a[i]);
        }
    }

    /// Positive root of `k u - w a u^q = s` (for `a < 0` the left side is
    /// increasing); for `a >= 0` the linear part alone is used.
    fn scalar_root(&self, s: f64, k: f64, w: f64, a: f64) -> f64 {
        let hi = s / k;
        if a >= 0.0 {
            return hi;
        }
        let f = |x: f64| k * x - w * a * x.powf(self.q) - s;
        let (mut lo, mut hi) = (0.0_f64, hi);
        for _ in 0..200 {
            let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
            if mid <= 0.0 || mid == hi || mid == lo {
                break;
            }
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if lo > 0.0 && hi / lo < 1.0 + 1e-14 {
                break;
            }
            if lo == 0.0 && hi < 1e-300 {
                break;
            }
        }
        hi
    }

    /// Safeguarded Newton on `F = 0` over the positive nodes. Increments are
    /// additive when nonnegative and multiplicative (`u e^{δ/u}`) otherwise,
    /// so iterates stay nonnegative.
    fn newton(&self, u0: &[f64], tol: f64) -> Option<(Vec<f64>, usize)> {
        let q = self.q;
        let mut u = u0.to_vec();
        let merit = |f: &[f64]| -> f64 {
            self.range.clone().map(|i| self.grid.weight(i) * f[i] * f[i]).sum()
        };
        for it in 0..NEWTON_MAX_ITER {
            let f = self.nodal_residual(&u);
            let tol_abs = self.tolerance(&u, tol);
            if self.range.clone().all(|i| f[i].abs() <= tol_abs) {
                return Some((u, it));
            }
            let unorm = norm_inf(&u);
            self.reactivate(&mut u, tol_abs);
            let f = self.nodal_residual(&u);
            let active: Vec<bool> = self
                .range
                .clone()
                .map(|i| {
                    let small = u[i] <= self.theta_act * unorm;
                    let settled = f[i].abs() <= 0.1 * tol_abs;
                    u[i] > 0.0 && !(small && settled)
                })
                .collect();
            if !active.iter().any(|&b| b) {
                return None;
            }
            let m = self.range.len();
            let mut diag = vec![1.0; m];
            let mut off = vec![0.0; m.saturating_sub(1)];
            let mut rhs = vec![0.0; m];
            for j in 0..m {
                if !active[j] {
                    continue;
                }
                let i = j + self.range.start;
                let w = self.grid.weight(i);
                let d = self.stiffness.diag[j] - w * q * self.a[i] * u[i].powf(q - 1.0);
                diag[j] = d.clamp(-1e300, 1e300);
                rhs[j] = -w * f[i];
                if j + 1 < m && active[j + 1] {
                    off[j] = self.stiffness.off[j];
                }
            }
            let delta = SymTridiag::new(diag, off).solve(&rhs).ok()?;
            let m0 = merit(&f);
            let mut t = 1.0;
            loop {
                let mut cand = u.clone();
                for (j, d) in delta.iter().enumerate() {
                    let i = j + self.range.start;
                    if !active[j] {
                        continue;
                    }
                    let step = t * d;
                    cand[i] = if step >= 0.0 { u[i] + step } else { u[i] * (step / u[i]).exp() };
                }
                let fc = self.nodal_residual(&cand);
                let mc = merit(&fc);
                // near the round-off floor the merit stalls; a step that
                // lands inside the tolerance is still taken
                let tol_cand = self.tolerance(&cand, tol);
                let inside = self.range.clone().all(|i| fc[i].abs() <= tol_cand);
                if mc.is_finite() && (mc <= (1.0 - ARMIJO_C * t) * m0 || inside) {
                    u = cand;
                    break;
                }
                t *= 0.5;
                if t < 1e-10 {
                    return None;
                }
            }
        }
        None
    }

    /// Runs of vanishing nodes where `a > 0`. Such plateaus solve the
    /// discrete equation but never minimize the energy, since a small bump
    /// there gains `O(ε^{q+1})` against an `O(ε²)` cost.
    fn dormant_bumps(&self, u: &[f64]) -> Option<Vec<f64>> {
        let floor = 1e-10 * norm_inf(u);
        let mut out = u.to_vec();
        let mut found = false;
        let mut i = self.range.start;
        while i < self.range.end {
            if !(u[i] <= floor && self.a[i] > 0.0) {
                i += 1;
                continue;
            }
            let start = i;
            while i < self.range.end && u[i] <= floor && self.a[i] > 0.0 {
                i += 1;
            }
            let mut bump = vec![0.0; u.len()];
            for j in start..i {
                bump[j] = self.a[j];
            }
            let scaled = energy_scaled(self, &bump);
            for j in start..i {
                out[j] += scaled[j];
            }
            found = true;
        }
        found.then_some(out)
    }

    /// Local solve from `u0`, restarted from any dormant plateau over
    /// `a > 0` for as long as that lowers the energy.
    fn run_start(&self, u0: &[f64], opts: &SolverOptions) -> (Vec<f64>, usize, bool) {
        let (mut u, mut iterations, mut ok) = self.run_phases(u0, opts);
        for _ in 0..MAX_REVIVALS {
            if !ok || norm_inf(&u) == 0.0 {
                break;
            }
            let Some(start) = self.dormant_bumps(&u) else {
                break;
            };
            let (v, it, v_ok) = self.run_phases(&start, opts);
            iterations += it;
            if !(v_ok && self.energy(&v) < self.energy(&u)) {
                break;
            }
            (u, ok) = (v, v_ok);
        }
        (u, iterations, ok)
    }

    /// Descent to a near-critical point, then Newton. Newton's answer is
    /// kept only when it does not raise the energy.
    fn run_phases(&self, u0: &[f64], opts: &SolverOptions) -> (Vec<f64>, usize, bool) {
        let mut u = u0.to_vec();
        self.project(&mut u);
        let mut iterations = 0;
        let budget = opts.max_iter;
        for (round, &rel_tol) in PHASE_TOLERANCES.iter().enumerate() {
            let left = budget.saturating_sub(iterations);
            let (it, healthy) = self.descend(&mut u, left, rel_tol);
            iterations += it;
            if !healthy {
                return (u, iterations, false);
            }
            if norm_inf(&u) == 0.0 {
                return (u, iterations, true);
            }
            if let Some((un, it)) = self.newton(&u, opts.tol_res) {
                iterations += it;
                let (e_new, e_old) = (self.energy(&un), self.energy(&u));
                if e_new <= e_old + 1e-8 * e_old.abs().max(1e-300) || round == PHASE_TOLERANCES.len() - 1 {
                    return (un, iterations, true);
                }
            }
            if iterations >= budget {
                break;
            }
        }
        let f = self.nodal_residual(&u);
        let ok = norm_inf(&f) <= self.tolerance(&u, opts.tol_res);
        (u, iterations, ok)
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Best nonnegative scaling `t φ` of a profile for the energy.
fn energy_scaled(problem: &Problem, phi: &[f64]) -> Vec<f64> {
    let q = problem.q;
    let grad = problem.grid.gradient_energy(phi, problem.bc);
    let pot: f64 = problem
        .range
        .clone()
        .map(|i| problem.grid.weight(i) * problem.a[i] * phi[i].max(0.0).powf(q + 1.0))
        .sum();
    let t = if grad > 0.0 && pot > 0.0 {
        (pot / grad).powf(1.0 / (1.0 - q))
    } else {
        1.0
    };
    phi.iter().map(|v| t * v.max(0.0)).collect()
}

fn starting_fields(
    problem: &Problem,
    a: &ScalarField,
    extra: &[ScalarField],
    opts: &SolverOptions,
) -> Vec<(StartKind, Vec<f64>)> {
    let mut starts: Vec<(StartKind, Vec<f64>)> = Vec::new();
    let mut scale: f64 = 0.0;
    if problem.bc == BoundaryCondition::Dirichlet {
        if let Ok(sup) = build_supersolution(a, problem.q) {
            scale = sup.field.norm_inf();
            starts.push((StartKind::Supersolution, sup.field.into_values()));
        }
    }
    if let Ok(pair) = principal_eigenpair(a, problem.bc) {
        let v = energy_scaled(problem, pair.phi.values());
        scale = scale.max(norm_inf(&v));
        starts.push((StartKind::Eigenfunction, v));
    }
    for e in extra {
        if e.grid() == a.grid() {
            starts.push((StartKind::Provided, e.values().to_vec()));
        }
    }
    if scale == 0.0 || !scale.is_finite() {
        scale = 1.0;
    }
    let mut index = starts.len();
    while starts.len() < opts.max_starts.max(extra.len() + 1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(index as u64));
        let raw: Vec<f64> = problem
            .range
            .clone()
            .map(|i| problem.grid.weight(i) * rng.gen::<f64>())
            .collect();
        let mut v = match problem.precond.solve(&raw) {
            Ok(s) => extend(&s, &problem.grid, problem.bc),
            Err(_) => vec![0.0; problem.grid.len()],
        };
        problem.project(&mut v);
        let m = norm_inf(&v);
        if m > 0.0 {
            v.iter_mut().for_each(|x| *x *= scale / m);
        }
        let v = energy_scaled(problem, &v);
        starts.push((StartKind::Random, v));
        index += 1;
    }
    starts
}

pub fn ground_state(q: f64, a: &ScalarField, bc: BoundaryCondition, opts: &SolverOptions) -> Result<SolveResult> {
    Ok(ground_state_with_starts(q, a, bc, opts, &[])?.best)
}

/// Multi-start minimization of the energy over the nonnegative cone. Extra
/// starting fields (for instance a known solution) are tried in addition to
/// the built-in ones.
pub fn ground_state_with_starts(
    q: f64,
    a: &ScalarField,
    bc: BoundaryCondition,
    opts: &SolverOptions,
    extra: &[ScalarField],
) -> Result<GroundState> {
    check_q(q, false)?;
    opts.validate()?;
    for e in extra {
        e.ensure_grid(a.grid())?;
    }
    let mut opts = opts.clone();
    if bc == BoundaryCondition::Neumann && crate::domain::integrate(a) > 0.0 {
        // constants drive the energy to -∞, so no minimizer exists and long
        // runs only chase the divergence
        log::warn!("Neumann weight has positive mean; the energy is unbounded below");
        opts.max_iter = opts.max_iter.min(UNBOUNDED_BUDGET);
    }
    let opts = &opts;
    let problem = Problem::new(q, a, bc, opts.newton_active_threshold);
    let starts = starting_fields(&problem, a, extra, opts);
    let candidates: Vec<Candidate> = starts
        .par_iter()
        .enumerate()
        .map(|(index, (kind, u0))| {
            let (u, iterations, healthy) = problem.run_start(u0, opts);
            let field = ScalarField::from_raw(problem.grid, u);
            let res = residual_inf(q, a, &field, bc).unwrap_or(f64::INFINITY);
            let en = energy(q, a, &field, bc).unwrap_or(f64::INFINITY);
            let converged = healthy && res <= opts.tol_res * field.norm_inf().max(1.0) && en.is_finite();
            Candidate {
                start: index,
                kind: *kind,
                u: field,
                energy: en,
                residual_inf: res,
                iterations,
                converged,
            }
        })
        .collect();

    let pick = |only_converged: bool| {
        candidates
            .iter()
            .filter(|c| !only_converged || c.converged)
            .filter(|c| c.energy.is_finite())
            .min_by(|x, y| x.energy.total_cmp(&y.energy).then(x.start.cmp(&y.start)))
    };
    let chosen = pick(true).or_else(|| pick(false)).unwrap_or(&candidates[0]);
    let classification = if chosen.converged {
        classify(&chosen.u, bc, &Thresholds::default()).ok()
    } else {
        None
    };
    let best = SolveResult {
        u: chosen.u.clone(),
        residual_inf: chosen.residual_inf,
        energy: chosen.energy,
        starts_used: candidates.len(),
        iterations: candidates.iter().map(|c| c.iterations).sum(),
        converged: chosen.converged,
        classification,
    };
    Ok(GroundState { best, candidates })
}

/// Newton polish of a given field (no descent phase).
pub fn refine(
    q: f64,
    a: &ScalarField,
    u: &ScalarField,
    bc: BoundaryCondition,
    opts: &SolverOptions,
) -> Result<Option<ScalarField>> {
    check_q(q, false)?;
    a.ensure_grid(u.grid())?;
    let problem = Problem::new(q, a, bc, opts.newton_active_threshold);
    let mut u0 = u.values().to_vec();
    problem.project(&mut u0);
    Ok(problem
        .newton(&u0, opts.tol_res)
        .map(|(v, _)| ScalarField::from_raw(problem.grid, v)))
}

/// Slack for the pointwise sign checks on residuals, which carry round-off
/// of size `ε ‖u‖ / h²`.
fn residual_slack(upper: &ScalarField) -> f64 {
    let h = upper.grid().h();
    1e-12 * (upper.norm_inf() / (h * h)).max(1.0)
}

/// Iterates `(K + W M) u_{k+1} = W (a u_k^q + M u_k)` downward from the
/// supersolution. The shift `M_i = q a⁻_i sub_i^{q-1}` makes the right-hand
/// side nondecreasing on `[sub, super]`; where the subsolution vanishes on
/// `{a < 0}` the shift is taken at the current iterate instead (warm-start
/// mode) and a failure falls back to `ground_state`.
pub fn monotone_iterate(
    q: f64,
    a: &ScalarField,
    bc: BoundaryCondition,
    sub: &ScalarField,
    sup: &ScalarField,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_q(q, false)?;
    opts.validate()?;
    sub.ensure_grid(a.grid())?;
    sup.ensure_grid(a.grid())?;
    let grid = *a.grid();
    let order_slack = 1e-12 * sup.norm_inf().max(1.0);
    for i in 0..grid.len() {
        if sub.values()[i] > sup.values()[i] + order_slack {
            return Err(Error::OrderViolation(i));
        }
    }
    let slack = residual_slack(sup);
    let rs = residual(q, a, sub, bc)?;
    let rp = residual(q, a, sup, bc)?;
    for i in grid.unknowns(bc) {
        if rs.values()[i] > slack {
            return Err(Error::NotSubsolution {
                index: i,
                residual: rs.values()[i],
            });
        }
        if rp.values()[i] < -slack {
            return Err(Error::NotSupersolution {
                index: i,
                residual: rp.values()[i],
            });
        }
    }

    let range = grid.unknowns(bc);
    let warm = range
        .clone()
        .any(|i| a.values()[i] < 0.0 && sub.values()[i] <= 0.0);
    let shift = |u: &[f64]| -> Vec<f64> {
        range
            .clone()
            .map(|i| {
                let base = if warm { u[i] } else { sub.values()[i] };
                if a.values()[i] < 0.0 && base > 0.0 {
                    q * (-a.values()[i]) * base.powf(q - 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let w: Vec<f64> = range.clone().map(|i| grid.weight(i)).collect();
    let k = grid.stiffness(bc);
    let mut u = sup.values().to_vec();
    let mut iterations = 0;
    let mut healthy = true;
    let fixed = (!warm).then(|| shift(&u));
    let mut converged = false;
    while iterations < opts.max_iter {
        let m = fixed.clone().unwrap_or_else(|| shift(&u));
        let wm: Vec<f64> = m.iter().zip(&w).map(|(x, y)| x * y).collect();
        let rhs: Vec<f64> = range
            .clone()
            .enumerate()
            .map(|(j, i)| w[j] * (a.values()[i] * u[i].max(0.0).powf(q) + m[j] * u[i]))
            .collect();
        let next = match k.add_diagonal(&wm).solve(&rhs) {
            Ok(v) => extend(&v, &grid, bc),
            Err(_) => {
                healthy = false;
                break;
            }
        };
        iterations += 1;
        let scale = norm_inf(&next).max(1.0);
        let decreasing = next.iter().zip(&u).all(|(n, o)| *n <= *o + 1e-12 * scale);
        let above = warm || next.iter().zip(sub.values()).all(|(n, s)| *n >= *s - 1e-12 * scale);
        if !decreasing || !above {
            log::warn!("monotone iteration lost monotonicity at step {iterations}");
            healthy = false;
            break;
        }
        let step = next.iter().zip(&u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        u = next;
        let field = ScalarField::from_raw(grid, u.clone());
        if residual_inf(q, a, &field, bc)? <= opts.tol_res * scale {
            converged = true;
            break;
        }
        if step <= 1e-14 * scale {
            break;
        }
    }
    let mut field = ScalarField::from_raw(grid, u);
    if healthy && !converged {
        if let Some(polished) = refine(q, a, &field, bc, opts)? {
            let within = polished
                .values()
                .iter()
                .zip(sub.values().iter().zip(sup.values()))
                .all(|(p, (s, t))| *p >= *s - order_slack && *p <= *t + order_slack);
            if within {
                field = polished;
                converged = true;
            }
        }
    }
    if !converged && warm {
        log::info!("warm-start monotone iteration failed; falling back to ground_state");
        return ground_state(q, a, bc, opts);
    }
    let residual_inf = residual_inf(q, a, &field, bc)?;
    let converged = converged && residual_inf <= opts.tol_res * field.norm_inf().max(1.0);
    Ok(SolveResult {
        energy: energy(q, a, &field, bc)?,
        classification: classify(&field, bc, &Thresholds::default()).ok(),
        u: field,
        residual_inf,
        starts_used: 1,
        iterations,
        converged,
    })
}

/// A constructed field together with the outcome of its residual check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedField {
    pub field: ScalarField,
    /// Smallest residual for a supersolution, largest for a subsolution.
    pub residual_extreme: f64,
    pub verified: bool,
}

/// `k S(a⁺)` with `k = 1.1 ‖S(a⁺)‖^{q/(1-q)}` (Dirichlet).
pub fn build_supersolution(a: &ScalarField, q: f64) -> Result<CheckedField> {
    check_q(q, false)?;
    let ap = a.positive_part();
    if ap.norm_inf() == 0.0 {
        return Err(Error::ZeroPositivePart);
    }
    let bc = BoundaryCondition::Dirichlet;
    let z = solve_poisson(&ap, bc)?;
    let k = 1.1 * z.norm_inf().powf(q / (1.0 - q));
    let field = z.scale(k).map_unchecked(|v| v.max(0.0));
    let r = residual(q, a, &field, bc)?;
    let extreme = a
        .grid()
        .unknowns(bc)
        .map(|i| r.values()[i])
        .fold(f64::INFINITY, f64::min);
    Ok(CheckedField {
        verified: extreme >= -residual_slack(&field),
        residual_extreme: extreme,
        field,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: f64,
    pub radius: f64,
}

/// Node indices strictly inside the ball.
pub(crate) fn ball_nodes(grid: &Grid, ball: Ball) -> Result<Range<usize>> {
    if !(ball.radius > 0.0) {
        return Err(Error::OutOfRange(format!("ball radius {} must be positive", ball.radius)));
    }
    match grid.geometry() {
        Geometry::Line { lo, hi } => {
            if ball.center - ball.radius < lo - 1e-12 || ball.center + ball.radius > hi + 1e-12 {
                return Err(Error::BallOutsideDomain);
            }
        }
        Geometry::Radial { radius, .. } => {
            if ball.center.abs() > 1e-12 {
                return Err(Error::OutOfRange("balls in radial geometry are centred at 0".into()));
            }
            if ball.radius > radius + 1e-12 {
                return Err(Error::BallOutsideDomain);
            }
        }
    }
    let inside: Vec<usize> = (0..grid.len())
        .filter(|&i| (grid.coord(i) - ball.center).abs() < ball.radius)
        .filter(|&i| !grid.is_dirichlet_node(i, BoundaryCondition::Dirichlet))
        .collect();
    match (inside.first(), inside.last()) {
        (Some(&s), Some(&e)) => Ok(s..e + 1),
        _ => Err(Error::OutOfRange("ball contains no grid node".into())),
    }
}

/// Discrete principal Dirichlet eigenpair of `-Δ` on the nodes of a ball,
/// with the eigenfunction normalized to `max = 1` and extended by zero.
pub fn ball_eigenpair(grid: &Grid, ball: Ball) -> Result<(f64, ScalarField)> {
    let nodes = ball_nodes(grid, ball)?;
    let bc = BoundaryCondition::Dirichlet;
    let full = grid.stiffness(bc);
    let off = grid.unknowns(bc).start;
    let (s, e) = (nodes.start - off, nodes.end - off);
    let k = SymTridiag::new(full.diag[s..e].to_vec(), full.off[s..e - 1].to_vec());
    let w: Vec<f64> = nodes.clone().map(|i| grid.weight(i)).collect();
    let lambda = smallest_generalized(&k, &vec![0.0; w.len()], &w);
    let shifted = SymTridiag::new(
        k.diag.iter().zip(&w).map(|(d, wi)| d - (1.0 - 1e-9) * lambda * wi).collect(),
        k.off.clone(),
    );
    let mut x = vec![1.0; w.len()];
    for _ in 0..4 {
        let rhs: Vec<f64> = x.iter().zip(&w).map(|(v, wi)| v * wi).collect();
        x = shifted.solve(&rhs)?;
        let m = norm_inf(&x);
        x.iter_mut().for_each(|v| *v /= m);
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let m = x.iter().cloned().fold(f64::MIN, f64::max);
    let mut values = vec![0.0; grid.len()];
    for (j, i) in nodes.enumerate() {
        values[i] = (x[j] / m).max(0.0);
    }
    Ok((lambda, ScalarField::from_raw(*grid, values)))
}

/// `ε φ_B` on a ball where `a >= a₀ > 0`, `ε = 0.9 (a₀/λ_B)^{1/(1-q)}`.
pub fn build_subsolution_ball(a: &ScalarField, q: f64, ball: Ball) -> Result<CheckedField> {
    check_q(q, false)?;
    let grid = *a.grid();
    let nodes = ball_nodes(&grid, ball)?;
    let a0 = nodes.clone().map(|i| a.values()[i]).fold(f64::INFINITY, f64::min);
    if !(a0 > 0.0) {
        return Err(Error::BallNotPositive);
    }
    let (lambda, phi) = ball_eigenpair(&grid, ball)?;
    let eps = 0.9 * (a0 / lambda).powf(1.0 / (1.0 - q));
    let field = phi.scale(eps);
    let bc = BoundaryCondition::Dirichlet;
    let r = residual(q, a, &field, bc)?;
    let extreme = grid
        .unknowns(bc)
        .map(|i| r.values()[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckedField {
        verified: extreme <= residual_slack(&field),
        residual_extreme: extreme,
        field,
    })
}
