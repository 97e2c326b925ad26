//! Branches `q ↦ u_q` as `q → 1⁻` and their asymptotic regimes.

use serde::Serialize;

use crate::analysis::{classify, ClassKind, Thresholds};
use crate::domain::{integrate, BoundaryCondition, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::{linearized_eigenvalue, principal_eigenpair};
use crate::nonlinear::{ground_state_with_starts, SolverOptions};

pub const DEFAULT_Q_LIST: [f64; 6] = [0.80, 0.85, 0.90, 0.95, 0.975, 0.99];
pub const REGIME_TOLERANCE: f64 = 1e-8;
pub const OVERFLOW_CAP: f64 = 1e300;
const PHI_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ToZero,
    ToTStarPhi,
    ToInfinity,
}

pub fn regime_classify(mu: f64) -> Regime {
    if (mu - 1.0).abs() <= REGIME_TOLERANCE {
        Regime::ToTStarPhi
    } else if mu > 1.0 {
        Regime::ToZero
    } else {
        Regime::ToInfinity
    }
}

/// `exp(-∫ a φ² log φ / ∫ a φ²)`.
pub fn t_star(a: &ScalarField, phi: &ScalarField) -> Result<f64> {
    a.ensure_grid(phi.grid())?;
    if phi.min() < 0.0 {
        return Err(Error::NegativeValues(phi.min()));
    }
    let grid = phi.grid();
    let (mut num, mut den, mut mag) = (0.0, 0.0, 0.0);
    for i in 0..grid.len() {
        let (ai, p) = (a.values()[i], phi.values()[i]);
        let w = grid.weight(i);
        den += w * ai * p * p;
        mag += w * ai.abs() * p * p;
        if p > PHI_FLOOR {
            num += w * ai * p * p * p.ln();
        }
    }
    if !(den.abs() > 1e-14 * mag) {
        return Err(Error::DegenerateDenominator(den));
    }
    Ok((-num / den).exp())
}

/// `μ(a) a`, whose principal eigenvalue is 1, together with `μ(a)`.
pub fn normalize_weight(a: &ScalarField, bc: BoundaryCondition) -> Result<(ScalarField, f64)> {
    let mu = principal_eigenpair(a, bc)?.mu;
    Ok((a.scale(mu), mu))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub q: f64,
    pub norm_inf: f64,
    pub min_u: f64,
    pub energy: f64,
    pub gamma1: Option<f64>,
    pub scaled_distance: f64,
    pub kind: ClassKind,
    pub converged: bool,
    /// `‖u‖_∞` or `|energy|` exceeded the cap and was clipped.
    pub overflow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchData {
    pub points: Vec<BranchPoint>,
    pub mu: f64,
    pub t_star: f64,
    pub regime: Regime,
    /// Scaled distance failed to be nonincreasing (slack 1.1) over the last
    /// three points.
    pub flagged: bool,
}

fn clip(x: f64, overflow: &mut bool) -> f64 {
    if !x.is_finite() || x.abs() > OVERFLOW_CAP {
        *overflow = true;
        OVERFLOW_CAP.copysign(x)
    } else {
        x
    }
}

/// Traces the branch along increasing `q`. Each point is computed in the
/// rescaled unknown `ũ = μ^{1/(1-q)} u`, which solves the same problem with
/// weight `μ a` and stays of unit size, then mapped back.
pub fn trace_branch(a: &ScalarField, bc: BoundaryCondition, q_list: &[f64], opts: &SolverOptions) -> Result<BranchData> {
    if q_list.is_empty() || q_list.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Error::OutOfRange("q list must be nonempty inside (0, 1)".into()));
    }
    if q_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("q list must increase toward 1".into()));
    }
    if bc == BoundaryCondition::Neumann && integrate(a) >= 0.0 {
        return Err(Error::OutOfRange("Neumann branches need a weight with negative mean".into()));
    }
    let pair = principal_eigenpair(a, bc)?;
    let mu = pair.mu;
    let phi = pair.phi;
    let ts = t_star(a, &phi)?;
    let b = a.scale(mu);
    let target = phi.scale(ts);
    let th = Thresholds::default();

    let mut points = Vec::with_capacity(q_list.len());
    let mut warm: Option<ScalarField> = None;
    for &q in q_list {
        let mut extra = vec![target.clone()];
        extra.extend(warm.iter().cloned());
        let gs = ground_state_with_starts(q, &b, bc, opts, &extra)?;
        let scaled = gs.best.u;
        let scaled_distance = scaled.distance_inf(&target)?;
        let log_factor = -mu.ln() / (1.0 - q);
        let factor = log_factor.exp();
        let mut overflow = false;
        let norm_inf = clip(factor * scaled.norm_inf(), &mut overflow);
        let class = classify(&scaled, bc, &th)?;
        let min_u = clip(factor * class.min_interior, &mut overflow);
        let energy = clip(gs.best.energy * (2.0 * log_factor).exp(), &mut overflow);
        let gamma1 = if scaled.norm_inf() > th.trivial {
            linearized_eigenvalue(q, &scaled, &b, bc).ok().map(|l| l.gamma1)
        } else {
            None
        };
        points.push(BranchPoint {
            q,
            norm_inf,
            min_u,
            energy,
            gamma1,
            scaled_distance,
            kind: class.kind,
            converged: gs.best.converged,
            overflow,
        });
        if gs.best.converged {
            warm = Some(scaled);
        }
    }
    let flagged = points.len() >= 3
        && points[points.len() - 3..]
            .windows(2)
            .any(|w| w[1].scaled_distance > 1.1 * w[0].scaled_distance);
    Ok(BranchData {
        points,
        mu,
        t_star: ts,
        regime: regime_classify(mu),
        flagged,
    })
}
