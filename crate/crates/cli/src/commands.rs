//! Subcommands. Each writes its files into `dir` and reports failure through
//! `CliError`, whose exit code the binary returns.

use std::path::Path;

use serde::Serialize;
use sublinear_core::analysis::{classify, deadcore_predict, positivity_sweep, ClassKind, DeadCorePrediction, Thresholds};
use sublinear_core::continuation::{trace_branch, Regime};
use sublinear_core::linalg::{eigen_residual, linearized_eigenvalue, principal_eigenpair, solve_poisson};
use sublinear_core::nonlinear::{a_priori_bound, energy, ground_state, residual, residual_inf};
use sublinear_core::weights::{check_conditions, eval_weight, ConditionReport, ConditionRequest, WeightSpec};
use sublinear_core::{BoundaryCondition, Error as CoreError, ScalarField};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, opt, write_csv, write_json};

/// Share of converged sweep points below which a sweep counts as failed.
pub const MIN_CONVERGED_FRACTION: f64 = 0.8;

fn region_of(kind: &ClassKind) -> Vec<(usize, usize)> {
    match kind {
        ClassKind::DeadCore { regions } => regions.clone(),
        _ => Vec::new(),
    }
}

#[derive(Debug, Serialize)]
pub struct AprioriCheck {
    pub bound: f64,
    pub norm_inf: f64,
    pub holds: bool,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub q: f64,
    pub classification: &'static str,
    /// Inclusive node ranges where `u` vanishes.
    pub dead_core_regions: Vec<(usize, usize)>,
    pub min_interior: f64,
    pub norm_inf: f64,
    pub energy: f64,
    pub gamma1: Option<f64>,
    /// Recomputed from the returned field.
    pub residual_inf: f64,
    pub converged: bool,
    pub starts_used: usize,
    pub iterations: usize,
    pub a_priori: Option<AprioriCheck>,
    pub conditions: Option<ConditionReport>,
}

fn conditions_for(cfg: &RunConfig, q: Option<f64>, require_explicit: bool) -> CliResult<ConditionReport> {
    let req = ConditionRequest {
        q,
        region: cfg.region,
        rho0: cfg.rho0,
        require_explicit,
    };
    Ok(check_conditions(&cfg.weight, &cfg.grid()?, &req)?)
}

pub fn cmd_solve(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let q = cfg.require_q()?;
    let bc = cfg.problem.bc;
    let a = cfg.weight_field()?;
    let res = ground_state(q, &a, bc, &cfg.solver)?;
    let u = &res.u;
    let th = Thresholds::default();
    let class = match &res.classification {
        Some(c) => c.clone(),
        None => classify(u, bc, &th)?,
    };
    let gamma1 = if u.norm_inf() > th.trivial {
        linearized_eigenvalue(q, u, &a, bc).ok().map(|l| l.gamma1)
    } else {
        None
    };
    let r = residual(q, &a, u, bc)?;
    let a_priori = (bc == BoundaryCondition::Dirichlet).then(|| {
        let bound = a_priori_bound(&a, q);
        AprioriCheck {
            bound,
            norm_inf: u.norm_inf(),
            holds: u.norm_inf() <= bound * (1.0 + 1e-6),
        }
    });
    let conditions = match conditions_for(cfg, Some(q), false) {
        Ok(c) => Some(c),
        Err(e) => {
            log::warn!("condition report skipped: {e}");
            None
        }
    };
    let report = SolveReport {
        q,
        classification: class.kind.label(),
        dead_core_regions: region_of(&class.kind),
        min_interior: class.min_interior,
        norm_inf: u.norm_inf(),
        energy: energy(q, &a, u, bc)?,
        gamma1,
        residual_inf: residual_inf(q, &a, u, bc)?,
        converged: res.converged,
        starts_used: res.starts_used,
        iterations: res.iterations,
        a_priori,
        conditions,
    };
    if cfg.wants(Format::Csv) {
        let xs = u.grid().coords();
        let rows: Vec<Vec<String>> = (0..xs.len())
            .map(|i| vec![num(xs[i]), num(u.values()[i]), num(a.values()[i]), num(r.values()[i])])
            .collect();
        write_csv(&dir.join("solution.csv"), &["x", "u", "a", "residual"], &rows)?;
    }
    if cfg.wants(Format::Json) {
        write_json(&dir.join("report.json"), &report)?;
    }
    log::info!("solve: {} (converged {})", report.classification, report.converged);
    if !res.converged {
        return Err(CliError::Nonconvergence(format!(
            "residual {:e} above tolerance",
            report.residual_inf
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub q_hat: Option<f64>,
    pub interval_ok: bool,
    pub regime: Option<Regime>,
    pub mu: Option<f64>,
    pub t_star: Option<f64>,
    pub flagged: Option<bool>,
    pub converged_fraction: f64,
}

pub const SWEEP_HEADER: [&str; 6] = ["q", "norm_inf", "min_u", "energy", "gamma1", "classification"];

pub fn cmd_sweep(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let q_grid = cfg.require_q_grid()?;
    let bc = cfg.problem.bc;
    let a = cfg.weight_field()?;
    let (rows, converged, summary_base, header): (Vec<Vec<String>>, usize, SweepSummary, Vec<&str>) = if cfg.branch {
        let data = trace_branch(&a, bc, q_grid, &cfg.solver)?;
        let rows = data
            .points
            .iter()
            .map(|p| {
                vec![
                    num(p.q),
                    num(p.norm_inf),
                    num(p.min_u),
                    num(p.energy),
                    opt(p.gamma1),
                    p.kind.label().to_string(),
                    num(p.scaled_distance),
                ]
            })
            .collect();
        let summary = SweepSummary {
            q_hat: None,
            interval_ok: true,
            regime: Some(data.regime),
            mu: Some(data.mu),
            t_star: Some(data.t_star),
            flagged: Some(data.flagged),
            converged_fraction: 0.0,
        };
        let mut header = SWEEP_HEADER.to_vec();
        header.push("scaled_distance");
        (rows, data.points.iter().filter(|p| p.converged).count(), summary, header)
    } else {
        let rep = positivity_sweep(&a, bc, q_grid, &cfg.solver)?;
        let rows = rep
            .points
            .iter()
            .map(|p| {
                vec![
                    num(p.q),
                    num(p.norm_inf),
                    num(p.min_u),
                    num(p.energy),
                    opt(p.gamma1),
                    p.kind.label().to_string(),
                ]
            })
            .collect();
        let summary = SweepSummary {
            q_hat: rep.q_hat,
            interval_ok: rep.interval_ok,
            regime: None,
            mu: None,
            t_star: None,
            flagged: None,
            converged_fraction: 0.0,
        };
        (rows, rep.points.iter().filter(|p| p.converged).count(), summary, SWEEP_HEADER.to_vec())
    };
    let fraction = converged as f64 / rows.len() as f64;
    let summary = SweepSummary {
        converged_fraction: fraction,
        ..summary_base
    };
    if cfg.wants(Format::Csv) {
        write_csv(&dir.join("sweep.csv"), &header, &rows)?;
    }
    if cfg.wants(Format::Json) {
        write_json(&dir.join("sweep.json"), &summary)?;
    }
    if fraction < MIN_CONVERGED_FRACTION {
        return Err(CliError::Nonconvergence(format!(
            "only {converged} of {} sweep points converged",
            rows.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct EigenSummary {
    pub mu: f64,
    pub residual_inf: f64,
}

pub fn cmd_eigen(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let bc = cfg.problem.bc;
    let a = cfg.weight_field()?;
    let pair = principal_eigenpair(&a, bc)?;
    if cfg.wants(Format::Csv) {
        let xs = a.grid().coords();
        let rows: Vec<Vec<String>> = (0..xs.len())
            .map(|i| vec![num(xs[i]), num(pair.phi.values()[i]), num(a.values()[i])])
            .collect();
        write_csv(&dir.join("eigen.csv"), &["x", "phi", "a"], &rows)?;
    }
    if cfg.wants(Format::Json) {
        let summary = EigenSummary {
            mu: pair.mu,
            residual_inf: eigen_residual(&pair, &a, bc),
        };
        write_json(&dir.join("eigen.json"), &summary)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PoissonSummary {
    pub norm_inf: f64,
    pub max_interior: f64,
    pub min_interior: f64,
}

pub fn cmd_poisson(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let bc = cfg.problem.bc;
    if bc != BoundaryCondition::Dirichlet {
        return Err(CliError::Config("poisson needs Dirichlet conditions".into()));
    }
    let a = cfg.weight_field()?;
    let s = solve_poisson(&a, bc)?;
    let grid = *s.grid();
    let interior: Vec<f64> = grid.unknowns(bc).map(|i| s.values()[i]).collect();
    if cfg.wants(Format::Csv) {
        let xs = grid.coords();
        let rows: Vec<Vec<String>> = (0..xs.len())
            .map(|i| vec![num(xs[i]), num(a.values()[i]), num(s.values()[i])])
            .collect();
        write_csv(&dir.join("poisson.csv"), &["x", "a", "s"], &rows)?;
    }
    if cfg.wants(Format::Json) {
        let summary = PoissonSummary {
            norm_inf: s.norm_inf(),
            max_interior: interior.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_interior: interior.iter().copied().fold(f64::INFINITY, f64::min),
        };
        write_json(&dir.join("poisson.json"), &summary)?;
    }
    Ok(())
}

pub fn cmd_conditions(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let explicit = cfg.explicit || cfg.region.is_some();
    let report = conditions_for(cfg, cfg.q, explicit).map_err(|e| match e {
        CliError::Core(err @ (CoreError::MissingExponent | CoreError::MissingRegion)) => CliError::Config(err.to_string()),
        other => other,
    })?;
    write_json(&dir.join("conditions.json"), &report)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct DeadCoreSummary {
    pub core_nodes: usize,
    pub delta_first_deadcore: Option<f64>,
    pub prediction: Option<DeadCorePrediction>,
}

/// δ sweep over `b1 - δ b2` and, when a ball is given, the barrier
/// prediction for the configured weight.
pub fn cmd_deadcore(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let q = cfg.require_q()?;
    let dc = cfg
        .deadcore
        .as_ref()
        .ok_or_else(|| CliError::Config("deadcore command needs a `deadcore` section".into()))?;
    let WeightSpec::DeltaFamily { b1, b2, .. } = &cfg.weight else {
        return Err(CliError::Config("deadcore command needs a delta_family weight".into()));
    };
    if dc.deltas.is_empty() {
        return Err(CliError::Config("deadcore.deltas is empty".into()));
    }
    let grid = cfg.grid()?;
    let table = |b: &sublinear_core::weights::BumpSum| -> CliResult<ScalarField> {
        let spec = WeightSpec::DeltaFamily {
            b1: b.clone(),
            b2: sublinear_core::weights::BumpSum(Vec::new()),
            delta: 0.0,
        };
        Ok(eval_weight(&spec, &grid)?)
    };
    let (f1, f2) = (table(b1)?, table(b2)?);
    let rep = sublinear_core::analysis::deadcore_delta_sweep(&f1, &f2, q, dc.rho, &dc.deltas, cfg.problem.bc, &cfg.solver)?;
    let prediction = match dc.ball {
        Some(ball) => Some(deadcore_predict(&cfg.weight_field()?, ball, q)?),
        None => None,
    };
    if cfg.wants(Format::Csv) {
        let rows: Vec<Vec<String>> = rep
            .points
            .iter()
            .map(|p| {
                vec![
                    num(p.delta),
                    p.nontrivial_found.to_string(),
                    p.vanishes_on_core.to_string(),
                    p.converged.to_string(),
                ]
            })
            .collect();
        write_csv(
            &dir.join("deadcore.csv"),
            &["delta", "nontrivial_found", "vanishes_on_core", "converged"],
            &rows,
        )?;
    }
    if cfg.wants(Format::Json) {
        let summary = DeadCoreSummary {
            core_nodes: rep.core_nodes,
            delta_first_deadcore: rep.delta_first_deadcore,
            prediction,
        };
        write_json(&dir.join("deadcore.json"), &summary)?;
    }
    Ok(())
}
