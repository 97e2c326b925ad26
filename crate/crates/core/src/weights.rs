//! Weight families `a(x)` and numerical checks of the structural hypotheses
//! on the weight.

use serde::{Deserialize, Serialize};

use crate::domain::{integrate, sample, BoundaryCondition, Geometry, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::solve_poisson;

/// Surface area of the unit sphere in `R^dim`, `2 π^{N/2} / Γ(N/2)`.
pub fn omega_sphere(dim: u32) -> f64 {
    assert!(dim >= 1, "dimension must be at least 1");
    use std::f64::consts::PI;
    // Γ(N/2) by the half-integer recurrence
    let mut gamma = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    while x < dim as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(dim as f64 / 2.0) / gamma
}

/// Magnitude profile on one side of the interface `R0` of a radial layout.
///
/// With `s` the normalized coordinate of the side (`r / R0` inside,
/// `(r - R0)/(R - R0)` outside), the magnitude is `peak * g(s)^power` where
/// `g(s) = 1 - s` inside and `g(s) = s` outside. `power = 0` is flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub peak: f64,
    #[serde(default)]
    pub power: f64,
}

impl Profile {
    fn magnitude(&self, s: f64) -> f64 {
        if self.power == 0.0 {
            self.peak
        } else {
            self.peak * s.clamp(0.0, 1.0).powf(self.power)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `a = a_plus` on `B_{R0}`, `a = -a_minus` on the annulus.
    PositiveCore,
    /// `a = -a_minus` on `B_{R0}`, `a = a_plus` on the annulus.
    NegativeCore,
}

/// `height * cos^2(π (x - center) / (2 half_width))` on `|x - center| < half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub height: f64,
}

impl Bump {
    fn eval(&self, x: f64) -> f64 {
        let d = (x - self.center).abs();
        if d >= self.half_width {
            0.0
        } else {
            let c = (std::f64::consts::FRAC_PI_2 * d / self.half_width).cos();
            self.height * c * c
        }
    }
}

/// Nonnegative sum of bumps in the node coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSum(pub Vec<Bump>);

impl BumpSum {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().map(|b| b.eval(x)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    /// `a_q(x) = r^{1-2/r} (1 - r cos^2 x)` on `[0, π]`, `r = 2/(1-q)`.
    ExampleCos { q: f64 },
    RadialPiecewise {
        a_plus: Profile,
        a_minus: Profile,
        r0: f64,
        radius: f64,
        layout: Layout,
    },
    /// `a_δ = b1 - δ b2`.
    DeltaFamily { b1: BumpSum, b2: BumpSum, delta: f64 },
    /// Nodal values on the grid in use.
    Table { values: Vec<f64> },
}

impl WeightSpec {
    /// Interface radius for radial layouts.
    pub fn region(&self) -> Option<RegionMeta> {
        match self {
            WeightSpec::RadialPiecewise { r0, .. } => Some(RegionMeta { r0: *r0 }),
            _ => None,
        }
    }

    /// Whether the inner-sphere regularity of `∂Ω_+` holds by construction.
    pub fn inner_sphere_by_construction(&self) -> bool {
        !matches!(self, WeightSpec::Table { .. })
    }
}

fn example_cos(q: f64, x: f64) -> f64 {
    let r = 2.0 / (1.0 - q);
    let c = x.cos();
    r.powf(1.0 - 2.0 / r) * (1.0 - r * c * c)
}

pub fn eval_weight(spec: &WeightSpec, grid: &Grid) -> Result<ScalarField> {
    match spec {
        WeightSpec::ExampleCos { q } => {
            if !(*q > 0.0 && *q < 1.0) {
                return Err(Error::OutOfRange(format!("q = {q} must lie in (0, 1)")));
            }
            match grid.geometry() {
                Geometry::Line { lo, hi }
                    if lo.abs() <= 1e-12 && (hi - std::f64::consts::PI).abs() <= 1e-12 => {}
                g => return Err(Error::DomainMismatch(format!("cosine example lives on [0, π], got {g:?}"))),
            }
            let q = *q;
            sample(|x| example_cos(q, x), grid)
        }
        WeightSpec::RadialPiecewise {
            a_plus,
            a_minus,
            r0,
            radius,
            layout,
        } => {
            if !(*r0 > 0.0 && r0 < radius) {
                return Err(Error::InvalidWeight(format!("need 0 < R0 < R, got R0 = {r0}, R = {radius}")));
            }
            let (center, outer_len) = match grid.geometry() {
                Geometry::Radial { radius: gr, .. } if (gr - radius).abs() <= 1e-12 * radius => (0.0, gr),
                Geometry::Line { lo, hi } if ((hi - lo) / 2.0 - radius).abs() <= 1e-12 * radius => {
                    (0.5 * (lo + hi), (hi - lo) / 2.0)
                }
                g => return Err(Error::DomainMismatch(format!("radial layout with R = {radius} on {g:?}"))),
            };
            let (r0, layout) = (*r0, *layout);
            let (ap, am) = (*a_plus, *a_minus);
            sample(
                |x| {
                    let r = (x - center).abs();
                    if r < r0 {
                        let s = r / r0;
                        match layout {
                            Layout::PositiveCore => ap.magnitude(1.0 - s),
                            Layout::NegativeCore => -am.magnitude(1.0 - s),
                        }
                    } else {
                        let s = (r - r0) / (outer_len - r0);
                        match layout {
                            Layout::PositiveCore => -am.magnitude(s),
                            Layout::NegativeCore => ap.magnitude(s),
                        }
                    }
                },
                grid,
            )
        }
        WeightSpec::DeltaFamily { b1, b2, delta } => {
            if *delta < 0.0 {
                return Err(Error::InvalidWeight(format!("δ = {delta} must be >= 0")));
            }
            let f1 = sample(|x| b1.eval(x), grid)?;
            let f2 = sample(|x| b2.eval(x), grid)?;
            check_disjoint(&f1, &f2)?;
            let d = *delta;
            Ok(ScalarField::from_raw(
                *grid,
                f1.values().iter().zip(f2.values()).map(|(p, m)| p - d * m).collect(),
            ))
        }
        WeightSpec::Table { values } => ScalarField::new(*grid, values.clone()),
    }
}

/// Discrete form of `supp b1 ∩ {b2 > 0} = ∅` together with `b1, b2 >= 0`.
pub fn check_disjoint(b1: &ScalarField, b2: &ScalarField) -> Result<()> {
    b2.ensure_grid(b1.grid())?;
    for (i, (p, m)) in b1.values().iter().zip(b2.values()).enumerate() {
        if *p < 0.0 || *m < 0.0 {
            return Err(Error::InvalidWeight(format!("b1, b2 must be nonnegative (node {i})")));
        }
        if *p > 0.0 && *m > 0.0 {
            return Err(Error::SupportOverlap(i));
        }
    }
    Ok(())
}

/// Interface radius `R0` of a radial layout. On a line, radial distance is
/// measured from the midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMeta {
    pub r0: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionRequest {
    pub q: Option<f64>,
    pub region: Option<RegionMeta>,
    /// Width of the boundary band used by the decay fit.
    pub rho0: Option<f64>,
    /// Fail instead of skipping when the explicit radial conditions cannot be
    /// evaluated.
    pub require_explicit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A0Report {
    pub holds: bool,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A1Report {
    pub component_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoldsReport {
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A4Report {
    pub holds: bool,
    /// `None` when `a` vanishes on the whole band (any exponent works).
    pub eta: Option<f64>,
    pub rho0: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// Sign layout required by the theorem was observed on the nodes.
    pub layout_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CqReport {
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub a0: A0Report,
    pub a1: A1Report,
    pub a2_by_construction: bool,
    pub a3: HoldsReport,
    pub a3prime: HoldsReport,
    pub a4: A4Report,
    pub cq: CqReport,
    pub inferno: Option<ComparisonReport>,
    pub sipi: Option<ComparisonReport>,
}

/// Relative derivative threshold used for `S(a) ≫ 0`.
const DERIVATIVE_THRESHOLD: f64 = 1e-6;
const A4_MARGIN: f64 = 0.01;
const A4_FLOOR: f64 = 1e-14;

pub fn check_conditions(spec: &WeightSpec, grid: &Grid, req: &ConditionRequest) -> Result<ConditionReport> {
    let a = eval_weight(spec, grid)?;
    let region = req.region.or_else(|| spec.region());
    let mut report = check_field_conditions(&a, req.q, region, req.rho0)?;
    report.a2_by_construction = spec.inner_sphere_by_construction();
    if req.require_explicit {
        if req.q.is_none() {
            return Err(Error::MissingExponent);
        }
        if region.is_none() {
            return Err(Error::MissingRegion);
        }
    }
    Ok(report)
}

/// Conditions evaluated on an already sampled weight.
pub fn check_field_conditions(
    a: &ScalarField,
    q: Option<f64>,
    region: Option<RegionMeta>,
    rho0: Option<f64>,
) -> Result<ConditionReport> {
    let grid = *a.grid();
    if let Some(q) = q {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::OutOfRange(format!("q = {q} must lie in (0, 1)")));
        }
    }
    let total = integrate(a);
    let abs_total = integrate(&a.map_unchecked(f64::abs));
    let a0 = A0Report {
        holds: total < 0.0,
        value: total,
    };
    let a1 = A1Report {
        component_count: positive_components(a),
    };

    let s = solve_poisson(a, BoundaryCondition::Dirichlet)?;
    let interior = grid.unknowns(BoundaryCondition::Dirichlet);
    let s_pos = interior.clone().all(|i| s.values()[i] > 0.0);
    let a3prime = HoldsReport { holds: s_pos };
    let a3 = HoldsReport {
        holds: s_pos && boundary_slopes_negative(&s, DERIVATIVE_THRESHOLD),
    };

    let rho0 = rho0.unwrap_or(0.1 * grid.diameter() / 2.0);
    let a4 = decay_fit(a, rho0);

    let cq = CqReport {
        threshold: if abs_total > 0.0 { -total / abs_total } else { 0.0 },
    };

    let (inferno, sipi) = match (region, q) {
        (Some(region), Some(q)) => {
            let (inferno, sipi) = explicit_conditions(a, q, region, total < 0.0)?;
            (Some(inferno), Some(sipi))
        }
        _ => (None, None),
    };

    Ok(ConditionReport {
        a0,
        a1,
        a2_by_construction: true,
        a3,
        a3prime,
        a4,
        cq,
        inferno,
        sipi,
    })
}

/// Maximal runs of nodes with `a > 0`, counted as connected components of
/// `Ω_+`. On a one-dimensional ball a run away from the centre is two
/// components (mirror images).
pub fn positive_components(a: &ScalarField) -> usize {
    let grid = a.grid();
    let mirrored = matches!(grid.geometry(), Geometry::Radial { dim: 1, .. });
    let mut count = 0;
    let mut i = 0;
    let v = a.values();
    while i < v.len() {
        if v[i] > 0.0 {
            let start = i;
            while i < v.len() && v[i] > 0.0 {
                i += 1;
            }
            count += if mirrored && start > 0 { 2 } else { 1 };
        } else {
            i += 1;
        }
    }
    count
}

/// One-sided second-order outward slopes at every boundary point are
/// `<= -threshold * ‖u‖_∞ / diam`.
pub(crate) fn boundary_slopes_negative(u: &ScalarField, threshold: f64) -> bool {
    let slopes = outward_slopes(u);
    let bound = threshold * u.norm_inf() / u.grid().diameter();
    slopes.iter().all(|s| *s <= -bound)
}

/// Outward normal derivatives at the boundary points by one-sided
/// second-order differences.
pub fn outward_slopes(u: &ScalarField) -> Vec<f64> {
    let g = u.grid();
    let v = u.values();
    let h = g.h();
    let n = v.len();
    let right = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    match g.geometry() {
        Geometry::Line { .. } => {
            let left = (3.0 * v[0] - 4.0 * v[1] + v[2]) / (2.0 * h);
            vec![left, right]
        }
        Geometry::Radial { .. } => vec![right],
    }
}

fn decay_fit(a: &ScalarField, rho0: f64) -> A4Report {
    let grid = a.grid();
    let threshold = 1.0 - 1.0 / grid.dim() as f64;
    let pts: Vec<(f64, f64)> = (0..grid.len())
        .filter_map(|i| {
            let d = grid.boundary_distance(i);
            let v = a.values()[i].abs();
            (d > 0.0 && d < rho0 && v > A4_FLOOR).then(|| (d.ln(), v.ln()))
        })
        .collect();
    if pts.len() < 2 {
        let vanishes = (0..grid.len())
            .filter(|&i| grid.boundary_distance(i) > 0.0 && grid.boundary_distance(i) < rho0)
            .all(|i| a.values()[i].abs() <= A4_FLOOR);
        return A4Report {
            holds: vanishes,
            eta: None,
            rho0,
            threshold,
        };
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let eta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    A4Report {
        holds: eta > threshold + A4_MARGIN,
        eta: Some(eta),
        rho0,
        threshold,
    }
}

fn explicit_conditions(
    a: &ScalarField,
    q: f64,
    region: RegionMeta,
    a0: bool,
) -> Result<(ComparisonReport, ComparisonReport)> {
    let grid = *a.grid();
    let (center, radius) = match grid.geometry() {
        Geometry::Radial { radius, .. } => (0.0, radius),
        Geometry::Line { lo, hi } => (0.5 * (lo + hi), 0.5 * (hi - lo)),
    };
    let r0 = region.r0;
    if !(r0 > 0.0 && r0 < radius) {
        return Err(Error::OutOfRange(format!("R0 = {r0} must lie in (0, {radius})")));
    }
    let dim = grid.dim() as f64;
    let nodes: Vec<(f64, f64, f64)> = (0..grid.len())
        .map(|i| ((grid.coord(i) - center).abs(), a.values()[i], grid.weight(i)))
        .collect();
    let inner = |r: f64| r <= r0;
    let outer = |r: f64| r >= r0;

    let int_inner_pos: f64 = nodes.iter().filter(|n| inner(n.0)).map(|n| n.2 * n.1.max(0.0)).sum();
    let int_outer_neg: f64 = nodes.iter().filter(|n| outer(n.0)).map(|n| n.2 * (-n.1).max(0.0)).sum();
    let int_outer_pos: f64 = nodes.iter().filter(|n| outer(n.0)).map(|n| n.2 * n.1.max(0.0)).sum();
    let sup_inner_neg = nodes
        .iter()
        .filter(|n| inner(n.0))
        .map(|n| (-n.1).max(0.0))
        .fold(0.0, f64::max);

    // a >= 0 inside, a <= 0 and nonincreasing (in r) outside
    let mut outer_sorted: Vec<(f64, f64)> = nodes.iter().filter(|n| outer(n.0)).map(|n| (n.0, n.1)).collect();
    outer_sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let monotone = outer_sorted.windows(2).all(|w| w[1].1 <= w[0].1);
    // a node sitting on the interface may carry either sign
    let positive_core = nodes
        .iter()
        .all(|n| n.0 == r0 || (!inner(n.0) || n.1 >= 0.0) && (!outer(n.0) || n.1 <= 0.0));
    let inferno_lhs = (1.0 - q) / (1.0 + q) * int_outer_neg;
    let inferno_layout = positive_core && monotone;
    let inferno = ComparisonReport {
        holds: inferno_layout && inferno_lhs <= int_inner_pos,
        lhs: inferno_lhs,
        rhs: int_inner_pos,
        layout_ok: inferno_layout,
    };

    let sipi_layout = nodes.iter().all(|n| n.0 <= r0 || n.1 >= 0.0);
    let sipi_lhs =
        (1.0 - q) / (2.0 * q + dim * (1.0 - q)) * omega_sphere(grid.dim()) * r0.powf(dim) * sup_inner_neg;
    let sipi = ComparisonReport {
        holds: sipi_layout && a0 && sipi_lhs < int_outer_pos,
        lhs: sipi_lhs,
        rhs: int_outer_pos,
        layout_ok: sipi_layout,
    };
    Ok((inferno, sipi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;
    use std::f64::consts::PI;

    fn example_grid(n: usize) -> Grid {
        build_grid(Geometry::Line { lo: 0.0, hi: PI }, n).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((omega_sphere(1) - 2.0).abs() < 1e-15);
        assert!((omega_sphere(2) - 2.0 * PI).abs() < 1e-14);
        assert!((omega_sphere(3) - 4.0 * PI).abs() < 1e-14);
        assert!((omega_sphere(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn example_weight_values() {
        let g = example_grid(63);
        let a = eval_weight(&WeightSpec::ExampleCos { q: 0.5 }, &g).unwrap();
        assert!((a.values()[0] + 6.0).abs() < 1e-12);
        assert!((a.values()[32] - 2.0).abs() < 1e-12);
        let wrong = build_grid(Geometry::Line { lo: 0.0, hi: 3.0 }, 63).unwrap();
        assert!(matches!(
            eval_weight(&WeightSpec::ExampleCos { q: 0.5 }, &wrong),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn delta_family_at_zero_is_b1() {
        let g = example_grid(127);
        let b1 = BumpSum(vec![Bump { center: 0.8, half_width: 0.5, height: 1.0 }]);
        let b2 = BumpSum(vec![Bump { center: 2.3, half_width: 0.6, height: 2.0 }]);
        let a = eval_weight(&WeightSpec::DeltaFamily { b1: b1.clone(), b2: b2.clone(), delta: 0.0 }, &g).unwrap();
        let plain = sample(|x| b1.eval(x), &g).unwrap();
        assert_eq!(a, plain);
        let overlap = BumpSum(vec![Bump { center: 1.0, half_width: 0.5, height: 1.0 }]);
        assert!(matches!(
            eval_weight(&WeightSpec::DeltaFamily { b1, b2: overlap, delta: 1.0 }, &g),
            Err(Error::SupportOverlap(_))
        ));
    }

    #[test]
    fn a0_for_cosine_example() {
        // ∫_0^π (2 - 8 cos^2 x) dx = -2π
        let g = example_grid(2047);
        let rep = check_conditions(&WeightSpec::ExampleCos { q: 0.5 }, &g, &ConditionRequest::default()).unwrap();
        assert!(rep.a0.holds);
        assert!((rep.a0.value + 2.0 * PI).abs() < 1e-5);
        assert_eq!(rep.a1.component_count, 1);
        assert!(!rep.a3prime.holds);
        assert!(rep.inferno.is_none());
    }

    #[test]
    fn cq_threshold_and_inferno_factor() {
        // ∫a+ = 2, ∫a- = 3 on [0, 5]: a = +1 on [0,2], -1 on [2,5]
        let g = build_grid(Geometry::Line { lo: 0.0, hi: 5.0 }, 4999).unwrap();
        let a = sample(|x| if x < 2.0 { 1.0 } else if x > 2.0 { -1.0 } else { 0.0 }, &g).unwrap();
        let rep = check_field_conditions(&a, None, None, None).unwrap();
        assert!((rep.cq.threshold - 0.2).abs() < 1e-3);

        // symmetric interval, inner part positive: inferno factor at q = 1/3 is 1/2
        let g = build_grid(Geometry::Line { lo: -1.0, hi: 1.0 }, 1999).unwrap();
        let a = sample(|x| if x.abs() < 0.5 { 1.0 } else { -(x.abs() - 0.5) }, &g).unwrap();
        let rep = check_field_conditions(&a, Some(1.0 / 3.0), Some(RegionMeta { r0: 0.5 }), None).unwrap();
        let inf = rep.inferno.unwrap();
        let neg: f64 = (0..g.len()).map(|i| g.weight(i) * (-a.values()[i]).max(0.0)).sum();
        assert!((inf.lhs - 0.5 * neg).abs() < 1e-12);
        assert!(inf.layout_ok);
    }

    #[test]
    fn missing_region_is_reported() {
        let g = example_grid(63);
        let req = ConditionRequest {
            q: Some(0.5),
            require_explicit: true,
            ..Default::default()
        };
        assert_eq!(
            check_conditions(&WeightSpec::ExampleCos { q: 0.5 }, &g, &req),
            Err(Error::MissingRegion)
        );
        let req = ConditionRequest {
            require_explicit: true,
            region: Some(RegionMeta { r0: 1.0 }),
            ..Default::default()
        };
        assert_eq!(
            check_conditions(&WeightSpec::ExampleCos { q: 0.5 }, &g, &req),
            Err(Error::MissingExponent)
        );
    }

    #[test]
    fn components_on_mirrored_line_ball() {
        let g = build_grid(Geometry::Radial { radius: 1.0, dim: 1 }, 99).unwrap();
        let a = sample(|r| if (0.4..0.6).contains(&r) { 1.0 } else { -1.0 }, &g).unwrap();
        assert_eq!(positive_components(&a), 2);
        let g3 = build_grid(Geometry::Radial { radius: 1.0, dim: 3 }, 99).unwrap();
        let a3 = sample(|r| if (0.4..0.6).contains(&r) { 1.0 } else { -1.0 }, &g3).unwrap();
        assert_eq!(positive_components(&a3), 1);
    }

    #[test]
    fn decay_exponent_fit() {
        let g = example_grid(1023);
        let a = sample(|x| (x * (PI - x)).powf(1.5), &g).unwrap();
        let rep = check_field_conditions(&a, None, None, Some(0.2)).unwrap();
        let eta = rep.a4.eta.unwrap();
        assert!((eta - 1.5).abs() < 0.1, "eta {eta}");
        assert!(rep.a4.holds);
    }

    #[test]
    fn a0_decreases_with_delta() {
        let g = example_grid(255);
        let b1 = BumpSum(vec![Bump { center: 1.0, half_width: 0.6, height: 1.0 }]);
        let b2 = BumpSum(vec![Bump { center: 2.4, half_width: 0.5, height: 1.0 }]);
        let mut last = f64::INFINITY;
        for delta in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let spec = WeightSpec::DeltaFamily { b1: b1.clone(), b2: b2.clone(), delta };
            let v = check_conditions(&spec, &g, &ConditionRequest::default()).unwrap().a0.value;
            assert!(v < last);
            last = v;
        }
    }
}
