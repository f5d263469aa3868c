//! Discrete checks on plane fields: monotonicity in `y`, conical limits,
//! ordering, comparison on cones and alignment up to a vertical shift.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field2, PlaneGrid};
use crate::model::{ConeRegion, ConeSide};
use crate::numerics::fit::golden_section;
use crate::numerics::spline::UniformSpline;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub pass: bool,
    pub worst_violation: f64,
    /// `(x, y)` of the worst node, when there is one.
    pub location: Option<(f64, f64)>,
    pub tolerance: f64,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl VerificationReport {
    fn new(name: &str, worst: f64, location: Option<(f64, f64)>, tolerance: f64) -> Self {
        Self {
            check_name: name.to_string(),
            pass: worst <= tolerance,
            worst_violation: worst,
            location,
            tolerance,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }
}

/// Passes iff every forward `y`-difference is `≥ -tol`. The worst violation
/// is the negated smallest difference.
pub fn check_monotone_y(field: &Field2, grid: &PlaneGrid, tol: f64) -> VerificationReport {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for j in 0..field.nrows - 1 {
        for i in 0..field.ncols {
            let d = -(field.at(i, j + 1) - field.at(i, j));
            if d > worst {
                worst = d;
                at = Some((grid.x(i), grid.y(j)));
            }
        }
    }
    VerificationReport::new("monotone_y", worst, at, tol).with("grid", grid)
}

/// Nodes at least `margin` cells from every edge.
fn inner_nodes(grid: &PlaneGrid, margin: usize) -> impl Iterator<Item = (usize, usize)> {
    let (nc, nr) = (grid.ncols(), grid.nrows());
    (margin..nr.saturating_sub(margin)).flat_map(move |j| (margin..nc.saturating_sub(margin)).map(move |i| (i, j)))
}

/// Nodes of the cone kept by the checks.
pub const CONE_MARGIN: usize = 2;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConeLevelStats {
    pub level: f64,
    /// `sup` over the lower cone.
    pub lower_sup: f64,
    /// `inf` over the upper cone.
    pub upper_inf: f64,
}

/// Sup over `C⁻_{α,l}` and inf over `C⁺_{α,l}` for each level; passes iff
/// the lowest level meets `thresholds.0`, the highest meets `thresholds.1`,
/// and both sequences are nondecreasing in `l`.
pub fn check_cone_limits(
    field: &Field2,
    grid: &PlaneGrid,
    alpha: f64,
    levels: &[f64],
    thresholds: (f64, f64),
) -> Result<(VerificationReport, Vec<ConeLevelStats>)> {
    if levels.is_empty() {
        return Err(Error::InvalidInput("no cone levels given".into()));
    }
    let mut levels = levels.to_vec();
    levels.sort_by(f64::total_cmp);
    let mut stats = Vec::with_capacity(levels.len());
    for &l in &levels {
        let (lo, hi) = (ConeRegion::lower(alpha, l), ConeRegion::upper(alpha, l));
        let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut n_lo, mut n_hi) = (0, 0);
        for (i, j) in inner_nodes(grid, CONE_MARGIN) {
            let (x, y) = (grid.x(i), grid.y(j));
            let u = field.at(i, j);
            if lo.contains(x, y) {
                sup = sup.max(u);
                n_lo += 1;
            }
            if hi.contains(x, y) {
                inf = inf.min(u);
                n_hi += 1;
            }
        }
        if n_lo == 0 || n_hi == 0 {
            return Err(Error::Domain(format!("cone at level {l} does not meet the domain")));
        }
        stats.push(ConeLevelStats { level: l, lower_sup: sup, upper_inf: inf });
    }
    let first = stats[0];
    let last = stats[stats.len() - 1];
    // Violations measured in value units; monotonicity breaks count fully.
    let mut worst = (first.lower_sup - thresholds.0).max(thresholds.1 - last.upper_inf);
    for w in stats.windows(2) {
        worst = worst.max(w[0].lower_sup - w[1].lower_sup).max(w[0].upper_inf - w[1].upper_inf);
    }
    let report = VerificationReport::new("cone_limits", worst, None, 0.0)
        .with("alpha", alpha)
        .with("thresholds", thresholds)
        .with("levels", &stats)
        .with("grid", grid);
    Ok((report, stats))
}

/// `sub ≤ mid + tol` and `mid ≤ min(super, 1) + tol` pointwise.
pub fn check_ordering(sub: &Field2, mid: &Field2, sup: &Field2, grid: &PlaneGrid, tol: f64) -> Result<VerificationReport> {
    if !sub.same_shape(mid) || !mid.same_shape(sup) {
        return Err(Error::InvalidInput("ordering check needs fields of one shape".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for j in 0..mid.nrows {
        for i in 0..mid.ncols {
            let m = mid.at(i, j);
            let d = (sub.at(i, j) - m).max(m - sup.at(i, j).min(1.0));
            if d > worst {
                worst = d;
                at = Some((grid.x(i), grid.y(j)));
            }
        }
    }
    Ok(VerificationReport::new("ordering", worst, at, tol).with("grid", grid))
}

/// Which side's bound the comparison relies on.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum ConeHypothesis {
    /// On an upper cone: `upper ≥ 1 - ρ`.
    Upper { rho: f64 },
    /// On a lower cone: `lower ≤ θ`.
    Lower { theta: f64 },
}

/// Default `ρ` with `1 - ρ = (1 + θ) / 2`.
pub fn default_rho(theta: f64) -> f64 {
    1.0 - 0.5 * (1.0 + theta)
}

/// Checks the hypotheses of the cone comparison (ordering on the truncated
/// cone boundary, the interior bound) and then its conclusion
/// `lower ≤ upper + tol` on the truncated cone.
pub fn check_comparison_on_cone(
    lower: &Field2,
    upper: &Field2,
    grid: &PlaneGrid,
    cone: &ConeRegion,
    hypothesis: ConeHypothesis,
    tol: f64,
) -> Result<VerificationReport> {
    if !lower.same_shape(upper) {
        return Err(Error::InvalidInput("comparison needs fields of one shape".into()));
    }
    let side_ok = matches!(
        (cone.side, hypothesis),
        (ConeSide::Upper, ConeHypothesis::Upper { .. }) | (ConeSide::Lower, ConeHypothesis::Lower { .. })
    );
    if !side_ok {
        return Err(Error::InvalidInput("hypothesis does not match the cone side".into()));
    }
    let (nc, nr) = (grid.ncols(), grid.nrows());
    let m = CONE_MARGIN;
    let kept = |i: usize, j: usize| {
        i >= m && j >= m && i + m < nc && j + m < nr && cone.contains(grid.x(i), grid.y(j))
    };
    let mut nodes = 0usize;
    let (mut boundary_worst, mut bound_worst, mut conclusion_worst) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut at = None;
    let mut bound_at = (f64::NAN, f64::NAN);
    for (i, j) in inner_nodes(grid, m) {
        if !kept(i, j) {
            continue;
        }
        nodes += 1;
        let d = lower.at(i, j) - upper.at(i, j);
        let on_edge = !(kept(i - 1, j) && kept(i + 1, j) && kept(i, j - 1) && kept(i, j + 1));
        if on_edge {
            boundary_worst = boundary_worst.max(d);
        }
        let b = match hypothesis {
            ConeHypothesis::Upper { rho } => (1.0 - rho) - upper.at(i, j),
            ConeHypothesis::Lower { theta } => lower.at(i, j) - theta,
        };
        if b > bound_worst {
            bound_worst = b;
            bound_at = (grid.x(i), grid.y(j));
        }
        if d > conclusion_worst {
            conclusion_worst = d;
            at = Some((grid.x(i), grid.y(j)));
        }
    }
    if nodes == 0 {
        return Err(Error::Domain("cone does not meet the truncated domain".into()));
    }
    let mut failed = Vec::new();
    if boundary_worst > tol {
        failed.push("boundary ordering");
    }
    if bound_worst > 0.0 {
        failed.push(match hypothesis {
            ConeHypothesis::Upper { .. } => "upper bound 1 - rho",
            ConeHypothesis::Lower { .. } => "lower bound theta",
        });
    }
    let mut report = VerificationReport::new("comparison_on_cone", conclusion_worst, at, tol)
        .with("cone", cone)
        .with("hypothesis", hypothesis)
        .with("boundary_worst", boundary_worst)
        .with("bound_worst", bound_worst)
        .with("bound_at", bound_at)
        .with("failed_hypotheses", &failed)
        .with("nodes", nodes);
    report.pass = report.pass && failed.is_empty();
    Ok(report)
}

/// Column splines for evaluating `u(x, y + κ)`; outside the grid the edge
/// values are held.
pub struct ColumnShifter<'a> {
    grid: &'a PlaneGrid,
    columns: Vec<UniformSpline>,
}

impl<'a> ColumnShifter<'a> {
    pub fn new(field: &Field2, grid: &'a PlaneGrid) -> Self {
        let columns = (0..field.ncols).map(|i| UniformSpline::natural(-grid.y_max, grid.dy(), field.column(i))).collect();
        Self { grid, columns }
    }

    pub fn value(&self, i: usize, y: f64) -> f64 {
        self.columns[i].eval(y)
    }

    pub fn shifted(&self, kappa: f64) -> Field2 {
        Field2::from_fn(self.grid.ncols(), self.grid.nrows(), |i, j| self.columns[i].eval(self.grid.y(j) + kappa))
    }

    /// `max |u(x, y + κ) - other(x, y)|`.
    pub fn distance(&self, other: &Field2, kappa: f64) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.grid.nrows() {
            let y = self.grid.y(j) + kappa;
            for i in 0..self.grid.ncols() {
                worst = worst.max((self.columns[i].eval(y) - other.at(i, j)).abs());
            }
        }
        worst
    }
}

/// `u(x, y + τ)` with edge values held outside the grid.
pub fn shift_up(field: &Field2, grid: &PlaneGrid, tau: f64) -> Field2 {
    ColumnShifter::new(field, grid).shifted(tau)
}

/// Finds `κ` minimizing `max |a(x, y + κ) - b(x, y)|` over `|κ| ≤ y_max / 2`:
/// a scan over whole rows, then golden section to `10⁻⁴ dy`.
pub fn check_shift_uniqueness(a: &Field2, b: &Field2, grid: &PlaneGrid, tol: f64) -> Result<(f64, VerificationReport)> {
    if !a.same_shape(b) {
        return Err(Error::InvalidInput("shift alignment needs fields of one shape".into()));
    }
    let dy = grid.dy();
    let reach = ((0.5 * grid.y_max) / dy).floor() as isize;
    let shifter = ColumnShifter::new(a, grid);
    let row_distance = |k: isize| {
        let mut worst = 0.0f64;
        for j in 0..grid.nrows() {
            let src = (j as isize + k).clamp(0, grid.ny as isize) as usize;
            for i in 0..grid.ncols() {
                worst = worst.max((a.at(i, src) - b.at(i, j)).abs());
            }
        }
        worst
    };
    let mut best = (0isize, f64::INFINITY);
    for k in -reach..=reach {
        let d = row_distance(k);
        if d < best.1 {
            best = (k, d);
        }
    }
    if best.0.abs() == reach {
        return Err(Error::Domain(format!("best shift sits at the search bound {:.3}", best.0 as f64 * dy)));
    }
    let centre = best.0 as f64 * dy;
    let (kappa, diff) = golden_section(|s| shifter.distance(b, s), centre - dy, centre + dy, 1e-4 * dy);
    let report = VerificationReport::new("shift_uniqueness", diff, None, tol).with("shift", kappa).with("grid", grid);
    Ok((kappa, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PlaneGrid {
        PlaneGrid::new(4.0, 12.0, 16, 96).unwrap()
    }

    fn front(g: &PlaneGrid, shift: f64) -> Field2 {
        g.field(|x, y| 0.5 * (1.0 + (0.7 * (y - shift) + 0.05 * x * x).tanh()))
    }

    #[test]
    fn monotone_detects_an_inversion() {
        let g = grid();
        let mut u = front(&g, 0.0);
        assert!(check_monotone_y(&u, &g, 1e-10).pass);
        assert!(check_monotone_y(&Field2::new(g.ncols(), g.nrows(), 0.3), &g, 1e-10).pass);
        let v = u.at(5, 40);
        u.set(5, 41, v - 0.1);
        let r = check_monotone_y(&u, &g, 1e-10);
        assert!(!r.pass);
        assert_eq!(r.location, Some((g.x(5), g.y(40))));
    }

    #[test]
    fn half_field_fails_cone_limits() {
        let g = grid();
        let levels = [-9.6, -4.8, 0.0, 4.8, 9.6];
        let u = Field2::new(g.ncols(), g.nrows(), 0.5);
        let (r, _) = check_cone_limits(&u, &g, std::f64::consts::FRAC_PI_2, &levels, (0.05, 0.95)).unwrap();
        assert!(!r.pass);
        let (r, s) = check_cone_limits(&front(&g, 0.0), &g, std::f64::consts::FRAC_PI_2, &levels, (0.05, 0.95)).unwrap();
        assert!(r.pass, "{s:?}");
    }

    #[test]
    fn swapped_ordering_fails() {
        let g = grid();
        let lo = front(&g, 1.0);
        let hi = front(&g, -1.0);
        assert!(check_ordering(&lo, &lo, &hi, &g, 0.0).unwrap().pass);
        assert!(!check_ordering(&hi, &lo, &hi, &g, 0.0).unwrap().pass);
    }

    #[test]
    fn comparison_hypotheses() {
        let g = grid();
        let u = front(&g, 0.0);
        let cone = ConeRegion::upper(std::f64::consts::FRAC_PI_2, 2.0);
        let hyp = ConeHypothesis::Upper { rho: default_rho(0.3) };
        let up = shift_up(&u, &g, 3.0);
        assert!(check_comparison_on_cone(&u, &up, &g, &cone, hyp, 1e-10).unwrap().pass);
        let same = check_comparison_on_cone(&u, &u, &g, &ConeRegion::upper(std::f64::consts::FRAC_PI_2, 6.0), hyp, 0.0).unwrap();
        assert!(same.pass);
        let down = shift_up(&u, &g, -3.0);
        let r = check_comparison_on_cone(&u, &down, &g, &cone, hyp, 1e-10).unwrap();
        assert!(!r.pass);
        let failed = r.metadata["failed_hypotheses"].as_array().unwrap();
        assert!(failed.iter().any(|v| v == "boundary ordering"));
    }

    #[test]
    fn shift_recovery() {
        let g = grid();
        let u = front(&g, 0.0);
        let (k, r) = check_shift_uniqueness(&u, &u, &g, 1e-12).unwrap();
        assert!(k.abs() < 1e-3 * g.dy() && r.pass);
        let v = front(&g, -1.5 * g.dy());
        let (k, _) = check_shift_uniqueness(&u, &v, &g, 1e-2).unwrap();
        assert!((k - 1.5 * g.dy()).abs() < 1e-3, "{k}");
        let (back, _) = check_shift_uniqueness(&v, &u, &g, 1e-2).unwrap();
        assert!((k + back).abs() < 1e-3);
    }
}
