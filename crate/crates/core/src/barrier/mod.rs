//! Sub- and supersolutions on the plane built from the two rotated pulsating
//! fronts, the band constants behind them, and residual-sign certification.

pub mod hprofile;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field2, PlaneGrid};
use crate::model::{CombustionNonlinearity, ShearFlow};
use crate::pulsating::planar::PlanarFront;
use crate::pulsating::{FrontProfile, StripInterpolant};

pub use hprofile::{extend_h, integrate_h, HOptions, HProfile};

/// Levels and derivative floors measured on the two normalized fronts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandConstants {
    pub m0: f64,
    pub m0_prime: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub mu: f64,
    pub mu0: f64,
    pub beta: f64,
}

/// Rotated levels of one front.
#[derive(Clone, Copy, Debug)]
struct Levels {
    low: f64,
    band_bottom: f64,
    band_top: f64,
    mu: f64,
    mu0: f64,
}

/// First crossing of an increasing row statistic through `level`, linear
/// between rows. `strict` selects the first row with value `> level`
/// (a "largest level with value ≤" bound), otherwise `≥ level`.
fn row_crossing(stat: &[f64], y: impl Fn(usize) -> f64, level: f64, strict: bool) -> Option<f64> {
    let hit = |v: f64| if strict { v > level } else { v >= level };
    let j = stat.iter().position(|&v| hit(v))?;
    if j == 0 {
        return None;
    }
    let (a, b) = (stat[j - 1], stat[j]);
    let s = if b > a { ((level - a) / (b - a)).clamp(0.0, 1.0) } else { 1.0 };
    Some(y(j - 1) + s * (y(j) - y(j - 1)))
}

fn band_min_derivative(interp: &StripInterpolant, profile: &FrontProfile, lo: f64, hi: f64) -> f64 {
    let g = profile.grid;
    let mut worst = f64::INFINITY;
    for i in 0..g.nx {
        let x = g.x(i);
        worst = worst.min(interp.dy(x, lo)).min(interp.dy(x, hi));
        for j in 0..g.nrows() {
            let y = g.y(j);
            if y > lo && y < hi {
                worst = worst.min(interp.dy(x, y));
            }
        }
    }
    worst
}

fn front_levels(profile: &FrontProfile, theta: f64) -> Result<Levels> {
    let g = profile.grid;
    let v = &profile.values;
    let sup: Vec<f64> = (0..g.nrows()).map(|j| (0..g.nx).map(|i| v.at(i, j)).fold(f64::MIN, f64::max)).collect();
    let inf: Vec<f64> = (0..g.nrows()).map(|j| (0..g.nx).map(|i| v.at(i, j)).fold(f64::MAX, f64::min)).collect();
    let y = |j: usize| g.y(j);
    let empty = |what: &str| Error::Domain(format!("empty band: {what} not found in the strip (y_max too small?)"));
    let low = row_crossing(&sup, y, 0.25 * theta, true).ok_or_else(|| empty("sup level θ/4"))?;
    let band_bottom = row_crossing(&sup, y, 0.5 * theta, true).ok_or_else(|| empty("sup level θ/2"))?;
    let band_top = row_crossing(&inf, y, 0.5, false).ok_or_else(|| empty("inf level 1/2"))?;
    if !(low < band_bottom && band_bottom < 0.0 && band_top > 0.0) {
        return Err(Error::Domain(format!("band levels out of order: {low}, {band_bottom}, {band_top}")));
    }
    let interp = StripInterpolant::new(profile);
    Ok(Levels {
        low,
        band_bottom,
        band_top,
        mu: band_min_derivative(&interp, profile, band_bottom, band_top),
        mu0: band_min_derivative(&interp, profile, low, band_bottom),
    })
}

/// Measures `M₀…M₄`, `μ`, `μ₀` on the normalized fronts `φ` (A) and `ψ` (B)
/// and sets `β` by [`choose_beta`].
pub fn measure_band_constants(phi: &FrontProfile, psi: &FrontProfile, theta: f64, alpha: f64) -> Result<BandConstants> {
    if !phi.normalized || !psi.normalized {
        return Err(Error::InvalidInput("band constants need normalized fronts".into()));
    }
    let a = front_levels(phi, theta)?;
    let b = front_levels(psi, theta)?;
    let mu = a.mu.min(b.mu);
    let mu0 = a.mu0.min(b.mu0);
    if !(mu > 0.0 && mu0 > 0.0) {
        return Err(Error::Domain(format!("derivative floors are not positive (mu = {mu:.3e}, mu0 = {mu0:.3e})")));
    }
    Ok(BandConstants {
        m0: a.low,
        m0_prime: b.low,
        m1: a.band_bottom,
        m2: b.band_bottom,
        m3: a.band_top,
        m4: b.band_top,
        mu,
        mu0,
        beta: choose_beta(mu, mu0, alpha),
    })
}

/// Largest admissible `β = min{4μ² sin²α, μ₀² sin²α}`.
pub fn choose_beta(mu: f64, mu0: f64, alpha: f64) -> f64 {
    let s2 = alpha.sin().powi(2);
    (4.0 * mu * mu * s2).min(mu0 * mu0 * s2)
}

/// The two rotated fronts and their `Y`-derivatives sampled on the plane.
#[derive(Clone, Debug)]
pub struct Components {
    pub phi1: Field2,
    pub phi2: Field2,
    pub dphi1: Field2,
    pub dphi2: Field2,
}

/// Rotated coordinates `(Y, Y')` of a plane point, measured from the apex height.
pub fn rotated(x: f64, y: f64, alpha: f64, apex: f64) -> (f64, f64) {
    let (c, s) = (alpha.cos(), alpha.sin());
    (x * c + (y - apex) * s, -x * c + (y - apex) * s)
}

/// `φ₁(x,y) = φ(x, Y)`, `φ₂(x,y) = ψ(x, Y')` by cubic interpolation of the
/// strip profiles.
pub fn build_components(
    phi: &FrontProfile,
    psi: &FrontProfile,
    alpha: f64,
    grid: &PlaneGrid,
    apex: f64,
) -> Result<Components> {
    crate::model::check_alpha(alpha)?;
    if (phi.grid.period - psi.grid.period).abs() > 1e-12 {
        return Err(Error::InvalidInput("fronts have different periods".into()));
    }
    let ia = StripInterpolant::new(phi);
    let ib = StripInterpolant::new(psi);
    let reach = ia.y_max().min(ib.y_max());
    let mut worst = 0.0f64;
    for (x, y) in [(-grid.x_max, -grid.y_max), (grid.x_max, -grid.y_max), (-grid.x_max, grid.y_max), (grid.x_max, grid.y_max)] {
        let (a, b) = rotated(x, y, alpha, apex);
        worst = worst.max(a.abs()).max(b.abs());
    }
    if worst > reach + 1e-9 {
        return Err(Error::Domain(format!(
            "rotated coordinate reaches |Y| = {worst:.3} outside the strip half-height {reach}"
        )));
    }
    let mut out = Components {
        phi1: Field2::new(grid.ncols(), grid.nrows(), 0.0),
        phi2: Field2::new(grid.ncols(), grid.nrows(), 0.0),
        dphi1: Field2::new(grid.ncols(), grid.nrows(), 0.0),
        dphi2: Field2::new(grid.ncols(), grid.nrows(), 0.0),
    };
    for i in 0..grid.ncols() {
        let x = grid.x(i);
        for j in 0..grid.nrows() {
            let (ya, yb) = rotated(x, grid.y(j), alpha, apex);
            out.phi1.set(i, j, ia.eval(x, ya).clamp(0.0, 1.0));
            out.phi2.set(i, j, ib.eval(x, yb).clamp(0.0, 1.0));
            out.dphi1.set(i, j, ia.dy(x, ya));
            out.dphi2.set(i, j, ib.dy(x, yb));
        }
    }
    Ok(out)
}

pub fn build_subsolution(phi1: &Field2, phi2: &Field2) -> Field2 {
    phi1.zip_map(phi2, f64::max)
}

/// Outer profile of the supersolution.
#[derive(Clone, Copy, Debug)]
pub enum Outer<'a> {
    Profile(&'a HProfile),
    /// `H(z) = z`, for debugging.
    Identity,
}

/// Arguments may leave `[0, 2]` by this much before the clamp is an error.
pub const CLAMP_TOL: f64 = 1e-8;

/// `H(φ₁ + φ₂)`.
pub fn build_supersolution(outer: Outer<'_>, phi1: &Field2, phi2: &Field2) -> Result<Field2> {
    if !phi1.same_shape(phi2) {
        return Err(Error::InvalidInput("component shapes differ".into()));
    }
    let mut clamped = 0usize;
    let mut values = Vec::with_capacity(phi1.values.len());
    for (&a, &b) in phi1.values.iter().zip(&phi2.values) {
        let z = a + b;
        if !(-CLAMP_TOL..=2.0 + CLAMP_TOL).contains(&z) {
            return Err(Error::Domain(format!("supersolution argument {z} outside [0, 2]")));
        }
        if !(0.0..=2.0).contains(&z) {
            clamped += 1;
        }
        let z = z.clamp(0.0, 2.0);
        values.push(match outer {
            Outer::Profile(h) => h.big_h(z),
            Outer::Identity => z,
        });
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} supersolution arguments into [0, 2]");
    }
    Ok(Field2 { ncols: phi1.ncols, nrows: phi1.nrows, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    C,
    Z,
    H,
}

/// `C` iff `Y ≤ M₁` and `Y' ≤ M₂`; `H` iff `Y ≥ M₃` and `Y' ≥ M₄`; `Z` otherwise.
/// The point is given relative to the apex.
pub fn classify_region(point: (f64, f64), constants: &BandConstants, alpha: f64) -> Region {
    let (y1, y2) = rotated(point.0, point.1, alpha, 0.0);
    if y1 <= constants.m1 && y2 <= constants.m2 {
        Region::C
    } else if y1 >= constants.m3 && y2 >= constants.m4 {
        Region::H
    } else {
        Region::Z
    }
}

/// `Δφ + (q(x) - c) ∂_y φ + f(φ)` at interior nodes; boundary nodes are 0.
pub fn residual(field: &Field2, c: f64, flow: &ShearFlow, f: &CombustionNonlinearity, grid: &PlaneGrid) -> Field2 {
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut out = Field2::new(field.ncols, field.nrows, 0.0);
    for j in 1..field.nrows - 1 {
        for i in 1..field.ncols - 1 {
            let u = field.at(i, j);
            let lap = (field.at(i - 1, j) - 2.0 * u + field.at(i + 1, j)) / (dx * dx)
                + (field.at(i, j - 1) - 2.0 * u + field.at(i, j + 1)) / (dy * dy);
            let uy = (field.at(i, j + 1) - field.at(i, j - 1)) / (2.0 * dy);
            out.set(i, j, lap + (flow.eval(grid.x(i)) - c) * uy + f.eval(u));
        }
    }
    out
}

/// Discretization residual of the exact oblique planar front
/// `U(x cos α + y sin α)` moving at `c₀ / sin α` with `q ≡ 0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    pub residual: f64,
    /// `residual / h²` with `h = max(dx, dy)`.
    pub constant: f64,
    pub factor: f64,
    pub eps_disc: f64,
}

pub fn calibrate(front: &PlanarFront, f: &CombustionNonlinearity, grid: &PlaneGrid, alpha: f64, factor: f64) -> Calibration {
    let (c, s) = (alpha.cos(), alpha.sin());
    let u = grid.field(|x, y| front.eval(x * c + y * s).0);
    let r = residual(&u, front.c / s, &ShearFlow::zero(1.0), f, grid);
    let worst = r.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = grid.dx().max(grid.dy());
    Calibration { alpha, residual: worst, constant: worst / (h * h), factor, eps_disc: factor * worst }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseStats {
    pub name: String,
    pub nodes: usize,
    pub max_residual: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseReport {
    pub eps_disc: f64,
    pub cases: Vec<CaseStats>,
    /// Nodes of `H` where `f(H(φ₁+φ₂)) ≠ 0`.
    pub reaction_in_h: usize,
    /// Nodes of `Z` where `∂_Y φ < μ` or `∂_Y ψ < μ`.
    pub derivative_in_z: usize,
    pub total_violations: usize,
}

/// Everything the certification needs beside the fields themselves.
#[derive(Clone, Debug)]
pub struct BarrierPair {
    pub grid: PlaneGrid,
    pub alpha: f64,
    pub apex: f64,
    pub sub: Field2,
    pub sup: Field2,
    pub components: Components,
    pub constants: BandConstants,
    pub h: Option<HProfile>,
}

impl BarrierPair {
    pub fn build(
        phi: &FrontProfile,
        psi: &FrontProfile,
        grid: &PlaneGrid,
        alpha: f64,
        apex: f64,
        constants: BandConstants,
        h: Option<HProfile>,
    ) -> Result<Self> {
        let components = build_components(phi, psi, alpha, grid, apex)?;
        let sub = build_subsolution(&components.phi1, &components.phi2);
        let outer = match &h {
            Some(p) => Outer::Profile(p),
            None => Outer::Identity,
        };
        let sup = build_supersolution(outer, &components.phi1, &components.phi2)?;
        Ok(Self { grid: *grid, alpha, apex, sub, sup, components, constants, h })
    }

    pub fn region_at(&self, i: usize, j: usize) -> Region {
        classify_region((self.grid.x(i), self.grid.y(j) - self.apex), &self.constants, self.alpha)
    }

    /// `min(super, 1)`.
    pub fn capped_super(&self) -> Field2 {
        self.sup.map(|v| v.min(1.0))
    }

    /// Nodes of `C` with `φ₁ + φ₂ > θ` lying more than one cell from the
    /// band edges `Y = M₁`, `Y' = M₂`.
    pub fn containment_defects(&self, theta: f64) -> usize {
        let h = self.grid.dx().max(self.grid.dy());
        let mut n = 0;
        for j in 0..self.grid.nrows() {
            for i in 0..self.grid.ncols() {
                if self.region_at(i, j) != Region::C {
                    continue;
                }
                let (y1, y2) = rotated(self.grid.x(i), self.grid.y(j), self.alpha, self.apex);
                let near = (y1 - self.constants.m1).abs() <= h || (y2 - self.constants.m2).abs() <= h;
                if !near && self.components.phi1.at(i, j) + self.components.phi2.at(i, j) > theta {
                    n += 1;
                }
            }
        }
        n
    }

    /// Residual signs of the supersolution split by region, plus the
    /// pointwise facts each case relies on.
    pub fn certify_supersolution_cases(&self, res: &Field2, f: &CombustionNonlinearity, eps_disc: f64) -> CaseReport {
        let theta = f.theta;
        let names = ["C1a", "C1b", "Z", "H"];
        let mut stats: Vec<CaseStats> =
            names.iter().map(|n| CaseStats { name: n.to_string(), nodes: 0, max_residual: f64::NEG_INFINITY, violations: 0 }).collect();
        let (mut reaction_in_h, mut derivative_in_z) = (0, 0);
        let c = &self.components;
        for j in 1..self.grid.nrows() - 1 {
            for i in 1..self.grid.ncols() - 1 {
                let region = self.region_at(i, j);
                let k = match region {
                    Region::C if self.sup.at(i, j) <= theta => 0,
                    Region::C => 1,
                    Region::Z => 2,
                    Region::H => 3,
                };
                let r = res.at(i, j);
                let s = &mut stats[k];
                s.nodes += 1;
                s.max_residual = s.max_residual.max(r);
                if r > eps_disc {
                    s.violations += 1;
                }
                match region {
                    Region::H if f.eval(self.sup.at(i, j)) != 0.0 => reaction_in_h += 1,
                    Region::Z if c.dphi1.at(i, j) < self.constants.mu || c.dphi2.at(i, j) < self.constants.mu => {
                        derivative_in_z += 1
                    }
                    _ => {}
                }
            }
        }
        let total_violations = stats.iter().map(|s| s.violations).sum::<usize>() + reaction_in_h;
        CaseReport { eps_disc, cases: stats, reaction_in_h, derivative_in_z, total_violations }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BarrierCertificate {
    pub eps_disc: f64,
    /// `max(sub - super)`; `≤ 0` when ordered.
    pub ordering_worst: f64,
    pub super_max_residual: f64,
    pub super_violations: usize,
    /// Smallest subsolution residual off the max-locus band.
    pub sub_min_residual: f64,
    pub sub_violations: usize,
    pub margin: f64,
    pub cases: CaseReport,
    pub pass: bool,
}

/// Width of the excluded band `|φ₁ - φ₂| ≤ margin` around the max locus.
pub const MAX_LOCUS_MARGIN: f64 = 0.05;

pub fn certify_barriers(
    pair: &BarrierPair,
    c: f64,
    flow: &ShearFlow,
    f: &CombustionNonlinearity,
    eps_disc: f64,
) -> BarrierCertificate {
    let g = &pair.grid;
    let ordering_worst = pair.sub.values.iter().zip(&pair.sup.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    let rs = residual(&pair.sup, c, flow, f, g);
    let rl = residual(&pair.sub, c, flow, f, g);
    let (mut super_max, mut super_bad) = (f64::NEG_INFINITY, 0);
    let (mut sub_min, mut sub_bad) = (f64::INFINITY, 0);
    let comp = &pair.components;
    for j in 1..g.nrows() - 1 {
        for i in 1..g.ncols() - 1 {
            let r = rs.at(i, j);
            super_max = super_max.max(r);
            if r > eps_disc {
                super_bad += 1;
            }
            if (comp.phi1.at(i, j) - comp.phi2.at(i, j)).abs() > MAX_LOCUS_MARGIN {
                let r = rl.at(i, j);
                sub_min = sub_min.min(r);
                if r < -eps_disc {
                    sub_bad += 1;
                }
            }
        }
    }
    let cases = pair.certify_supersolution_cases(&rs, f, eps_disc);
    let pass = ordering_worst <= 0.0 && super_bad == 0 && sub_bad == 0 && cases.total_violations == 0;
    BarrierCertificate {
        eps_disc,
        ordering_worst,
        super_max_residual: super_max,
        super_violations: super_bad,
        sub_min_residual: sub_min,
        sub_violations: sub_bad,
        margin: MAX_LOCUS_MARGIN,
        cases,
        pass,
    }
}
