//! Experiment configuration: one JSON document per run.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conical::LateralCondition;
use crate::error::{Error, Result};
use crate::grid::{PeriodicStripGrid, PlaneGrid};
use crate::model::{check_alpha, validate_flow, CombustionNonlinearity, ReactionFamily, ShearFlow};
use crate::pulsating::PulsatingOptions;

/// An angle in radians, or a string such as `"pi/3"`, `"2pi/3"`, `"60deg"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Radians(f64),
    Expr(String),
}

impl Angle {
    pub fn radians(&self) -> Result<f64> {
        match self {
            Angle::Radians(a) => Ok(*a),
            Angle::Expr(s) => parse_angle(s),
        }
    }
}

fn parse_angle(s: &str) -> Result<f64> {
    let bad = || Error::InvalidInput(format!("cannot read angle {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    if let Some(deg) = t.strip_suffix("deg") {
        return deg.parse::<f64>().map(|d| d * PI / 180.0).map_err(|_| bad());
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let num = match num.strip_suffix("pi") {
        Some("") => PI,
        Some(k) => k.trim_end_matches('*').parse::<f64>().map_err(|_| bad())? * PI,
        None => num.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(num / den)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub theta: f64,
    /// Defaults to `(1 - θ)/2`.
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub reaction: ReactionFamily,
    pub flow: ShearFlow,
    pub alphas: Vec<Angle>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StripConfig {
    pub nx: usize,
    pub y_max: f64,
    pub ny: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlaneConfig {
    pub x_max: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    /// Height of the barrier apex.
    #[serde(default)]
    pub apex: f64,
    /// Half-domain solve; `None` uses it whenever the flow is even.
    #[serde(default)]
    pub symmetric: Option<bool>,
    #[serde(default)]
    pub lateral: LateralCondition,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridsConfig {
    pub strip: StripConfig,
    pub plane: PlaneConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TolerancesConfig {
    /// Relative tolerance of the speed formula.
    pub speed_formula: f64,
    /// Relative tolerance against the planar oracle when `q ≡ 0`.
    pub planar_oracle: f64,
    /// Relative tolerance on `|c_A - c_B|`.
    pub symmetry: f64,
    pub monotone: f64,
    pub uniqueness: f64,
    pub cone_lower: f64,
    pub cone_upper: f64,
    /// Outermost cone level as a fraction of the plane `y_max`.
    pub cone_fraction: f64,
    pub cone_levels: usize,
    /// `ε_disc` as a multiple of the calibrated residual.
    pub calibration_factor: f64,
    /// Shift used for the comparison-on-cone check.
    pub comparison_shift: f64,
    pub pulsating: PulsatingOptions,
    pub evolve: EvolveTolerances,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        Self {
            speed_formula: 0.02,
            planar_oracle: 0.01,
            symmetry: 0.005,
            monotone: 1e-10,
            uniqueness: 1e-2,
            cone_lower: 0.05,
            cone_upper: 0.95,
            cone_fraction: 0.8,
            cone_levels: 5,
            calibration_factor: 5.0,
            comparison_shift: 3.0,
            pulsating: PulsatingOptions::default(),
            evolve: EvolveTolerances::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveTolerances {
    pub dt: f64,
    pub steady_tol: f64,
    pub speed_tol: f64,
    pub min_time: f64,
    pub max_time: f64,
    pub gain: f64,
}

impl Default for EvolveTolerances {
    fn default() -> Self {
        Self { dt: 1.0, steady_tol: 1e-8, speed_tol: 1e-8, min_time: 40.0, max_time: 4000.0, gain: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StagesConfig {
    pub pulsating: bool,
    /// Solve the B problem too (needed for barriers and the symmetry check).
    pub variant_b: bool,
    pub barriers: bool,
    pub evolve: bool,
    /// Second evolution from `min(super, 1)`.
    pub from_super: bool,
    pub verify: bool,
}

impl Default for StagesConfig {
    fn default() -> Self {
        Self { pulsating: true, variant_b: true, barriers: true, evolve: true, from_super: true, verify: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputsConfig {
    pub directory: Option<String>,
    /// Steps between snapshots of the evolution from the subsolution; 0 keeps none.
    pub snapshot_stride: usize,
    pub csv: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self { directory: None, snapshot_stride: 0, csv: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemConfig,
    pub grids: GridsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub stages: StagesConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub seed: u64,
}

/// Smallest resolutions accepted.
pub const MIN_STRIP_NX: usize = 64;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn nonlinearity(&self) -> Result<CombustionNonlinearity> {
        let p = &self.problem;
        CombustionNonlinearity::new(p.theta, p.r.unwrap_or(0.5 * (1.0 - p.theta)), p.reaction.clone())
    }

    pub fn alphas(&self) -> Result<Vec<f64>> {
        self.problem.alphas.iter().map(Angle::radians).collect()
    }

    pub fn strip_grid(&self) -> Result<PeriodicStripGrid> {
        let s = self.grids.strip;
        PeriodicStripGrid::new(self.problem.flow.period, s.nx, s.y_max, s.ny)
    }

    pub fn plane_grid(&self) -> Result<PlaneGrid> {
        let p = self.grids.plane;
        PlaneGrid::new(p.x_max, p.y_max, p.nx, p.ny)
    }

    /// Uniform refinement of both grids.
    pub fn scaled(&self, factor: usize) -> Self {
        let mut out = self.clone();
        let g = &mut out.grids;
        g.strip.nx *= factor;
        g.strip.ny *= factor;
        g.plane.nx *= factor;
        g.plane.ny *= factor;
        out
    }

    /// Whether the plane solve uses the half domain.
    pub fn symmetric(&self) -> Result<bool> {
        let even = validate_flow(&self.problem.flow)?.even;
        Ok(self.grids.plane.symmetric.unwrap_or(even))
    }

    /// Checks everything that can be checked before any solve.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.problem.alphas.is_empty() {
            return bad("no angles given".into());
        }
        let alphas = self.alphas()?;
        for &a in &alphas {
            check_alpha(a)?;
        }
        self.nonlinearity()?;
        let fv = validate_flow(&self.problem.flow)?;
        if !fv.periodic || !fv.zero_mean {
            return bad(format!(
                "flow fails validation (periodicity defect {:.2e}, mean {:.2e})",
                fv.periodicity_defect, fv.mean
            ));
        }
        if self.grids.plane.symmetric == Some(true) && !fv.even {
            return bad("half-domain solve requested for a flow that is not even".into());
        }
        let strip = self.strip_grid()?;
        if strip.nx < MIN_STRIP_NX {
            return bad(format!("strip needs nx >= {MIN_STRIP_NX}, got {}", strip.nx));
        }
        let plane = self.plane_grid()?;
        let t = &self.tolerances;
        let positive = [
            t.speed_formula,
            t.planar_oracle,
            t.symmetry,
            t.monotone,
            t.uniqueness,
            t.cone_lower,
            t.cone_upper,
            t.cone_fraction,
            t.calibration_factor,
            t.comparison_shift,
            t.evolve.dt,
            t.evolve.steady_tol,
            t.evolve.speed_tol,
            t.evolve.max_time,
            t.pulsating.speed_tol,
            t.pulsating.drift_tol,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("tolerances must be positive".into());
        }
        if t.cone_levels < 2 || t.cone_fraction >= 1.0 {
            return bad("cone levels need at least 2 levels inside the domain".into());
        }
        let apex = self.grids.plane.apex;
        for &a in &alphas {
            if self.stages.evolve && !plane.cone_fits(a) {
                return bad(format!("plane too short: cone at alpha = {a:.4} leaves through the bottom edge"));
            }
            let reach = plane.x_max * a.cos().abs() + (plane.y_max + apex.abs()) * a.sin();
            if self.stages.barriers && reach > strip.y_max {
                return bad(format!("strip half-height {} is below the rotated plane reach {reach:.3}", strip.y_max));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert!((parse_angle("pi/3").unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((parse_angle("2pi/3").unwrap() - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!((parse_angle("60deg").unwrap() - PI / 3.0).abs() < 1e-15);
        assert!((parse_angle("1.5").unwrap() - 1.5).abs() < 1e-15);
        assert!(parse_angle("half").is_err());
    }

    fn sample() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"name": "t", "problem": {"theta": 0.3, "flow": {"period": 1.0, "profile": {"family": "cosine", "amplitude": 0.5}},
                "alphas": ["pi/3", 1.5707963267948966]},
                "grids": {"strip": {"nx": 64, "y_max": 40, "ny": 1280},
                          "plane": {"x_max": 8, "y_max": 20, "nx": 128, "ny": 160}}}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_validation() {
        let c = sample();
        c.validate().unwrap();
        assert!(c.symmetric().unwrap());
        assert_eq!(c.tolerances.speed_formula, 0.02);
        let s = c.scaled(2);
        assert_eq!((s.grids.plane.nx, s.grids.strip.ny), (256, 2560));
        let mut z = c.clone();
        z.problem.alphas = vec![Angle::Radians(0.0)];
        assert!(z.validate().is_err());
        let mut short = c;
        short.grids.strip.y_max = 10.0;
        short.grids.strip.ny = 320;
        assert!(short.validate().is_err());
    }
}
