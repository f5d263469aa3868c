//! Pulsating fronts of the strip problems
//! `div(M∇φ) + (q(X) sin α - c) φ_Y + f(φ) = 0`, `φ(·,-inf) = 0`,
//! `φ(·,+inf) = 1`, `L`-periodic in `X`, for `M = A` or `M = B`.
//!
//! The speed is found by relaxing the parabolic problem in a tracked frame and
//! then certifying it with a frozen-frame drift-sign bisection.

pub mod planar;
pub mod strip;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{crossing_in_column, Discretization, FrameControl, Integrator, Stepper, StepperOptions};
use crate::grid::{Field2, PeriodicStripGrid};
use crate::model::{CombustionNonlinearity, DiffusionMatrix, MatrixVariant, ShearFlow};
use crate::numerics::spline::{PeriodicSpline, UniformSpline};

pub use planar::{planar_front_speed_1d, PlanarFront, PlanarOptions};
pub use strip::discretize_strip;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMethod {
    Shooting,
    DriftBisection,
    TraceFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub c: f64,
    pub residual: f64,
    pub iterations: usize,
    pub bracket: f64,
    pub method: SpeedMethod,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontProfile {
    pub grid: PeriodicStripGrid,
    pub values: Field2,
    pub variant: MatrixVariant,
    pub alpha: f64,
    pub normalized: bool,
}

impl FrontProfile {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values.at(i, j)
    }

    /// Minimum column-wise forward difference in `Y`.
    pub fn min_forward_difference(&self) -> f64 {
        let v = &self.values;
        let mut m = f64::INFINITY;
        for j in 0..v.nrows - 1 {
            for i in 0..v.ncols {
                m = m.min(v.at(i, j + 1) - v.at(i, j));
            }
        }
        m
    }

    /// The profile `X ↦ φ(-X, Y)`.
    pub fn reflected(&self, variant: MatrixVariant) -> FrontProfile {
        let nx = self.grid.nx;
        let values = Field2::from_fn(nx, self.values.nrows, |i, j| self.values.at((nx - i) % nx, j));
        FrontProfile { values, variant, ..self.clone() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PulsatingOptions {
    pub integrator: Integrator,
    pub dt: Option<f64>,
    pub max_time: f64,
    pub steady_tol: f64,
    /// Required bisection bracket width.
    pub speed_tol: f64,
    /// Required drift rate at the returned speed.
    pub drift_tol: f64,
    /// Length of each frozen-frame drift window.
    pub window: f64,
    pub max_bisections: usize,
    /// Residual tolerance as a multiple of `h²`, `h = max(dX, dY)`.
    pub residual_factor: f64,
}

impl Default for PulsatingOptions {
    fn default() -> Self {
        Self {
            integrator: Integrator::LinearlyImplicitEuler,
            dt: None,
            max_time: 3000.0,
            steady_tol: 1e-9,
            speed_tol: 1e-4,
            drift_tol: 1e-5,
            window: 10.0,
            max_bisections: 60,
            residual_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PulsatingSolution {
    pub speed: SpeedEstimate,
    pub profile: FrontProfile,
    /// Frame speed at the end of the relaxation.
    pub relaxed_speed: f64,
    pub relax_time: f64,
    /// `(trial speed, drift)` pairs; drift is `c* - c` measured from the level.
    pub trials: Vec<(f64, f64)>,
    /// Max-norm of the discrete residual at the returned speed.
    pub residual_norm: f64,
    pub residual_tol: f64,
}

/// Ramp of unit width centred at `Y = 0`, clamped to `[0,1]`.
pub fn ramp_initial(grid: &PeriodicStripGrid) -> Field2 {
    let mut f = Field2::from_fn(grid.nx, grid.nrows(), |_, j| (0.5 + grid.y(j)).clamp(0.0, 1.0));
    for i in 0..grid.nx {
        f.set(i, 0, 0.0);
        f.set(i, grid.ny, 1.0);
    }
    f
}

/// Mean drift rate of the tracked level over the late half of a window of
/// `opts.window` run in a frame frozen at speed `c`; positive when `c` is
/// below the front speed.
pub fn frozen_frame_drift(
    disc: &Discretization,
    f: &CombustionNonlinearity,
    start: &Field2,
    c: f64,
    opts: &PulsatingOptions,
    dt: f64,
) -> Result<f64> {
    let steps = (opts.window / dt).round().max(4.0) as usize;
    let sopts = StepperOptions {
        integrator: opts.integrator,
        dt: Some(dt),
        frame: FrameControl::Fixed { speed: c },
        max_time: steps as f64 * dt,
        shift_cells: None,
        fixed_duration: true,
        refactor_tol: 1e-2,
        ..StepperOptions::default()
    };
    let mut stepper = Stepper::new(disc, f, sopts)?;
    let out = stepper.run(start, |_, _| {})?;
    // late half of the window
    let pts: Vec<(f64, f64)> = out
        .samples
        .iter()
        .skip(out.samples.len() / 2)
        .filter_map(|s| s.frame_position.map(|p| (s.t, p)))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain("tracked level left the strip during a drift window".into()));
    }
    let (t0, p0) = pts[0];
    let (t1, p1) = pts[pts.len() - 1];
    Ok(-(p1 - p0) / (t1 - t0))
}

pub fn solve_pulsating_front(
    matrix: &DiffusionMatrix,
    flow: &ShearFlow,
    alpha: f64,
    f: &CombustionNonlinearity,
    grid: &PeriodicStripGrid,
    opts: &PulsatingOptions,
) -> Result<PulsatingSolution> {
    crate::model::check_alpha(alpha)?;
    let disc = discretize_strip(grid, matrix, flow, alpha);
    let initial = ramp_initial(grid);
    let relax_opts = StepperOptions {
        integrator: opts.integrator,
        dt: opts.dt,
        frame: FrameControl::Tracking { initial_speed: 0.0, gain: 0.2 },
        anchor: Some(0.0),
        level: f.theta,
        min_time: 20.0,
        max_time: opts.max_time,
        steady_tol: opts.steady_tol,
        speed_tol: opts.steady_tol,
        shift_cells: Some(8.0),
        ..StepperOptions::default()
    };
    let mut stepper = Stepper::new(&disc, f, relax_opts)?;
    let dt = stepper.dt();
    let relaxed = stepper.run(&initial, |_, _| {})?;
    if !relaxed.converged {
        return Err(Error::NoConvergence(format!(
            "strip relaxation did not settle by t = {} (change rate {:.3e})",
            relaxed.t, relaxed.change_rate
        )));
    }
    let c_relaxed = relaxed.speed_estimate.unwrap_or(relaxed.frame_speed);
    log::debug!("strip relaxed: c = {c_relaxed:.10}, t = {}, factorizations = {}", relaxed.t, relaxed.factorizations);

    let mut trials = Vec::new();
    let eval = |c: f64, trials: &mut Vec<(f64, f64)>| -> Result<f64> {
        let d = frozen_frame_drift(&disc, f, &relaxed.field, c, opts, dt)?;
        trials.push((c, d));
        Ok(d)
    };
    let mut delta = 2.0 * opts.speed_tol;
    let (mut lo, mut hi);
    let mut expansions = 0;
    loop {
        lo = c_relaxed - delta;
        hi = c_relaxed + delta;
        let (dl, dh) = (eval(lo, &mut trials)?, eval(hi, &mut trials)?);
        if dl > 0.0 && dh < 0.0 {
            break;
        }
        if dl < 0.0 && dh > 0.0 {
            return Err(Error::NoConvergence("drift sign increases with the trial speed (domain too short?)".into()));
        }
        expansions += 1;
        delta *= 4.0;
        if expansions > 8 {
            return Err(Error::Bracket("frozen-frame drift never changes sign".into()));
        }
    }
    let mut iterations = 0;
    let mut mid_drift;
    loop {
        let mid = 0.5 * (lo + hi);
        mid_drift = eval(mid, &mut trials)?;
        iterations += 1;
        if hi - lo <= opts.speed_tol && mid_drift.abs() <= opts.drift_tol {
            break;
        }
        if iterations >= opts.max_bisections {
            return Err(Error::NoConvergence("drift bisection budget exhausted".into()));
        }
        if mid_drift > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // drift is affine in the trial speed, so the secant root inside the
    // bracket is the sharpest estimate
    let (dlo, dhi) = (trial_drift(&trials, lo), trial_drift(&trials, hi));
    let c = match (dlo, dhi) {
        (Some(a), Some(b)) if a > b => (lo + a / (a - b) * (hi - lo)).clamp(lo, hi),
        _ => 0.5 * (lo + hi),
    };
    let final_drift = eval(c, &mut trials)?;
    let h = grid.dx().max(grid.dy());
    let residual_tol = opts.residual_factor * h * h;
    let residual_norm = disc.residual(&relaxed.field, c, f).iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    if residual_norm > residual_tol {
        return Err(Error::NoConvergence(format!("strip residual {residual_norm:.3e} exceeds {residual_tol:.3e}")));
    }
    let profile = FrontProfile {
        grid: *grid,
        values: relaxed.field.clone(),
        variant: matrix.variant,
        alpha,
        normalized: false,
    };
    Ok(PulsatingSolution {
        speed: SpeedEstimate {
            c,
            residual: final_drift.abs(),
            iterations: iterations + 1,
            bracket: hi - lo,
            method: SpeedMethod::DriftBisection,
        },
        profile,
        relaxed_speed: c_relaxed,
        relax_time: relaxed.t,
        trials,
        residual_norm,
        residual_tol,
    })
}

fn trial_drift(trials: &[(f64, f64)], c: f64) -> Option<f64> {
    trials.iter().rev().find(|t| t.0 == c).map(|t| t.1)
}

/// Natural cubic splines along `Y` for every strip column, with a periodic
/// spline across columns for off-node `X`.
#[derive(Clone, Debug)]
pub struct StripInterpolant {
    grid: PeriodicStripGrid,
    columns: Vec<UniformSpline>,
}

impl StripInterpolant {
    pub fn new(profile: &FrontProfile) -> Self {
        let g = profile.grid;
        let columns = (0..g.nx).map(|i| UniformSpline::natural(-g.y_max, g.dy(), profile.values.column(i))).collect();
        Self { grid: g, columns }
    }

    pub fn y_max(&self) -> f64 {
        self.grid.y_max
    }

    fn node_column(&self, x: f64) -> Option<usize> {
        let s = (x / self.grid.period).rem_euclid(1.0) * self.grid.nx as f64;
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            Some((r as usize) % self.grid.nx)
        } else {
            None
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.node_column(x) {
            Some(i) => self.columns[i].eval(y),
            None => {
                let vals: Vec<f64> = self.columns.iter().map(|c| c.eval(y)).collect();
                PeriodicSpline::new(self.grid.dx(), vals).eval(x.rem_euclid(self.grid.period))
            }
        }
    }

    pub fn dy(&self, x: f64, y: f64) -> f64 {
        match self.node_column(x) {
            Some(i) => self.columns[i].derivative(y),
            None => {
                let vals: Vec<f64> = self.columns.iter().map(|c| c.derivative(y)).collect();
                PeriodicSpline::new(self.grid.dx(), vals).eval(x.rem_euclid(self.grid.period))
            }
        }
    }

    /// `Y` on column `i` where the profile equals `level` (spline root).
    pub fn level_on_column(&self, i: usize, level: f64) -> Option<f64> {
        let g = self.grid;
        let col = &self.columns[i];
        let y_at = |j: usize| g.y(j);
        let mut bracket = None;
        for j in 0..g.ny {
            let (a, b) = (col.eval(y_at(j)), col.eval(y_at(j + 1)));
            if a < level && b >= level {
                bracket = Some((y_at(j), y_at(j + 1)));
                break;
            }
        }
        let (mut a, mut b) = bracket?;
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if col.eval(m) < level {
                a = m;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    }
}

/// Shifts the profile in `Y` so that `φ(0,0) = θ`.
pub fn normalize_front(profile: &FrontProfile, theta: f64) -> Result<FrontProfile> {
    let g = profile.grid;
    let interp = StripInterpolant::new(profile);
    let y_star = interp
        .level_on_column(0, theta)
        .ok_or_else(|| Error::InvalidInput(format!("level {theta} is not attained on the X = 0 column")))?;
    let mut out = profile.clone();
    out.normalized = true;
    if y_star.abs() < 1e-12 {
        return Ok(out);
    }
    out.values = Field2::from_fn(g.nx, g.nrows(), |i, j| {
        if j == 0 {
            0.0
        } else if j == g.ny {
            1.0
        } else {
            interp.columns[i].eval(g.y(j) + y_star).clamp(0.0, 1.0)
        }
    });
    Ok(out)
}

/// `|c_A - c_B| ≤ tol`.
pub fn check_speed_symmetry(ca: &SpeedEstimate, cb: &SpeedEstimate, tol: f64) -> bool {
    (ca.c - cb.c).abs() <= tol
}

/// Height of the `level` crossing on the `X = 0` column (linear between rows).
pub fn level_position(profile: &FrontProfile, level: f64) -> Option<f64> {
    let g = profile.grid;
    crossing_in_column(&profile.values, 0, level, -g.y_max, g.dy())
}
