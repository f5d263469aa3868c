//! Time stepping of `v_t = A v + b - s(G v + g) + f(v)` on a grid whose first
//! and last rows carry the Dirichlet values 0 and 1.
//!
//! `A` holds diffusion and the fixed advection `q·∂_y`, `G` is the centred
//! `∂_y`, and `s` is the speed of a frame moving toward `-y`. With frame
//! tracking on, `s` is steered so that the `½`-crossing of the tracked column
//! stays at the anchor height; lab positions are recovered from the
//! accumulated frame displacement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field2;
use crate::model::CombustionNonlinearity;
use crate::numerics::sparse::{CsrMatrix, ShiftedLu};

/// Spatial operator of a problem, restricted to the unknown rows
/// `1..nrows-1` stored contiguously.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub ncols: usize,
    pub nrows: usize,
    pub y0: f64,
    pub dy: f64,
    pub track_column: usize,
    pub a: CsrMatrix,
    pub a_bc: Vec<f64>,
    pub g: CsrMatrix,
    pub g_bc: Vec<f64>,
}

impl Discretization {
    pub fn unknowns(&self) -> usize {
        self.ncols * (self.nrows - 2)
    }

    fn interior<'a>(&self, field: &'a Field2) -> &'a [f64] {
        &field.values[self.ncols..self.ncols * (self.nrows - 1)]
    }

    /// Residual `A v + b - c(G v + g) + f(v)` on the unknown rows.
    pub fn residual(&self, field: &Field2, c: f64, f: &CombustionNonlinearity) -> Vec<f64> {
        let u = self.interior(field);
        let n = self.unknowns();
        let mut au = vec![0.0; n];
        let mut gu = vec![0.0; n];
        self.a.mul_into(u, &mut au);
        self.g.mul_into(u, &mut gu);
        (0..n).map(|k| au[k] + self.a_bc[k] - c * (gu[k] + self.g_bc[k]) + f.eval(u[k])).collect()
    }

    /// Largest stable explicit step that keeps forward Euler monotone.
    pub fn explicit_dt_limit(&self, speed: f64, f: &CombustionNonlinearity) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.unknowns() {
            worst = worst.max(-self.a.diagonal(k) + speed.abs() * self.g.diagonal(k).abs());
        }
        1.0 / (worst + f.lipschitz_bound)
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    /// Lowest upward crossing of `level` in the tracked column, ignoring the
    /// two rows next to each edge.
    pub fn crossing(&self, field: &Field2, level: f64) -> Option<f64> {
        crossing_in_column(field, self.track_column, level, self.y0, self.dy)
    }
}

pub fn crossing_in_column(field: &Field2, col: usize, level: f64, y0: f64, dy: f64) -> Option<f64> {
    let nrows = field.nrows;
    for j in 2..nrows.saturating_sub(3) {
        let a = field.at(col, j);
        let b = field.at(col, j + 1);
        if a < level && b >= level {
            let w = (level - a) / (b - a);
            return Some(y0 + (j as f64 + w) * dy);
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    ExplicitRk2,
    #[default]
    LinearlyImplicitEuler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FrameControl {
    Fixed { speed: f64 },
    Tracking { initial_speed: f64, gain: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepperOptions {
    pub integrator: Integrator,
    /// Time step; `None` picks 0.5 (implicit) or 0.9 of the explicit limit.
    pub dt: Option<f64>,
    pub frame: FrameControl,
    /// Target height of the tracked crossing; `None` uses the initial one.
    pub anchor: Option<f64>,
    pub level: f64,
    pub min_time: f64,
    pub max_time: f64,
    /// Bound on `max|Δv|/dt` for a step to count as steady.
    pub steady_tol: f64,
    /// Bound on the step-to-step change of the speed estimate.
    pub speed_tol: f64,
    pub consecutive: usize,
    pub record_every: usize,
    /// Integer-row re-centring once the crossing strays this many cells.
    pub shift_cells: Option<f64>,
    pub refactor_tol: f64,
    /// Stop as soon as `max_time` is reached, without requiring convergence.
    pub fixed_duration: bool,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            integrator: Integrator::LinearlyImplicitEuler,
            dt: None,
            frame: FrameControl::Tracking { initial_speed: 0.0, gain: 0.2 },
            anchor: None,
            level: 0.5,
            min_time: 10.0,
            max_time: 2000.0,
            steady_tol: 1e-6,
            speed_tol: 1e-7,
            consecutive: 50,
            record_every: 1,
            shift_cells: Some(8.0),
            refactor_tol: 0.05,
            fixed_duration: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    /// Crossing height in the moving frame.
    pub frame_position: Option<f64>,
    /// Crossing height in the lab frame (`frame_position - displacement`).
    pub lab_position: Option<f64>,
    pub frame_speed: f64,
    pub displacement: f64,
}

/// What an observer sees after each step besides the field.
#[derive(Clone, Copy, Debug)]
pub struct Observation {
    pub t: f64,
    pub step: usize,
    /// Frame height minus lab height.
    pub displacement: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub field: Field2,
    pub samples: Vec<TraceSample>,
    pub converged: bool,
    pub t: f64,
    pub steps: usize,
    pub dt: f64,
    pub frame_speed: f64,
    pub speed_estimate: Option<f64>,
    pub displacement: f64,
    pub change_rate: f64,
    pub clipped: usize,
    pub shifts: usize,
    pub factorizations: usize,
}

/// Shifts the interior content by `k` rows (`k > 0` moves it down) and fills
/// vacated rows with the nearest edge value.
pub fn shift_rows(field: &mut Field2, k: isize) {
    let (nc, nr) = (field.ncols, field.nrows);
    let old = field.values.clone();
    let bottom = old[0];
    let top = old[(nr - 1) * nc];
    for j in 1..nr - 1 {
        let src = j as isize + k;
        for i in 0..nc {
            let v = if src <= 0 {
                bottom
            } else if src >= (nr - 1) as isize {
                top
            } else {
                old[src as usize * nc + i]
            };
            field.values[j * nc + i] = v;
        }
    }
}

pub struct Stepper<'a> {
    disc: &'a Discretization,
    f: &'a CombustionNonlinearity,
    opts: StepperOptions,
    dt: f64,
    lu: Option<(f64, ShiftedLu)>,
    factorizations: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(disc: &'a Discretization, f: &'a CombustionNonlinearity, opts: StepperOptions) -> Result<Self> {
        let s0 = match opts.frame {
            FrameControl::Fixed { speed } => speed,
            FrameControl::Tracking { initial_speed, .. } => initial_speed,
        };
        let dt = match (opts.dt, opts.integrator) {
            (Some(dt), _) => dt,
            (None, Integrator::LinearlyImplicitEuler) => 0.5_f64.min(1.0 / f.lipschitz_bound.max(1e-12)),
            (None, Integrator::ExplicitRk2) => 0.9 * disc.explicit_dt_limit(s0.abs() + 1.0, f),
        };
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
        }
        Ok(Self { disc, f, opts, dt, lu: None, factorizations: 0 })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn rhs_explicit(&self, u: &[f64], s: f64, out: &mut [f64], scratch: &mut [f64]) {
        let d = self.disc;
        d.a.mul_into(u, out);
        d.g.mul_into(u, scratch);
        for k in 0..u.len() {
            out[k] += d.a_bc[k] - s * (scratch[k] + d.g_bc[k]) + self.f.eval(u[k]);
        }
    }

    fn ensure_factor(&mut self, s: f64, force: bool) -> Result<()> {
        let stale = match &self.lu {
            None => true,
            Some((sf, _)) => (s - sf).abs() > self.opts.refactor_tol,
        };
        if stale || force {
            let lu = ShiftedLu::factor(1.0 / self.dt, &[(-1.0, &self.disc.a), (s, &self.disc.g)])?;
            self.lu = Some((s, lu));
            self.factorizations += 1;
        }
        Ok(())
    }

    /// One step of the chosen integrator on the unknown rows of `field`.
    fn step(&mut self, field: &mut Field2, s: f64, work: &mut [Vec<f64>; 3]) -> Result<(f64, usize)> {
        let d = self.disc;
        let n = d.unknowns();
        let off = d.ncols;
        let dt = self.dt;
        let [w0, w1, w2] = work;
        let u: Vec<f64> = field.values[off..off + n].to_vec();
        match self.opts.integrator {
            Integrator::ExplicitRk2 => {
                self.rhs_explicit(&u, s, w0, w2);
                let stage: Vec<f64> = (0..n).map(|k| u[k] + dt * w0[k]).collect();
                self.rhs_explicit(&stage, s, w1, w2);
                for k in 0..n {
                    w2[k] = u[k] + 0.5 * dt * (w0[k] + w1[k]);
                }
            }
            Integrator::LinearlyImplicitEuler => {
                self.ensure_factor(s, false)?;
                let (sf, lu) = self.lu.as_ref().expect("factor present");
                let ds = s - sf;
                d.g.mul_into(&u, w1);
                for k in 0..n {
                    w0[k] = u[k] / dt + self.f.eval(u[k]) + d.a_bc[k] - s * d.g_bc[k] - ds * w1[k];
                }
                lu.solve(w0, w2);
            }
        }
        let mut change: f64 = 0.0;
        let mut clipped = 0;
        for k in 0..n {
            let mut v = w2[k];
            if !v.is_finite() {
                return Err(Error::NonFinite("time step".into()));
            }
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                clipped += 1;
            }
            v = v.clamp(0.0, 1.0);
            change = change.max((v - u[k]).abs());
            field.values[off + k] = v;
        }
        Ok((change / dt, clipped))
    }

    /// Runs until steady (or `max_time`), calling `observe` after every step.
    pub fn run(&mut self, initial: &Field2, mut observe: impl FnMut(&Field2, &Observation)) -> Result<RunOutcome> {
        let d = self.disc;
        if initial.ncols != d.ncols || initial.nrows != d.nrows {
            return Err(Error::InvalidInput("initial field does not match the grid".into()));
        }
        let mut field = initial.clone();
        let n = d.unknowns();
        let mut work = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let (mut s, gain) = match self.opts.frame {
            FrameControl::Fixed { speed } => (speed, None),
            FrameControl::Tracking { initial_speed, gain } => (initial_speed, Some(gain)),
        };
        let level = self.opts.level;
        let mut anchor = self.opts.anchor.or_else(|| d.crossing(&field, level));
        let mut p_prev = d.crossing(&field, level);
        let mut t = 0.0;
        let mut displacement = 0.0;
        let mut samples = vec![TraceSample {
            t,
            frame_position: p_prev,
            lab_position: p_prev,
            frame_speed: s,
            displacement,
        }];
        let mut quiet = 0;
        let mut c_est: Option<f64> = None;
        let (mut clipped, mut shifts, mut steps) = (0, 0, 0);
        let mut change = f64::INFINITY;
        let mut converged = false;
        let max_steps = (self.opts.max_time / self.dt).ceil() as usize;
        while steps < max_steps {
            let s_used = s;
            let (rate, clip) = self.step(&mut field, s_used, &mut work)?;
            change = rate;
            clipped += clip;
            steps += 1;
            t += self.dt;
            displacement += s_used * self.dt;
            let mut p = d.crossing(&field, level);
            let mut speed_change = f64::INFINITY;
            if let (Some(pn), Some(pp)) = (p, p_prev) {
                let est = s_used - (pn - pp) / self.dt;
                if let Some(prev) = c_est {
                    speed_change = (est - prev).abs();
                }
                c_est = Some(est);
                if let Some(k) = gain {
                    let target = *anchor.get_or_insert(pn);
                    s = est - k * (pn - target);
                }
            }
            if p.is_none() {
                c_est = None;
            }
            if let (Some(pn), Some(cells)) = (p, self.opts.shift_cells) {
                let target = anchor.unwrap_or(pn);
                let off = (pn - target) / d.dy;
                if off.abs() > cells {
                    let k = off.round() as isize;
                    shift_rows(&mut field, k);
                    displacement -= k as f64 * d.dy;
                    p = Some(pn - k as f64 * d.dy);
                    shifts += 1;
                }
            } else if let (Some(pn), None) = (p, self.opts.shift_cells) {
                let lo = d.y(3);
                let hi = d.y(d.nrows - 4);
                if pn <= lo || pn >= hi {
                    return Err(Error::Domain(format!("level set reached the domain edge at y = {pn}")));
                }
            }
            p_prev = p;
            if steps % self.opts.record_every.max(1) == 0 {
                samples.push(TraceSample {
                    t,
                    frame_position: p,
                    lab_position: p.map(|v| v - displacement),
                    frame_speed: s_used,
                    displacement,
                });
            }
            observe(&field, &Observation { t, step: steps, displacement });
            if self.opts.fixed_duration {
                continue;
            }
            if change < self.opts.steady_tol && speed_change < self.opts.speed_tol && p.is_some() {
                quiet += 1;
            } else {
                quiet = 0;
            }
            if quiet >= self.opts.consecutive && t >= self.opts.min_time {
                converged = true;
                break;
            }
        }
        if clipped > 0 {
            log::info!("clipped {clipped} values to [0, 1] during {steps} steps");
        }
        Ok(RunOutcome {
            field,
            samples,
            converged: converged || self.opts.fixed_duration,
            t,
            steps,
            dt: self.dt,
            frame_speed: s,
            speed_estimate: c_est,
            displacement,
            change_rate: change,
            clipped,
            shifts,
            factorizations: self.factorizations,
        })
    }
}
