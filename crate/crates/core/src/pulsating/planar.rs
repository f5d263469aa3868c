//! One-dimensional combustion front `U'' - cU' + f(U) = 0`, `U(-inf) = 0`,
//! `U(+inf) = 1`, computed by shooting and bisection on `c`.
//!
//! On `U <= θ` the equation is linear, so the left tail is `θ·e^{cY}` and the
//! shot starts at `Y = 0` from `(θ, cθ)`. A shot that crosses `U = 1` means `c`
//! is too large; one whose slope vanishes below 1 means `c` is too small.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CombustionNonlinearity;
use crate::numerics::ode::rk4_step;
use crate::numerics::spline::hermite;

#[derive(Clone, Copy, Debug)]
pub struct PlanarOptions {
    pub step: f64,
    /// Longest integration interval of one shot.
    pub span: f64,
    pub bracket_tol: f64,
    pub c_min: f64,
}

impl Default for PlanarOptions {
    fn default() -> Self {
        Self { step: 1e-4, span: 60.0, bracket_tol: 1e-12, c_min: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shot {
    Over,
    Under,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanarFront {
    pub c: f64,
    pub bracket: (f64, f64),
    pub bisections: usize,
    /// `|c(step) - c(2·step)|`.
    pub richardson_delta: f64,
    pub theta: f64,
    /// Decay rate of `1 - U` as `Y -> +inf`.
    pub upper_rate: f64,
    #[serde(skip)]
    pub samples: Vec<(f64, f64, f64)>,
    #[serde(skip)]
    f: Option<CombustionNonlinearity>,
}

fn rhs(c: f64, f: &CombustionNonlinearity) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    move |_y, s| [s[1], c * s[1] - f.eval(s[0])]
}

fn shoot(c: f64, f: &CombustionNonlinearity, opts: &PlanarOptions, step: f64) -> Shot {
    let g = rhs(c, f);
    let mut s = [f.theta, c * f.theta];
    let n = (opts.span / step).ceil() as usize;
    for k in 0..n {
        s = rk4_step(&g, k as f64 * step, &s, step);
        if s[0] > 1.0 {
            return Shot::Over;
        }
        if s[1] <= 0.0 {
            return Shot::Under;
        }
    }
    Shot::Undecided
}

fn bisect(f: &CombustionNonlinearity, opts: &PlanarOptions, step: f64) -> Result<((f64, f64), usize)> {
    let mut lo = opts.c_min;
    if shoot(lo, f, opts, step) != Shot::Under {
        return Err(Error::Bracket(format!("shot at c = {lo} does not fall back below 1")));
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while shoot(hi, f, opts, step) != Shot::Over {
        hi *= 2.0;
        doublings += 1;
        if doublings > 40 {
            return Err(Error::Bracket("no overshooting speed found".into()));
        }
    }
    let mut count = 0;
    while hi - lo > opts.bracket_tol {
        let mid = 0.5 * (lo + hi);
        match shoot(mid, f, opts, step) {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Undecided => {
                // trajectory indistinguishable from the connection over the whole span
                lo = mid;
                hi = mid;
            }
        }
        count += 1;
    }
    Ok(((lo, hi), count))
}

/// Planar speed `c₀` and profile of the one-dimensional front.
pub fn planar_front_speed_1d(f: &CombustionNonlinearity, opts: &PlanarOptions) -> Result<PlanarFront> {
    let ((lo, hi), bisections) = bisect(f, opts, opts.step)?;
    let ((lo2, hi2), _) = bisect(f, opts, 2.0 * opts.step)?;
    let c = 0.5 * (lo + hi);
    let richardson_delta = (c - 0.5 * (lo2 + hi2)).abs();

    // Profile: follow both bracket ends while they agree.
    let (gl, gh) = (rhs(lo, f), rhs(hi, f));
    let (mut sl, mut sh) = ([f.theta, lo * f.theta], [f.theta, hi * f.theta]);
    let mut samples = vec![(0.0, f.theta, c * f.theta)];
    let step = opts.step;
    let stride = 10;
    let n = (opts.span / step).ceil() as usize;
    for k in 0..n {
        let y = k as f64 * step;
        sl = rk4_step(&gl, y, &sl, step);
        sh = rk4_step(&gh, y, &sh, step);
        let u = 0.5 * (sl[0] + sh[0]);
        if (sl[0] - sh[0]).abs() > 1e-10 || 1.0 - u < 1e-10 || sl[1] <= 0.0 || sh[0] > 1.0 {
            break;
        }
        if (k + 1) % stride == 0 {
            samples.push(((k + 1) as f64 * step, u, 0.5 * (sl[1] + sh[1])));
        }
    }
    let eps = 1e-6 * f.r;
    let slope_at_one = (f.eval(1.0) - f.eval(1.0 - eps)) / eps;
    let upper_rate = 0.5 * (c - (c * c - 4.0 * slope_at_one).sqrt());
    upper_branch(&rhs(c, f), upper_rate, step, stride, &mut samples);
    Ok(PlanarFront {
        c,
        bracket: (lo, hi),
        bisections,
        richardson_delta,
        theta: f.theta,
        upper_rate,
        samples,
        f: Some(f.clone()),
    })
}

/// Continues the sampled profile from its last sample up to `1 - δ` by
/// integrating backward from the stable direction of `U = 1`, which is
/// attracting in that direction, and matching the value.
fn upper_branch(
    g: &impl Fn(f64, &[f64; 2]) -> [f64; 2],
    rate: f64,
    step: f64,
    stride: usize,
    samples: &mut Vec<(f64, f64, f64)>,
) {
    const DELTA: f64 = 1e-8;
    let (y_end, u_end, _) = *samples.last().expect("profile has a first sample");
    if rate.is_nan() || rate >= 0.0 || u_end >= 1.0 - DELTA {
        return;
    }
    let mut s = [1.0 - DELTA, -rate * DELTA];
    let mut back = vec![(0.0, s[0], s[1])];
    let mut tau = 0.0;
    while s[0] > u_end && back.len() < 10_000_000 {
        s = rk4_step(g, tau, &s, -step);
        tau -= step;
        if !(s[0].is_finite() && s[1] > 0.0) {
            return;
        }
        back.push((tau, s[0], s[1]));
    }
    back.reverse();
    let (a, b) = (back[0], back[1]);
    if !(a.1 <= u_end && u_end <= b.1) {
        return;
    }
    let tau_end = a.0 + (u_end - a.1) / (b.1 - a.1) * step;
    let spacing = stride as f64 * step;
    let at = |t: f64| {
        let k = (((t - back[0].0) / step).floor().max(0.0) as usize).min(back.len() - 2);
        let (p, q) = (back[k], back[k + 1]);
        hermite(p.0, q.0, p.1, q.1, p.2, q.2, t)
    };
    let mut m = 1;
    loop {
        let t = tau_end + m as f64 * spacing;
        if t > 0.0 {
            break;
        }
        let (u, du) = at(t);
        samples.push((y_end + m as f64 * spacing, u, du));
        m += 1;
    }
}

impl PlanarFront {
    /// `(U, U')` at `y`, with `U(0) = θ`.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        if y <= 0.0 {
            let u = self.theta * (self.c * y).exp();
            return (u, self.c * u);
        }
        let last = self.samples[self.samples.len() - 1];
        if y >= last.0 {
            let v = (1.0 - last.1) * (self.upper_rate * (y - last.0)).exp();
            return (1.0 - v, -self.upper_rate * v);
        }
        let h = self.samples[1].0 - self.samples[0].0;
        let k = ((y / h).floor() as usize).min(self.samples.len() - 2);
        let (a, b) = (self.samples[k], self.samples[k + 1]);
        hermite(a.0, b.0, a.1, b.1, a.2, b.2, y)
    }

    /// `U'' = cU' - f(U)`.
    pub fn second_derivative(&self, y: f64) -> f64 {
        let (u, du) = self.eval(y);
        let f = self.f.as_ref().map_or(0.0, |f| f.eval(u));
        self.c * du - f
    }

    /// Position where `U` takes the value `level` (bisection on the profile).
    pub fn position_of(&self, level: f64) -> f64 {
        let (mut a, mut b) = (-200.0, 200.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.eval(m).0 < level {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}
