//! Classical RK4 for small autonomous-in-form systems, with a step-doubling
//! adaptive driver.

pub fn rk4_step<const N: usize>(rhs: &impl Fn(f64, &[f64; N]) -> [f64; N], t: f64, y: &[f64; N], h: f64) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], s: f64| -> [f64; N] {
        let mut out = *a;
        for i in 0..N {
            out[i] += s * b[i];
        }
        out
    };
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = rhs(t + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = rhs(t + h, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-9, h_init: 1e-3, h_min: 1e-12 }
    }
}

/// Advances `y` from `t0` to `t1` with step doubling; each accepted step has a
/// local error estimate (full step vs two half steps) at most `abs_tol`.
/// Returns the new state, the last accepted step size and the step count.
pub fn integrate_adaptive<const N: usize>(
    rhs: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    h_start: f64,
    opts: &AdaptiveOptions,
) -> Option<([f64; N], f64, usize)> {
    let mut t = t0;
    let mut y = y0;
    let mut h = h_start.min(t1 - t0).max(opts.h_min);
    let mut steps = 0;
    while t < t1 {
        let last = t + h >= t1;
        let hs = if last { t1 - t } else { h };
        let full = rk4_step(rhs, t, &y, hs);
        let half = rk4_step(rhs, t, &y, 0.5 * hs);
        let two = rk4_step(rhs, t + 0.5 * hs, &half, 0.5 * hs);
        let err = (0..N).map(|i| (two[i] - full[i]).abs()).fold(0.0, f64::max) / 15.0;
        if !err.is_finite() {
            return None;
        }
        if err <= opts.abs_tol || hs <= opts.h_min {
            t = if last { t1 } else { t + hs };
            for i in 0..N {
                y[i] = two[i] + (two[i] - full[i]) / 15.0;
            }
            steps += 1;
            let grow = if err == 0.0 { 2.0 } else { (0.9 * (opts.abs_tol / err).powf(0.2)).clamp(0.2, 2.0) };
            if !last {
                h = hs * grow;
            }
        } else {
            h = (hs * (0.9 * (opts.abs_tol / err).powf(0.2)).max(0.1)).max(opts.h_min);
        }
    }
    Some((y, h, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let rhs = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let (y, _, _) = integrate_adaptive(&rhs, 0.0, 10.0, [1.0, 0.0], 0.1, &AdaptiveOptions::default()).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn rk4_fourth_order() {
        let rhs = |_t: f64, y: &[f64; 1]| [y[0]];
        let run = |h: f64| {
            let mut y = [1.0];
            let n = (1.0 / h).round() as usize;
            for k in 0..n {
                y = rk4_step(&rhs, k as f64 * h, &y, h);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }
}
