//! Cubic splines on uniform meshes and cubic Hermite interpolation.

/// Natural cubic spline through `(x0 + k·h, v[k])`.
#[derive(Clone, Debug)]
pub struct UniformSpline {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl UniformSpline {
    pub fn natural(x0: f64, h: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        assert!(n >= 2, "spline needs two samples");
        let mut second = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for interior second derivatives: M_{k-1} + 4M_k + M_{k+1} = 6δ²v_k/h²
            let m = n - 2;
            let mut c = vec![0.0; m];
            let mut d = vec![0.0; m];
            for k in 0..m {
                let rhs = 6.0 * (values[k] - 2.0 * values[k + 1] + values[k + 2]) / (h * h);
                if k == 0 {
                    c[k] = 1.0 / 4.0;
                    d[k] = rhs / 4.0;
                } else {
                    let den = 4.0 - c[k - 1];
                    c[k] = 1.0 / den;
                    d[k] = (rhs - d[k - 1]) / den;
                }
            }
            for k in (0..m).rev() {
                let next = if k + 1 < m { second[k + 2] } else { 0.0 };
                second[k + 1] = d[k] - c[k] * next;
            }
        }
        Self { x0, h, values, second }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.values.len() - 1) as f64
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.values.len();
        let s = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        (k, s - k as f64)
    }

    /// Value at `x`; outside the mesh the end values are held constant.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.x0 {
            return self.values[0];
        }
        if x >= self.x_max() {
            return self.values[self.values.len() - 1];
        }
        let (k, t) = self.locate(x);
        let a = 1.0 - t;
        let h2 = self.h * self.h / 6.0;
        a * self.values[k]
            + t * self.values[k + 1]
            + h2 * ((a * a * a - a) * self.second[k] + (t * t * t - t) * self.second[k + 1])
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x < self.x0 || x > self.x_max() {
            return 0.0;
        }
        let (k, t) = self.locate(x);
        let a = 1.0 - t;
        (self.values[k + 1] - self.values[k]) / self.h
            + self.h / 6.0 * (-(3.0 * a * a - 1.0) * self.second[k] + (3.0 * t * t - 1.0) * self.second[k + 1])
    }
}

/// Periodic cubic spline through `(k·h, v[k])`, `k = 0..n`, period `n·h`.
#[derive(Clone, Debug)]
pub struct PeriodicSpline {
    h: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(h: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        assert!(n >= 3, "periodic spline needs three samples");
        let rhs: Vec<f64> = (0..n)
            .map(|k| 6.0 * (values[(k + n - 1) % n] - 2.0 * values[k] + values[(k + 1) % n]) / (h * h))
            .collect();
        let second = solve_cyclic(1.0, 4.0, 1.0, &rhs);
        Self { h, values, second }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let s = (x / self.h).rem_euclid(n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let t = s - k as f64;
        let k1 = (k + 1) % n;
        let a = 1.0 - t;
        let h2 = self.h * self.h / 6.0;
        a * self.values[k] + t * self.values[k1] + h2 * ((a * a * a - a) * self.second[k] + (t * t * t - t) * self.second[k1])
    }
}

/// Solves the cyclic tridiagonal system with constant bands via Sherman-Morrison.
fn solve_cyclic(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let gamma = -diag;
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - upper * lower / gamma;
    let x = solve_tridiagonal(lower, &b, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = lower;
    let z = solve_tridiagonal(lower, &b, upper, &u);
    let fact = (x[0] + upper * x[n - 1] / gamma) / (1.0 + z[0] + upper * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn solve_tridiagonal(lower: f64, diag: &[f64], upper: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper / diag[0];
    d[0] = rhs[0] / diag[0];
    for k in 1..n {
        let den = diag[k] - lower * c[k - 1];
        c[k] = upper / den;
        d[k] = (rhs[k] - lower * d[k - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    x
}

/// Cubic Hermite interpolation on one interval.
#[inline]
pub fn hermite(x0: f64, x1: f64, v0: f64, v1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (value, dh00 * v0 + dh10 * d0 + dh01 * v1 + dh11 * d1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_spline_reproduces_lines_and_nodes() {
        let v: Vec<f64> = (0..20).map(|k| 0.3 * k as f64 - 1.0).collect();
        let s = UniformSpline::natural(-1.0, 0.3, v.iter().map(|_| 0.0).collect());
        assert_eq!(s.eval(0.4), 0.0);
        let s = UniformSpline::natural(0.0, 0.5, v.clone());
        for (k, vk) in v.iter().enumerate() {
            assert!((s.eval(0.5 * k as f64) - vk).abs() < 1e-12);
        }
        assert!((s.eval(1.3) - (0.6 * 1.3 - 1.0)).abs() < 1e-12);
        assert!((s.derivative(2.2) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn natural_spline_accuracy() {
        let h = 0.05;
        let v: Vec<f64> = (0..=200).map(|k| (k as f64 * h).tanh()).collect();
        let s = UniformSpline::natural(0.0, h, v);
        for x in [1.01, 3.333, 7.77] {
            assert!((s.eval(x) - x.tanh()).abs() < 1e-6);
            assert!((s.derivative(x) - 1.0 / x.cosh().powi(2)).abs() < 1e-4);
        }
    }

    #[test]
    fn periodic_spline_accuracy() {
        let n = 32;
        let h = 1.0 / n as f64;
        let v: Vec<f64> = (0..n).map(|k| (2.0 * std::f64::consts::PI * k as f64 * h).cos()).collect();
        let s = PeriodicSpline::new(h, v);
        for x in [0.013, 0.5, 0.77, 1.3, -0.2] {
            let exact = (2.0 * std::f64::consts::PI * x).cos();
            assert!((s.eval(x) - exact).abs() < 1e-5, "{x}");
        }
    }

    #[test]
    fn hermite_is_exact_for_cubics() {
        let p = |x: f64| x * x * x - 2.0 * x + 1.0;
        let dp = |x: f64| 3.0 * x * x - 2.0;
        let (v, d) = hermite(0.5, 1.5, p(0.5), p(1.5), dp(0.5), dp(1.5), 1.1);
        assert!((v - p(1.1)).abs() < 1e-13 && (d - dp(1.1)).abs() < 1e-12);
    }
}
