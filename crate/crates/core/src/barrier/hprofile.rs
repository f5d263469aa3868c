//! The barrier profile `β h'' + f(h) = 0`, `h(θ/2) = θ`, `h'(θ/2) = 2` on
//! `[θ/2, 2]`, and its extension `H(z) = 2z` on `[0, θ/2]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CombustionNonlinearity;
use crate::numerics::ode::{integrate_adaptive, AdaptiveOptions};
use crate::numerics::spline::hermite;

pub const H_NODES: usize = 4096;
pub const Z_END: f64 = 2.0;

#[derive(Clone, Debug, Serialize)]
pub struct HProfile {
    pub beta: f64,
    pub theta: f64,
    /// Nodes of `h` on `[θ/2, 2]`.
    pub h_nodes: Vec<f64>,
    pub h_values: Vec<f64>,
    pub h_derivative: Vec<f64>,
    /// Uniform mesh on `[0, 2]` and the sampled extension; empty until
    /// [`extend_h`] runs.
    pub z_nodes: Vec<f64>,
    #[serde(rename = "H_values")]
    pub big_h_values: Vec<f64>,
    #[serde(skip)]
    f: CombustionNonlinearity,
}

#[derive(Clone, Copy, Debug)]
pub struct HOptions {
    pub abs_tol: f64,
    pub nodes: usize,
}

impl Default for HOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-9, nodes: H_NODES }
    }
}

pub fn integrate_h(beta: f64, theta: f64, f: &CombustionNonlinearity, opts: &HOptions) -> Result<HProfile> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta = {beta} must be positive")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta = {theta} must lie in (0,1)")));
    }
    let z0 = 0.5 * theta;
    let n = opts.nodes.max(2);
    let dz = (Z_END - z0) / (n - 1) as f64;
    let rhs = |_z: f64, s: &[f64; 2]| [s[1], -f.eval(s[0]) / beta];
    let aopts = AdaptiveOptions { abs_tol: opts.abs_tol, h_init: dz, h_min: 1e-14 };
    let mut state = [theta, 2.0];
    let mut h_step = dz;
    let mut h_nodes = Vec::with_capacity(n);
    let mut h_values = Vec::with_capacity(n);
    let mut h_derivative = Vec::with_capacity(n);
    h_nodes.push(z0);
    h_values.push(theta);
    h_derivative.push(2.0);
    for k in 1..n {
        let (a, b) = (z0 + (k - 1) as f64 * dz, if k == n - 1 { Z_END } else { z0 + k as f64 * dz });
        let (s, last_h, _) = integrate_adaptive(&rhs, a, b, state, h_step, &aopts)
            .ok_or_else(|| Error::NonFinite(format!("h-profile near z = {a}")))?;
        if !(s[0].is_finite() && s[1].is_finite()) {
            return Err(Error::NonFinite(format!("h-profile near z = {b}")));
        }
        state = s;
        h_step = last_h;
        h_nodes.push(b);
        h_values.push(s[0]);
        h_derivative.push(s[1]);
    }
    Ok(HProfile {
        beta,
        theta,
        h_nodes,
        h_values,
        h_derivative,
        z_nodes: Vec::new(),
        big_h_values: Vec::new(),
        f: f.clone(),
    })
}

/// Fills the `H` table on a uniform mesh of `[0, 2]`.
pub fn extend_h(profile: &HProfile) -> HProfile {
    let mut out = profile.clone();
    let n = profile.h_nodes.len() + 1;
    out.z_nodes = (0..n).map(|k| Z_END * k as f64 / (n - 1) as f64).collect();
    out.big_h_values = out.z_nodes.iter().map(|&z| profile.big_h(z)).collect();
    out
}

impl HProfile {
    fn locate(&self, z: f64) -> usize {
        let z0 = self.h_nodes[0];
        let dz = self.h_nodes[1] - z0;
        (((z - z0) / dz).floor().max(0.0) as usize).min(self.h_nodes.len() - 2)
    }

    /// `(h, h')` by cubic Hermite interpolation with the integrated slopes;
    /// linear continuation beyond `z = 2`.
    pub fn h(&self, z: f64) -> (f64, f64) {
        let n = self.h_nodes.len();
        if z >= Z_END {
            let (v, d) = (self.h_values[n - 1], self.h_derivative[n - 1]);
            return (v + d * (z - Z_END), d);
        }
        let k = self.locate(z);
        hermite(
            self.h_nodes[k],
            self.h_nodes[k + 1],
            self.h_values[k],
            self.h_values[k + 1],
            self.h_derivative[k],
            self.h_derivative[k + 1],
            z,
        )
    }

    pub fn big_h(&self, z: f64) -> f64 {
        if z <= 0.5 * self.theta {
            2.0 * z
        } else {
            self.h(z).0
        }
    }

    pub fn big_h_prime(&self, z: f64) -> f64 {
        if z <= 0.5 * self.theta {
            2.0
        } else {
            self.h(z).1
        }
    }

    /// `H''`: zero on the linear piece, `-f(h)/β` on the ODE piece.
    pub fn big_h_second(&self, z: f64) -> f64 {
        if z <= 0.5 * self.theta {
            0.0
        } else {
            -self.f.eval(self.h(z).0) / self.beta
        }
    }

    pub fn min_forward_difference(&self) -> f64 {
        self.h_values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Largest second difference of the `H` table (≤ 0 means concave).
    pub fn max_second_difference(&self) -> f64 {
        self.big_h_values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn h_at_one(&self) -> f64 {
        self.h(1.0).0
    }

    pub fn h_at_end(&self) -> f64 {
        self.h_values[self.h_values.len() - 1]
    }

    /// Properties the profile is supposed to have: increasing, `h(1) > 1`,
    /// `h(2) > 1`.
    pub fn lemma_holds(&self) -> bool {
        self.min_forward_difference() > 0.0 && self.h_at_one() > 1.0 && self.h_at_end() > 1.0
    }
}
