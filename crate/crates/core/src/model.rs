//! Problem data: the ignition nonlinearity `f`, the shear flow `q`, the
//! anisotropic diffusion matrices of the strip problems and the cones
//! `C⁻_{α,l}`, `C⁺_{α,l}` of the plane.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parametric reaction families. All vanish on `(-inf, θ] ∪ [1, inf)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ReactionFamily {
    /// `scale·(u-θ)(1-u)` on `(θ,1)`.
    IgnitionQuadratic { scale: f64 },
    /// `scale·(u-θ)²(1-u)` on `(θ,1)`.
    IgnitionCubic { scale: f64 },
    /// `f ≡ 0`. Degenerate; only useful as a negative control.
    Zero,
}

impl Default for ReactionFamily {
    fn default() -> Self {
        ReactionFamily::IgnitionQuadratic { scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombustionNonlinearity {
    pub theta: f64,
    pub r: f64,
    pub family: ReactionFamily,
    pub lipschitz_bound: f64,
}

impl CombustionNonlinearity {
    pub fn new(theta: f64, r: f64, family: ReactionFamily) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidInput(format!("theta = {theta} must lie in (0,1)")));
        }
        if !(r > 0.0 && r <= 1.0 - theta) {
            return Err(Error::InvalidInput(format!("r = {r} must lie in (0, 1-theta]")));
        }
        let lipschitz_bound = match family {
            ReactionFamily::IgnitionQuadratic { scale } => {
                check_scale(scale)?;
                scale * (1.0 - theta)
            }
            ReactionFamily::IgnitionCubic { scale } => {
                check_scale(scale)?;
                scale * (1.0 - theta) * (1.0 - theta)
            }
            ReactionFamily::Zero => 0.0,
        };
        Ok(Self { theta, r, family, lipschitz_bound })
    }

    /// The default model `(u-θ)(1-u)` with `r = (1-θ)/2`.
    pub fn quadratic(theta: f64) -> Result<Self> {
        Self::new(theta, 0.5 * (1.0 - theta), ReactionFamily::default())
    }

    pub fn zero(theta: f64) -> Result<Self> {
        Self::new(theta, 0.5 * (1.0 - theta), ReactionFamily::Zero)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u <= self.theta || u >= 1.0 {
            return 0.0;
        }
        match self.family {
            ReactionFamily::IgnitionQuadratic { scale } => scale * (u - self.theta) * (1.0 - u),
            ReactionFamily::IgnitionCubic { scale } => {
                let w = u - self.theta;
                scale * w * w * (1.0 - u)
            }
            ReactionFamily::Zero => 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.family, ReactionFamily::Zero)
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("reaction scale {scale} must be positive")))
    }
}

/// Evaluates `f(u)`; total on the real line.
pub fn eval_f(u: f64, model: &CombustionNonlinearity) -> f64 {
    model.eval(u)
}

#[derive(Clone, Debug, Serialize)]
pub struct NonlinearityValidation {
    pub sign_pattern: bool,
    pub left_derivative_at_one: f64,
    pub derivative_negative: bool,
    pub max_observed_slope: f64,
    pub lipschitz: bool,
}

impl NonlinearityValidation {
    pub fn all_pass(&self) -> bool {
        self.sign_pattern && self.derivative_negative && self.lipschitz
    }
}

pub fn validate_nonlinearity(model: &CombustionNonlinearity) -> NonlinearityValidation {
    let n = 4000;
    let mut sign_pattern = model.eval(1.0) == 0.0;
    let mut max_slope: f64 = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=n {
        let u = -0.5 + 2.0 * k as f64 / n as f64;
        let v = model.eval(u);
        let expect_positive = u > model.theta && u < 1.0;
        if expect_positive && v <= 0.0 || !expect_positive && v != 0.0 || !v.is_finite() {
            sign_pattern = false;
        }
        if let Some((pu, pv)) = prev {
            max_slope = max_slope.max((v - pv).abs() / (u - pu));
        }
        prev = Some((u, v));
    }
    // one-sided difference quotient inside (1-r, 1)
    let eps = 1e-3 * model.r;
    let left_derivative_at_one = (model.eval(1.0) - model.eval(1.0 - eps)) / eps;
    NonlinearityValidation {
        sign_pattern,
        left_derivative_at_one,
        derivative_negative: left_derivative_at_one < 0.0,
        max_observed_slope: max_slope,
        lipschitz: max_slope <= model.lipschitz_bound * (1.0 + 1e-12) + 1e-15,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FlowProfile {
    Zero,
    /// `amplitude·cos(2πx/L)`.
    Cosine { amplitude: f64 },
    /// `amplitude·sin(2πx/L)`; odd, fails the evenness check.
    Sine { amplitude: f64 },
    /// `a·cos(2πx/L) + b·sin(2πx/L)`.
    Harmonic { cos_amplitude: f64, sin_amplitude: f64 },
    Constant { value: f64 },
    /// Samples at `x_k = k·L/n`, `k = 0..n`, linearly interpolated and
    /// extended periodically.
    Tabulated { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearFlow {
    pub period: f64,
    pub profile: FlowProfile,
}

impl ShearFlow {
    pub fn new(period: f64, profile: FlowProfile) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInput(format!("flow period {period} must be positive")));
        }
        if let FlowProfile::Tabulated { values } = &profile {
            if values.len() < 2 {
                return Err(Error::InvalidInput("tabulated flow needs at least 2 samples".into()));
            }
        }
        Ok(Self { period, profile })
    }

    pub fn zero(period: f64) -> Self {
        Self { period, profile: FlowProfile::Zero }
    }

    pub fn cosine(amplitude: f64, period: f64) -> Self {
        Self { period, profile: FlowProfile::Cosine { amplitude } }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = 2.0 * PI / self.period;
        match &self.profile {
            FlowProfile::Zero => 0.0,
            FlowProfile::Cosine { amplitude } => amplitude * (k * x).cos(),
            FlowProfile::Sine { amplitude } => amplitude * (k * x).sin(),
            FlowProfile::Harmonic { cos_amplitude, sin_amplitude } => {
                cos_amplitude * (k * x).cos() + sin_amplitude * (k * x).sin()
            }
            FlowProfile::Constant { value } => *value,
            FlowProfile::Tabulated { values } => {
                let n = values.len();
                let s = (x / self.period).rem_euclid(1.0) * n as f64;
                let i = (s.floor() as usize).min(n - 1);
                let w = s - i as f64;
                (1.0 - w) * values[i] + w * values[(i + 1) % n]
            }
        }
    }

    pub fn amplitude(&self) -> f64 {
        match &self.profile {
            FlowProfile::Zero => 0.0,
            FlowProfile::Cosine { amplitude } | FlowProfile::Sine { amplitude } => amplitude.abs(),
            FlowProfile::Harmonic { cos_amplitude, sin_amplitude } => cos_amplitude.hypot(*sin_amplitude),
            FlowProfile::Constant { value } => value.abs(),
            FlowProfile::Tabulated { values } => values.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        }
    }

    fn is_tabulated(&self) -> bool {
        matches!(self.profile, FlowProfile::Tabulated { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowValidation {
    pub periodicity_defect: f64,
    pub mean: f64,
    pub evenness_defect: f64,
    pub quadrature_tolerance: f64,
    pub periodic: bool,
    pub zero_mean: bool,
    pub even: bool,
}

impl FlowValidation {
    pub fn all_pass(&self) -> bool {
        self.periodic && self.zero_mean && self.even
    }
}

pub fn validate_flow(flow: &ShearFlow) -> Result<FlowValidation> {
    let n = 2048;
    let l = flow.period;
    let h = l / n as f64;
    let mut periodicity_defect: f64 = 0.0;
    let mut evenness_defect: f64 = 0.0;
    let mut integral = 0.0;
    for k in 0..=n {
        let x = k as f64 * h;
        let q = flow.eval(x);
        let shifted = flow.eval(x + l);
        let mirrored = flow.eval(-x);
        if !(q.is_finite() && shifted.is_finite() && mirrored.is_finite()) {
            return Err(Error::NonFinite(format!("flow profile at x = {x}")));
        }
        periodicity_defect = periodicity_defect.max((shifted - q).abs());
        evenness_defect = evenness_defect.max((mirrored - q).abs());
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        integral += w * q * h;
    }
    let mean = integral / l;
    let quadrature_tolerance = if flow.is_tabulated() { 1e-6 } else { 1e-10 };
    let sample_tol = 1e-12 * (1.0 + flow.amplitude());
    Ok(FlowValidation {
        periodicity_defect,
        mean,
        evenness_defect,
        quadrature_tolerance,
        periodic: periodicity_defect <= sample_tol.max(if flow.is_tabulated() { 1e-9 } else { 0.0 }),
        zero_mean: mean.abs() <= quadrature_tolerance,
        even: evenness_defect <= sample_tol.max(if flow.is_tabulated() { 1e-9 } else { 0.0 }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixVariant {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiffusionMatrix {
    pub alpha: f64,
    pub variant: MatrixVariant,
    pub entries: [[f64; 2]; 2],
}

impl DiffusionMatrix {
    pub fn off_diagonal(&self) -> f64 {
        self.entries[0][1]
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let c = self.off_diagonal().abs();
        (1.0 - c, 1.0 + c)
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < PI {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} must lie in (0, pi)")))
    }
}

pub fn diffusion_matrix(alpha: f64, variant: MatrixVariant) -> Result<DiffusionMatrix> {
    check_alpha(alpha)?;
    let c = match variant {
        MatrixVariant::A => alpha.cos(),
        MatrixVariant::B => -alpha.cos(),
    };
    Ok(DiffusionMatrix { alpha, variant, entries: [[1.0, c], [c, 1.0]] })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeSide {
    Lower,
    Upper,
}

/// `C⁻_{α,l} = {y ≤ -|x|·cot α + l}` and its closed complement `C⁺_{α,l}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeRegion {
    pub alpha: f64,
    pub level: f64,
    pub side: ConeSide,
}

impl ConeRegion {
    pub fn lower(alpha: f64, level: f64) -> Self {
        Self { alpha, level, side: ConeSide::Lower }
    }

    pub fn upper(alpha: f64, level: f64) -> Self {
        Self { alpha, level, side: ConeSide::Upper }
    }

    /// Height of the cone boundary `∂C⁺_{α,l}` above abscissa `x`.
    pub fn boundary_height(&self, x: f64) -> f64 {
        self.level - x.abs() * self.alpha.cos() / self.alpha.sin()
    }

    /// Signed vertical gap to the boundary, positive above it.
    pub fn gap(&self, x: f64, y: f64) -> f64 {
        y - self.boundary_height(x)
    }

    fn tolerance(&self, x: f64, y: f64) -> f64 {
        1e-12 * (1.0 + x.abs() + y.abs() + self.level.abs())
    }

    /// Closed-set membership; boundary points belong to both sides.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let g = self.gap(x, y);
        let tol = self.tolerance(x, y);
        match self.side {
            ConeSide::Lower => g <= tol,
            ConeSide::Upper => g >= -tol,
        }
    }

    pub fn contains_strictly(&self, x: f64, y: f64) -> bool {
        let g = self.gap(x, y);
        let tol = self.tolerance(x, y);
        match self.side {
            ConeSide::Lower => g < -tol,
            ConeSide::Upper => g > tol,
        }
    }

    pub fn on_boundary(&self, x: f64, y: f64) -> bool {
        self.gap(x, y).abs() <= self.tolerance(x, y)
    }
}

pub fn cone_membership(point: (f64, f64), region: &ConeRegion) -> bool {
    region.contains(point.0, point.1)
}
