pub mod fit;
pub mod ode;
pub mod sparse;
pub mod spline;
