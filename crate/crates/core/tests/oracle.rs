//! The planar speed against an independent phase-plane computation.

use conical_fronts::model::CombustionNonlinearity;
use conical_fronts::pulsating::planar::{planar_front_speed_1d, PlanarOptions};

/// Frozen from the phase-plane shooting below (stable to 1e-12 under a
/// 16-fold refinement in `U`).
const C0: f64 = 0.495_370_207_27;

/// `p = |U'|` as a function of `U`: `dp/dU = c - f(U)/p` on `(θ, 1)`,
/// `p(θ) = cθ`. Returns whether `p` stays positive up to `U = 1`.
fn phase_plane_reaches_one(c: f64, f: &CombustionNonlinearity, n: usize) -> bool {
    let theta = f.theta;
    let h = (1.0 - theta) / n as f64;
    let g = |u: f64, p: f64| c - f.eval(u) / p;
    let (mut u, mut p) = (theta, c * theta);
    for _ in 0..n {
        let k1 = g(u, p);
        let p2 = p + 0.5 * h * k1;
        if p2 <= 0.0 {
            return false;
        }
        let k2 = g(u + 0.5 * h, p2);
        let p3 = p + 0.5 * h * k2;
        if p3 <= 0.0 {
            return false;
        }
        let k3 = g(u + 0.5 * h, p3);
        let p4 = p + h * k3;
        if p4 <= 0.0 {
            return false;
        }
        let k4 = g(u + h, p4);
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        u += h;
        if p <= 0.0 {
            return false;
        }
    }
    true
}

fn phase_plane_speed(f: &CombustionNonlinearity) -> f64 {
    let (mut lo, mut hi) = (0.05, 2.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if phase_plane_reaches_one(mid, f, 8000) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn phase_plane_matches_frozen_value() {
    let f = CombustionNonlinearity::quadratic(0.3).unwrap();
    assert!((phase_plane_speed(&f) - C0).abs() < 1e-10);
}

#[test]
fn shooting_speed_matches_phase_plane() {
    let f = CombustionNonlinearity::quadratic(0.3).unwrap();
    let front = planar_front_speed_1d(&f, &PlanarOptions::default()).unwrap();
    assert!((front.c - C0).abs() < 1e-8, "c = {}", front.c);
    assert!(front.richardson_delta < 1e-8);
    assert!(front.bracket.0 <= front.c && front.c <= front.bracket.1);
}

#[test]
fn other_thresholds_agree() {
    for theta in [0.1, 0.5] {
        let f = CombustionNonlinearity::quadratic(theta).unwrap();
        let c = planar_front_speed_1d(&f, &PlanarOptions::default()).unwrap().c;
        let reference = phase_plane_speed(&f);
        assert!((c - reference).abs() < 1e-7, "theta {theta}: {c} vs {reference}");
    }
}

#[test]
fn no_front_without_reaction() {
    let f = CombustionNonlinearity::zero(0.3).unwrap();
    assert!(planar_front_speed_1d(&f, &PlanarOptions::default()).is_err());
}
