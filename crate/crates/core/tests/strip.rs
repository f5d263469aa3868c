use std::f64::consts::FRAC_PI_3;

use conical_fronts::grid::PeriodicStripGrid;
use conical_fronts::model::{diffusion_matrix, CombustionNonlinearity, MatrixVariant, ShearFlow};
use conical_fronts::pulsating::{discretize_strip, frozen_frame_drift, solve_pulsating_front, PulsatingOptions, PulsatingSolution};

fn solve(variant: MatrixVariant, nx: usize, ny: usize, speed_tol: f64) -> PulsatingSolution {
    let grid = PeriodicStripGrid::new(1.0, nx, 12.0, ny).unwrap();
    let flow = ShearFlow::cosine(0.5, 1.0);
    let f = CombustionNonlinearity::quadratic(0.3).unwrap();
    let m = diffusion_matrix(FRAC_PI_3, variant).unwrap();
    let opts = PulsatingOptions { speed_tol, ..PulsatingOptions::default() };
    solve_pulsating_front(&m, &flow, FRAC_PI_3, &f, &grid, &opts).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn drift_sign_falls_with_trial_speed() {
    let sol = solve(MatrixVariant::A, 16, 96, 1e-6);
    let g = sol.profile.grid;
    let f = CombustionNonlinearity::quadratic(0.3).unwrap();
    let disc = discretize_strip(&g, &diffusion_matrix(FRAC_PI_3, MatrixVariant::A).unwrap(), &ShearFlow::cosine(0.5, 1.0), FRAC_PI_3);
    let opts = PulsatingOptions::default();
    let drifts: Vec<f64> = (0..10)
        .map(|k| sol.speed.c - 0.05 + 0.1 * k as f64 / 9.0)
        .map(|c| frozen_frame_drift(&disc, &f, &sol.profile.values, c, &opts, 0.5).unwrap())
        .collect();
    let signs: Vec<f64> = drifts.iter().map(|d| d.signum()).collect();
    assert!(signs.windows(2).all(|w| w[1] <= w[0]), "{drifts:?}");
    assert!(drifts[0] > 0.0 && drifts[9] < 0.0);
    assert!(drifts.windows(2).all(|w| w[1] < w[0]));
    assert!(sol.trials.iter().all(|&(c, d)| (c < sol.speed.c) == (d > 0.0) || d.abs() < 1e-5));
}

#[test]
fn profile_is_monotone_and_reflects_to_b() {
    let sol = solve(MatrixVariant::A, 32, 192, 1e-6);
    assert!(sol.profile.min_forward_difference() >= -1e-10);
    let g = sol.profile.grid;
    let flow = ShearFlow::cosine(0.5, 1.0);
    let f = CombustionNonlinearity::quadratic(0.3).unwrap();
    let da = discretize_strip(&g, &diffusion_matrix(FRAC_PI_3, MatrixVariant::A).unwrap(), &flow, FRAC_PI_3);
    let db = discretize_strip(&g, &diffusion_matrix(FRAC_PI_3, MatrixVariant::B).unwrap(), &flow, FRAC_PI_3);
    let ra = max_abs(&da.residual(&sol.profile.values, sol.speed.c, &f));
    let reflected = sol.profile.reflected(MatrixVariant::B);
    let rb = max_abs(&db.residual(&reflected.values, sol.speed.c, &f));
    assert!(rb <= 2.0 * ra + 1e-14, "A residual {ra:.3e}, reflected residual {rb:.3e}");
    let b = solve(MatrixVariant::B, 32, 192, 1e-6);
    assert!((b.speed.c - sol.speed.c).abs() <= 2e-6);
}

#[test]
fn speed_converges_at_second_order() {
    let c: Vec<f64> = [(16, 96), (32, 192), (64, 384)].iter().map(|&(nx, ny)| solve(MatrixVariant::A, nx, ny, 1e-8).speed.c).collect();
    let (d1, d2) = ((c[0] - c[1]).abs(), (c[1] - c[2]).abs());
    assert!(d1 / d2 >= 3.0, "speeds {c:?}, ratio {}", d1 / d2);
}
