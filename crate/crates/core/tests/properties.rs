use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use conical_fronts::barrier::{
    build_components, choose_beta, classify_region, extend_h, integrate_h, measure_band_constants, rotated, HOptions,
    Region,
};
use conical_fronts::conical::{evolve_observed, EvolveOptions};
use conical_fronts::evolution::FrameControl;
use conical_fronts::grid::{Field2, PeriodicStripGrid, PlaneGrid};
use conical_fronts::model::{
    cone_membership, diffusion_matrix, CombustionNonlinearity, ConeRegion, MatrixVariant, ReactionFamily, ShearFlow,
};
use conical_fronts::pulsating::FrontProfile;
use conical_fronts::verify::{check_shift_uniqueness, shift_up};

/// Normalized: the value at `Y = 0` is `θ`.
fn tanh_front(variant: MatrixVariant, width: f64, theta: f64) -> FrontProfile {
    let grid = PeriodicStripGrid::new(1.0, 16, 24.0, 384).unwrap();
    let s = -width * (2.0 * theta - 1.0).atanh();
    let values = Field2::from_fn(16, grid.nrows(), |_, j| 0.5 * (1.0 + ((grid.y(j) - s) / width).tanh()));
    FrontProfile { grid, values, variant, alpha: 1.0, normalized: true }
}

/// `∫_θ^h f` for the quadratic ignition model.
fn big_f(h: f64, theta: f64) -> f64 {
    let g = |s: f64| -s.powi(3) / 3.0 + 0.5 * (1.0 + theta) * s * s - theta * s;
    g(h.clamp(theta, 1.0)) - g(theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrices_are_positive_definite(alpha in 1e-6..PI - 1e-6) {
        for v in [MatrixVariant::A, MatrixVariant::B] {
            let m = diffusion_matrix(alpha, v).unwrap();
            prop_assert_eq!(m.entries[0][1], m.entries[1][0]);
            let (lo, hi) = m.eigenvalues();
            prop_assert!(lo > 0.0 && hi >= lo);
            let det = m.entries[0][0] * m.entries[1][1] - m.entries[0][1] * m.entries[1][0];
            prop_assert!((det - lo * hi).abs() < 1e-12);
        }
    }

    #[test]
    fn reaction_is_lipschitz(theta in 0.05..0.95f64, scale in 0.1..10.0f64, cubic: bool,
                             u in -0.5..1.5f64, v in -0.5..1.5f64) {
        let family = if cubic { ReactionFamily::IgnitionCubic { scale } } else { ReactionFamily::IgnitionQuadratic { scale } };
        let f = CombustionNonlinearity::new(theta, 0.5 * (1.0 - theta), family).unwrap();
        prop_assert!((f.eval(u) - f.eval(v)).abs() <= f.lipschitz_bound * (u - v).abs() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn cones_split_the_plane(alpha in 0.01..PI - 0.01, level in -10.0..10.0f64, x in -20.0..20.0f64, y in -20.0..20.0f64) {
        let lower = ConeRegion::lower(alpha, level);
        let upper = ConeRegion::upper(alpha, level);
        prop_assume!(!lower.on_boundary(x, y));
        prop_assert!(cone_membership((x, y), &lower) ^ upper.contains_strictly(x, y));
    }

    #[test]
    fn beta_never_grows_when_floors_shrink(mu in 1e-4..1.0f64, mu0 in 1e-4..1.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64,
                                          alpha in 0.01..PI - 0.01) {
        let base = choose_beta(mu, mu0, alpha);
        prop_assert!(choose_beta(mu * a, mu0, alpha) <= base);
        prop_assert!(choose_beta(mu, mu0 * b, alpha) <= base);
        prop_assert!(base > 0.0);
    }

    #[test]
    fn shift_search_is_antisymmetric(tau in -3.0..3.0f64, alpha in 0.6..FRAC_PI_2) {
        let grid = PlaneGrid::new(4.0, 12.0, 32, 96).unwrap();
        let cot = alpha.cos() / alpha.sin();
        let a = grid.field(|x, y| 0.5 * (1.0 + (y + 0.3 * x.abs() * cot).tanh()));
        let b = shift_up(&a, &grid, tau);
        let (kab, rab) = check_shift_uniqueness(&a, &b, &grid, 1e-2).unwrap();
        let (kba, _) = check_shift_uniqueness(&b, &a, &grid, 1e-2).unwrap();
        prop_assert!((kab + kba).abs() < 2e-3 * grid.dy(), "{} {}", kab, kba);
        prop_assert!((kab.abs() - tau.abs()).abs() < 0.05 * grid.dy() + 1e-3);
        prop_assert!(rab.pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// `β h'²/2 + F(h) = 2β`: `h` keeps rising to 1 only when `β > F(1)/2`.
    #[test]
    fn barrier_profile_energy(log_beta in -3.0..0.0f64) {
        let theta = 0.3;
        let beta = 10f64.powf(log_beta);
        let f = CombustionNonlinearity::quadratic(theta).unwrap();
        let h = extend_h(&integrate_h(beta, theta, &f, &HOptions::default()).unwrap());
        for (k, (&v, &d)) in h.h_values.iter().zip(&h.h_derivative).enumerate().step_by(64) {
            let e = 0.5 * beta * d * d + big_f(v, theta);
            prop_assert!((e - 2.0 * beta).abs() < 1e-6 * (1.0 + 2.0 * beta), "node {}: {} vs {}", k, e, 2.0 * beta);
        }
        prop_assert!(h.max_second_difference() <= 1e-8);
        let threshold = 0.5 * big_f(1.0, theta);
        if beta > 1.05 * threshold {
            prop_assert!(h.lemma_holds());
        } else if beta < 0.95 * threshold {
            prop_assert!(!h.lemma_holds());
            prop_assert!(h.h_at_one() < 1.0);
        }
    }

    #[test]
    fn region_c_lies_below_ignition(alpha in 0.5..FRAC_PI_2, width in 0.7..2.0f64) {
        let theta = 0.3;
        let phi = tanh_front(MatrixVariant::A, width, theta);
        let psi = tanh_front(MatrixVariant::B, width, theta);
        let k = measure_band_constants(&phi, &psi, theta, alpha).unwrap();
        let grid = PlaneGrid::new(6.0, 10.0, 48, 80).unwrap();
        let comp = build_components(&phi, &psi, alpha, &grid, 0.0).unwrap();
        let cell = grid.dx() * alpha.cos().abs() + grid.dy() * alpha.sin();
        for j in 0..grid.nrows() {
            for i in 0..grid.ncols() {
                let (x, y) = (grid.x(i), grid.y(j));
                if classify_region((x, y), &k, alpha) != Region::C {
                    continue;
                }
                let (y1, y2) = rotated(x, y, alpha, 0.0);
                let near_band = (y1 - k.m1).abs() <= cell || (y2 - k.m2).abs() <= cell;
                prop_assert!(near_band || comp.phi1.at(i, j) + comp.phi2.at(i, j) <= theta + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Ordered initial data stay ordered at every step.
    #[test]
    fn evolution_preserves_order(amp in 0.0..1.0f64, tau in 0.0..3.0f64, alpha in 0.8..FRAC_PI_2, bump in 0.0..0.5f64) {
        let grid = PlaneGrid::new(2.0, 8.0, 24, 48).unwrap();
        let flow = ShearFlow::cosine(amp, 1.0);
        let f = CombustionNonlinearity::quadratic(0.3).unwrap();
        let cot = alpha.cos() / alpha.sin();
        let u0 = grid.field(|x, y| 0.5 * (1.0 + (y + x.abs() * cot).tanh()));
        let v0 = shift_up(&u0, &grid, tau).zip_map(&u0, |s, u| (s + bump * (1.0 - s) * u).min(1.0));
        let mut opts = EvolveOptions::new(alpha);
        opts.stepper.frame = FrameControl::Fixed { speed: 0.5 };
        opts.stepper.dt = Some(0.25);
        opts.stepper.max_time = 4.0;
        opts.stepper.fixed_duration = true;
        opts.stepper.shift_cells = None;
        let mut lower = Vec::new();
        evolve_observed(&u0, &grid, &flow, &f, &opts, |u, _| lower.push(u.clone())).unwrap();
        let mut k = 0;
        let mut worst = f64::NEG_INFINITY;
        evolve_observed(&v0, &grid, &flow, &f, &opts, |v, _| {
            worst = worst.max(lower[k].zip_map(v, |a, b| a - b).values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            k += 1;
        }).unwrap();
        prop_assert_eq!(k, lower.len());
        prop_assert!(worst <= 1e-10, "worst {}", worst);
    }
}
