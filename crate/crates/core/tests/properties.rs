use ascl_core::attractor::{dimension_threshold, linearized_rhs, Contraction, DimensionInputs};
use ascl_core::constitutive::MultiplierSymbol;
use ascl_core::dynamics::{linear_decay_factor, nonlinear_term, ModelParams};
use ascl_core::profiles::random_smooth;
use ascl_core::snapshot::{read_snapshot, write_snapshot};
use ascl_core::{apply_lambda_power, dealias_two_thirds, transform_backward, transform_forward, Grid};
use proptest::prelude::*;

fn grid2() -> Grid {
    Grid::new(2, 16).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(seed in 0u64..1000, l2 in 0.1f64..10.0) {
        let g = grid2();
        let f = random_smooth(g, seed, l2, 2.0).unwrap();
        let x = transform_backward(&f).unwrap();
        let quad = g.volume() / g.len() as f64 * x.iter().map(|v| v * v).sum::<f64>();
        prop_assert!((quad.sqrt() - l2).abs() <= 1e-12 * l2);
        let back = transform_forward(g, &x).unwrap();
        prop_assert!(back.sub(&f).unwrap().max_abs() <= 1e-14 * l2);
    }

    #[test]
    fn lambda_powers_compose(seed in 0u64..1000, s in -1.0f64..2.0, t in -1.0f64..2.0) {
        let f = random_smooth(grid2(), seed, 1.0, 2.0).unwrap();
        let a = apply_lambda_power(&apply_lambda_power(&f, s).unwrap(), t).unwrap();
        let b = apply_lambda_power(&f, s + t).unwrap();
        prop_assert!(a.sub(&b).unwrap().max_abs() <= 1e-12 * b.max_abs().max(1.0));
    }

    #[test]
    fn dealiasing_never_adds_energy(seed in 0u64..1000) {
        let g = Grid::new(2, 32).unwrap();
        let f = random_smooth(g, seed, 1.0, 0.5).unwrap();
        let d = dealias_two_thirds(&f);
        prop_assert!(d.norm_l2() <= f.norm_l2());
        prop_assert_eq!(dealias_two_thirds(&d), d);
    }

    #[test]
    fn decay_factor_is_a_contraction(k1 in -8i64..8, k2 in -8i64..8, lambda in 0.0f64..3.0, kappa in 0.0f64..3.0, gamma in 0.1f64..2.0, dt in 1e-4f64..1.0) {
        let p = ModelParams::new(lambda, kappa, gamma, MultiplierSymbol::Sqg).unwrap();
        let e = linear_decay_factor(&[k1, k2], &p, dt).unwrap();
        prop_assert!(e > 0.0 && e <= 1.0);
    }

    #[test]
    fn linearization_is_linear(seed in 0u64..1000, a in -3.0f64..3.0) {
        let g = grid2();
        let p = ModelParams::new(0.3, 0.2, 1.0, MultiplierSymbol::Sqg).unwrap();
        let theta = random_smooth(g, seed, 1.0, 2.0).unwrap();
        let x = random_smooth(g, seed + 1, 1.0, 2.0).unwrap();
        let y = random_smooth(g, seed + 2, 1.0, 2.0).unwrap();
        let lhs = linearized_rhs(&x.add_scaled(a, &y).unwrap(), &theta, &p, true).unwrap();
        let rhs = linearized_rhs(&x, &theta, &p, true).unwrap()
            .add_scaled(a, &linearized_rhs(&y, &theta, &p, true).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * rhs.max_abs().max(1.0));
    }

    #[test]
    fn threshold_is_monotone(m in 0.0f64..3.0, c in 0.3f64..2.0, kappa in 0.05f64..2.0, gamma in 0.3f64..2.0, d in 2usize..4) {
        let n = |m: f64, c: f64, kappa: f64| dimension_threshold(&DimensionInputs {
            contraction: Contraction::Dissipation { kappa, gamma }, d, m, c,
        }).unwrap();
        let base = n(m, c, kappa);
        prop_assert!(n(m + 0.1, c, kappa) >= base);
        prop_assert!(n(m, c * 1.2, kappa) >= base);
        prop_assert!(n(m, c, kappa * 1.2) <= base);
        let damped = |lambda: f64| dimension_threshold(&DimensionInputs {
            contraction: Contraction::Damping { lambda }, d, m, c,
        }).unwrap();
        prop_assert!(damped(kappa * 1.2) <= damped(kappa));
    }

    #[test]
    fn snapshots_round_trip(seed in 0u64..1000, three in proptest::bool::ANY) {
        let g = if three { Grid::new(3, 8).unwrap() } else { grid2() };
        let f = random_smooth(g, seed, 2.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&f, &mut buf).unwrap();
        prop_assert_eq!(read_snapshot(buf.as_slice()).unwrap(), f);
    }
}

#[test]
fn transport_term_is_quadratic() {
    // the central difference of a quadratic map is exact, so the remainder is
    // at round-off for every eps
    let g = Grid::new(2, 32).unwrap();
    let p = ModelParams::new(0.5, 0.1, 1.0, MultiplierSymbol::Sqg).unwrap();
    let theta = dealias_two_thirds(&random_smooth(g, 1, 2.0, 2.0).unwrap());
    let psi = dealias_two_thirds(&random_smooth(g, 2, 1.0, 2.0).unwrap());
    let lin = linearized_rhs(&psi, &theta, &p, false).unwrap();
    let transport = lin.sub(&psi.map_multiplier(|k| -0.1 * ascl_core::grid::k_norm(k))).unwrap();
    for eps in [1e-3, 1e-4] {
        let plus = nonlinear_term(&theta.add_scaled(eps, &psi).unwrap(), &p.symbol).unwrap();
        let minus = nonlinear_term(&theta.add_scaled(-eps, &psi).unwrap(), &p.symbol).unwrap();
        let fd = plus.sub(&minus).unwrap().scaled(0.5 / eps);
        let rem = fd.sub(&transport).unwrap().norm_l2() / transport.norm_l2();
        assert!(rem <= 1e-8, "eps {eps}: remainder {rem:e}");
    }
}

#[test]
fn eigenvalue_sums_grow_with_the_expected_exponent() {
    use ascl_core::attractor::{eigenvalue_sum_constant, smallest_eigenvalues};
    for (d, gamma) in [(2usize, 2.0f64), (2, 1.0), (3, 2.0), (3, 1.0)] {
        let ns: Vec<usize> = (4..=12).map(|e| 1usize << e).collect();
        let vals = smallest_eigenvalues(d, gamma, *ns.last().unwrap());
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| ((n as f64).ln(), vals[..n].iter().sum::<f64>().ln()))
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let expected = 1.0 + gamma / d as f64;
        assert!((slope - expected).abs() <= 0.05, "d={d} gamma={gamma}: slope {slope}");
        let c = eigenvalue_sum_constant(d, gamma, &ns);
        for &n in &ns {
            assert!(vals[..n].iter().sum::<f64>() >= (n as f64).powf(expected) / c * (1.0 - 1e-12));
        }
    }
}
