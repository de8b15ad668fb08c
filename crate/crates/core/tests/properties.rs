use georiesz::coefficients::coefficient_table;
use georiesz::discrepancy::{l2_discrepancy_spectral, stolarsky_check};
use georiesz::energy::{discrete_energy, geodesic_distance, spectral_moments};
use georiesz::pointsets::{generate, optimize_energy, GeneratorKind, OptimizerOptions};
use georiesz::powerseries::arcsin_series;
use georiesz::quadrature::gauss_jacobi_rule;
use georiesz::specfun::{gegenbauer_normalized, harmonic_dim, normalized_derivative, normalized_eval, zonal_eval};
use georiesz::{PointSet, PotentialSpec, SphereContext};
use proptest::prelude::*;

fn ctx(d: usize) -> SphereContext {
    SphereContext::new(d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_polynomials_are_bounded(d in 1usize..6, n in 0usize..400, t in -1.0f64..=1.0) {
        let r = gegenbauer_normalized(n, &ctx(d), t).unwrap();
        prop_assert!(r.abs() <= 1.0 + 1e-12);
        let z = zonal_eval(n, &ctx(d), t).unwrap();
        prop_assert!(z.abs() <= harmonic_dim(n, &ctx(d)) as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn zonal_parity(d in 1usize..6, n in 0usize..200, t in -1.0f64..=1.0) {
        let a = zonal_eval(n, &ctx(d), t).unwrap();
        let b = zonal_eval(n, &ctx(d), -t).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((b - sign * a).abs() <= 1e-12 * harmonic_dim(n, &ctx(d)) as f64);
    }

    #[test]
    fn derivative_identity(lambda in 0.0f64..3.0, n in 1usize..60, t in -0.95f64..0.95) {
        let h = 1e-6;
        let fd = (normalized_eval(n, lambda, t + h).unwrap() - normalized_eval(n, lambda, t - h).unwrap()) / (2.0 * h);
        let exact = normalized_derivative(n, lambda, t).unwrap();
        // the central difference error is O(h^2 R''') and R''' grows like n^6
        let scale = exact.abs().max(1.0) + (n as f64).powi(6) * h * h;
        prop_assert!((fd - exact).abs() <= 1e-6 * scale, "{} vs {}", fd, exact);
    }

    #[test]
    fn gauss_jacobi_integrates_monomials_exactly(lambda in 0.0f64..4.0, m in 1usize..40, seed in 0u64..1000) {
        let rule = gauss_jacobi_rule(lambda, m).unwrap();
        // compare the rule against itself at double the order on a degree 2m - 1 polynomial
        let finer = gauss_jacobi_rule(lambda, 2 * m).unwrap();
        let coef: Vec<f64> = (0..2 * m).map(|k| ((seed + k as u64) as f64 * 0.618).fract() - 0.5).collect();
        let p = |x: f64| coef.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let a = rule.integrate(p);
        let b = finer.integrate(p);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn arcsine_series_converges_inside(t in -0.5f64..0.5) {
        let s = arcsin_series(80).unwrap();
        prop_assert!((s.eval(t) - t.asin()).abs() < 1e-13);
    }

    #[test]
    fn distance_identities(d in 1usize..5, seed in 0u64..10_000) {
        let z = generate(GeneratorKind::RandomUniform, 2, &ctx(d), seed).unwrap();
        let (x, y) = (z.point(0), z.point(1));
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let r = geodesic_distance(x, y).unwrap();
        prop_assert!((r + geodesic_distance(x, &neg).unwrap() - std::f64::consts::PI).abs() <= 1e-12);
        prop_assert!((r - geodesic_distance(y, x).unwrap()).abs() == 0.0);
    }

    #[test]
    fn point_set_text_round_trip(d in 1usize..5, n in 1usize..30, seed in 0u64..10_000) {
        let z = generate(GeneratorKind::RandomUniform, n, &ctx(d), seed).unwrap();
        prop_assert_eq!(PointSet::from_text(&z.to_text()).unwrap(), z);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_discrepancy_is_nonnegative_and_monotone(
        d in 1usize..4,
        n in 1usize..40,
        seed in 0u64..1000,
        coefs in proptest::collection::vec(0.0f64..1.0, 2..12),
    ) {
        let c = ctx(d);
        let z = generate(GeneratorKind::RandomUniform, n, &c, seed).unwrap();
        let spec = PotentialSpec::Spectral { coefficients: coefs.clone() };
        let table = coefficient_table(&spec, &c, coefs.len() - 1).unwrap();
        let d2 = l2_discrepancy_spectral(&z, &table).unwrap().value;
        prop_assert!(d2 >= 0.0);
        let b = spectral_moments(&z, coefs.len() - 1, &c).unwrap();
        let mut partial = 0.0;
        for k in 1..coefs.len() {
            prop_assert!(b[k] >= -1e-12 * harmonic_dim(k, &c) as f64);
            let next = partial + coefs[k] * b[k];
            prop_assert!(next >= partial - 1e-12);
            partial = next;
        }
        let r = stolarsky_check(&z, &spec, coefs.len() - 1).unwrap();
        prop_assert!(r.residual < 1e-10, "{:?}", r);
    }

    #[test]
    fn optimizer_never_worsens_the_start(d in 1usize..4, n in 3usize..12, seed in 0u64..1000, which in 0usize..3) {
        let c = ctx(d);
        let spec = match which {
            0 => PotentialSpec::geodesic(-0.5),
            1 => PotentialSpec::geodesic(0.5),
            _ => PotentialSpec::Logarithmic { epsilon: 0.0 },
        };
        let z0 = generate(GeneratorKind::RandomUniform, n, &c, seed).unwrap();
        let opts = OptimizerOptions { max_iterations: 30, ..Default::default() };
        let (z, report) = optimize_energy(&z0, &spec, &opts).unwrap();
        let (e0, e1) = (discrete_energy(&z0, &spec).unwrap(), discrete_energy(&z, &spec).unwrap());
        if report.maximize {
            prop_assert!(e1 >= e0);
            prop_assert!(report.energies.windows(2).all(|w| w[1] >= w[0]));
        } else {
            prop_assert!(e1 <= e0);
            prop_assert!(report.energies.windows(2).all(|w| w[1] <= w[0]));
        }
        for p in z.iter() {
            prop_assert!((p.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn reruns_are_bit_identical() {
    let c = ctx(2);
    let z0 = generate(GeneratorKind::RandomUniform, 40, &c, 17).unwrap();
    let spec = PotentialSpec::geodesic(-1.0);
    let opts = OptimizerOptions { max_iterations: 25, ..Default::default() };
    let a = optimize_energy(&z0, &spec, &opts).unwrap();
    let b = optimize_energy(&z0, &spec, &opts).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let t1 = coefficient_table(&PotentialSpec::geodesic(0.5), &c, 300).unwrap();
    let t2 = coefficient_table(&PotentialSpec::geodesic(0.5), &c, 300).unwrap();
    assert_eq!(t1.values, t2.values);
}
