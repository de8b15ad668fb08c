//! Stolarsky invariance, spectral L2 discrepancy, spherical-cap discrepancy and the
//! bound-shape checks built on them.

use crate::coefficients::{coefficient_table, CapCoefficients, CoefficientTable, PotentialSpec};
use crate::energy::{dot, rho, spectral_moments, upper_pair_sum, PointSet};
use crate::error::{domain, Error, Result};
use crate::quadrature::gauss_legendre;
use crate::specfun::{cesaro_weights, harmonic_dim, zonal_sequence, SphereContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The three terms of `N^-2 sum_{i,j} F(z_i . z_j) = D^2 + I_F(sigma)`, each computed on its
/// own route.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StolarskyReport {
    pub n_points: usize,
    pub order: usize,
    /// Direct double sum including the diagonal.
    pub lhs: f64,
    pub d_squared: f64,
    pub i_sigma: f64,
    pub residual: f64,
    /// Bound on `sum_{k > K} F^(k) b_k` plus the accumulated coefficient error.
    pub truncation_bound: f64,
    /// Floating-point allowance for the sums themselves.
    pub slack: f64,
}

impl StolarskyReport {
    pub fn passed(&self) -> bool {
        self.residual <= self.truncation_bound + self.slack
    }
}

/// `D^2` truncated at the table order, with a bound on the omitted terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralDiscrepancy {
    pub value: f64,
    pub tail_bound: f64,
}

/// `sum_{k <= K} F^(k) a_k` versus `F(1)`: since every term is nonnegative and the series
/// sums to `F(1)`, the gap bounds every tail `sum_{k > K} F^(k) b_k` with `b_k <= a_k`.
/// Coefficient errors enter once for the gap and once for the partial sum itself.
fn certified_tail(table: &CoefficientTable) -> f64 {
    let ctx = &table.ctx;
    let f1 = table.spec.value_at_one(ctx);
    let mut partial = 0.0;
    let mut err = 0.0;
    for (k, (v, e)) in table.values.iter().zip(&table.abs_err).enumerate() {
        let a = harmonic_dim(k, ctx) as f64;
        partial += v * a;
        err += e * a;
    }
    (f1 - partial).max(0.0) + 2.0 * err
}

fn spectral_sum(table: &CoefficientTable, moments: &[f64]) -> f64 {
    table.values.iter().zip(moments).skip(1).map(|(v, b)| v * b).sum()
}

/// `D^2_{L2,f}(Z) = sum_{k >= 1} F^(k) b_k(Z)` for a positive-definite `F`.
pub fn l2_discrepancy_spectral(z: &PointSet, table: &CoefficientTable) -> Result<SpectralDiscrepancy> {
    if z.d() != table.ctx.d() {
        return domain("point set dimension does not match the table");
    }
    table.check_positive_definite(1e-14)?;
    let moments = spectral_moments(z, table.order(), &table.ctx)?;
    Ok(SpectralDiscrepancy { value: spectral_sum(table, &moments).max(0.0), tail_bound: certified_tail(table) })
}

/// `N^-2 sum_{i,j} F(z_i . z_j)` with the diagonal terms `F(1)`.
pub fn pair_average(z: &PointSet, spec: &PotentialSpec) -> Result<f64> {
    let ctx = z.context();
    let f1 = spec.value_at_one(&ctx);
    if !f1.is_finite() {
        return domain("the potential is infinite on the diagonal");
    }
    let off = upper_pair_sum(z.len(), |i, j| Ok(spec.eval_theta(&ctx, rho(z.point(i), z.point(j)))))?;
    let nf = z.len() as f64;
    Ok((2.0 * off + nf * f1) / (nf * nf))
}

/// Evaluates the three Stolarsky terms independently for a positive-definite potential.
pub fn stolarsky_check(z: &PointSet, spec: &PotentialSpec, order: usize) -> Result<StolarskyReport> {
    let ctx = z.context();
    spec.validate(&ctx)?;
    let table = coefficient_table(spec, &ctx, order)?;
    table.check_positive_definite(1e-14)?;
    let lhs = pair_average(z, spec)?;
    let moments = spectral_moments(z, order, &ctx)?;
    let d_squared = spectral_sum(&table, &moments);
    let i_sigma = table.values[0];
    let exact = matches!(spec, PotentialSpec::Spectral { coefficients } if coefficients.len() <= order + 1);
    let truncation_bound = if exact { 0.0 } else { certified_tail(&table) };
    let scale = lhs.abs() + d_squared.abs() + i_sigma.abs() + spec.value_at_one(&ctx).abs();
    let slack = 64.0 * f64::EPSILON * (z.len() + order) as f64 * scale;
    Ok(StolarskyReport {
        n_points: z.len(),
        order,
        lhs,
        d_squared,
        i_sigma,
        residual: (lhs - d_squared - i_sigma).abs(),
        truncation_bound,
        slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapMethod {
    /// Uniform samples of the centre `x` and the height `t in [-1, 1]`.
    MonteCarlo { samples: usize, seed: u64 },
    /// Cap coefficients up to `order`, with the diagonal part of the tail added back.
    Spectral { order: usize },
    /// Distance-sum form on `S^2`.
    EuclideanOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapDiscrepancy {
    /// `int_{-1}^{1} int |#(Z cap B(x,t))/N - sigma(B(x,t))|^2 dsigma(x) dt`.
    pub value: f64,
    /// Standard error (Monte Carlo) or truncation estimate (spectral); zero for the oracle.
    pub std_error: f64,
}

const MC_BLOCK: usize = 1 << 14;

pub fn cap_discrepancy(z: &PointSet, method: CapMethod) -> Result<CapDiscrepancy> {
    let ctx = z.context();
    match method {
        CapMethod::MonteCarlo { samples, seed } => {
            if z.d() != 2 {
                return Err(Error::Unsupported("Monte Carlo cap discrepancy samples S^2 only".into()));
            }
            if samples < 100 {
                return domain("Monte Carlo budget too small for a standard error (need >= 100 samples)");
            }
            cap_monte_carlo(z, samples, seed)
        }
        CapMethod::Spectral { order } => cap_spectral(z, &ctx, order),
        CapMethod::EuclideanOracle => {
            if z.d() != 2 {
                return Err(Error::Unsupported("the distance-sum cap formula is for S^2".into()));
            }
            let chords = upper_pair_sum(z.len(), |i, j| {
                let (x, y) = (z.point(i), z.point(j));
                Ok((2.0 - 2.0 * dot(x, y)).max(0.0).sqrt())
            })?;
            let nf = z.len() as f64;
            Ok(CapDiscrepancy { value: 0.25 * (4.0 / 3.0 - 2.0 * chords / (nf * nf)), std_error: 0.0 })
        }
    }
}

fn cap_monte_carlo(z: &PointSet, samples: usize, seed: u64) -> Result<CapDiscrepancy> {
    let blocks = samples.div_ceil(MC_BLOCK);
    let nf = z.len() as f64;
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let x: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let x = [x[0] / norm, x[1] / norm, x[2] / norm];
                let t: f64 = rng.random_range(-1.0..=1.0);
                let inside = z.iter().filter(|p| dot(&x, p) >= t).count() as f64;
                let dev = inside / nf - 0.5 * (1.0 - t);
                let v = dev * dev;
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = samples as f64;
    let mean = s1 / m;
    let var = ((s2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
    // the t-integral has length 2
    Ok(CapDiscrepancy { value: 2.0 * mean, std_error: 2.0 * (var / m).sqrt() })
}

/// `sum_{n > K} a_n int f_t(n)^2 dt / N`, the diagonal share of the spectral tail.
fn diagonal_tail(ctx: &SphereContext, caps: &CapCoefficients, order: usize, n_points: usize) -> Result<f64> {
    let nf = n_points as f64;
    if ctx.d() == 2 {
        let k = order as f64;
        return Ok(0.25 / nf * (1.0 / (2.0 * k + 1.0) + 1.0 / (2.0 * k + 3.0)));
    }
    // terms decay like n^-2: sum to 4K and close with the integral of the last term
    let far = 4 * order.max(1);
    let sq = caps.squared_integrals(far)?;
    let term = |n: usize| harmonic_dim(n, ctx) as f64 * sq[n];
    let head: f64 = (order + 1..=far).map(term).sum();
    Ok((head + far as f64 * term(far)) / nf)
}

fn cap_spectral(z: &PointSet, ctx: &SphereContext, order: usize) -> Result<CapDiscrepancy> {
    if ctx.d() < 2 {
        return Err(Error::Unsupported("spectral cap discrepancy needs d >= 2".into()));
    }
    if order < 2 {
        return domain("spectral cap discrepancy needs order >= 2");
    }
    let caps = CapCoefficients::new(ctx)?;
    let sq = caps.squared_integrals(order)?;
    let moments = spectral_moments(z, order, ctx)?;
    let partial = |k: usize| -> Result<f64> {
        let head: f64 = (1..=k).map(|n| sq[n] * moments[n]).sum();
        Ok(head + diagonal_tail(ctx, &caps, k, z.len())?)
    };
    let full = partial(order)?;
    let half = partial(order / 2)?;
    Ok(CapDiscrepancy { value: full, std_error: (full - half).abs() })
}

/// The two expressions of the discrepancy bounds next to a measured `D^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub n_points: usize,
    /// `min_{1 <= k <= N^(1/d)} F^(k)`.
    pub lower: f64,
    /// `N^-1 max_{tau <= N^(-1/d)} (F(1) - F(cos tau))`.
    pub upper: f64,
    pub measured: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
}

impl BoundsReport {
    /// `measured / lower` inside `[lo, hi]`.
    pub fn lower_ratio_within(&self, lo: f64, hi: f64) -> bool {
        (lo..=hi).contains(&self.lower_ratio)
    }
}

/// Both bound expressions with unit constants, compared with `measured`.
pub fn discrepancy_bounds_check(table: &CoefficientTable, n_points: usize, measured: f64) -> Result<BoundsReport> {
    if n_points == 0 {
        return domain("need at least one point");
    }
    table.check_positive_definite(1e-14)?;
    let ctx = &table.ctx;
    let nf = n_points as f64;
    let kmax = (nf.powf(1.0 / ctx.d() as f64).ceil() as usize).max(1);
    if kmax > table.order() {
        return domain(format!("table order {} is below the bound window {kmax}", table.order()));
    }
    let lower = table.values[1..=kmax].iter().copied().fold(f64::INFINITY, f64::min);
    let f1 = table.spec.value_at_one(ctx);
    let tau_max = nf.powf(-1.0 / ctx.d() as f64).min(PI);
    let upper = (0..=256)
        .map(|i| f1 - table.spec.eval_theta(ctx, tau_max * i as f64 / 256.0))
        .fold(0.0, f64::max)
        / nf;
    Ok(BoundsReport { n_points, lower, upper, measured, lower_ratio: measured / lower, upper_ratio: measured / upper })
}

/// `int |1 - N^-1 sum_j K_n(x . z_j)|^2 dsigma(x)` for the order-`d + 1` Cesàro kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CesaroDemo {
    pub degree: usize,
    /// Product Gauss-Legendre x trapezoid quadrature.
    pub quadrature: f64,
    /// `sum_{k=1}^{n} w_k^2 b_k(Z)`.
    pub spectral: f64,
}

/// Evaluates the Cesàro-kernel functional on `S^2` with `n = ceil(a N^(1/2))`.
pub fn cesaro_demo(z: &PointSet, a: f64) -> Result<CesaroDemo> {
    if z.d() != 2 {
        return Err(Error::Unsupported("the Cesàro demonstration runs on S^2".into()));
    }
    if !(a > 0.0) {
        return domain("scale a must be positive");
    }
    let ctx = z.context();
    let degree = (a * (z.len() as f64).sqrt()).ceil() as usize;
    let weights = cesaro_weights(degree, 3.0);
    let rule = gauss_legendre(degree + 2)?;
    let nphi = 2 * degree + 2;
    let nf = z.len() as f64;
    let rows: Vec<f64> = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(&c, &w)| {
            let s = (1.0 - c * c).max(0.0).sqrt();
            let mut zonal = vec![0.0; degree + 1];
            let mut acc = 0.0;
            for p in 0..nphi {
                let phi = 2.0 * PI * p as f64 / nphi as f64;
                let x = [s * phi.cos(), s * phi.sin(), c];
                let mut kernel_sum = 0.0;
                for q in z.iter() {
                    zonal_sequence(&ctx, dot(&x, q).clamp(-1.0, 1.0), &mut zonal);
                    kernel_sum += weights.iter().zip(&zonal).map(|(w, v)| w * v).sum::<f64>();
                }
                let dev = 1.0 - kernel_sum / nf;
                acc += dev * dev;
            }
            w * acc / nphi as f64
        })
        .collect();
    // dsigma = dc dphi / (4 pi); the phi average already divides by 2 pi
    let quadrature = 0.5 * rows.iter().sum::<f64>();
    let moments = spectral_moments(z, degree, &ctx)?;
    let spectral = (1..=degree).map(|k| weights[k] * weights[k] * moments[k]).sum();
    Ok(CesaroDemo { degree, quadrature, spectral })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointsets::{generate, GeneratorKind};
    use approx::assert_relative_eq;

    fn ctx(d: usize) -> SphereContext {
        SphereContext::new(d).unwrap()
    }

    fn random(n: usize, d: usize, seed: u64) -> PointSet {
        generate(GeneratorKind::RandomUniform, n, &ctx(d), seed).unwrap()
    }

    #[test]
    fn single_point_discrepancy_is_gap_at_one() {
        let spec = PotentialSpec::Spectral { coefficients: vec![0.3, 0.2, 0.1, 0.05] };
        let c = ctx(2);
        let table = coefficient_table(&spec, &c, 3).unwrap();
        let z = random(1, 2, 0);
        let d2 = l2_discrepancy_spectral(&z, &table).unwrap();
        assert_relative_eq!(d2.value, spec.value_at_one(&c) - 0.3, epsilon = 1e-13);
        assert!(d2.tail_bound < 1e-13);
    }

    #[test]
    fn antipodal_pair_kills_odd_degree() {
        let spec = PotentialSpec::Spectral { coefficients: vec![0.0, 1.0] };
        let table = coefficient_table(&spec, &ctx(2), 1).unwrap();
        let z = generate(GeneratorKind::SymmetricRandom, 2, &ctx(2), 4).unwrap();
        assert!(l2_discrepancy_spectral(&z, &table).unwrap().value < 1e-15);
    }

    #[test]
    fn negative_table_is_rejected() {
        let table = coefficient_table(&PotentialSpec::geodesic(0.5), &ctx(2), 8).unwrap();
        assert!(matches!(
            l2_discrepancy_spectral(&random(4, 2, 0), &table),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn finite_spectral_potentials_are_exact() {
        for d in 1..4 {
            let spec = PotentialSpec::Spectral { coefficients: vec![0.5, 0.25, 0.0, 0.125, 0.01] };
            let r = stolarsky_check(&random(17, d, d as u64), &spec, 6).unwrap();
            assert!(r.residual < 1e-10, "d {d}: {r:?}");
            assert_eq!(r.truncation_bound, 0.0);
        }
    }

    #[test]
    fn centered_geodesic_identity() {
        let spec = PotentialSpec::CenteredGeodesic { delta: 0.5 };
        let r = stolarsky_check(&random(32, 2, 11), &spec, 4096).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.truncation_bound < 0.05);
    }

    #[test]
    fn circle_with_linear_potential() {
        // equal spacing: N^-2 sum |i-j| gaps give the exact left side
        let spec = PotentialSpec::CenteredGeodesic { delta: 1.0 };
        let z = generate(GeneratorKind::EqualSpacedCircle, 8, &ctx(1), 0).unwrap();
        let r = stolarsky_check(&z, &spec, 2048).unwrap();
        assert!(r.residual < 1e-8 + r.truncation_bound, "{r:?}");
        let mut direct = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let k = (i as i64 - j as i64).rem_euclid(8) as f64;
                direct += PI / 2.0 - (2.0 * PI * k / 8.0).min(2.0 * PI - 2.0 * PI * k / 8.0);
            }
        }
        assert_relative_eq!(r.lhs, direct / 64.0, epsilon = 1e-13);
        // I_F(sigma) = pi/2 - pi/2 on every sphere
        assert!(r.i_sigma.abs() < 1e-12);
    }

    #[test]
    fn discrepancy_scales_linearly() {
        let z = random(20, 2, 3);
        let a = PotentialSpec::Spectral { coefficients: vec![1.0, 0.5, 0.25, 0.125] };
        let b = PotentialSpec::Spectral { coefficients: vec![3.0, 1.5, 0.75, 0.375] };
        let ta = coefficient_table(&a, &ctx(2), 3).unwrap();
        let tb = coefficient_table(&b, &ctx(2), 3).unwrap();
        let da = l2_discrepancy_spectral(&z, &ta).unwrap().value;
        let db = l2_discrepancy_spectral(&z, &tb).unwrap().value;
        assert_relative_eq!(db, 3.0 * da, max_relative = 1e-14);
    }

    #[test]
    fn one_point_cap_discrepancy() {
        let z = random(1, 2, 9);
        let exact = 1.0 / 3.0;
        let euclid = cap_discrepancy(&z, CapMethod::EuclideanOracle).unwrap();
        assert_relative_eq!(euclid.value, exact, epsilon = 1e-15);
        let spectral = cap_discrepancy(&z, CapMethod::Spectral { order: 64 }).unwrap();
        assert_relative_eq!(spectral.value, exact, max_relative = 1e-3);
        let mc = cap_discrepancy(&z, CapMethod::MonteCarlo { samples: 200_000, seed: 1 }).unwrap();
        assert!((mc.value - exact).abs() < 4.0 * mc.std_error, "{mc:?}");
        assert!(mc.value > 0.0 && mc.std_error < 2e-3);
    }

    #[test]
    fn cap_methods_agree_on_random_points() {
        let z = random(64, 2, 21);
        let euclid = cap_discrepancy(&z, CapMethod::EuclideanOracle).unwrap().value;
        let spectral = cap_discrepancy(&z, CapMethod::Spectral { order: 256 }).unwrap();
        assert!((spectral.value - euclid).abs() < 1e-3 * euclid, "{spectral:?} vs {euclid}");
        let mc = cap_discrepancy(&z, CapMethod::MonteCarlo { samples: 100_000, seed: 2 }).unwrap();
        assert!((mc.value - euclid).abs() < 4.0 * mc.std_error, "{mc:?} vs {euclid}");
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let z = random(10, 2, 0);
        let m = CapMethod::MonteCarlo { samples: 40_000, seed: 5 };
        assert_eq!(cap_discrepancy(&z, m).unwrap(), cap_discrepancy(&z, m).unwrap());
        assert!(cap_discrepancy(&z, CapMethod::MonteCarlo { samples: 10, seed: 5 }).is_err());
        assert!(cap_discrepancy(&random(5, 3, 0), m).is_err());
    }

    #[test]
    fn spectral_cap_in_three_dimensions() {
        let z = random(1, 3, 1);
        // one point: int_{-1}^{1} s(t)(1 - s(t)) dt with s the normalized cap measure
        let rule = gauss_legendre(200).unwrap();
        let s = |t: f64| crate::coefficients::cap_measure(t, &ctx(3));
        let exact = rule.integrate(|t| s(t) * (1.0 - s(t)));
        let spectral = cap_discrepancy(&z, CapMethod::Spectral { order: 64 }).unwrap();
        assert_relative_eq!(spectral.value, exact, max_relative = 1e-3);
    }

    #[test]
    fn bounds_report_for_a_single_set() {
        let spec = PotentialSpec::CenteredGeodesic { delta: 0.5 };
        let table = coefficient_table(&spec, &ctx(2), 32).unwrap();
        let r = discrepancy_bounds_check(&table, 256, 1e-3).unwrap();
        assert!(r.lower > 0.0 && r.upper > 0.0);
        assert_relative_eq!(r.upper, (1.0f64 / 16.0).sqrt() / 256.0, max_relative = 1e-12);
        assert!(discrepancy_bounds_check(&table, 4096, 1e-3).is_err());
    }

    #[test]
    fn cesaro_routes_agree() {
        let z = generate(GeneratorKind::Fibonacci, 25, &ctx(2), 0).unwrap();
        let demo = cesaro_demo(&z, 2.0).unwrap();
        assert_eq!(demo.degree, 10);
        assert!(demo.quadrature > 0.0);
        assert_relative_eq!(demo.quadrature, demo.spectral, max_relative = 1e-10);
    }
}
