//! Gegenbauer coefficients `F^(n; lambda)` of zonal potentials, computed by quadrature in
//! the angle `theta = arccos t`:
//!
//! `F^(n; lambda) = c_lambda int_0^pi F(cos theta) R_n^lambda(cos theta) sin^{2 lambda} theta dtheta`
//!
//! with `c_lambda = Gamma(lambda + 1) / (Gamma(lambda + 1/2) Gamma(1/2))`, so that
//! `F(t) = sum_n F^(n; lambda) zonal_n(t)`. On the circle these are the cosine
//! coefficients `(1/pi) int F(cos theta) cos(n theta) dtheta` and `zonal_n = 2 T_n`.

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_theta_singular, ThetaOptions, ThetaRule};
use crate::specfun::{
    harmonic_dim, normalized_sequence, normalized_sequence_theta, normalized_unchecked, zonal_sequence,
    SphereContext,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// A zonal potential `F(x . y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `(eps + rho)^delta` with `rho = arccos t`.
    GeodesicPower {
        delta: f64,
        #[serde(default)]
        epsilon: f64,
    },
    /// `log(pi / (eps + rho))`, the `delta = 0` member of the family.
    Logarithmic {
        #[serde(default)]
        epsilon: f64,
    },
    /// `(pi/2)^delta - rho^delta`, positive definite for `delta` in `(0, 1]`.
    CenteredGeodesic { delta: f64 },
    /// Indicator of `t >= height`.
    CapIndicator { height: f64 },
    /// `sum_n c_n zonal_n(t)` for a finite list of coefficients.
    Spectral { coefficients: Vec<f64> },
}

impl PotentialSpec {
    pub fn geodesic(delta: f64) -> Self {
        Self::GeodesicPower { delta, epsilon: 0.0 }
    }

    pub fn validate(&self, ctx: &SphereContext) -> Result<()> {
        self.validate_with(ctx, true)
    }

    /// Like [`PotentialSpec::validate`] but without the integrability requirement, for
    /// finite sums over distinct points where any negative exponent is meaningful.
    pub fn validate_pointwise(&self, ctx: &SphereContext) -> Result<()> {
        self.validate_with(ctx, false)
    }

    fn validate_with(&self, ctx: &SphereContext, integrable: bool) -> Result<()> {
        let d = ctx.d() as f64;
        let check_eps = |e: f64| {
            if (0.0..1.0).contains(&e) {
                Ok(())
            } else {
                domain(format!("epsilon must lie in [0, 1), got {e}"))
            }
        };
        match *self {
            Self::GeodesicPower { delta, epsilon } => {
                check_eps(epsilon)?;
                if delta == 0.0 || !delta.is_finite() {
                    return domain("geodesic exponent must be finite and nonzero; use the logarithmic kind for 0");
                }
                if integrable && delta <= -d {
                    return domain(format!("exponent {delta} is not integrable on S^{}: need delta > -{}", ctx.d(), ctx.d()));
                }
                Ok(())
            }
            Self::Logarithmic { epsilon } => check_eps(epsilon),
            Self::CenteredGeodesic { delta } => {
                if delta > 0.0 && delta.is_finite() {
                    Ok(())
                } else {
                    domain(format!("centered geodesic exponent must be positive, got {delta}"))
                }
            }
            Self::CapIndicator { height } => {
                if height.abs() <= 1.0 {
                    Ok(())
                } else {
                    domain(format!("cap height must lie in [-1, 1], got {height}"))
                }
            }
            Self::Spectral { ref coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    domain("spectral potential needs a nonempty list of finite coefficients")
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `F` as a function of the geodesic distance `theta` in `[0, pi]`.
    pub fn eval_theta(&self, ctx: &SphereContext, theta: f64) -> f64 {
        match *self {
            Self::GeodesicPower { delta, epsilon } => (epsilon + theta).powf(delta),
            Self::Logarithmic { epsilon } => (PI / (epsilon + theta)).ln(),
            Self::CenteredGeodesic { delta } => (0.5 * PI).powf(delta) - theta.powf(delta),
            Self::CapIndicator { height } => {
                if theta.cos() >= height {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Spectral { ref coefficients } => {
                let mut z = vec![0.0; coefficients.len()];
                zonal_sequence(ctx, theta.cos(), &mut z);
                coefficients.iter().zip(&z).map(|(c, z)| c * z).sum()
            }
        }
    }

    /// `F` as a function of the inner product `t`.
    pub fn eval_t(&self, ctx: &SphereContext, t: f64) -> f64 {
        if let Self::Spectral { ref coefficients } = *self {
            let mut z = vec![0.0; coefficients.len()];
            zonal_sequence(ctx, t.clamp(-1.0, 1.0), &mut z);
            return coefficients.iter().zip(&z).map(|(c, z)| c * z).sum();
        }
        self.eval_theta(ctx, t.clamp(-1.0, 1.0).acos())
    }

    /// `F(1)`, which is infinite for singular potentials.
    pub fn value_at_one(&self, ctx: &SphereContext) -> f64 {
        self.eval_theta(ctx, 0.0)
    }

    /// Power `p` with `F(cos theta) sin^{2 lambda} theta ~ theta^p` near 0 (log factors aside).
    fn theta_exponent(&self, ctx: &SphereContext) -> f64 {
        let base = 2.0 * ctx.lambda();
        match *self {
            Self::GeodesicPower { delta, epsilon } if epsilon == 0.0 => base + delta,
            _ => base,
        }
    }

    /// Sign of `F^(n)` predicted by the sign law: negative for `n >= 1` when `delta` is in
    /// `(0, 1)`, positive for every `n` when `-(2 lambda + 1) < delta <= 0` (logarithmic case
    /// included). `None` outside these regimes.
    pub fn predicted_sign(&self, n: usize, ctx: &SphereContext) -> Option<f64> {
        let floor = -(2.0 * ctx.lambda() + 1.0);
        match *self {
            Self::GeodesicPower { delta, .. } if delta > 0.0 && delta < 1.0 => {
                Some(if n == 0 { 1.0 } else { -1.0 })
            }
            Self::GeodesicPower { delta, .. } if delta > floor && delta < 0.0 => Some(1.0),
            Self::Logarithmic { .. } => Some(1.0),
            Self::CenteredGeodesic { delta } if delta > 0.0 && delta < 1.0 && n >= 1 => Some(1.0),
            _ => None,
        }
    }
}

fn sin_power(theta: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        1.0
    } else {
        theta.sin().powf(2.0 * lambda)
    }
}

/// A single coefficient with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    pub abs_err: f64,
}

/// `F^(n; lambda)` by adaptive graded quadrature in `theta`.
pub fn gegenbauer_coefficient(spec: &PotentialSpec, n: usize, ctx: &SphereContext) -> Result<Coefficient> {
    gegenbauer_coefficient_with(spec, n, ctx, ThetaOptions { tol: 1e-15, max_depth: 60 })
}

pub fn gegenbauer_coefficient_with(
    spec: &PotentialSpec,
    n: usize,
    ctx: &SphereContext,
    opts: ThetaOptions,
) -> Result<Coefficient> {
    spec.validate(ctx)?;
    match spec {
        PotentialSpec::Spectral { coefficients } => {
            return Ok(Coefficient { value: coefficients.get(n).copied().unwrap_or(0.0), abs_err: 0.0 })
        }
        PotentialSpec::CapIndicator { height } => {
            if n == 0 {
                return Ok(Coefficient { value: cap_measure(*height, ctx), abs_err: 1e-15 });
            }
            let caps = CapCoefficients::new(ctx)?;
            return Ok(Coefficient { value: caps.coefficient(*height, n), abs_err: 1e-13 });
        }
        _ => {}
    }
    let lambda = ctx.lambda();
    let g = |th: f64| {
        let r = if lambda == 0.0 {
            (n as f64 * th).cos()
        } else {
            normalized_unchecked(n, lambda, th.cos())
        };
        spec.eval_theta(ctx, th) * r * sin_power(th, lambda)
    };
    let delta = spec.theta_exponent(ctx) - 2.0 * lambda;
    let fine = integrate_theta_singular(g, delta, ctx, opts)?;
    let coarse = integrate_theta_singular(g, delta, ctx, ThetaOptions { tol: 100.0 * opts.tol, ..opts })?;
    let pref = ctx.prefactor();
    Ok(Coefficient {
        value: pref * fine,
        abs_err: pref * ((fine - coarse).abs() + opts.tol),
    })
}

/// Normalized surface measure of the cap `{x . p >= t}`.
pub fn cap_measure(height: f64, ctx: &SphereContext) -> f64 {
    let theta = height.clamp(-1.0, 1.0).acos();
    if ctx.is_circle() {
        return theta / PI;
    }
    let lambda = ctx.lambda();
    let g = |th: f64| sin_power(th, lambda);
    ctx.prefactor() * composite_legendre(&g, 0.0, theta, 2.0)
}

/// Fixed-panel Gauss-Legendre on `[a, b]` with panels of length about `1/omega`.
fn composite_legendre(g: &impl Fn(f64) -> f64, a: f64, b: f64, omega: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let rule = crate::quadrature::gauss_legendre(24).expect("Gauss-Legendre construction");
    let pieces = ((b - a) * omega.max(1.0) / 4.0).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        let mid = a + (i as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            total += 0.5 * h * w * g(mid + 0.5 * h * x);
        }
    }
    total
}

/// Coefficients `F^(0..=K)` with per-entry absolute error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub ctx: SphereContext,
    pub spec: PotentialSpec,
    pub values: Vec<f64>,
    pub abs_err: Vec<f64>,
}

const NODE_CHUNK: usize = 512;

/// Coefficient table for `n = 0..=K`, all degrees from one graded rule in `theta`.
pub fn coefficient_table(spec: &PotentialSpec, ctx: &SphereContext, order: usize) -> Result<CoefficientTable> {
    spec.validate(ctx)?;
    match spec {
        PotentialSpec::Spectral { coefficients } => {
            let values: Vec<f64> = (0..=order).map(|n| coefficients.get(n).copied().unwrap_or(0.0)).collect();
            return Ok(CoefficientTable { ctx: *ctx, spec: spec.clone(), abs_err: vec![0.0; values.len()], values });
        }
        PotentialSpec::CapIndicator { height } => {
            let caps = CapCoefficients::new(ctx)?;
            let mut values = vec![cap_measure(*height, ctx)];
            values.extend((1..=order).map(|n| caps.coefficient(*height, n)));
            return Ok(CoefficientTable { ctx: *ctx, spec: spec.clone(), abs_err: vec![1e-13; values.len()], values });
        }
        _ => {}
    }
    let lambda = ctx.lambda();
    let rule = ThetaRule::graded(spec.theta_exponent(ctx), order as f64 + lambda + 1.0)?;
    let project = |nodes: &[f64], weights: &[f64]| -> (Vec<f64>, f64) {
        let partials: Vec<(Vec<f64>, f64)> = nodes
            .par_chunks(NODE_CHUNK)
            .zip(weights.par_chunks(NODE_CHUNK))
            .map(|(xs, ws)| {
                let mut acc = vec![0.0; order + 1];
                let mut seq = vec![0.0; order + 1];
                let mut mag = 0.0;
                for (&th, &w) in xs.iter().zip(ws) {
                    let f = w * spec.eval_theta(ctx, th) * sin_power(th, lambda);
                    mag += f.abs();
                    normalized_sequence_theta(lambda, th, &mut seq);
                    for (a, r) in acc.iter_mut().zip(&seq) {
                        *a += f * r;
                    }
                }
                (acc, mag)
            })
            .collect();
        let mut total = vec![0.0; order + 1];
        let mut mag = 0.0;
        for (acc, m) in partials {
            for (t, a) in total.iter_mut().zip(acc) {
                *t += a;
            }
            mag += m;
        }
        (total, mag)
    };
    let (fine, mag) = project(&rule.nodes, &rule.weights);
    let (coarse, _) = project(&rule.coarse_nodes, &rule.coarse_weights);
    let pref = ctx.prefactor();
    let values: Vec<f64> = fine.iter().map(|v| pref * v).collect();
    // forward rounding error of the three-term recurrence grows linearly in the degree
    let abs_err = fine
        .iter()
        .zip(&coarse)
        .enumerate()
        .map(|(n, (f, c))| pref * ((f - c).abs() + (16 + n) as f64 * f64::EPSILON * mag))
        .collect();
    Ok(CoefficientTable { ctx: *ctx, spec: spec.clone(), values, abs_err })
}

/// Outcome of comparing table signs with the sign law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignVerdict {
    pub checked: usize,
    /// Degrees whose value has the wrong sign or is not resolved beyond its error estimate.
    pub exceptions: Vec<usize>,
}

impl SignVerdict {
    pub fn passed(&self) -> bool {
        self.exceptions.is_empty() && self.checked > 0
    }
}

impl CoefficientTable {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    /// `sum_n F^(n) zonal_n(t)`.
    pub fn reconstruct(&self, t: f64) -> f64 {
        let mut z = vec![0.0; self.values.len()];
        zonal_sequence(&self.ctx, t, &mut z);
        self.values.iter().zip(&z).map(|(v, z)| v * z).sum()
    }

    /// Checks every degree with a predicted sign.
    pub fn sign_verdict(&self) -> SignVerdict {
        let mut checked = 0;
        let mut exceptions = Vec::new();
        for (n, (&v, &e)) in self.values.iter().zip(&self.abs_err).enumerate() {
            if let Some(sign) = self.spec.predicted_sign(n, &self.ctx) {
                checked += 1;
                if !(v * sign > e) {
                    exceptions.push(n);
                }
            }
        }
        SignVerdict { checked, exceptions }
    }

    /// Errors unless `F^(k) >= -tol` for all `k >= 1`.
    pub fn check_positive_definite(&self, tol: f64) -> Result<()> {
        for (k, &v) in self.values.iter().enumerate().skip(1) {
            if v < -tol.max(self.abs_err[k]) {
                return Err(Error::NotPositiveDefinite { k, value: v, tol });
            }
        }
        Ok(())
    }

    /// `sum_{n=1}^{K} F^(n) a_n`.
    pub fn weighted_sum(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, v)| v * harmonic_dim(n, &self.ctx) as f64)
            .sum()
    }

    /// Columnar text: `n value abs_err`, 17 significant digits.
    pub fn to_columns(&self) -> String {
        let mut out = String::from("n,value,abs_err\n");
        for (n, (v, e)) in self.values.iter().zip(&self.abs_err).enumerate() {
            let _ = writeln!(out, "{n},{v:.16e},{e:.16e}");
        }
        out
    }
}

/// Least-squares fit of `log |F^(n)|` against `log n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub points: usize,
}

/// Straight-line least squares; returns (slope, intercept, rms residual).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Decay slope over `[n_min, n_max]`, skipping entries not resolved above their error.
pub fn decay_exponent(table: &CoefficientTable, n_min: usize, n_max: usize) -> Result<DecayFit> {
    let n_max = n_max.min(table.order());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in n_min.max(1)..=n_max {
        let v = table.values[n];
        if v.abs() > 10.0 * table.abs_err[n] && v != 0.0 {
            xs.push((n as f64).ln());
            ys.push(v.abs().ln());
        }
    }
    if xs.len() < 4 {
        return domain(format!("decay fit needs at least 4 resolved coefficients, found {}", xs.len()));
    }
    let (slope, intercept, residual) = fit_line(&xs, &ys);
    Ok(DecayFit { slope, intercept, residual, points: xs.len() })
}

/// Coefficients of cap indicators, `f_t^(n) = c (1 - t^2)^(lambda + 1/2) R_{n-1}^{lambda+1}(t)`.
///
/// The constant `c` is pinned by direct quadrature of the `n = 1` coefficient, and the
/// closed form is validated against direct quadrature for `n <= 32` on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapCoefficients {
    ctx: SphereContext,
    constant: f64,
}

const CAP_PIN_HEIGHT: f64 = 0.3;

impl CapCoefficients {
    pub fn new(ctx: &SphereContext) -> Result<Self> {
        if ctx.d() < 2 {
            return domain("cap coefficients are defined for d >= 2");
        }
        let lambda = ctx.lambda();
        let pinned = cap_coefficient_direct(CAP_PIN_HEIGHT, 1, ctx)
            / (1.0 - CAP_PIN_HEIGHT * CAP_PIN_HEIGHT).powf(lambda + 0.5);
        let caps = Self { ctx: *ctx, constant: pinned };
        for &h in &[-0.8, -0.25, 0.1, 0.55, 0.9] {
            for n in 1..=32 {
                let closed = caps.coefficient(h, n);
                let direct = cap_coefficient_direct(h, n, ctx);
                if (closed - direct).abs() > 1e-9 {
                    return Err(Error::Consistency(format!(
                        "cap coefficient n = {n}, t = {h}: closed form {closed:e} vs quadrature {direct:e}"
                    )));
                }
            }
        }
        Ok(caps)
    }

    /// The pinned normalization constant `c`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn coefficient(&self, height: f64, n: usize) -> f64 {
        if n == 0 {
            return cap_measure(height, &self.ctx);
        }
        let lambda = self.ctx.lambda();
        let s = (1.0 - height * height).max(0.0);
        if s == 0.0 {
            return 0.0;
        }
        self.constant * s.powf(lambda + 0.5) * normalized_unchecked(n - 1, lambda + 1.0, height)
    }

    /// `int_{-1}^1 f_t^(n)^2 dt` for `n = 1..=K` (index 0 unused), by one Gauss rule exact for
    /// every degree.
    pub fn squared_integrals(&self, order: usize) -> Result<Vec<f64>> {
        let lambda = self.ctx.lambda();
        let rule = crate::quadrature::gauss_jacobi_rule(2.0 * lambda + 1.5, order.max(1))?;
        let mut out = vec![0.0; order + 1];
        let mut seq = vec![0.0; order.max(1)];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            normalized_sequence(lambda + 1.0, x, &mut seq);
            for n in 1..=order {
                out[n] += w * seq[n - 1] * seq[n - 1];
            }
        }
        let c2 = self.constant * self.constant;
        for v in out.iter_mut() {
            *v *= c2;
        }
        Ok(out)
    }
}

/// `c_lambda int_0^{arccos t} R_n(cos theta) sin^{2 lambda} theta dtheta`.
pub fn cap_coefficient_direct(height: f64, n: usize, ctx: &SphereContext) -> f64 {
    let lambda = ctx.lambda();
    let theta = height.clamp(-1.0, 1.0).acos();
    let g = |th: f64| normalized_unchecked(n, lambda, th.cos()) * sin_power(th, lambda);
    ctx.prefactor() * composite_legendre(&g, 0.0, theta, n as f64 + lambda + 1.0)
}

/// Validated closed-form cap coefficient `f_t^(n; lambda)`, `n >= 1`.
pub fn cap_coefficient(height: f64, n: usize, ctx: &SphereContext) -> Result<f64> {
    if height.abs() > 1.0 {
        return domain(format!("cap height must lie in [-1, 1], got {height}"));
    }
    if n == 0 {
        return domain("cap coefficient degree must be at least 1");
    }
    Ok(CapCoefficients::new(ctx)?.coefficient(height, n))
}
