//! Gegenbauer (ultraspherical) polynomial machinery on `S^d`.
//!
//! Conventions used throughout the crate:
//!
//! * `lambda = (d - 1) / 2` is the Gegenbauer index attached to `S^d`.
//! * `R_n(t) = C_n^lambda(t) / C_n^lambda(1)` is the normalized polynomial; for the
//!   circle (`lambda = 0`) it is the Chebyshev polynomial `T_n(t) = cos(n arccos t)`.
//! * The zonal kernel of degree `n` is `(n + lambda)/lambda * C_n^lambda(t)`, which equals
//!   `dim H_n * R_n(t)`. On the circle it is `2 T_n` for `n >= 1` and `1` for `n = 0`.

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Natural logarithm of the gamma function for positive arguments.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Total mass of the weight `(1 - t^2)^(lambda - 1/2)` on `[-1, 1]`.
pub fn weight_mass(lambda: f64) -> f64 {
    (0.5 * PI.ln() + ln_gamma(lambda + 0.5) - ln_gamma(lambda + 1.0)).exp()
}

/// Dimension of the sphere `S^d` together with its Gegenbauer index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereContext {
    d: usize,
    lambda: f64,
}

impl SphereContext {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return domain("sphere dimension d must be at least 1");
        }
        Ok(Self {
            d,
            lambda: (d as f64 - 1.0) / 2.0,
        })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Ambient dimension `d + 1`.
    #[inline]
    pub fn ambient(&self) -> usize {
        self.d + 1
    }

    #[inline]
    pub fn is_circle(&self) -> bool {
        self.d == 1
    }

    /// `Gamma(lambda + 1) / (Gamma(lambda + 1/2) Gamma(1/2))`, the reciprocal weight mass.
    /// Multiplying a `w_lambda`-integral by this constant averages over the sphere.
    pub fn prefactor(&self) -> f64 {
        1.0 / weight_mass(self.lambda)
    }
}

fn check_argument(lambda: f64, t: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("Gegenbauer index must be finite and >= 0, got {lambda}"));
    }
    if !(t.abs() <= 1.0) {
        return domain(format!("argument must lie in [-1, 1], got {t}"));
    }
    Ok(())
}

/// `C_n^lambda(t)` by the three-term recurrence; `T_n(t)` when `lambda = 0`.
pub fn gegenbauer_eval(n: usize, lambda: f64, t: f64) -> Result<f64> {
    check_argument(lambda, t)?;
    if lambda == 0.0 {
        return Ok(chebyshev(n, t));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * t;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda) * t * cur - (kf + 2.0 * lambda - 1.0) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[inline]
fn chebyshev(n: usize, t: f64) -> f64 {
    (n as f64 * t.acos()).cos()
}

/// Normalized Gegenbauer polynomial `R_n^lambda(t)` for an arbitrary index `lambda >= 0`.
pub fn normalized_eval(n: usize, lambda: f64, t: f64) -> Result<f64> {
    check_argument(lambda, t)?;
    if lambda == 0.0 {
        return Ok(chebyshev(n, t));
    }
    Ok(normalized_unchecked(n, lambda, t))
}

/// Normalized recurrence `R_{k+1} = (2(k + lambda) t R_k - k R_{k-1}) / (k + 2 lambda)`.
#[inline]
pub(crate) fn normalized_unchecked(n: usize, lambda: f64, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = t;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda) * t * cur - kf * prev) / (kf + 2.0 * lambda);
        prev = cur;
        cur = next;
    }
    cur
}

/// `R_n^lambda(t)` for the sphere described by `ctx`.
pub fn gegenbauer_normalized(n: usize, ctx: &SphereContext, t: f64) -> Result<f64> {
    normalized_eval(n, ctx.lambda(), t)
}

/// Fills `out[k] = R_k^lambda(t)` for `k = 0..out.len()`.
pub fn normalized_sequence(lambda: f64, t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = t;
    if lambda == 0.0 {
        for k in 1..out.len() - 1 {
            out[k + 1] = 2.0 * t * out[k] - out[k - 1];
        }
    } else {
        for k in 1..out.len() - 1 {
            let kf = k as f64;
            out[k + 1] = (2.0 * (kf + lambda) * t * out[k] - kf * out[k - 1]) / (kf + 2.0 * lambda);
        }
    }
}

/// Fills `out[k] = R_k^lambda(cos theta)`. On the circle the values are generated by
/// rotation, which keeps `cos(k theta)` accurate for large `k`.
pub fn normalized_sequence_theta(lambda: f64, theta: f64, out: &mut [f64]) {
    if lambda == 0.0 {
        let (s, c) = theta.sin_cos();
        let (mut ck, mut sk) = (1.0, 0.0);
        for v in out.iter_mut() {
            *v = ck;
            let next_c = ck * c - sk * s;
            sk = sk * c + ck * s;
            ck = next_c;
        }
    } else {
        normalized_sequence(lambda, theta.cos(), out);
    }
}

fn binomial_u128(m: u128, k: u128) -> Option<u128> {
    if k > m {
        return Some(0);
    }
    let k = k.min(m - k);
    let mut r: u128 = 1;
    for i in 1..=k {
        r = r.checked_mul(m - k + i)? / i;
    }
    Some(r)
}

/// Dimension of the space of degree-`n` spherical harmonics on `S^d`.
///
/// Panics if the dimension does not fit in a `u64`.
pub fn harmonic_dim(n: usize, ctx: &SphereContext) -> u64 {
    let d = ctx.d();
    if d == 1 {
        return if n == 0 { 1 } else { 2 };
    }
    let (n, d) = (n as u128, d as u128);
    let hi = binomial_u128(n + d, d).expect("harmonic dimension overflow");
    let lo = if n >= 2 {
        binomial_u128(n + d - 2, d).expect("harmonic dimension overflow")
    } else {
        0
    };
    u64::try_from(hi - lo).expect("harmonic dimension overflow")
}

/// Zonal kernel `(n + lambda)/lambda * C_n^lambda(t)`, with the circle limit `2 T_n`.
pub fn zonal_eval(n: usize, ctx: &SphereContext, t: f64) -> Result<f64> {
    let r = gegenbauer_normalized(n, ctx, t)?;
    Ok(harmonic_dim(n, ctx) as f64 * r)
}

/// Fills `out[k]` with the zonal kernel of degree `k` at `t`.
pub fn zonal_sequence(ctx: &SphereContext, t: f64, out: &mut [f64]) {
    normalized_sequence(ctx.lambda(), t, out);
    for (k, v) in out.iter_mut().enumerate() {
        *v *= harmonic_dim(k, ctx) as f64;
    }
}

/// Harmonic dimensions `a_0, ..., a_kmax` as floats.
pub fn harmonic_dims(ctx: &SphereContext, kmax: usize) -> Vec<f64> {
    (0..=kmax).map(|k| harmonic_dim(k, ctx) as f64).collect()
}

/// A degree-`n` zonal kernel on a fixed sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonalKernel {
    pub degree: usize,
    pub context: SphereContext,
}

impl ZonalKernel {
    pub fn new(degree: usize, context: SphereContext) -> Self {
        Self { degree, context }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        zonal_eval(self.degree, &self.context, t)
    }

    pub fn at_one(&self) -> f64 {
        harmonic_dim(self.degree, &self.context) as f64
    }
}

/// Derivative of `R_n^lambda` expressed through the next index:
/// `n (n + 2 lambda) / (2 lambda + 1) * R_{n-1}^{lambda+1}(t)`.
pub fn normalized_derivative(n: usize, lambda: f64, t: f64) -> Result<f64> {
    check_argument(lambda, t)?;
    if n == 0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let c = nf * (nf + 2.0 * lambda) / (2.0 * lambda + 1.0);
    Ok(c * normalized_unchecked(n - 1, lambda + 1.0, t))
}

/// Connection coefficient `alpha_{k,n}^{lambda,mu}` in
/// `sin^{2 lambda} R_n^lambda(cos) = sum_k alpha_{k,n} R_{n+2k}^mu(cos) sin^{2 mu}`.
/// Requires `0 < lambda < mu < 2 lambda + 1`.
pub fn gegenbauer_connection(k: usize, n: usize, lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < mu && mu < 2.0 * lambda + 1.0) {
        return domain(format!(
            "connection coefficients need 0 < lambda < mu < 2 lambda + 1, got lambda = {lambda}, mu = {mu}"
        ));
    }
    let (kf, nf) = (k as f64, n as f64);
    let log = ln_gamma(2.0 * lambda) + ln_gamma(mu) + 2.0 * (mu - lambda) * 2f64.ln()
        + (nf + 2.0 * kf + mu).ln()
        + ln_gamma(nf + kf + mu)
        + ln_gamma(kf + mu - lambda)
        - ln_gamma(2.0 * mu)
        - ln_gamma(mu - lambda)
        - ln_gamma(lambda)
        - ln_gamma(kf + 1.0)
        - ln_gamma(nf + kf + lambda + 1.0);
    Ok(log.exp())
}

/// Cesaro numbers ratio `A_{n-k}^order / A_n^order` for `k = 0..=n`, where
/// `A_j^order = Gamma(j + order + 1) / (Gamma(j + 1) Gamma(order + 1))`.
pub fn cesaro_weights(n: usize, order: f64) -> Vec<f64> {
    let nf = n as f64;
    let log_an = ln_gamma(nf + order + 1.0) - ln_gamma(nf + 1.0);
    (0..=n)
        .map(|k| {
            let j = (n - k) as f64;
            (ln_gamma(j + order + 1.0) - ln_gamma(j + 1.0) - log_an).exp()
        })
        .collect()
}

/// Cesaro kernel of order `d + 1`: `K_n(t) = sum_k A_{n-k}^{d+1}/A_n^{d+1} * zonal_k(t)`.
pub fn cesaro_kernel(n: usize, ctx: &SphereContext, t: f64) -> Result<f64> {
    check_argument(ctx.lambda(), t)?;
    let weights = cesaro_weights(n, ctx.d() as f64 + 1.0);
    let mut zonal = vec![0.0; n + 1];
    zonal_sequence(ctx, t, &mut zonal);
    Ok(weights.iter().zip(&zonal).map(|(w, z)| w * z).sum())
}
