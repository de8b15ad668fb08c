//! Truncated Maclaurin series in `t` and the series route to Gegenbauer coefficients.
//!
//! With `A(t) = pi/2 - arccos t` and `u = A / (pi/2 + eps)`, the geodesic potentials are
//! `(eps + arccos t)^delta = (pi/2 + eps)^delta (1 - u)^delta` and
//! `log(pi / (eps + arccos t)) = log(pi / (pi/2 + eps)) - log(1 - u)`.
//! Because `u` has no constant term, composing the outer series up to order `K` gives the
//! coefficients up to `t^K` exactly (no outer truncation error).

use crate::coefficients::PotentialSpec;
use crate::error::{domain, Error, Result};
use crate::quadrature::gauss_jacobi_rule;
use crate::specfun::{gegenbauer_eval, ln_gamma, SphereContext};
use std::f64::consts::PI;

/// Coefficients `c_0..c_K` of a polynomial truncated at degree `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub coefficients: Vec<f64>,
}

impl PowerSeries {
    pub fn zero(order: usize) -> Self {
        Self { coefficients: vec![0.0; order + 1] }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coefficients[0] = c;
        s
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.coefficients.get(k).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self {
            coefficients: (0..=k).map(|i| self.coefficients[i] + other.coefficients[i]).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { coefficients: self.coefficients.iter().map(|x| c * x).collect() }
    }

    /// Product truncated at the smaller of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let mut out = vec![0.0; k + 1];
        for (i, &a) in self.coefficients.iter().enumerate().take(k + 1) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coefficients.iter().enumerate().take(k + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Self { coefficients: out }
    }

    /// `outer(self(t))` by Horner's scheme; requires a vanishing constant term so the result
    /// is exact to the common order.
    pub fn compose(&self, outer: &[f64]) -> Result<Self> {
        if self.coefficients[0] != 0.0 {
            return domain("inner series of a composition must have zero constant term");
        }
        let k = self.order();
        let mut acc = PowerSeries::constant(outer.last().copied().unwrap_or(0.0), k);
        for &b in outer.iter().rev().skip(1) {
            acc = acc.mul(self);
            acc.coefficients[0] += b;
        }
        Ok(acc)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

/// Series of `A(t) = arcsin t = pi/2 - arccos t` to order `K`; the coefficient of
/// `t^(2n+1)` is `binom(2n, n) / (4^n (2n + 1)) = Gamma(n + 1/2) / (sqrt(pi) n! (2n + 1))`.
pub fn arcsin_series(order: usize) -> Result<PowerSeries> {
    if order < 1 {
        return domain("arccos series needs order >= 1");
    }
    let mut s = PowerSeries::zero(order);
    let half_ln_pi = 0.5 * PI.ln();
    for k in (1..=order).step_by(2) {
        let n = ((k - 1) / 2) as f64;
        let log = ln_gamma(n + 0.5) - half_ln_pi - ln_gamma(n + 1.0) - (2.0 * n + 1.0).ln();
        s.coefficients[k] = log.exp();
    }
    Ok(s)
}

/// Coefficients of `(1 - u)^delta` in powers of `u`: `(-delta)_j / j!`.
fn binomial_outer(delta: f64, order: usize) -> Vec<f64> {
    let mut b = Vec::with_capacity(order + 1);
    b.push(1.0);
    for j in 1..=order {
        let prev = b[j - 1];
        b.push(prev * (j as f64 - 1.0 - delta) / j as f64);
    }
    b
}

/// Orders up to this use Horner composition; larger orders use the `O(K^2)` power and
/// logarithm recurrences.
pub const HORNER_MAX_ORDER: usize = 256;

fn validate_series_spec(spec: &PotentialSpec) -> Result<(f64, Option<f64>)> {
    match *spec {
        PotentialSpec::GeodesicPower { delta, epsilon } => {
            if !(0.0..1.0).contains(&epsilon) {
                return domain(format!("epsilon must lie in [0, 1), got {epsilon}"));
            }
            if delta == 0.0 || !delta.is_finite() {
                return domain("geodesic exponent must be finite and nonzero");
            }
            Ok((epsilon, Some(delta)))
        }
        PotentialSpec::Logarithmic { epsilon } => {
            if !(0.0..1.0).contains(&epsilon) {
                return domain(format!("epsilon must lie in [0, 1), got {epsilon}"));
            }
            Ok((epsilon, None))
        }
        _ => Err(Error::Unsupported(
            "Maclaurin series are available for geodesic power and logarithmic potentials".into(),
        )),
    }
}

/// Maclaurin coefficients of the potential up to `t^K`.
pub fn potential_series(spec: &PotentialSpec, order: usize) -> Result<PowerSeries> {
    if order <= HORNER_MAX_ORDER {
        potential_series_horner(spec, order)
    } else {
        potential_series_recurrence(spec, order)
    }
}

/// Composition of the outer binomial or logarithmic series with `u = A / (pi/2 + eps)`.
pub fn potential_series_horner(spec: &PotentialSpec, order: usize) -> Result<PowerSeries> {
    let (epsilon, delta) = validate_series_spec(spec)?;
    let order = order.max(1);
    let g0 = 0.5 * PI + epsilon;
    let u = arcsin_series(order)?.scale(1.0 / g0);
    match delta {
        Some(delta) => Ok(u.compose(&binomial_outer(delta, order))?.scale(g0.powf(delta))),
        None => {
            let mut outer = vec![0.0; order + 1];
            outer[0] = (PI / g0).ln();
            for (j, v) in outer.iter_mut().enumerate().skip(1) {
                *v = 1.0 / j as f64;
            }
            u.compose(&outer)
        }
    }
}

/// Same coefficients via the recurrences for `g^delta` and `log g` with
/// `g(t) = pi/2 + eps - A(t)`:
/// `k g_0 f_k = sum_{j=1}^k ((delta + 1) j - k) g_j f_{k-j}` and
/// `g_0 h_k = g_k - (1/k) sum_{j=1}^{k-1} j h_j g_{k-j}`.
pub fn potential_series_recurrence(spec: &PotentialSpec, order: usize) -> Result<PowerSeries> {
    let (epsilon, delta) = validate_series_spec(spec)?;
    let order = order.max(1);
    let a = arcsin_series(order)?;
    let g0 = 0.5 * PI + epsilon;
    let g: Vec<f64> = (0..=order)
        .map(|k| if k == 0 { g0 } else { -a.coefficients[k] })
        .collect();
    let mut f = vec![0.0; order + 1];
    match delta {
        Some(delta) => {
            f[0] = g0.powf(delta);
            for k in 1..=order {
                let mut acc = 0.0;
                for j in (1..=k).step_by(2) {
                    acc += ((delta + 1.0) * j as f64 - k as f64) * g[j] * f[k - j];
                }
                f[k] = acc / (k as f64 * g0);
            }
        }
        None => {
            // f = log(pi) - log(g)
            let mut h = vec![0.0; order + 1];
            h[0] = g0.ln();
            for k in 1..=order {
                let mut acc = 0.0;
                for j in 1..k {
                    acc += j as f64 * h[j] * g[k - j];
                }
                h[k] = (g[k] - acc / k as f64) / g0;
            }
            f[0] = PI.ln() - h[0];
            for k in 1..=order {
                f[k] = -h[k];
            }
        }
    }
    Ok(PowerSeries { coefficients: f })
}

/// `int t^k C_n^lambda(t) (1 - t^2)^(lambda - 1/2) dt` (Chebyshev `T_n` on the circle) by an
/// exact Gauss rule with `(k + n)/2 + 1` nodes.
pub fn moment_integral(k: usize, n: usize, ctx: &SphereContext) -> Result<f64> {
    let lambda = ctx.lambda();
    let rule = gauss_jacobi_rule(lambda, (k + n) / 2 + 1)?;
    let mut total = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        total += w * x.powi(k as i32) * gegenbauer_eval(n, lambda, x)?;
    }
    Ok(total)
}

/// Closed form of `int t^k R_n^lambda(t) (1 - t^2)^(lambda - 1/2) dt`: zero unless `k >= n`
/// with `k - n` even, and then positive. Evaluated in log space.
pub fn normalized_moment(k: usize, n: usize, lambda: f64) -> f64 {
    if k < n || (k - n) % 2 == 1 {
        return 0.0;
    }
    let j = ((k - n) / 2) as f64;
    let (kf, nf) = (k as f64, n as f64);
    if n == 0 {
        return (ln_gamma(j + 0.5) + ln_gamma(lambda + 0.5) - ln_gamma(j + lambda + 1.0)).exp();
    }
    let ln2 = 2f64.ln();
    let log = nf * ln2 + ln_gamma(nf + lambda) - ln_gamma(2.0 * nf + 2.0 * lambda)
        + ln_gamma(lambda + 0.5)
        + (2.0 * lambda - 1.0) * ln2
        - 0.5 * PI.ln()
        + ln_gamma(kf + 1.0)
        - ln_gamma(2.0 * j + 1.0)
        + ln_gamma(j + 0.5)
        + ln_gamma(nf + lambda + 0.5)
        - ln_gamma(nf + j + lambda + 1.0);
    log.exp()
}

/// Result of the series route for one coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesCoefficient {
    /// Prefactor times `sum_{k <= K} a_k int t^k R_n w`.
    pub value: f64,
    /// Bound on the neglected tail; infinite when `F(1)` is infinite.
    pub tail_bound: f64,
    /// Whether every retained and neglected term has the sign of `value`.
    pub same_sign_terms: bool,
}

impl SeriesCoefficient {
    /// Sign of the exact coefficient, if the partial sum and tail bound determine it.
    pub fn certified_sign(&self) -> Option<f64> {
        if self.value != 0.0 && (self.same_sign_terms || self.tail_bound < self.value.abs()) {
            Some(self.value.signum())
        } else {
            None
        }
    }
}

/// Series route to the Gegenbauer coefficients of one potential, sharing one Maclaurin
/// expansion across degrees.
#[derive(Debug, Clone)]
pub struct SeriesOracle {
    ctx: SphereContext,
    series: PowerSeries,
    value_at_one: f64,
    prefactor: f64,
}

impl SeriesOracle {
    pub fn new(spec: &PotentialSpec, ctx: &SphereContext, order: usize) -> Result<Self> {
        let series = potential_series(spec, order)?;
        Ok(Self {
            ctx: *ctx,
            series,
            value_at_one: spec.value_at_one(ctx),
            prefactor: ctx.prefactor(),
        })
    }

    pub fn series(&self) -> &PowerSeries {
        &self.series
    }

    fn partial(&self, n: usize, order: usize) -> f64 {
        let lambda = self.ctx.lambda();
        let mut sum = 0.0;
        for k in (n..=order).step_by(2) {
            sum += self.series.coefficients[k] * normalized_moment(k, n, lambda);
        }
        self.prefactor * sum
    }

    /// Partial sum to order `K` with a certified tail bound.
    ///
    /// All coefficients `a_k`, `k >= 1`, of the supported potentials share one sign, so
    /// `sum_{k > K} |a_k| = |F(1) - sum_{k <= K} a_k|`, and the moments beyond `K` are bounded
    /// by their largest value.
    pub fn coefficient(&self, n: usize, order: usize) -> Result<SeriesCoefficient> {
        if order < n || order > self.series.order() {
            return domain(format!(
                "series order {order} must lie in [n, {}] (n = {n})",
                self.series.order()
            ));
        }
        let lambda = self.ctx.lambda();
        let value = self.partial(n, order);
        let a = &self.series.coefficients;
        let tail_sign = a[1..].iter().find(|c| **c != 0.0).map(|c| c.signum()).unwrap_or(0.0);
        let uniform = a[1..].iter().all(|c| *c == 0.0 || c.signum() == tail_sign);
        let mut max_moment = 0.0f64;
        let mut k = order + 1;
        if (k - n) % 2 == 1 {
            k += 1;
        }
        loop {
            let m = normalized_moment(k, n, lambda);
            let next = normalized_moment(k + 2, n, lambda);
            max_moment = max_moment.max(m);
            if next <= m {
                break;
            }
            k += 2;
        }
        let retained: f64 = a[..=order].iter().sum();
        let tail_bound = if uniform {
            self.prefactor * max_moment * (self.value_at_one - retained).abs()
        } else {
            f64::INFINITY
        };
        // the k = 0 term only enters for n = 0
        let same_sign_terms = uniform && (n > 0 || a[0].signum() == tail_sign);
        let out = SeriesCoefficient { value, tail_bound, same_sign_terms };
        if out.certified_sign().is_none() {
            return Err(Error::Certification { partial: value, tail_bound });
        }
        Ok(out)
    }

    /// Richardson-extrapolated limit of the partial sums over `k = n + 2j`, `j <= J0 2^i`,
    /// `i = 0..=levels`. The tail after `J` terms expands in powers `J^-(1 + lambda + m)`,
    /// `m = 0, 1, ...`. Returns the estimate and the size of the last correction.
    pub fn extrapolated(&self, n: usize, base_terms: usize, levels: usize) -> Result<(f64, f64)> {
        let top = n + 2 * (base_terms << levels);
        if top > self.series.order() || base_terms < 2 {
            return domain(format!("series order {} is below the required {top}", self.series.order()));
        }
        let lambda = self.ctx.lambda();
        let mut table: Vec<f64> = (0..=levels)
            .map(|i| self.partial(n, n + 2 * (base_terms << i)))
            .collect();
        let mut last_change = f64::INFINITY;
        for m in 0..levels {
            let ratio = 2f64.powf(1.0 + lambda + m as f64);
            let next: Vec<f64> = table.windows(2).map(|w| (ratio * w[1] - w[0]) / (ratio - 1.0)).collect();
            last_change = (next[next.len() - 1] - table[table.len() - 1]).abs();
            table = next;
        }
        Ok((table[0], last_change))
    }
}

/// One-shot series-route coefficient with certified tail bound.
pub fn coefficient_via_series(
    spec: &PotentialSpec,
    n: usize,
    ctx: &SphereContext,
    order: usize,
) -> Result<SeriesCoefficient> {
    SeriesOracle::new(spec, ctx, order)?.coefficient(n, order)
}
