//! One-dimensional quadrature: Gauss rules for the Gegenbauer weight
//! `(1 - t^2)^(lambda - 1/2)` and graded rules in the angle `theta = arccos t`.

use crate::error::{domain, Error, Result};
use crate::specfun::{weight_mass, SphereContext};
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights for `int_{-1}^{1} f(t) (1 - t^2)^(lambda - 1/2) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lambda: f64,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Integrals of `f` and `|f|` over `[a, b]` with unit weight; only meaningful for
    /// `lambda = 1/2`.
    fn integrate_interval(&self, a: f64, b: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let (mut v, mut m) = (0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let y = f(mid + half * x);
            v += w * y;
            m += w * y.abs();
        }
        (half * v, half * m)
    }
}

/// Squared off-diagonal entries of the Jacobi matrix of the Gegenbauer weight.
fn recurrence_beta(k: usize, lambda: f64) -> f64 {
    let kf = k as f64;
    if k == 1 {
        // the general formula is 0/0 at lambda = 0; this is its simplified form
        return 1.0 / (2.0 * (1.0 + lambda));
    }
    kf * (kf + 2.0 * lambda - 1.0) / (4.0 * (kf + lambda) * (kf + lambda - 1.0))
}

/// Orthonormal polynomials `p_0..p_{m-1}` summed in square, plus `p_m` and `p_m'`.
fn orthonormal_at(x: f64, m: usize, lambda: f64, mass: f64) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0 / mass.sqrt();
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    let mut sumsq = 0.0;
    let mut b_prev = 0.0;
    for k in 0..m {
        sumsq += p * p;
        let b = recurrence_beta(k + 1, lambda).sqrt();
        let p_next = (x * p - b_prev * p_prev) / b;
        let dp_next = (p + x * dp - b_prev * dp_prev) / b;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        b_prev = b;
    }
    (sumsq, p, dp)
}

fn eigen_nodes(lambda: f64, m: usize) -> Result<Vec<f64>> {
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let b = recurrence_beta(k, lambda).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::try_new(jac, 1e-15, 10_000).ok_or(Error::EigenSolve { m, lambda })?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(nodes)
}

/// Initial guesses for the zeros of `C_m^lambda`, exact for `lambda` in {0, 1}.
fn asymptotic_nodes(lambda: f64, m: usize) -> Vec<f64> {
    let mut nodes: Vec<f64> = (1..=m)
        .map(|k| ((k as f64 + 0.5 * lambda - 0.5) * PI / (m as f64 + lambda)).cos())
        .collect();
    nodes.reverse();
    nodes
}

const EIGEN_MAX_ORDER: usize = 96;

/// Gauss rule with `m` nodes for the weight `(1 - t^2)^(lambda - 1/2)`.
///
/// Nodes come from the Jacobi-matrix eigenvalues (small `m`) or from asymptotic guesses
/// (large `m`), polished by Newton's method on the orthonormal recurrence. Weights are the
/// Christoffel numbers `1 / sum_k p_k(x_i)^2`.
pub fn gauss_jacobi_rule(lambda: f64, m: usize) -> Result<QuadratureRule> {
    if m == 0 {
        return domain("quadrature order must be at least 1");
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("weight index must be finite and >= 0, got {lambda}"));
    }
    if lambda == 0.0 {
        let w = PI / m as f64;
        let mut nodes: Vec<f64> = (1..=m)
            .map(|i| ((2 * i - 1) as f64 * PI / (2 * m) as f64).cos())
            .collect();
        nodes.reverse();
        return Ok(QuadratureRule { nodes, weights: vec![w; m], lambda });
    }
    let mass = weight_mass(lambda);
    let guesses = if m <= EIGEN_MAX_ORDER {
        eigen_nodes(lambda, m)?
    } else {
        asymptotic_nodes(lambda, m)
    };
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for x0 in guesses {
        let mut x = x0;
        for _ in 0..100 {
            let (_, p, dp) = orthonormal_at(x, m, lambda, mass);
            let step = p / dp;
            x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-3) {
                break;
            }
        }
        let (sumsq, _, _) = orthonormal_at(x, m, lambda, mass);
        nodes.push(x);
        weights.push(1.0 / sumsq);
    }
    let ordered = nodes.windows(2).all(|p| p[0] < p[1]);
    let inside = nodes.iter().all(|x| x.abs() < 1.0);
    let total: f64 = weights.iter().sum();
    if !ordered || !inside || (total - mass).abs() > 1e-11 * mass {
        return Err(Error::EigenSolve { m, lambda });
    }
    Ok(QuadratureRule { nodes, weights, lambda })
}

/// Gauss-Legendre rule with `m` nodes on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Result<QuadratureRule> {
    gauss_jacobi_rule(0.5, m)
}

fn legendre_cached(m: usize) -> &'static QuadratureRule {
    static GL16: OnceLock<QuadratureRule> = OnceLock::new();
    static GL24: OnceLock<QuadratureRule> = OnceLock::new();
    let cell = match m {
        16 => &GL16,
        24 => &GL24,
        _ => unreachable!("no cached Gauss-Legendre rule of order {m}"),
    };
    cell.get_or_init(|| gauss_legendre(m).expect("Gauss-Legendre construction"))
}

/// `int f(t) (1 - t^2)^(lambda - 1/2) dt` with an `m`-node Gauss rule.
pub fn integrate_weighted(f: impl Fn(f64) -> f64, lambda: f64, m: usize) -> Result<f64> {
    Ok(gauss_jacobi_rule(lambda, m)?.integrate(f))
}

/// Options for [`integrate_theta_singular`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaOptions {
    /// Absolute tolerance.
    pub tol: f64,
    /// Maximum number of geometric levels toward `theta = 0`.
    pub max_depth: usize,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_depth: 60 }
    }
}

/// Adaptive Gauss-Legendre on `[a, b]`: GL-24 against the sum over both halves.
fn adaptive_panel(g: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let rule = legendre_cached(24);
    let (whole, _) = rule.integrate_interval(a, b, g);
    let mid = 0.5 * (a + b);
    let (left, left_abs) = rule.integrate_interval(a, mid, g);
    let (right, right_abs) = rule.integrate_interval(mid, b, g);
    let halves = left + right;
    // rounding in the sums sets a floor on the attainable tolerance
    let floor = 64.0 * f64::EPSILON * (left_abs + right_abs);
    if (whole - halves).abs() <= tol.max(floor) || (b - a) < 1e-300 {
        return Ok(halves);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence {
            depth: 0,
            partial: halves,
            increment: (whole - halves).abs(),
        });
    }
    Ok(adaptive_panel(g, a, mid, 0.5 * tol, depth - 1)? + adaptive_panel(g, mid, b, 0.5 * tol, depth - 1)?)
}

/// `int_0^pi g(theta) dtheta` for integrands behaving like `theta^(delta + 2 lambda)` at 0.
///
/// Panels `[pi 2^{-j-1}, pi 2^{-j}]` are integrated adaptively. The remaining piece
/// `[0, pi 2^{-J-1}]` is estimated from the ratio of the last two panel contributions,
/// which is exact for a pure power; iteration stops once that estimate settles.
pub fn integrate_theta_singular(
    g: impl Fn(f64) -> f64,
    delta: f64,
    ctx: &SphereContext,
    opts: ThetaOptions,
) -> Result<f64> {
    let floor = -(2.0 * ctx.lambda() + 1.0);
    if !(delta > floor) {
        return domain(format!("integrand theta^{delta} sin^{} is not integrable at 0", 2.0 * ctx.lambda()));
    }
    let panel_tol = 0.1 * opts.tol;
    let mut sum = adaptive_panel(&g, 0.5 * PI, PI, panel_tol, 40)?;
    let mut contributions: Vec<f64> = Vec::new();
    let mut estimates: Vec<f64> = Vec::new();
    let mut hi = 0.5 * PI;
    for level in 1..=opts.max_depth {
        let lo = 0.5 * hi;
        let c = adaptive_panel(&g, lo, hi, panel_tol, 40)?;
        sum += c;
        hi = lo;
        let tail = match contributions.last() {
            Some(&prev) if prev != 0.0 => {
                let r = c / prev;
                if r > 0.0 && r < 1.0 {
                    c * r / (1.0 - r)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        contributions.push(c);
        let est = sum + tail;
        estimates.push(est);
        if level >= 4 {
            let k = estimates.len();
            let d1 = (estimates[k - 1] - estimates[k - 2]).abs();
            let d2 = (estimates[k - 2] - estimates[k - 3]).abs();
            if d1 <= opts.tol && d2 <= opts.tol && tail.abs() <= 1e3 * opts.tol.max(c.abs()) {
                return Ok(est);
            }
        }
    }
    let k = estimates.len();
    Err(Error::QuadratureNonConvergence {
        depth: opts.max_depth,
        partial: estimates[k - 1],
        increment: (estimates[k - 1] - estimates[k - 2]).abs(),
    })
}

/// A fixed composite rule in `theta` on `(0, pi)`, graded geometrically toward `theta = 0`
/// and fine enough to resolve oscillations of frequency `omega`. Every node carries two
/// weights: Gauss-Legendre of orders 24 and 16 on the same panels, so the difference of
/// the two estimates serves as an error indicator.
#[derive(Debug, Clone)]
pub struct ThetaRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub coarse_nodes: Vec<f64>,
    pub coarse_weights: Vec<f64>,
}

impl ThetaRule {
    /// `exponent` is the leading power `p` of the integrand at 0 (with `p > -1`); the grading
    /// depth is chosen so the neglected piece `[0, a]`, of size about `a^(p+1)/(p+1)`, is below
    /// `1e-17` even with a logarithmic factor.
    pub fn graded(exponent: f64, omega: f64) -> Result<Self> {
        if !(exponent > -1.0) {
            return domain(format!("integrand power {exponent} is not integrable at 0"));
        }
        let q = exponent + 1.0;
        let mut depth = 1;
        let mut a = 0.5 * PI;
        while depth < 1000 {
            let neglected = a.powf(q) / q * (1.0 + a.ln().abs());
            if neglected < 1e-17 {
                break;
            }
            a *= 0.5;
            depth += 1;
        }
        let mut panels = vec![(0.5 * PI, PI)];
        let mut hi = 0.5 * PI;
        for _ in 0..depth {
            panels.push((0.5 * hi, hi));
            hi *= 0.5;
        }
        let omega = omega.max(1.0);
        let fine = legendre_cached(24);
        let coarse = legendre_cached(16);
        let mut rule = ThetaRule {
            nodes: Vec::new(),
            weights: Vec::new(),
            coarse_nodes: Vec::new(),
            coarse_weights: Vec::new(),
        };
        for (a, b) in panels {
            let pieces = ((b - a) * omega / 6.0).ceil().max(1.0) as usize;
            let h = (b - a) / pieces as f64;
            for i in 0..pieces {
                let lo = a + i as f64 * h;
                let mid = lo + 0.5 * h;
                for (x, w) in fine.nodes.iter().zip(&fine.weights) {
                    rule.nodes.push(mid + 0.5 * h * x);
                    rule.weights.push(0.5 * h * w);
                }
                for (x, w) in coarse.nodes.iter().zip(&coarse.weights) {
                    rule.coarse_nodes.push(mid + 0.5 * h * x);
                    rule.coarse_weights.push(0.5 * h * w);
                }
            }
        }
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Fine estimate and `|fine - coarse|`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> (f64, f64) {
        let fine: f64 = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum();
        let coarse: f64 = self
            .coarse_nodes
            .iter()
            .zip(&self.coarse_weights)
            .map(|(&x, &w)| w * g(x))
            .sum();
        (fine, (fine - coarse).abs())
    }
}
