//! Point sets, discrete energies, energy integrals of measures and spectral moments.

use crate::coefficients::{gegenbauer_coefficient, CoefficientTable, PotentialSpec};
use crate::error::{domain, Error, Result};
use crate::specfun::{harmonic_dim, normalized_sequence, SphereContext};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// `N` unit vectors in `R^{d+1}`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    d: usize,
    coords: Vec<f64>,
}

/// Maximum deviation of a point's norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-12;

impl PointSet {
    /// Builds a point set from flat coordinates, checking that every row has unit norm.
    pub fn from_flat(d: usize, coords: Vec<f64>) -> Result<Self> {
        let dim = d + 1;
        if d == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return domain(format!("need a positive multiple of {dim} coordinates for S^{d}"));
        }
        for (i, p) in coords.chunks(dim).enumerate() {
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return domain(format!("point {i} has norm {norm}, not 1"));
            }
        }
        Ok(Self { d, coords })
    }

    /// Normalizes each row, then builds the set.
    pub fn normalized(d: usize, mut coords: Vec<f64>) -> Result<Self> {
        let dim = d + 1;
        for p in coords.chunks_mut(dim) {
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return domain("cannot normalize a zero or non-finite vector");
            }
            p.iter_mut().for_each(|x| *x /= norm);
        }
        Self::from_flat(d, coords)
    }

    pub fn from_points(d: usize, points: &[Vec<f64>]) -> Result<Self> {
        if points.iter().any(|p| p.len() != d + 1) {
            return domain(format!("every point must have {} coordinates", d + 1));
        }
        Self::from_flat(d, points.concat())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ambient(&self) -> usize {
        self.d + 1
    }

    pub fn len(&self) -> usize {
        self.coords.len() / (self.d + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let dim = self.d + 1;
        &self.coords[i * dim..(i + 1) * dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.d + 1)
    }

    pub fn context(&self) -> SphereContext {
        SphereContext::new(self.d).expect("point sets have d >= 1")
    }

    /// Appends the antipode of every point.
    pub fn with_antipodes(&self) -> Self {
        let mut coords = self.coords.clone();
        coords.extend(self.coords.iter().map(|x| -x));
        Self { d: self.d, coords }
    }

    /// One point per line, `d + 1` whitespace-separated numbers with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in self.iter() {
            let line: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses the text format; blank lines and lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut coords = Vec::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| tok.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            match dim {
                None => dim = Some(row.len()),
                Some(m) if m != row.len() => {
                    return Err(Error::Parse(format!("line {}: expected {m} coordinates, found {}", lineno + 1, row.len())))
                }
                _ => {}
            }
            coords.extend(row);
        }
        let dim = dim.ok_or_else(|| Error::Parse("no points found".into()))?;
        if dim < 2 {
            return Err(Error::Parse("points need at least 2 coordinates".into()));
        }
        Self::from_flat(dim - 1, coords)
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Geodesic distance `arccos(x . y)`, evaluated as `2 atan2(|x - y|, |x + y|)`, which stays
/// accurate near `0` and `pi` where the arccos of a rounded inner product does not.
#[inline]
pub(crate) fn rho(x: &[f64], y: &[f64]) -> f64 {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    2.0 * minus.sqrt().atan2(plus.sqrt())
}

/// Great-circle distance between two unit vectors.
pub fn geodesic_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return domain(format!("dimension mismatch: {} vs {}", x.len(), y.len()));
    }
    Ok(rho(x, y))
}

/// Inner products above this count as coincident points for singular potentials.
pub const COINCIDENCE_THRESHOLD: f64 = 1.0 - 1e-15;

fn singular_at_zero(spec: &PotentialSpec, ctx: &SphereContext) -> bool {
    !spec.value_at_one(ctx).is_finite()
}

/// `I_F(sigma) = c_lambda int_0^pi F(cos theta) sin^{d-1} theta dtheta`.
pub fn uniform_energy(ctx: &SphereContext, spec: &PotentialSpec) -> Result<f64> {
    Ok(gegenbauer_coefficient(spec, 0, ctx)?.value)
}

/// Row sums `sum_{j > i} f(i, j)`, computed in parallel and added in row order so the
/// result does not depend on the number of threads.
pub(crate) fn upper_pair_sum<F>(n: usize, f: F) -> Result<f64>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in i + 1..n {
                s += f(i, j)?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum())
}

/// `E(Z) = sum_{i < j} F(z_i . z_j)`, the diagonal-free discrete energy.
pub fn discrete_energy(z: &PointSet, spec: &PotentialSpec) -> Result<f64> {
    let ctx = z.context();
    spec.validate_pointwise(&ctx)?;
    let singular = singular_at_zero(spec, &ctx);
    upper_pair_sum(z.len(), |i, j| {
        let (x, y) = (z.point(i), z.point(j));
        if singular {
            let inner = dot(x, y);
            if inner > COINCIDENCE_THRESHOLD {
                return Err(Error::SingularPair { i, j, inner });
            }
        }
        Ok(spec.eval_theta(&ctx, rho(x, y)))
    })
}

/// A probability measure on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Uniform,
    /// Empirical measure `N^-1 sum delta_{z_i}`.
    Discrete { points: PointSet },
    /// `(delta_p + delta_{-p}) / 2`; the energy does not depend on `p`.
    TwoPoint,
    /// `(1 + eps Y) d sigma` for an `L^2`-normalized degree-`n` harmonic `Y`.
    PerturbedHarmonic { degree: usize, amplitude: f64 },
}

/// `I_F(mu) = int int F(x . y) dmu dmu`.
///
/// Discrete measures include the diagonal `i = j` terms `F(1)`; potentials that are infinite
/// at `t = 1` are refused (use [`discrete_energy`] instead).
pub fn measure_energy(mu: &MeasureSpec, spec: &PotentialSpec, ctx: &SphereContext) -> Result<f64> {
    spec.validate(ctx)?;
    match mu {
        MeasureSpec::Uniform => uniform_energy(ctx, spec),
        MeasureSpec::TwoPoint => Ok(0.5 * (spec.eval_theta(ctx, 0.0) + spec.eval_theta(ctx, PI))),
        MeasureSpec::PerturbedHarmonic { degree, amplitude } => {
            if *degree == 0 {
                return domain("perturbation degree must be at least 1");
            }
            // the normalized zonal harmonic peaks at sqrt(a_n), so larger amplitudes go negative
            let peak = (harmonic_dim(*degree, ctx) as f64).sqrt();
            if !(amplitude.abs() * peak <= 1.0) {
                return domain(format!("amplitude {amplitude} makes the density negative; need |a| <= {}", 1.0 / peak));
            }
            let base = uniform_energy(ctx, spec)?;
            let fhat = gegenbauer_coefficient(spec, *degree, ctx)?.value;
            Ok(base + amplitude * amplitude * fhat)
        }
        MeasureSpec::Discrete { points } => {
            if points.d() != ctx.d() {
                return domain("point set dimension does not match the sphere");
            }
            let diagonal = spec.value_at_one(ctx);
            if !diagonal.is_finite() {
                return domain("potential is infinite at t = 1; the diagonal-free discrete_energy applies");
            }
            let n = points.len() as f64;
            let off = discrete_energy(points, spec)?;
            Ok((2.0 * off + n * diagonal) / (n * n))
        }
    }
}

/// `I_F(mu_Z) = F^(0) + sum_{n=1}^K F^(n) b_n(Z)` from a coefficient table.
pub fn measure_energy_spectral(z: &PointSet, table: &CoefficientTable) -> Result<f64> {
    let b = spectral_moments(z, table.order(), &table.ctx)?;
    Ok(table.values.iter().zip(&b).map(|(v, b)| v * b).sum())
}

/// `b_n(Z) = N^-2 sum_{i,j} zonal_n(z_i . z_j)`.
pub fn spectral_moment(z: &PointSet, n: usize, ctx: &SphereContext) -> Result<f64> {
    Ok(spectral_moments(z, n, ctx)?[n])
}

/// `b_0(Z), ..., b_K(Z)` in one pass over pairs, `O(N^2 K)`.
pub fn spectral_moments(z: &PointSet, order: usize, ctx: &SphereContext) -> Result<Vec<f64>> {
    if z.d() != ctx.d() {
        return domain("point set dimension does not match the sphere");
    }
    let n = z.len();
    let lambda = ctx.lambda();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; order + 1];
            let mut seq = vec![0.0; order + 1];
            for j in i + 1..n {
                let t = dot(z.point(i), z.point(j)).clamp(-1.0, 1.0);
                normalized_sequence(lambda, t, &mut seq);
                for (a, r) in acc.iter_mut().zip(&seq) {
                    *a += r;
                }
            }
            acc
        })
        .collect();
    let mut sums = vec![0.0; order + 1];
    for row in rows {
        for (s, r) in sums.iter_mut().zip(row) {
            *s += r;
        }
    }
    let nf = n as f64;
    Ok(sums
        .iter()
        .enumerate()
        .map(|(k, s)| harmonic_dim(k, ctx) as f64 * (2.0 * s + nf) / (nf * nf))
        .collect())
}
