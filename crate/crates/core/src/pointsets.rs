//! Point-set generators, equal-area partitions of `S^1` and `S^2`, and Riemannian gradient
//! optimization of discrete geodesic energies.

use crate::coefficients::PotentialSpec;
use crate::energy::{dot, rho, PointSet, COINCIDENCE_THRESHOLD};
use crate::error::{domain, Error, Result};
use crate::specfun::SphereContext;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    RandomUniform,
    Fibonacci,
    EqualSpacedCircle,
    EqualAreaCenters,
    SymmetricRandom,
}

fn random_coords(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n {
        loop {
            let p: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                coords.extend(p.iter().map(|x| x / norm));
                break;
            }
        }
    }
    coords
}

/// Deterministic point set of the given kind.
pub fn generate(kind: GeneratorKind, n: usize, ctx: &SphereContext, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return domain("point count must be at least 1");
    }
    let d = ctx.d();
    let dim = d + 1;
    match kind {
        GeneratorKind::RandomUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            PointSet::normalized(d, random_coords(n, dim, &mut rng))
        }
        GeneratorKind::SymmetricRandom => {
            if n % 2 == 1 {
                return domain("symmetric point sets need an even count");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(PointSet::normalized(d, random_coords(n / 2, dim, &mut rng))?.with_antipodes())
        }
        GeneratorKind::Fibonacci => {
            if d != 2 {
                return Err(Error::Unsupported("Fibonacci points are defined on S^2".into()));
            }
            let golden_angle = PI * (3.0 - 5f64.sqrt());
            let mut coords = Vec::with_capacity(3 * n);
            for i in 0..n {
                let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden_angle * i as f64;
                coords.extend([r * phi.cos(), r * phi.sin(), z]);
            }
            PointSet::normalized(2, coords)
        }
        GeneratorKind::EqualSpacedCircle => {
            if d != 1 {
                return Err(Error::Unsupported("equally spaced points are defined on S^1".into()));
            }
            let coords = (0..n)
                .flat_map(|i| {
                    let a = 2.0 * PI * i as f64 / n as f64;
                    [a.cos(), a.sin()]
                })
                .collect();
            PointSet::normalized(1, coords)
        }
        GeneratorKind::EqualAreaCenters => {
            let part = equal_area_partition(n, ctx)?;
            let coords = part.cells.iter().flat_map(|c| c.center.iter().copied()).collect();
            PointSet::normalized(d, coords)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    /// Normalized measure of the cell.
    pub area: f64,
    pub center: Vec<f64>,
    /// Upper bound on the geodesic diameter.
    pub diameter_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualAreaPartition {
    pub d: usize,
    pub cells: Vec<Cell>,
    pub max_diameter: f64,
    /// `max_diameter * N^(1/d)`.
    pub diameter_constant: f64,
}

/// Normalized measure of the polar cap of angular radius `theta` on `S^2`.
fn cap_area(theta: f64) -> f64 {
    0.5 * (1.0 - theta.cos())
}

fn cap_radius(area: f64) -> f64 {
    (1.0 - 2.0 * area).clamp(-1.0, 1.0).acos()
}

fn from_spherical(theta: f64, phi: f64) -> Vec<f64> {
    vec![theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Partition of `S^1` into equal arcs or of `S^2` into two polar caps and zonal collars
/// split into equal-longitude cells, with per-collar counts rounded so the total is `N`.
pub fn equal_area_partition(n: usize, ctx: &SphereContext) -> Result<EqualAreaPartition> {
    if n == 0 {
        return domain("partition needs N >= 1");
    }
    let d = ctx.d();
    let nf = n as f64;
    let cells = match d {
        1 => (0..n)
            .map(|i| {
                let mid = 2.0 * PI * (i as f64 + 0.5) / nf;
                Cell {
                    area: 1.0 / nf,
                    center: vec![mid.cos(), mid.sin()],
                    diameter_bound: (2.0 * PI / nf).min(PI),
                }
            })
            .collect(),
        2 => sphere_cells(n),
        _ => return Err(Error::Unsupported("equal-area partitions are implemented for d in {1, 2}".into())),
    };
    let max_diameter = cells.iter().map(|c: &Cell| c.diameter_bound).fold(0.0, f64::max);
    Ok(EqualAreaPartition { d, cells, max_diameter, diameter_constant: max_diameter * nf.powf(1.0 / d as f64) })
}

/// Geodesic diameter bound of the cell `[top, bottom] x [0, dphi]` in (colatitude,
/// longitude). For a cell without antipodal points the farthest pair lies on the boundary,
/// so the largest distance between boundary samples plus the sample spacing bounds it.
fn collar_cell_diameter(top: f64, bottom: f64, dphi: f64) -> f64 {
    const SAMPLES: usize = 32;
    let s = SAMPLES as f64;
    let mut boundary = Vec::with_capacity(4 * (SAMPLES + 1));
    for k in 0..=SAMPLES {
        let u = k as f64 / s;
        let theta = top + (bottom - top) * u;
        boundary.push(from_spherical(theta, 0.0));
        boundary.push(from_spherical(theta, dphi));
        boundary.push(from_spherical(top, dphi * u));
        boundary.push(from_spherical(bottom, dphi * u));
    }
    let mut widest = 0.0f64;
    for (i, x) in boundary.iter().enumerate() {
        for y in &boundary[i + 1..] {
            widest = widest.max(rho(x, y));
        }
    }
    let parallel = if top <= 0.5 * PI && bottom >= 0.5 * PI { 1.0 } else { top.sin().max(bottom.sin()) };
    let spacing = ((bottom - top) / s).max(parallel * dphi / s);
    (widest + spacing).min(PI)
}

fn sphere_cells(n: usize) -> Vec<Cell> {
    let nf = n as f64;
    if n == 1 {
        return vec![Cell { area: 1.0, center: vec![0.0, 0.0, 1.0], diameter_bound: PI }];
    }
    if n == 2 {
        return vec![
            Cell { area: 0.5, center: vec![0.0, 0.0, 1.0], diameter_bound: PI },
            Cell { area: 0.5, center: vec![0.0, 0.0, -1.0], diameter_bound: PI },
        ];
    }
    let polar = cap_radius(1.0 / nf);
    let ideal = (4.0 * PI / nf).sqrt();
    let collars = (((PI - 2.0 * polar) / ideal).round() as usize).max(1);
    let fitting = (PI - 2.0 * polar) / collars as f64;
    let mut counts = Vec::with_capacity(collars);
    let mut carry = 0.0;
    for i in 1..=collars {
        let lo = polar + (i - 1) as f64 * fitting;
        let hi = polar + i as f64 * fitting;
        let ideal_count = (cap_area(hi) - cap_area(lo)) * nf;
        let m = (ideal_count + carry).round().max(1.0);
        carry += ideal_count - m;
        counts.push(m as usize);
    }
    // the rounding carry guarantees the total; adjust the last collar if rounding drifted
    let assigned: usize = counts.iter().sum();
    let last = counts.len() - 1;
    counts[last] = (counts[last] + (n - 2)).saturating_sub(assigned).max(1);
    let mut cells = Vec::with_capacity(n);
    cells.push(Cell { area: 1.0 / nf, center: vec![0.0, 0.0, 1.0], diameter_bound: 2.0 * polar });
    let mut done = 1usize;
    let mut top = polar;
    for &m in &counts {
        let bottom = cap_radius((done + m) as f64 / nf);
        let area = (cap_area(bottom) - cap_area(top)) / m as f64;
        let mid_theta = cap_radius(0.5 * (cap_area(top) + cap_area(bottom)));
        let dphi = 2.0 * PI / m as f64;
        let diameter = collar_cell_diameter(top, bottom, dphi);
        for k in 0..m {
            let phi = (k as f64 + 0.5) * dphi;
            cells.push(Cell { area, center: from_spherical(mid_theta, phi), diameter_bound: diameter });
        }
        done += m;
        top = bottom;
    }
    cells.push(Cell { area: 1.0 / nf, center: vec![0.0, 0.0, -1.0], diameter_bound: 2.0 * polar });
    cells
}

/// Settings for [`optimize_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    pub initial_step: f64,
    /// Step reduction factor in the backtracking line search.
    pub backtrack: f64,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    /// Stop when the Riemannian gradient norm falls below this.
    pub grad_tol: f64,
    /// Inner products with `|x . y| > 1 - clamp_margin` are treated as endpoint cases.
    pub clamp_margin: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            initial_step: 1e-2,
            backtrack: 0.5,
            armijo: 1e-4,
            grad_tol: 1e-10,
            clamp_margin: 1e-12,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = self.max_iterations > 0
            && self.initial_step > 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.grad_tol > 0.0;
        if !positive {
            return domain("optimizer options must be positive, with backtrack and armijo in (0, 1)");
        }
        if !(self.clamp_margin > 0.0 && self.clamp_margin <= 1e-6) {
            return domain("clamp margin must lie in (0, 1e-6]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub energies: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub final_energy: f64,
    pub final_grad_norm: f64,
    pub converged: bool,
    /// `true` for supremum problems (`delta > 0`).
    pub maximize: bool,
}

/// `d/drho` of the potential as a function of the geodesic distance.
fn potential_derivative(spec: &PotentialSpec, r: f64) -> f64 {
    match *spec {
        PotentialSpec::GeodesicPower { delta, epsilon } => delta * (epsilon + r).powf(delta - 1.0),
        PotentialSpec::Logarithmic { epsilon } => -1.0 / (epsilon + r),
        PotentialSpec::CenteredGeodesic { delta } => -delta * r.powf(delta - 1.0),
        _ => unreachable!("checked by optimize_energy"),
    }
}

struct Evaluation {
    energy: f64,
    /// Riemannian gradient of the energy, one tangent vector per point.
    gradient: Vec<f64>,
    min_distance: f64,
}

/// Energy, Riemannian gradient and minimum pairwise distance. Each row is handled by one
/// task and rows are combined in order, so results do not depend on the thread count.
fn evaluate(z: &PointSet, spec: &PotentialSpec, ctx: &SphereContext, margin: f64) -> Result<Evaluation> {
    let n = z.len();
    let dim = z.ambient();
    let singular = !spec.value_at_one(ctx).is_finite();
    let rows: Vec<(f64, Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = z.point(i);
            let mut energy = 0.0;
            let mut grad = vec![0.0; dim];
            let mut min_d = f64::INFINITY;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let y = z.point(j);
                let t = dot(x, y);
                if singular && t > COINCIDENCE_THRESHOLD.min(1.0 - margin) {
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    return Err(Error::SingularPair { i: a, j: b, inner: t });
                }
                let r = rho(x, y);
                min_d = min_d.min(r);
                if j > i {
                    energy += spec.eval_theta(ctx, r);
                }
                if t.abs() > 1.0 - margin {
                    // the direction of steepest change is undefined at the endpoints
                    continue;
                }
                // unit tangent at x pointing toward y; moving along it decreases rho
                let mut norm = 0.0;
                let mut tangent = vec![0.0; dim];
                for k in 0..dim {
                    tangent[k] = y[k] - t * x[k];
                    norm += tangent[k] * tangent[k];
                }
                let norm = norm.sqrt();
                if norm == 0.0 {
                    continue;
                }
                let coef = -potential_derivative(spec, r) / norm;
                for k in 0..dim {
                    grad[k] += coef * tangent[k];
                }
            }
            Ok((energy, grad, min_d))
        })
        .collect::<Result<_>>()?;
    let mut energy = 0.0;
    let mut gradient = Vec::with_capacity(n * dim);
    let mut min_distance = f64::INFINITY;
    for (e, g, m) in rows {
        energy += e;
        gradient.extend(g);
        min_distance = min_distance.min(m);
    }
    Ok(Evaluation { energy, gradient, min_distance })
}

fn energy_only(z: &PointSet, spec: &PotentialSpec, ctx: &SphereContext) -> Result<f64> {
    crate::energy::discrete_energy(z, spec).or_else(|e| match e {
        Error::SingularPair { .. } => Ok(if spec_is_maximized(spec) { f64::NEG_INFINITY } else { f64::INFINITY }),
        other => {
            let _ = ctx;
            Err(other)
        }
    })
}

fn spec_is_maximized(spec: &PotentialSpec) -> bool {
    matches!(*spec, PotentialSpec::GeodesicPower { delta, .. } if delta > 0.0)
}

/// Riemannian gradient of the diagonal-free energy, for testing and diagnostics.
pub fn energy_gradient(z: &PointSet, spec: &PotentialSpec) -> Result<Vec<f64>> {
    let ctx = z.context();
    Ok(evaluate(z, spec, &ctx, 1e-12)?.gradient)
}

fn check_optimizable(spec: &PotentialSpec, ctx: &SphereContext) -> Result<()> {
    spec.validate_pointwise(ctx)?;
    match *spec {
        PotentialSpec::GeodesicPower { delta, .. } if delta < 1.0 => Ok(()),
        PotentialSpec::Logarithmic { .. } => Ok(()),
        _ => Err(Error::Unsupported(
            "energy optimization supports geodesic powers with delta < 1 and the logarithmic potential".into(),
        )),
    }
}

/// Projected gradient descent (ascent for `delta > 0`) on the product of spheres with
/// renormalization as retraction and Armijo backtracking. The returned set is never worse
/// than the start.
pub fn optimize_energy(z0: &PointSet, spec: &PotentialSpec, opts: &OptimizerOptions) -> Result<(PointSet, OptimizerReport)> {
    opts.validate()?;
    let ctx = z0.context();
    check_optimizable(spec, &ctx)?;
    let maximize = spec_is_maximized(spec);
    let sign = if maximize { -1.0 } else { 1.0 };
    let dim = z0.ambient();
    let n = z0.len();

    let mut z = z0.clone();
    let mut eval = evaluate(&z, spec, &ctx, opts.clamp_margin)?;
    let mut energies = vec![eval.energy];
    let mut grad_norms = Vec::new();
    let mut step = opts.initial_step;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iterations {
        let g = &eval.gradient;
        let gnorm2: f64 = g.iter().map(|x| x * x).sum();
        let gnorm = gnorm2.sqrt();
        grad_norms.push(gnorm);
        if gnorm <= opts.grad_tol {
            converged = true;
            break;
        }
        let max_point_grad = g
            .chunks(dim)
            .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        // keep every point's move below a quarter of the closest separation
        let cap = 0.25 * eval.min_distance.min(PI) / max_point_grad;
        let mut alpha = step.min(cap);
        let current = sign * eval.energy;
        let mut accepted = None;
        while alpha * max_point_grad > 1e-16 {
            let mut coords = z.coords().to_vec();
            for (c, gi) in coords.iter_mut().zip(g) {
                *c -= alpha * sign * gi;
            }
            let trial = PointSet::normalized(z.d(), coords)?;
            let e = energy_only(&trial, spec, &ctx)?;
            if sign * e <= current - opts.armijo * alpha * gnorm2 {
                accepted = Some((trial, alpha));
                break;
            }
            alpha *= opts.backtrack;
        }
        iterations += 1;
        match accepted {
            Some((trial, alpha)) => {
                let next = evaluate(&trial, spec, &ctx, opts.clamp_margin)?;
                let stalled = (next.energy - eval.energy).abs() <= 1e-16 * eval.energy.abs().max(1.0) * n as f64;
                z = trial;
                eval = next;
                energies.push(eval.energy);
                step = 2.0 * alpha;
                if stalled {
                    converged = true;
                    break;
                }
            }
            None => {
                // no decrease is possible at machine precision
                converged = true;
                break;
            }
        }
    }
    let final_grad_norm = eval.gradient.iter().map(|x| x * x).sum::<f64>().sqrt();
    let report = OptimizerReport {
        iterations,
        energies,
        grad_norms,
        final_energy: eval.energy,
        final_grad_norm,
        converged,
        maximize,
    };
    Ok((z, report))
}

/// Runs [`optimize_energy`] from every start in parallel and returns the best result with
/// all reports.
pub fn optimize_multistart(
    starts: &[PointSet],
    spec: &PotentialSpec,
    opts: &OptimizerOptions,
) -> Result<(PointSet, Vec<OptimizerReport>)> {
    if starts.is_empty() {
        return domain("multi-start optimization needs at least one start");
    }
    let runs: Vec<(PointSet, OptimizerReport)> =
        starts.par_iter().map(|z0| optimize_energy(z0, spec, opts)).collect::<Result<_>>()?;
    let maximize = runs[0].1.maximize;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let (ea, eb) = (a.1 .1.final_energy, b.1 .1.final_energy);
            let ord = ea.partial_cmp(&eb).unwrap_or(std::cmp::Ordering::Equal);
            if maximize {
                ord.reverse()
            } else {
                ord
            }
        })
        .map(|(i, _)| i)
        .unwrap();
    let best_set = runs[best].0.clone();
    Ok((best_set, runs.into_iter().map(|r| r.1).collect()))
}
