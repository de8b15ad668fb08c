//! Experiment runners behind the subcommands. Each returns a report and its auxiliary files.

use crate::config::*;
use crate::report::*;
use georiesz::coefficients::{coefficient_table, decay_exponent, fit_line};
use georiesz::discrepancy::{
    cap_discrepancy, cesaro_demo, discrepancy_bounds_check, stolarsky_check, CapMethod,
};
use georiesz::energy::{discrete_energy, measure_energy, uniform_energy};
use georiesz::pointsets::{generate, optimize_multistart, GeneratorKind, OptimizerOptions};
use georiesz::specfun::harmonic_dim;
use georiesz::{Error, MeasureSpec, PointSet, PotentialSpec, Result, SphereContext};
use serde::Serialize;
use serde_json::{json, Value};
use std::time::Instant;

/// Command-line settings shared by all experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSettings {
    pub seed: u64,
    pub workers: usize,
}

fn finish(
    experiment: &str,
    settings: RunSettings,
    parameters: &impl Serialize,
    cells: Vec<Value>,
    checks: Vec<Check>,
    start: Instant,
    files: Vec<OutputFile>,
) -> Outcome {
    let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
    let report = ExperimentReport {
        experiment: experiment.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: settings.seed,
        workers: settings.workers,
        parameters: serde_json::to_value(parameters).unwrap_or(Value::Null),
        cells,
        checks,
        passed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Outcome { report, files }
}

/// Seed of grid cell `index`.
fn cell_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

pub fn run_coeffs(cfg: &CoeffsConfig, settings: RunSettings) -> Result<Outcome> {
    let start = Instant::now();
    let ctx = SphereContext::new(cfg.d)?;
    cfg.potential.validate(&ctx)?;
    let table = coefficient_table(&cfg.potential, &ctx, cfg.order)?;
    let verdict = table.sign_verdict();
    let check = if verdict.checked > 0 {
        Check::flag(format!("sign law over {} degrees: exceptions", verdict.checked), verdict.exceptions.len() as f64, verdict.passed())
    } else {
        Check::flag("no sign law applies to this potential", 0.0, true)
    };
    let cells = verdict
        .exceptions
        .iter()
        .map(|&n| json!({ "n": n, "value": table.values[n], "abs_err": table.abs_err[n] }))
        .collect();
    let file = OutputFile { name: "coeffs.csv".into(), contents: table.to_columns() };
    Ok(finish("coeffs", settings, cfg, cells, vec![check], start, vec![file]))
}

#[derive(Debug, Clone, Serialize)]
struct GapCell {
    n: usize,
    valid: bool,
    gap: Option<f64>,
    energy: Option<f64>,
    iterations: usize,
    converged_runs: usize,
    runs: usize,
    error: Option<String>,
    bounds: Option<georiesz::discrepancy::BoundsReport>,
}

fn gap_cell(
    cfg: &GapScanConfig,
    ctx: &SphereContext,
    i_sigma: f64,
    n: usize,
    seed: u64,
) -> Result<(f64, f64, usize, usize, usize)> {
    let mut starts = Vec::new();
    for &kind in &cfg.starts {
        match generate(kind, n, ctx, seed) {
            Ok(z) => starts.push(z),
            Err(Error::Unsupported(_)) => {}
            Err(e) => return Err(e),
        }
    }
    for k in 0..cfg.random_starts {
        starts.push(generate(GeneratorKind::RandomUniform, n, ctx, seed.wrapping_add(1 + k as u64) << 16)?);
    }
    if starts.is_empty() {
        return Err(Error::Unsupported("no start configuration is available on this sphere".into()));
    }
    let budget = (cfg.pair_budget / (n as f64 * n as f64)) as usize;
    let iterations = budget.clamp(cfg.min_iterations.min(cfg.optimizer.max_iterations), cfg.optimizer.max_iterations);
    let opts = OptimizerOptions { max_iterations: iterations, ..cfg.optimizer };
    let (best, reports) = optimize_multistart(&starts, &cfg.potential, &opts)?;
    let energy = discrete_energy(&best, &cfg.potential)?;
    let gap = i_sigma - 2.0 * energy / (n as f64 * n as f64);
    let converged = reports.iter().filter(|r| r.converged).count();
    Ok((gap, energy, iterations, converged, reports.len()))
}

pub fn run_gap_scan(cfg: &GapScanConfig, settings: RunSettings) -> Result<Outcome> {
    let start = Instant::now();
    let ctx = SphereContext::new(cfg.d)?;
    cfg.potential.validate(&ctx)?;
    cfg.optimizer.validate()?;
    let expected = match cfg.potential {
        PotentialSpec::GeodesicPower { delta, epsilon } if epsilon == 0.0 && delta < 1.0 => {
            Some(-(1.0 + delta / cfg.d as f64))
        }
        PotentialSpec::Logarithmic { epsilon } if epsilon == 0.0 => None,
        _ => {
            return Err(Error::Unsupported(
                "gap scans need an unregularized geodesic power with delta < 1 or the logarithmic potential".into(),
            ))
        }
    };
    if cfg.sizes.iter().any(|&n| n < 2) {
        return Err(Error::Domain("gap scans need N >= 2".into()));
    }
    let i_sigma = uniform_energy(&ctx, &cfg.potential)?;
    let centered = match cfg.potential {
        PotentialSpec::GeodesicPower { delta, .. } if delta > 0.0 => Some(PotentialSpec::CenteredGeodesic { delta }),
        _ => None,
    };
    let mut cells = Vec::new();
    let mut csv = Csv::new(&["n", "gap", "energy", "iterations", "valid"]);
    for (idx, &n) in cfg.sizes.iter().enumerate() {
        let cell = match gap_cell(cfg, &ctx, i_sigma, n, cell_seed(settings.seed, idx)) {
            Ok((gap, energy, iterations, converged_runs, runs)) => {
                // for delta in (0, 1) the gap equals the discrepancy of the centered potential
                let bounds = match &centered {
                    Some(spec) => {
                        let kmax = (n as f64).powf(1.0 / cfg.d as f64).ceil() as usize;
                        let table = coefficient_table(spec, &ctx, kmax.max(1))?;
                        Some(discrepancy_bounds_check(&table, n, gap)?)
                    }
                    None => None,
                };
                GapCell {
                    n,
                    valid: gap > 0.0 && gap.is_finite(),
                    gap: Some(gap),
                    energy: Some(energy),
                    iterations,
                    converged_runs,
                    runs,
                    error: None,
                    bounds,
                }
            }
            Err(e) => GapCell {
                n,
                valid: false,
                gap: None,
                energy: None,
                iterations: 0,
                converged_runs: 0,
                runs: 0,
                error: Some(e.to_string()),
                bounds: None,
            },
        };
        csv.row(&[
            CsvField::Int(n as u64),
            CsvField::Float(cell.gap.unwrap_or(f64::NAN)),
            CsvField::Float(cell.energy.unwrap_or(f64::NAN)),
            CsvField::Int(cell.iterations as u64),
            CsvField::Text(cell.valid.to_string()),
        ]);
        cells.push(cell);
    }
    let window: Vec<&GapCell> = cells.iter().skip(cfg.fit_skip).filter(|c| c.valid).collect();
    let mut checks = Vec::new();
    if window.len() < 5 {
        checks.push(Check::flag("valid cells in the fit window (need 5)", window.len() as f64, false));
    } else {
        let xs: Vec<f64> = window.iter().map(|c| (c.n as f64).ln()).collect();
        let ys: Vec<f64> = window.iter().map(|c| c.gap.unwrap().ln()).collect();
        let (slope, _, _) = fit_line(&xs, &ys);
        match expected {
            Some(e) => checks.push(Check::within("gap exponent", slope, e, cfg.tolerance)),
            None => {
                let flat = |c: &GapCell| c.gap.unwrap() * c.n as f64 / (c.n as f64).ln();
                let ratio = flat(window[window.len() - 1]) / flat(window[0]);
                let [lo, hi] = cfg.flatness_range;
                checks.push(Check::flag("gap exponent (informational)", slope, true));
                checks.push(Check::flag(
                    format!("flatness ratio of gap N / log N in [{lo}, {hi}]"),
                    ratio,
                    (lo..=hi).contains(&ratio),
                ));
            }
        }
    }
    let cells = cells.iter().map(|c| serde_json::to_value(c).unwrap_or(Value::Null)).collect();
    Ok(finish("gap_scan", settings, cfg, cells, checks, start, vec![csv.finish("gap_scan.csv")]))
}

#[derive(Debug, Clone, Serialize)]
struct MeasureRow {
    label: String,
    /// `None` when the energy is infinite.
    energy: Option<f64>,
    symmetric: bool,
}

/// Regimes of the extremal problem for `int int F dmu dmu`.
enum Regime {
    /// The uniform measure is the unique minimizer.
    UniformMinimizes,
    /// The uniform measure is the unique maximizer.
    UniformMaximizes,
    /// Exactly the centrally symmetric measures maximize, with value `pi/2`.
    Symmetric,
    /// The two-point antipodal measure maximizes.
    TwoPoint,
}

pub fn run_extremizers(cfg: &ExtremizersConfig, settings: RunSettings) -> Result<Outcome> {
    const TOL: f64 = 1e-10;
    let start = Instant::now();
    let ctx = SphereContext::new(cfg.d)?;
    cfg.potential.validate(&ctx)?;
    let regime = match cfg.potential {
        PotentialSpec::GeodesicPower { delta, epsilon } if epsilon == 0.0 => {
            if delta < 0.0 {
                Regime::UniformMinimizes
            } else if delta < 1.0 {
                Regime::UniformMaximizes
            } else if delta == 1.0 {
                Regime::Symmetric
            } else {
                Regime::TwoPoint
            }
        }
        PotentialSpec::Logarithmic { epsilon } if epsilon == 0.0 => Regime::UniformMinimizes,
        _ => return Err(Error::Unsupported("extremizer tables need an unregularized geodesic or log potential".into())),
    };
    let spec = &cfg.potential;
    let diagonal_infinite = !spec.value_at_one(&ctx).is_finite();
    let energy_of = |mu: &MeasureSpec| -> Result<Option<f64>> {
        let singular = matches!(mu, MeasureSpec::Discrete { .. } | MeasureSpec::TwoPoint);
        if diagonal_infinite && singular {
            return Ok(None);
        }
        measure_energy(mu, spec, &ctx).map(Some)
    };
    let uniform = energy_of(&MeasureSpec::Uniform)?.unwrap();
    let mut rows = vec![
        MeasureRow { label: "uniform".into(), energy: Some(uniform), symmetric: true },
        MeasureRow { label: "two_point".into(), energy: energy_of(&MeasureSpec::TwoPoint)?, symmetric: true },
    ];
    for k in 0..cfg.random_count {
        let seed = cell_seed(settings.seed, k);
        let z = generate(GeneratorKind::RandomUniform, cfg.random_size, &ctx, seed)?;
        rows.push(MeasureRow {
            label: format!("random[{k}]"),
            energy: energy_of(&MeasureSpec::Discrete { points: z })?,
            symmetric: false,
        });
        let size = cfg.random_size + cfg.random_size % 2;
        let z = generate(GeneratorKind::SymmetricRandom, size, &ctx, seed)?;
        rows.push(MeasureRow {
            label: format!("symmetric_random[{k}]"),
            energy: energy_of(&MeasureSpec::Discrete { points: z })?,
            symmetric: true,
        });
    }
    for &degree in &cfg.degrees {
        for &fraction in &cfg.amplitudes {
            let amplitude = fraction / (harmonic_dim(degree, &ctx) as f64).sqrt();
            rows.push(MeasureRow {
                label: format!("perturbed_harmonic[n={degree}, a={amplitude:.6}]"),
                energy: energy_of(&MeasureSpec::PerturbedHarmonic { degree, amplitude })?,
                symmetric: degree % 2 == 0,
            });
        }
    }
    let others = || rows.iter().filter(|r| r.label != "uniform");
    let mut checks = Vec::new();
    match regime {
        Regime::UniformMinimizes => {
            let worst = others().map(|r| r.energy.unwrap_or(f64::INFINITY) - uniform).fold(f64::INFINITY, f64::min);
            checks.push(Check::flag("min over alternatives of I(mu) - I(sigma) (> 0)", worst, worst > TOL));
        }
        Regime::UniformMaximizes => {
            let worst = others().map(|r| uniform - r.energy.unwrap_or(f64::NEG_INFINITY)).fold(f64::INFINITY, f64::min);
            checks.push(Check::flag("min over alternatives of I(sigma) - I(mu) (> 0)", worst, worst > TOL));
        }
        Regime::Symmetric => {
            let target = std::f64::consts::FRAC_PI_2;
            let sym_err = rows
                .iter()
                .filter(|r| r.symmetric)
                .map(|r| (r.energy.unwrap() - target).abs())
                .fold(0.0, f64::max);
            checks.push(Check::flag("max |I(mu) - pi/2| over symmetric measures", sym_err, sym_err <= TOL));
            let excess = rows
                .iter()
                .filter(|r| !r.symmetric)
                .map(|r| r.energy.unwrap() - target)
                .fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::flag("max I(mu) - pi/2 over non-symmetric measures (< 0)", excess, excess < -TOL));
        }
        Regime::TwoPoint => {
            let delta = match *spec {
                PotentialSpec::GeodesicPower { delta, .. } => delta,
                _ => unreachable!(),
            };
            let two = rows[1].energy.unwrap();
            let exact = std::f64::consts::PI.powf(delta) / 2.0;
            checks.push(Check::within("two-point energy pi^delta / 2", two, exact, TOL * exact));
            let margin = rows
                .iter()
                .filter(|r| r.label != "two_point")
                .map(|r| two - r.energy.unwrap())
                .fold(f64::INFINITY, f64::min);
            checks.push(Check::flag("min over alternatives of I(two_point) - I(mu) (> 0)", margin, margin > TOL));
        }
    }
    let mut csv = Csv::new(&["measure", "energy", "symmetric"]);
    for r in &rows {
        csv.row(&[
            CsvField::Text(r.label.replace(',', ";")),
            CsvField::Float(r.energy.unwrap_or(f64::INFINITY)),
            CsvField::Text(r.symmetric.to_string()),
        ]);
    }
    let cells = rows.iter().map(|r| serde_json::to_value(r).unwrap_or(Value::Null)).collect();
    Ok(finish("extremizers", settings, cfg, cells, checks, start, vec![csv.finish("extremizers.csv")]))
}

pub fn run_stolarsky(cfg: &StolarskyConfig, settings: RunSettings) -> Result<Outcome> {
    let start = Instant::now();
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for (idx, case) in cfg.cases.iter().enumerate() {
        let ctx = SphereContext::new(case.d)?;
        case.potential.validate(&ctx)?;
        let z = generate(case.generator, case.n_points, &ctx, cell_seed(settings.seed, idx))?;
        let r = stolarsky_check(&z, &case.potential, case.order)?;
        let exact = matches!(&case.potential, PotentialSpec::Spectral { coefficients } if coefficients.len() <= case.order + 1);
        let label = format!("d={} N={} {}", case.d, case.n_points, potential_label(&case.potential));
        let check = if exact {
            Check::flag(format!("{label}: residual < {:e}", cfg.exact_tolerance), r.residual, r.residual < cfg.exact_tolerance)
        } else {
            Check::flag(format!("{label}: residual within bound {:.3e}", r.truncation_bound + r.slack), r.residual, r.passed())
        };
        checks.push(check);
        cells.push(json!({ "case": case, "report": r }));
    }
    Ok(finish("stolarsky", settings, cfg, cells, checks, start, Vec::new()))
}

fn potential_label(spec: &PotentialSpec) -> String {
    match spec {
        PotentialSpec::GeodesicPower { delta, epsilon } => format!("geodesic delta={delta} eps={epsilon}"),
        PotentialSpec::Logarithmic { epsilon } => format!("log eps={epsilon}"),
        PotentialSpec::CenteredGeodesic { delta } => format!("centered delta={delta}"),
        PotentialSpec::CapIndicator { height } => format!("cap t={height}"),
        PotentialSpec::Spectral { coefficients } => format!("spectral K={}", coefficients.len() - 1),
    }
}

pub fn run_cap(cfg: &CapConfig, settings: RunSettings) -> Result<Outcome> {
    let start = Instant::now();
    let ctx = SphereContext::new(cfg.d)?;
    let mut cells = Vec::new();
    let mut csv = Csv::new(&["n", "d_squared", "std_error"]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, &n) in cfg.sizes.iter().enumerate() {
        let z = generate(cfg.generator, n, &ctx, cell_seed(settings.seed, idx))?;
        let method = match cfg.scan_method {
            CapMethod::MonteCarlo { samples, seed } => CapMethod::MonteCarlo { samples, seed: cell_seed(seed, idx) },
            m => m,
        };
        let v = cap_discrepancy(&z, method)?;
        csv.row(&[CsvField::Int(n as u64), CsvField::Float(v.value), CsvField::Float(v.std_error)]);
        cells.push(json!({ "n": n, "d_squared": v.value, "std_error": v.std_error }));
        xs.push((n as f64).ln());
        ys.push(v.value.ln());
    }
    let mut checks = Vec::new();
    if xs.len() >= 2 {
        let (slope, _, _) = fit_line(&xs, &ys);
        checks.push(Check::within("cap discrepancy^2 slope", slope, cfg.expected_slope, cfg.tolerance));
    }
    if let Some(n) = cfg.compare_at {
        let z = generate(cfg.generator, n, &ctx, settings.seed)?;
        let order = cfg.spectral_order.unwrap_or((32.0 * (n as f64).sqrt()).ceil() as usize);
        let spectral = cap_discrepancy(&z, CapMethod::Spectral { order })?;
        let mc = cap_discrepancy(&z, CapMethod::MonteCarlo { samples: cfg.mc_samples, seed: settings.seed })?;
        let combined = (spectral.std_error.powi(2) + mc.std_error.powi(2)).sqrt();
        let z_score = (spectral.value - mc.value).abs() / combined;
        checks.push(Check::flag(
            format!("spectral vs Monte Carlo at N={n}: combined standard errors (<= {})", cfg.sigma_limit),
            z_score,
            z_score <= cfg.sigma_limit,
        ));
        let mut comparison = json!({ "n": n, "spectral": spectral, "spectral_order": order, "monte_carlo": mc });
        if cfg.d == 2 {
            comparison["euclidean_oracle"] = serde_json::to_value(cap_discrepancy(&z, CapMethod::EuclideanOracle)?)
                .unwrap_or(Value::Null);
        }
        cells.push(json!({ "comparison": comparison }));
    }
    if let Some(c) = &cfg.cesaro {
        let z = generate(cfg.generator, c.n_points, &ctx, settings.seed)?;
        let demo = cesaro_demo(&z, c.scale)?;
        let agree = (demo.quadrature - demo.spectral).abs() <= 1e-8 * demo.spectral.abs().max(1e-300);
        checks.push(Check::flag("Cesàro functional bounded away from zero", demo.quadrature, demo.quadrature > 0.0 && agree));
        cells.push(json!({ "cesaro": demo, "n_points": c.n_points }));
    }
    Ok(finish("cap", settings, cfg, cells, checks, start, vec![csv.finish("cap.csv")]))
}

pub fn run_decay(cfg: &DecayConfig, settings: RunSettings) -> Result<Outcome> {
    let start = Instant::now();
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for case in &cfg.cases {
        let ctx = SphereContext::new(case.d)?;
        case.potential.validate(&ctx)?;
        let expected = match (case.expected, &case.potential) {
            (Some(e), _) => e,
            (None, PotentialSpec::GeodesicPower { delta, .. }) => -(case.d as f64 + delta),
            (None, PotentialSpec::CenteredGeodesic { delta }) => -(case.d as f64 + delta),
            _ => return Err(Error::Domain("decay case needs an expected slope for this potential".into())),
        };
        let table = coefficient_table(&case.potential, &ctx, case.n_max)?;
        let fit = decay_exponent(&table, case.n_min, case.n_max)?;
        checks.push(Check::within(
            format!("d={} {} slope over [{}, {}]", case.d, potential_label(&case.potential), case.n_min, case.n_max),
            fit.slope,
            expected,
            case.tolerance,
        ));
        cells.push(json!({ "case": case, "fit": fit }));
    }
    Ok(finish("decay", settings, cfg, cells, checks, start, Vec::new()))
}

pub fn run_optimize(cfg: &OptimizeConfig, settings: RunSettings) -> Result<Outcome> {
    let start = Instant::now();
    let ctx = SphereContext::new(cfg.d)?;
    if cfg.starts == 0 {
        return Err(Error::Domain("need at least one start".into()));
    }
    let starts: Vec<PointSet> = (0..cfg.starts)
        .map(|k| generate(cfg.generator, cfg.n_points, &ctx, cell_seed(settings.seed, k)))
        .collect::<Result<_>>()?;
    let (best, reports) = optimize_multistart(&starts, &cfg.potential, &cfg.optimizer)?;
    let monotone = reports.iter().all(|r| {
        let (first, last) = (r.energies[0], r.final_energy);
        if r.maximize {
            last >= first
        } else {
            last <= first
        }
    });
    let best_energy = discrete_energy(&best, &cfg.potential)?;
    let checks = vec![
        Check::flag("best energy", best_energy, monotone),
        Check::flag("converged runs (informational)", reports.iter().filter(|r| r.converged).count() as f64, true),
    ];
    let cells = reports.iter().map(|r| serde_json::to_value(r).unwrap_or(Value::Null)).collect();
    let file = OutputFile { name: "points.txt".into(), contents: best.to_text() };
    Ok(finish("optimize", settings, cfg, cells, checks, start, vec![file]))
}

pub fn run_gen(cfg: &GenConfig, settings: RunSettings) -> Result<Outcome> {
    let start = Instant::now();
    let ctx = SphereContext::new(cfg.d)?;
    let z = generate(cfg.kind, cfg.n_points, &ctx, settings.seed)?;
    let worst = z.iter().map(|p| (p.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs()).fold(0.0, f64::max);
    let checks = vec![Check::flag("max |norm - 1|", worst, worst <= 1e-12)];
    let file = OutputFile { name: "points.txt".into(), contents: z.to_text() };
    Ok(finish("gen", settings, cfg, Vec::new(), checks, start, vec![file]))
}
