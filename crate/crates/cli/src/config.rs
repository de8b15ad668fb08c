//! JSON configuration documents, one per subcommand. Unknown keys are rejected.

use georiesz::discrepancy::CapMethod;
use georiesz::pointsets::{GeneratorKind, OptimizerOptions};
use georiesz::PotentialSpec;
use serde::{Deserialize, Serialize};

pub fn geometric_sizes() -> Vec<usize> {
    (6..=12).map(|p| 1usize << p).collect()
}

fn two() -> usize {
    2
}

fn default_seeds() -> Vec<GeneratorKind> {
    vec![GeneratorKind::Fibonacci, GeneratorKind::EqualAreaCenters]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffsConfig {
    pub d: usize,
    pub potential: PotentialSpec,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapScanConfig {
    pub d: usize,
    pub potential: PotentialSpec,
    #[serde(default = "geometric_sizes")]
    pub sizes: Vec<usize>,
    /// Structured seeds; kinds not available on `S^d` are skipped.
    #[serde(default = "default_seeds")]
    pub starts: Vec<GeneratorKind>,
    #[serde(default)]
    pub random_starts: usize,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    /// Iterations per start are `pair_budget / N^2`, clamped to
    /// `[min_iterations, optimizer.max_iterations]`.
    #[serde(default = "GapScanConfig::default_pair_budget")]
    pub pair_budget: f64,
    #[serde(default = "GapScanConfig::default_min_iterations")]
    pub min_iterations: usize,
    /// Number of smallest sizes left out of the fit.
    #[serde(default = "two")]
    pub fit_skip: usize,
    #[serde(default = "GapScanConfig::default_tolerance")]
    pub tolerance: f64,
    /// Accepted range of the log-case ratio `gap N / log N` (largest over smallest N).
    #[serde(default = "GapScanConfig::default_flatness")]
    pub flatness_range: [f64; 2],
}

impl GapScanConfig {
    fn default_pair_budget() -> f64 {
        6e7
    }
    fn default_min_iterations() -> usize {
        4
    }
    fn default_tolerance() -> f64 {
        0.15
    }
    fn default_flatness() -> [f64; 2] {
        [0.6, 1.7]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremizersConfig {
    pub d: usize,
    pub potential: PotentialSpec,
    #[serde(default = "ExtremizersConfig::default_count")]
    pub random_count: usize,
    #[serde(default = "ExtremizersConfig::default_size")]
    pub random_size: usize,
    #[serde(default = "ExtremizersConfig::default_degrees")]
    pub degrees: Vec<usize>,
    /// Perturbation amplitudes as fractions of the largest admissible one.
    #[serde(default = "ExtremizersConfig::default_amplitudes")]
    pub amplitudes: Vec<f64>,
}

impl ExtremizersConfig {
    fn default_count() -> usize {
        20
    }
    fn default_size() -> usize {
        12
    }
    fn default_degrees() -> Vec<usize> {
        vec![1, 2, 3, 4]
    }
    fn default_amplitudes() -> Vec<f64> {
        vec![0.25, 0.5, 1.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StolarskyCase {
    pub d: usize,
    pub n_points: usize,
    pub potential: PotentialSpec,
    #[serde(default = "StolarskyCase::default_generator")]
    pub generator: GeneratorKind,
    #[serde(default = "StolarskyCase::default_order")]
    pub order: usize,
}

impl StolarskyCase {
    fn default_generator() -> GeneratorKind {
        GeneratorKind::RandomUniform
    }
    fn default_order() -> usize {
        4096
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StolarskyConfig {
    #[serde(default = "StolarskyConfig::default_cases")]
    pub cases: Vec<StolarskyCase>,
    /// Residual limit for finite spectral potentials.
    #[serde(default = "StolarskyConfig::default_exact_tolerance")]
    pub exact_tolerance: f64,
}

impl StolarskyConfig {
    pub fn default_cases() -> Vec<StolarskyCase> {
        let mut cases = Vec::new();
        for d in [1, 2] {
            for n_points in [8, 32, 128] {
                for delta in [0.5, 1.0] {
                    cases.push(StolarskyCase {
                        d,
                        n_points,
                        potential: PotentialSpec::CenteredGeodesic { delta },
                        generator: GeneratorKind::RandomUniform,
                        order: 4096,
                    });
                }
            }
            cases.push(StolarskyCase {
                d,
                n_points: 50,
                potential: PotentialSpec::Spectral { coefficients: vec![0.7, 0.3, 0.2, 0.0, 0.05, 0.01] },
                generator: GeneratorKind::RandomUniform,
                order: 5,
            });
        }
        cases
    }
    fn default_exact_tolerance() -> f64 {
        1e-10
    }
}

impl Default for StolarskyConfig {
    fn default() -> Self {
        Self { cases: Self::default_cases(), exact_tolerance: Self::default_exact_tolerance() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CesaroConfig {
    pub n_points: usize,
    #[serde(default = "CesaroConfig::default_scale")]
    pub scale: f64,
}

impl CesaroConfig {
    fn default_scale() -> f64 {
        2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapConfig {
    #[serde(default = "CapConfig::default_d")]
    pub d: usize,
    #[serde(default = "CapConfig::default_generator")]
    pub generator: GeneratorKind,
    #[serde(default = "geometric_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "CapConfig::default_scan")]
    pub scan_method: CapMethod,
    #[serde(default = "CapConfig::default_expected")]
    pub expected_slope: f64,
    #[serde(default = "CapConfig::default_tolerance")]
    pub tolerance: f64,
    /// Size at which the spectral and Monte Carlo methods are compared; `null` skips it.
    #[serde(default = "CapConfig::default_compare")]
    pub compare_at: Option<usize>,
    /// Spectral order for the comparison; defaults to `32 sqrt(N)`.
    #[serde(default)]
    pub spectral_order: Option<usize>,
    #[serde(default = "CapConfig::default_samples")]
    pub mc_samples: usize,
    #[serde(default = "CapConfig::default_sigmas")]
    pub sigma_limit: f64,
    #[serde(default)]
    pub cesaro: Option<CesaroConfig>,
}

impl CapConfig {
    fn default_d() -> usize {
        2
    }
    fn default_generator() -> GeneratorKind {
        GeneratorKind::Fibonacci
    }
    fn default_scan() -> CapMethod {
        CapMethod::EuclideanOracle
    }
    fn default_expected() -> f64 {
        -1.5
    }
    fn default_tolerance() -> f64 {
        0.1
    }
    fn default_compare() -> Option<usize> {
        Some(1024)
    }
    fn default_samples() -> usize {
        1 << 21
    }
    fn default_sigmas() -> f64 {
        3.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayCase {
    pub d: usize,
    pub potential: PotentialSpec,
    #[serde(default = "DecayCase::default_min")]
    pub n_min: usize,
    #[serde(default = "DecayCase::default_max")]
    pub n_max: usize,
    /// Expected slope; defaults to `-(d + delta)` for geodesic powers.
    #[serde(default)]
    pub expected: Option<f64>,
    #[serde(default = "DecayCase::default_tolerance")]
    pub tolerance: f64,
}

impl DecayCase {
    fn default_min() -> usize {
        16
    }
    fn default_max() -> usize {
        256
    }
    fn default_tolerance() -> f64 {
        0.15
    }

    pub fn new(d: usize, delta: f64) -> Self {
        Self {
            d,
            potential: PotentialSpec::geodesic(delta),
            n_min: Self::default_min(),
            n_max: Self::default_max(),
            expected: None,
            tolerance: Self::default_tolerance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub cases: Vec<DecayCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub d: usize,
    pub potential: PotentialSpec,
    pub n_points: usize,
    #[serde(default = "OptimizeConfig::default_generator")]
    pub generator: GeneratorKind,
    #[serde(default = "OptimizeConfig::default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
}

impl OptimizeConfig {
    fn default_generator() -> GeneratorKind {
        GeneratorKind::RandomUniform
    }
    fn default_starts() -> usize {
        8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub d: usize,
    pub kind: GeneratorKind,
    pub n_points: usize,
}
