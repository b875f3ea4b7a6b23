//! TOML experiment configs. One struct per subcommand; see `configs/` for
//! annotated examples.

use std::path::{Path, PathBuf};

use eqk::composition::{EmbeddingCircuit, Gate, Preprocessor};
use eqk::rff::DomainBox;
use eqk::spectral::{ShiftInvariantKernel, TrigPolynomial, TrigTerm};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{config_err, Result};

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| config_err(e.to_string()))
}

/// `seeds = [1, 2, 3]` or `seeds = { start = 0, count = 50 }`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl SeedSpec {
    pub fn list(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { start, count } => (*start..start + count).collect(),
        }
    }

    /// Parses `--seeds` values: `1,2,3` or `0..50` (end exclusive).
    pub fn parse_override(s: &str) -> Result<Self> {
        let bad = || config_err(format!("bad seed list '{s}'"));
        if let Some((a, b)) = s.split_once("..") {
            let start: u64 = a.trim().parse().map_err(|_| bad())?;
            let end: u64 = b.trim().parse().map_err(|_| bad())?;
            if end <= start {
                return Err(bad());
            }
            return Ok(SeedSpec::Range { start, count: end - start });
        }
        s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<Vec<u64>>>().map(SeedSpec::List)
    }

    fn validate(&self) -> Result<()> {
        if self.list().is_empty() {
            return Err(config_err("seed list is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Gaussian { sigma: f64, dim: usize },
    Trig { dim: usize, terms: Vec<TrigTerm> },
}

impl KernelSpec {
    pub fn build(&self) -> Result<ShiftInvariantKernel> {
        Ok(match self {
            KernelSpec::Gaussian { sigma, dim } => {
                positive("kernel.sigma", *sigma)?;
                if *dim == 0 {
                    return Err(config_err("kernel.dim must be positive"));
                }
                ShiftInvariantKernel::gaussian(*sigma, *dim)?
            }
            KernelSpec::Trig { dim, terms } => {
                ShiftInvariantKernel::trig_polynomial(TrigPolynomial::new(*dim, terms.clone())?)?
            }
        })
    }
}

/// `domain = { radius = 1.0 }` for `[-R, R]^d`, or explicit bounds.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum DomainSpec {
    Bounds { lower: Vec<f64>, upper: Vec<f64> },
    Cube { radius: f64 },
}

impl DomainSpec {
    pub fn build(&self, dim: usize) -> Result<DomainBox> {
        let b = match self {
            DomainSpec::Bounds { lower, upper } => DomainBox::new(lower.clone(), upper.clone())?,
            DomainSpec::Cube { radius } => DomainBox::cube(dim, *radius)?,
        };
        if b.dim() != dim {
            return Err(config_err(format!("domain has dimension {}, kernel expects {dim}", b.dim())));
        }
        Ok(b)
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(config_err(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn probability(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(config_err(format!("{name} must lie in (0, 1], got {v}")));
    }
    Ok(())
}

fn feature_list(features: &[usize]) -> Result<()> {
    if features.is_empty() {
        return Err(config_err("features list is empty"));
    }
    if let Some(d) = features.iter().find(|&&d| d < 2 || !d.is_multiple_of(2)) {
        return Err(config_err(format!("feature dimension {d} must be even and at least 2")));
    }
    Ok(())
}

fn default_experiment() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RffSweepConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    pub kernel: KernelSpec,
    pub domain: DomainSpec,
    pub grid_step: f64,
    #[serde(default)]
    pub features: Vec<usize>,
    pub seeds: SeedSpec,
    /// Adds per-D rows with the fraction of seeds whose sup error is `≥ ε`.
    pub epsilon: Option<f64>,
    /// With `epsilon`, also sweeps the dimension returned by the bound
    /// inversion at failure probability `delta`.
    pub delta: Option<f64>,
    #[serde(default)]
    pub add_required_dimension: bool,
    pub output: Option<PathBuf>,
}

impl RffSweepConfig {
    pub fn validate(&self) -> Result<()> {
        positive("grid_step", self.grid_step)?;
        if !self.add_required_dimension || !self.features.is_empty() {
            feature_list(&self.features)?;
        }
        if self.add_required_dimension && (self.epsilon.is_none() || self.delta.is_none()) {
            return Err(config_err("add_required_dimension needs epsilon and delta"));
        }
        if let Some(e) = self.epsilon {
            positive("epsilon", e)?;
        }
        if let Some(d) = self.delta {
            probability("delta", d)?;
        }
        self.seeds.validate()
    }
}

fn default_pairs() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QrffVerifyConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    pub kernel: KernelSpec,
    pub domain: DomainSpec,
    pub features: Vec<usize>,
    pub seeds: SeedSpec,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// SWAP-test shots per pair; omitted for exact traces only.
    pub shots: Option<u64>,
    pub output: Option<PathBuf>,
}

impl QrffVerifyConfig {
    pub fn validate(&self) -> Result<()> {
        feature_list(&self.features)?;
        if self.pairs == 0 {
            return Err(config_err("pairs must be positive"));
        }
        if self.shots == Some(0) {
            return Err(config_err("shots must be positive"));
        }
        self.seeds.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PreprocessorSpec {
    Identity {
        dim: usize,
        bound: f64,
    },
    Circuit {
        qubits: usize,
        input_dim: usize,
        gates: Vec<Gate>,
    },
    /// Y/Z data rotations on every qubit followed by a CNOT chain, repeated.
    Ladder {
        qubits: usize,
        input_dim: usize,
        layers: usize,
    },
}

impl PreprocessorSpec {
    pub fn input_dim(&self) -> usize {
        match self {
            PreprocessorSpec::Identity { dim, .. } => *dim,
            PreprocessorSpec::Circuit { input_dim, .. } | PreprocessorSpec::Ladder { input_dim, .. } => *input_dim,
        }
    }

    pub fn circuit(&self) -> Result<Option<EmbeddingCircuit>> {
        Ok(match self {
            PreprocessorSpec::Identity { .. } => None,
            PreprocessorSpec::Circuit { qubits, input_dim, gates } => {
                Some(EmbeddingCircuit::new(*qubits, *input_dim, gates.clone())?)
            }
            PreprocessorSpec::Ladder { qubits, input_dim, layers } => {
                Some(EmbeddingCircuit::rotation_ladder(*qubits, *input_dim, *layers)?)
            }
        })
    }

    pub fn build(&self) -> Result<Preprocessor> {
        match self {
            PreprocessorSpec::Identity { dim, bound } => Ok(Preprocessor::identity(*dim, *bound)?),
            _ => Ok(Preprocessor::reduced_density(self.circuit()?.expect("circuit variant"))),
        }
    }
}

fn default_projected_pairs() -> usize {
    200
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectedDemoConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    pub preprocessor: PreprocessorSpec,
    /// `k = exp(-γ‖f(x) - f(x')‖²)`, i.e. `σ = 1/√(2γ)`.
    pub gamma: f64,
    pub domain: DomainSpec,
    pub features: Vec<usize>,
    pub seeds: SeedSpec,
    /// Random pairs per seed; ignored when `grid_step` is set.
    #[serde(default = "default_projected_pairs")]
    pub pairs: usize,
    /// Evaluate over all grid pairs instead of random pairs.
    pub grid_step: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub output: Option<PathBuf>,
}

impl ProjectedDemoConfig {
    pub fn validate(&self) -> Result<()> {
        positive("gamma", self.gamma)?;
        positive("epsilon", self.epsilon)?;
        probability("delta", self.delta)?;
        feature_list(&self.features)?;
        if let Some(s) = self.grid_step {
            positive("grid_step", s)?;
        } else if self.pairs == 0 {
            return Err(config_err("pairs must be positive"));
        }
        self.seeds.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    pub dim: usize,
    pub terms: Vec<TrigTerm>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPolySpec {
    pub count: usize,
    pub seed: u64,
    #[serde(default = "default_max_frequency")]
    pub max_frequency: i64,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    /// Probability that a nonzero frequency also gets a sine term.
    #[serde(default = "default_sine_probability")]
    pub sine_probability: f64,
}

fn default_max_frequency() -> i64 {
    6
}

fn default_max_terms() -> usize {
    4
}

fn default_sine_probability() -> f64 {
    0.3
}

/// Gram points: `count` points in `[lower, upper]^d`, evenly spaced for
/// `d = 1` and drawn uniformly from `seed` otherwise.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdCheckConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    #[serde(default)]
    pub polynomials: Vec<PolySpec>,
    pub random: Option<RandomPolySpec>,
    pub points: PointSpec,
    pub output: Option<PathBuf>,
}

impl PsdCheckConfig {
    pub fn validate(&self) -> Result<()> {
        if self.polynomials.is_empty() && self.random.as_ref().is_none_or(|r| r.count == 0) {
            return Err(config_err("no polynomials to check"));
        }
        if self.points.count == 0 || !(self.points.upper > self.points.lower) {
            return Err(config_err("points need count > 0 and upper > lower"));
        }
        if let Some(r) = &self.random {
            if r.max_frequency < 0 || r.max_terms == 0 || r.max_terms as i64 > r.max_frequency + 1 {
                return Err(config_err("random polynomials need 1 <= max_terms <= max_frequency + 1"));
            }
            if !(0.0..=1.0).contains(&r.sine_probability) {
                return Err(config_err("sine_probability must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothSpec {
    pub radius: f64,
    pub second_derivative_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionBoundSpec {
    /// `g₁`
    pub output_dim: usize,
    /// `B`
    pub bound: f64,
    pub sigma: f64,
}

/// Either an explicit fourth-derivative bound `L` or a Gaussian bandwidth,
/// for which `L = 3/σ⁴`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionSpec {
    pub fourth_derivative_bound: Option<f64>,
    pub gaussian_sigma: Option<f64>,
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentCheckSpec {
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    pub dim: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub sigma_p: Option<f64>,
    pub diameter: Option<f64>,
    /// Supplies `σ_p` from its spectral variance when `sigma_p` is absent.
    pub kernel: Option<KernelSpec>,
    /// Supplies the diameter when `diameter` is absent.
    pub domain: Option<DomainSpec>,
    pub smooth: Option<SmoothSpec>,
    pub composition: Option<CompositionBoundSpec>,
    pub precision: Option<PrecisionSpec>,
    /// Empirical check of the Gaussian second moment (needs a Gaussian kernel).
    pub moment_check: Option<MomentCheckSpec>,
    pub output: Option<PathBuf>,
}

impl BoundsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(config_err("dim must be positive"));
        }
        positive("epsilon", self.epsilon)?;
        probability("delta", self.delta)?;
        if let Some(s) = &self.smooth {
            positive("smooth.radius", s.radius)?;
            positive("smooth.second_derivative_bound", s.second_derivative_bound)?;
        }
        if let Some(c) = &self.composition {
            positive("composition.bound", c.bound)?;
            positive("composition.sigma", c.sigma)?;
            if c.output_dim == 0 {
                return Err(config_err("composition.output_dim must be positive"));
            }
        }
        if let Some(p) = &self.precision {
            match (p.fourth_derivative_bound, p.gaussian_sigma) {
                (Some(l), None) => positive("precision.fourth_derivative_bound", l)?,
                (None, Some(s)) => positive("precision.gaussian_sigma", s)?,
                _ => return Err(config_err("precision needs exactly one of fourth_derivative_bound, gaussian_sigma")),
            }
            for &e in &p.epsilon {
                positive("precision.epsilon", e)?;
            }
        }
        if self.moment_check.is_some() && !matches!(self.kernel, Some(KernelSpec::Gaussian { .. })) {
            return Err(config_err("moment_check needs a gaussian kernel"));
        }
        Ok(())
    }
}

/// Landmarks as explicit points, or `per_axis` evenly spaced values per
/// coordinate of the domain.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum LandmarkSpec {
    Points { points: Vec<Vec<f64>> },
    PerAxis { per_axis: usize },
}

fn default_test_points() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MercerDemoConfig {
    #[serde(default = "default_experiment")]
    pub experiment: String,
    pub kernel: KernelSpec,
    pub domain: DomainSpec,
    pub landmarks: LandmarkSpec,
    pub ranks: Vec<usize>,
    /// Test grid points per axis; pairs are all ordered pairs of the grid.
    #[serde(default = "default_test_points")]
    pub test_points_per_axis: usize,
    pub output: Option<PathBuf>,
}

impl MercerDemoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return Err(config_err("ranks must be a non-empty list of positive integers"));
        }
        if self.test_points_per_axis == 0 {
            return Err(config_err("test_points_per_axis must be positive"));
        }
        Ok(())
    }
}
