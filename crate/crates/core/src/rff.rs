//! Random Fourier features and the dimension bounds that go with them.
//!
//! For a shift-invariant kernel with spectral measure `p`, draw `D/2`
//! frequencies `ω_j ~ p` and map
//!
//! ```text
//! z(x) = √(2/D) (cos⟨ω_1,x⟩, sin⟨ω_1,x⟩, …, cos⟨ω_{D/2},x⟩, sin⟨ω_{D/2},x⟩)
//! ```
//!
//! so that `⟨z(x), z(x')⟩ = (2/D) Σ_j cos⟨ω_j, x - x'⟩` estimates `k(x - x')`
//! without bias. The uniform deviation over a compact domain `X` obeys
//!
//! ```text
//! P[sup |⟨z(x),z(x')⟩ - k(x,x')| ≥ ε] ≤ 2⁸ (σ_p diam(X)/ε)² exp(-Dε²/(c(d+2)))
//! ```
//!
//! with `c = 8` ([`TailExponent::Conservative`]) or `c = 4`
//! ([`TailExponent::Tight`]).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::pauli_state::{qubit_count_for, L2UnitVector};
use crate::seeded_rng;
use crate::spectral::{ShiftInvariantKernel, SpectralSample};

/// Largest number of ordered grid pairs [`sup_error_estimate`] will visit.
pub const MAX_GRID_PAIRS: u128 = 100_000_000;

/// A sampled random Fourier feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    dim: usize,
    features: usize,
    frequencies: Vec<SpectralSample>,
    seed: u64,
}

impl RffMap {
    /// Wraps explicit frequencies, e.g. a hand-picked single frequency.
    pub fn from_frequencies(dim: usize, frequencies: Vec<SpectralSample>, seed: u64) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidFeatureDimension(0));
        }
        for w in &frequencies {
            if w.0.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: w.0.len() });
            }
            if !w.is_finite() {
                return Err(Error::InvalidParameter("non-finite frequency".into()));
            }
        }
        Ok(Self { dim, features: 2 * frequencies.len(), frequencies, seed })
    }

    /// Input dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Feature dimension `D`.
    pub fn features(&self) -> usize {
        self.features
    }

    pub fn frequencies(&self) -> &[SpectralSample] {
        &self.frequencies
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Unnormalized-type feature vector; `rff_features` wraps this.
    pub(crate) fn raw_features(&self, x: &[f64]) -> Vec<f64> {
        let scale = (2.0 / self.features as f64).sqrt();
        let mut out = Vec::with_capacity(self.features);
        for w in &self.frequencies {
            let (s, c) = linalg::dot(&w.0, x).sin_cos();
            out.push(scale * c);
            out.push(scale * s);
        }
        out
    }
}

/// Draws `D/2` i.i.d. frequencies from the kernel's spectral measure using
/// stream 0 of `seed`.
pub fn build_rff_map(kernel: &ShiftInvariantKernel, features: usize, seed: u64) -> Result<RffMap> {
    if features < 2 || !features.is_multiple_of(2) {
        return Err(Error::InvalidFeatureDimension(features));
    }
    if !kernel.has_sampler() {
        return Err(Error::NoSampler);
    }
    let mut rng = seeded_rng(seed, 0);
    let frequencies = (0..features / 2).map(|_| kernel.sample_frequency(&mut rng)).collect::<Result<Vec<_>>>()?;
    Ok(RffMap { dim: kernel.dim(), features, frequencies, seed })
}

/// `z(x)`, interleaved cosine/sine pairs scaled by `√(2/D)`.
pub fn rff_features(map: &RffMap, x: &[f64]) -> Result<L2UnitVector> {
    map.check_input(x)?;
    L2UnitVector::new(map.raw_features(x))
}

/// `⟨z(x), z(x')⟩ = (2/D) Σ_j cos⟨ω_j, x - x'⟩`.
pub fn rff_kernel_estimate(map: &RffMap, x: &[f64], y: &[f64]) -> Result<f64> {
    map.check_input(x)?;
    map.check_input(y)?;
    let delta: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let total: f64 = map.frequencies.iter().map(|w| linalg::dot(&w.0, &delta).cos()).sum();
    Ok(2.0 * total / map.features as f64)
}

/// The constant `c` in the exponent `-Dε²/(c(d+2))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TailExponent {
    /// `c = 8`
    Conservative,
    /// `c = 4`
    Tight,
}

impl TailExponent {
    pub fn constant(self) -> f64 {
        match self {
            TailExponent::Conservative => 8.0,
            TailExponent::Tight => 4.0,
        }
    }
}

fn bound_prefactor(epsilon: f64, sigma_p: f64, diam: f64) -> f64 {
    256.0 * (sigma_p * diam / epsilon).powi(2)
}

/// `2⁸ (σ_p diam/ε)² exp(-Dε²/(8(d+2)))`, clamped to `[0, 1]`.
pub fn failure_bound(features: usize, dim: usize, epsilon: f64, sigma_p: f64, diam: f64) -> f64 {
    failure_bound_with(features, dim, epsilon, sigma_p, diam, TailExponent::Conservative)
}

pub fn failure_bound_with(
    features: usize,
    dim: usize,
    epsilon: f64,
    sigma_p: f64,
    diam: f64,
    exponent: TailExponent,
) -> f64 {
    let rate = epsilon * epsilon / (exponent.constant() * (dim as f64 + 2.0));
    let raw = bound_prefactor(epsilon, sigma_p, diam) * (-(features as f64) * rate).exp();
    raw.clamp(0.0, 1.0)
}

/// Result of a dimension-bound inversion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// Smallest even `D` meeting the target failure probability.
    pub required_dimension: usize,
    pub epsilon: f64,
    /// Requested `δ`.
    pub target_failure_probability: f64,
    /// Bound evaluated at `required_dimension` (at most the target).
    pub failure_probability: f64,
    pub sigma_p_sq: f64,
    pub diameter: f64,
    pub dim: usize,
    pub exponent: TailExponent,
    /// Qubits for the encoded features, `⌈log₄(D+1)⌉`.
    pub qubits: usize,
}

/// Smallest even `D ≥ 2` with `failure_bound(D) ≤ δ`.
pub fn required_dimension(dim: usize, epsilon: f64, sigma_p: f64, diam: f64, delta: f64) -> BoundReport {
    required_dimension_with(dim, epsilon, sigma_p, diam, delta, TailExponent::Conservative)
}

/// Closed-form inversion `D = c(d+2)/ε² · ln(2⁸(σ_p diam/ε)²/δ)` rounded up
/// to even, then nudged by whole pairs so that the returned `D` satisfies the
/// bound and `D - 2` does not.
pub fn required_dimension_with(
    dim: usize,
    epsilon: f64,
    sigma_p: f64,
    diam: f64,
    delta: f64,
    exponent: TailExponent,
) -> BoundReport {
    let bound = |d: usize| failure_bound_with(d, dim, epsilon, sigma_p, diam, exponent);
    let scale = exponent.constant() * (dim as f64 + 2.0) / (epsilon * epsilon);
    let log_term = (bound_prefactor(epsilon, sigma_p, diam) / delta).ln();
    let continuous = (scale * log_term).max(2.0);
    let mut d = continuous.ceil() as usize;
    if d % 2 == 1 {
        d += 1;
    }
    while bound(d) > delta {
        d += 2;
    }
    while d > 2 && bound(d - 2) <= delta {
        d -= 2;
    }
    BoundReport {
        required_dimension: d,
        epsilon,
        target_failure_probability: delta,
        failure_probability: bound(d),
        sigma_p_sq: sigma_p * sigma_p,
        diameter: diam,
        dim,
        exponent,
        qubits: qubit_count_for(d),
    }
}

/// Bound for a smooth kernel on `[-R, R]^d` with `|∂²_i k(0)| ≤ B`, using
/// `σ_p² ≤ dB` and `diam ≤ 2R√d`.
pub fn smooth_dimension_bound(
    dim: usize,
    epsilon: f64,
    radius: f64,
    second_derivative_bound: f64,
    delta: f64,
) -> BoundReport {
    let d = dim as f64;
    let sigma_p = (d * second_derivative_bound).sqrt();
    let diam = 2.0 * radius * d.sqrt();
    required_dimension(dim, epsilon, sigma_p, diam, delta)
}

/// Operation counts for building and evaluating a feature map of dimension
/// `D` on `d`-dimensional inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuntimeAccount {
    pub spectral_draws: usize,
    /// Multiply-adds for the `D/2` projections `⟨ω_j, x⟩`.
    pub projection_flops: usize,
    /// Trigonometric evaluations per input.
    pub trig_evaluations: usize,
    /// Stored Pauli coefficients per encoded input.
    pub encoded_coefficients: usize,
    pub qubits: usize,
}

pub fn runtime_account(features: usize, dim: usize) -> RuntimeAccount {
    RuntimeAccount {
        spectral_draws: features / 2,
        projection_flops: features / 2 * dim,
        trig_evaluations: features,
        encoded_coefficients: features,
        qubits: qubit_count_for(features.max(1)),
    }
}

/// `(k(Δ + h e_i) + k(Δ - h e_i) - 2k(Δ))/h²`.
pub fn central_second_derivative<F>(k: &F, coordinate: usize, at: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut plus = at.to_vec();
    let mut minus = at.to_vec();
    plus[coordinate] += h;
    minus[coordinate] -= h;
    (k(&plus) + k(&minus) - 2.0 * k(at)) / (h * h)
}

/// `max(0, ⌈log₄(L/12ε)⌉)`: with `h = 2^{-P}` the central difference error
/// `2L h²/4!` is at most `ε`.
pub fn required_precision_bits(fourth_derivative_bound: f64, epsilon: f64) -> u32 {
    assert!(fourth_derivative_bound > 0.0 && epsilon > 0.0, "arguments must be positive");
    // Integer search avoids log rounding at exact powers of four.
    let target = fourth_derivative_bound / (12.0 * epsilon);
    let mut bits = 0u32;
    let mut power = 1.0f64;
    while power < target {
        bits += 1;
        power *= 4.0;
    }
    bits
}

/// An axis-aligned box `∏_i [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::EmptyInput);
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter("box lower bounds must be below upper bounds".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `[-R, R]^d`.
    pub fn cube(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![-radius; dim], vec![radius; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Euclidean length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        linalg::sq_dist(&self.lower, &self.upper).sqrt()
    }

    /// `max_i max(|lower_i|, |upper_i|)`.
    pub fn radius(&self) -> f64 {
        self.lower.iter().chain(&self.upper).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Points per axis: `lower, lower + step, …` up to `upper` inclusive (within
    /// rounding).
    fn axis(&self, i: usize, step: f64) -> Vec<f64> {
        let span = self.upper[i] - self.lower[i];
        let count = (span / step + 1e-9).floor() as usize + 1;
        (0..count).map(|j| self.lower[i] + j as f64 * step).collect()
    }

    /// The Cartesian grid with spacing `step`.
    pub fn grid(&self, step: f64) -> Result<Vec<Vec<f64>>> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter("grid step must be positive".into()));
        }
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|i| self.axis(i, step)).collect();
        if axes.iter().any(|a| a.len() < 2) {
            return Err(Error::InvalidParameter("grid needs at least 2 points per axis".into()));
        }
        let total: u128 = axes.iter().map(|a| a.len() as u128).product();
        if total * total > MAX_GRID_PAIRS {
            return Err(Error::GridGuard { pairs: total * total, max: MAX_GRID_PAIRS });
        }
        let mut points = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }

    /// Uniform random point.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| rng.random_range(l..u)).collect()
    }
}

/// `max |⟨z(x),z(x')⟩ - k(x,x')|` over all ordered pairs of the grid.
///
/// Features are evaluated once per grid point; pairs are scanned in
/// parallel, which cannot change the maximum.
pub fn sup_error_estimate<K>(map: &RffMap, kernel: K, domain: &DomainBox, grid_step: f64) -> Result<f64>
where
    K: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    if domain.dim() != map.dim() {
        return Err(Error::DimensionMismatch { expected: map.dim(), got: domain.dim() });
    }
    let points = domain.grid(grid_step)?;
    sup_error_on_points(map, &points, kernel)
}

/// `max |⟨z(x),z(x')⟩ - k(x,x')|` over all ordered pairs drawn from `points`.
pub fn sup_error_on_points<K>(map: &RffMap, points: &[Vec<f64>], kernel: K) -> Result<f64>
where
    K: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    if let Some(p) = points.iter().find(|p| p.len() != map.dim()) {
        return Err(Error::DimensionMismatch { expected: map.dim(), got: p.len() });
    }
    let features: Vec<Vec<f64>> = points.par_iter().map(|p| map.raw_features(p)).collect();
    let worst = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut local = 0.0f64;
            for j in 0..points.len() {
                let approx = linalg::dot(&features[i], &features[j]);
                local = local.max((approx - kernel(&points[i], &points[j])).abs());
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// `max |estimate(x,x') - exact(x,x')|` over the supplied pairs.
pub fn sup_error_over_pairs<E, K>(pairs: &[(Vec<f64>, Vec<f64>)], estimate: E, exact: K) -> Result<f64>
where
    E: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
    K: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    pairs.par_iter().map(|(x, y)| Ok((estimate(x, y)? - exact(x, y)?).abs())).try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}
