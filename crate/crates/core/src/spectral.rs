//! Shift-invariant kernels and their spectral measures.
//!
//! A continuous shift-invariant kernel with `k(0) = 1` is the Fourier transform
//! of a probability measure `p(ω)`. This module provides kernel
//! specifications with samplers for `p`, the spectral variance
//! `σ_p² = E_p‖ω‖² = -Σ_i ∂²k/∂Δ_i²(0)`, the Fourier-coefficient PSD test for
//! trigonometric polynomials, and brute-force Gram-matrix PSD oracles.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rff::central_second_derivative;

/// Coefficient tolerance for the trig-polynomial evenness and sign checks.
pub const COEFF_TOL: f64 = 1e-12;

/// Gram eigenvalues at or above `-GRAM_PSD_TOL` count as non-negative.
pub const GRAM_PSD_TOL: f64 = 1e-8;

/// A frequency vector drawn from a kernel's spectral measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample(pub Vec<f64>);

impl SpectralSample {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// One term `a cos⟨ω,Δ⟩ + b sin⟨ω,Δ⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    #[serde(rename = "freq")]
    pub frequency: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// A real trigonometric polynomial `Σ_ω a_ω cos⟨ω,Δ⟩ + b_ω sin⟨ω,Δ⟩` with
/// integer frequencies.
///
/// Frequencies must be distinct up to sign (`ω` and `-ω` describe the same
/// pair of basis functions), and the zero frequency carries no sine term.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidTrigPolynomial("dimension must be positive".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.frequency.len() != dim {
                return Err(Error::InvalidTrigPolynomial(format!(
                    "term {i} has frequency of dimension {} (expected {dim})",
                    t.frequency.len()
                )));
            }
            if !t.cos.is_finite() || !t.sin.is_finite() {
                return Err(Error::InvalidTrigPolynomial(format!("term {i} has non-finite coefficients")));
            }
            if t.frequency.iter().all(|&w| w == 0) && t.sin != 0.0 {
                return Err(Error::InvalidTrigPolynomial("zero frequency cannot carry a sine term".into()));
            }
            for (j, u) in terms.iter().enumerate().skip(i + 1) {
                let same = t.frequency == u.frequency;
                let negated = t.frequency.iter().zip(&u.frequency).all(|(a, b)| *a == -*b);
                if same || negated {
                    return Err(Error::InvalidTrigPolynomial(format!(
                        "terms {i} and {j} share frequency {:?} up to sign",
                        t.frequency
                    )));
                }
            }
        }
        Ok(Self { dim, terms })
    }

    /// `cos⟨ω,Δ⟩` for a single frequency.
    pub fn cosine(frequency: Vec<i64>) -> Self {
        let dim = frequency.len();
        Self::new(dim, vec![TrigTerm { frequency, cos: 1.0, sin: 0.0 }]).expect("single term is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn eval(&self, delta: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase: f64 = t.frequency.iter().zip(delta).map(|(&w, &x)| w as f64 * x).sum();
                t.cos * phase.cos() + t.sin * phase.sin()
            })
            .sum()
    }
}

impl fmt::Display for TrigPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("{}cos{:?}{:+}sin{:?}", t.cos, t.frequency, t.sin, t.frequency))
            .collect();
        write!(f, "trig[{}]", parts.join(" "))
    }
}

/// `f(Δ) = f(-Δ)`, i.e. every sine coefficient vanishes.
pub fn trig_poly_is_even(p: &TrigPolynomial) -> bool {
    p.terms.iter().all(|t| t.sin.abs() <= COEFF_TOL)
}

/// PSD iff even with non-negative cosine coefficients.
pub fn trig_poly_is_psd(p: &TrigPolynomial) -> bool {
    trig_poly_is_even(p) && p.terms.iter().all(|t| t.cos >= -COEFF_TOL)
}

pub type DeltaEvaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type FrequencySampler = Arc<dyn Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync>;

/// A user-supplied shift-invariant kernel.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub dim: usize,
    pub evaluator: DeltaEvaluator,
    pub sampler: Option<FrequencySampler>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("sampler", &self.sampler.is_some())
            .finish()
    }
}

/// A normalized, even shift-invariant kernel `k(x, x') = k(x - x')`.
#[derive(Debug, Clone)]
pub enum ShiftInvariantKernel {
    /// `exp(-‖Δ‖²/2σ²)`
    Gaussian {
        sigma: f64,
        dim: usize,
    },
    TrigPolynomial(TrigPolynomial),
    Custom(CustomKernel),
}

impl ShiftInvariantKernel {
    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidKernel(format!("Gaussian bandwidth must be positive, got {sigma}")));
        }
        if dim == 0 {
            return Err(Error::InvalidKernel("dimension must be positive".into()));
        }
        Ok(Self::Gaussian { sigma, dim })
    }

    /// Requires an even polynomial with `k(0) = 1`.
    pub fn trig_polynomial(p: TrigPolynomial) -> Result<Self> {
        if !trig_poly_is_even(&p) {
            return Err(Error::InvalidKernel("trigonometric polynomial is not even".into()));
        }
        let at_zero = p.eval(&vec![0.0; p.dim()]);
        if (at_zero - 1.0).abs() > COEFF_TOL {
            return Err(Error::InvalidKernel(format!("k(0) = {at_zero}, expected 1")));
        }
        Ok(Self::TrigPolynomial(p))
    }

    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        evaluator: DeltaEvaluator,
        sampler: Option<FrequencySampler>,
    ) -> Result<Self> {
        let at_zero = evaluator(&vec![0.0; dim]);
        if (at_zero - 1.0).abs() > COEFF_TOL {
            return Err(Error::InvalidKernel(format!("k(0) = {at_zero}, expected 1")));
        }
        Ok(Self::Custom(CustomKernel { name: name.into(), dim, evaluator, sampler }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian { dim, .. } => *dim,
            Self::TrigPolynomial(p) => p.dim(),
            Self::Custom(c) => c.dim,
        }
    }

    /// `k(Δ)`.
    pub fn eval(&self, delta: &[f64]) -> f64 {
        match self {
            Self::Gaussian { sigma, .. } => {
                let sq: f64 = delta.iter().map(|v| v * v).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
            Self::TrigPolynomial(p) => p.eval(delta),
            Self::Custom(c) => (c.evaluator)(delta),
        }
    }

    /// `k(x - x')`.
    pub fn eval_pair(&self, x: &[f64], y: &[f64]) -> f64 {
        let delta: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.eval(&delta)
    }

    pub fn has_sampler(&self) -> bool {
        match self {
            Self::Gaussian { .. } => true,
            Self::TrigPolynomial(p) => trig_poly_is_psd(p),
            Self::Custom(c) => c.sampler.is_some(),
        }
    }

    /// One draw from the spectral measure.
    pub fn sample_frequency(&self, rng: &mut dyn RngCore) -> Result<SpectralSample> {
        match self {
            Self::Gaussian { sigma, dim } => Ok(gaussian_spectral_sample(*sigma, *dim, rng)),
            Self::TrigPolynomial(p) => {
                // The measure is discrete: mass a_ω on ω (cosines are even, so the
                // ±ω split is irrelevant for cos/sin feature pairs).
                if !trig_poly_is_psd(p) {
                    return Err(Error::NoSampler);
                }
                let weights: Vec<f64> = p.terms().iter().map(|t| t.cos.max(0.0)).collect();
                let dist = WeightedIndex::new(&weights).map_err(|_| Error::NoSampler)?;
                let t = &p.terms()[dist.sample(rng)];
                Ok(SpectralSample(t.frequency.iter().map(|&w| w as f64).collect()))
            }
            Self::Custom(c) => {
                let sampler = c.sampler.as_ref().ok_or(Error::NoSampler)?;
                let w = sampler(rng);
                if w.len() != c.dim {
                    return Err(Error::DimensionMismatch { expected: c.dim, got: w.len() });
                }
                Ok(SpectralSample(w))
            }
        }
    }

    /// Short descriptor for reports.
    pub fn descriptor(&self) -> String {
        match self {
            Self::Gaussian { sigma, dim } => format!("gaussian(sigma={sigma};d={dim})"),
            Self::TrigPolynomial(p) => p.to_string(),
            Self::Custom(c) => format!("custom({};d={})", c.name, c.dim),
        }
    }
}

/// `ω ~ N(0, σ⁻² I_d)`, the spectral measure of `exp(-‖Δ‖²/2σ²)`.
pub fn gaussian_spectral_sample<R: Rng + ?Sized>(sigma: f64, dim: usize, rng: &mut R) -> SpectralSample {
    assert!(sigma > 0.0, "Gaussian bandwidth must be positive");
    let normal = Normal::new(0.0, 1.0 / sigma).expect("finite positive standard deviation");
    SpectralSample((0..dim).map(|_| normal.sample(rng)).collect())
}

/// `σ_p² = -Σ_i ∂²k/∂Δ_i² (0)`.
///
/// Closed form `d/σ²` for the Gaussian, `Σ_ω a_ω ‖ω‖²` for trigonometric
/// polynomials, and Richardson-checked central differences for custom
/// kernels (rejected as non-smooth when successive refinements do not
/// settle).
pub fn spectral_variance(k: &ShiftInvariantKernel) -> Result<f64> {
    match k {
        ShiftInvariantKernel::Gaussian { sigma, dim } => Ok(*dim as f64 / (sigma * sigma)),
        ShiftInvariantKernel::TrigPolynomial(p) => {
            Ok(p.terms().iter().map(|t| t.cos * t.frequency.iter().map(|&w| (w * w) as f64).sum::<f64>()).sum())
        }
        ShiftInvariantKernel::Custom(c) => {
            let eval = |d: &[f64]| (c.evaluator)(d);
            let origin = vec![0.0; c.dim];
            let steps = [2f64.powi(-4), 2f64.powi(-6), 2f64.powi(-8)];
            let estimates: Vec<f64> = steps
                .iter()
                .map(|&h| -(0..c.dim).map(|i| central_second_derivative(&eval, i, &origin, h)).sum::<f64>())
                .collect();
            if estimates.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonSmooth);
            }
            let first = (estimates[1] - estimates[0]).abs();
            let second = (estimates[2] - estimates[1]).abs();
            // O(h²) truncation error shrinks 16-fold per refinement; kinks grow like 1/h.
            let floor = 1e-7 * (1.0 + estimates[2].abs());
            if second > floor && second > 0.25 * first {
                return Err(Error::NonSmooth);
            }
            Ok(estimates[2])
        }
    }
}

/// `E_p[‖ω‖²]` of the Gaussian spectral density by composite Simpson
/// quadrature of the 1-d moment ratio `∫x²e^{-σ²x²/2} / ∫e^{-σ²x²/2}`,
/// multiplied by `d`. Used for reporting next to the closed form.
pub fn gaussian_second_moment_quadrature(sigma: f64, dim: usize) -> f64 {
    let half_width = 40.0 / sigma;
    let intervals = 20_000usize;
    let h = 2.0 * half_width / intervals as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=intervals {
        let x = -half_width + i as f64 * h;
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let density = (-0.5 * sigma * sigma * x * x).exp();
        num += w * x * x * density;
        den += w * density;
    }
    dim as f64 * num / den
}

/// `G_ij = k(x_i, x_j)` over all ordered pairs.
///
/// Every entry is evaluated, so an asymmetric function yields an asymmetric
/// matrix rather than a silently mirrored one.
pub fn gram_matrix<F>(k: F, points: &[Vec<f64>]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = points.len();
    Ok(DMatrix::from_fn(m, m, |i, j| k(&points[i], &points[j])))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn gram_min_eigenvalue(g: &DMatrix<f64>) -> Result<f64> {
    linalg::ensure_symmetric(g)?;
    let (values, _) = linalg::sorted_symmetric_eigen(g);
    Ok(*values.last().expect("non-empty"))
}

/// Brute-force PSD verdict for a possibly asymmetric Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramPsdVerdict {
    pub symmetric: bool,
    /// Largest `|G_ij - G_ji|`.
    pub asymmetry: f64,
    /// For symmetric `G`, its smallest eigenvalue. Otherwise the smallest
    /// eigenvalue of the Hermitian matrix `S + iA` built from the symmetric
    /// and antisymmetric parts; this is `min_v Re(v*Gv) - |Im(v*Gv)|` over
    /// unit complex `v`, negative whenever the sesquilinear form leaves the
    /// non-negative reals.
    pub min_eigenvalue: f64,
    pub psd: bool,
}

pub fn gram_psd_verdict(g: &DMatrix<f64>) -> Result<GramPsdVerdict> {
    linalg::ensure_square(g)?;
    let asymmetry = linalg::asymmetry(g);
    let symmetric = linalg::ensure_symmetric(g).is_ok();
    let min_eigenvalue = if symmetric {
        gram_min_eigenvalue(g)?
    } else {
        let n = g.nrows();
        let h = DMatrix::from_fn(n, n, |i, j| {
            let s = 0.5 * (g[(i, j)] + g[(j, i)]);
            let a = 0.5 * (g[(i, j)] - g[(j, i)]);
            Complex64::new(s, a)
        });
        linalg::hermitian_min_eigenvalue(&h)
    };
    Ok(GramPsdVerdict { symmetric, asymmetry, min_eigenvalue, psd: symmetric && min_eigenvalue >= -GRAM_PSD_TOL })
}
