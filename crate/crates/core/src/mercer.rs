//! Empirical Mercer truncation and its readout as an embedding quantum kernel.
//!
//! A kernel Gram on `m` landmarks is diagonalized, the top `m′` eigenpairs are
//! kept, and the Nyström extension
//!
//! ```text
//! Φ_j(x) = λ_j^{-1/2} Σ_i v_j[i] k(x, ℓ_i)
//! ```
//!
//! gives a finite feature map whose inner product approximates `k`. The
//! feature vector is then rescaled to unit 1-norm and C2QE-encoded, with the
//! two 1-norm factors restored after the trace.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::pauli_state::{c2qe_encode, hs_inner, qubit_count_for, L1UnitVector};

/// Eigenvalues in `[-CLIP_TOL, 0)` are eigensolver noise and are clipped to 0;
/// anything lower is a PSD violation.
pub const CLIP_TOL: f64 = 1e-8;

pub type PairKernel = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Sorted symmetric eigendecomposition of a Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSpectrum {
    /// Non-increasing, clipped at 0.
    pub eigenvalues: Vec<f64>,
    /// Raw eigenvalues before clipping, same order.
    pub raw_eigenvalues: Vec<f64>,
    /// Column `j` pairs with `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
    /// Indices clipped from `[-CLIP_TOL, 0)`.
    pub clipped: Vec<usize>,
    /// `(index, value)` for eigenvalues below `-CLIP_TOL`.
    pub violations: Vec<(usize, f64)>,
}

impl GramSpectrum {
    pub fn is_psd(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

pub fn gram_eigendecompose(g: &DMatrix<f64>) -> Result<GramSpectrum> {
    linalg::ensure_symmetric(g)?;
    let (raw, vectors) = linalg::sorted_symmetric_eigen(g);
    let mut eigenvalues = raw.clone();
    let mut clipped = Vec::new();
    let mut violations = Vec::new();
    for (j, v) in eigenvalues.iter_mut().enumerate() {
        if *v < -CLIP_TOL {
            violations.push((j, *v));
        } else if *v < 0.0 {
            clipped.push(j);
            *v = 0.0;
        }
    }
    Ok(GramSpectrum { eigenvalues, raw_eigenvalues: raw, eigenvectors: vectors, clipped, violations })
}

/// Landmarks, their Gram spectrum, and a retained rank `m′`.
#[derive(Debug, Clone, PartialEq)]
pub struct MercerTruncation {
    landmarks: Vec<Vec<f64>>,
    spectrum: GramSpectrum,
    rank: usize,
}

impl MercerTruncation {
    /// Builds the landmark Gram of `k` and keeps the top `rank` eigenpairs.
    pub fn fit(k: &dyn Fn(&[f64], &[f64]) -> f64, landmarks: Vec<Vec<f64>>, rank: usize) -> Result<Self> {
        let m = landmarks.len();
        if m == 0 {
            return Err(Error::EmptyInput);
        }
        let dim = landmarks[0].len();
        if let Some(bad) = landmarks.iter().find(|l| l.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        let g = DMatrix::from_fn(m, m, |i, j| k(&landmarks[i], &landmarks[j]));
        Self::from_gram(landmarks, &g, rank)
    }

    pub fn from_gram(landmarks: Vec<Vec<f64>>, g: &DMatrix<f64>, rank: usize) -> Result<Self> {
        if g.nrows() != landmarks.len() {
            return Err(Error::DimensionMismatch { expected: landmarks.len(), got: g.nrows() });
        }
        let spectrum = gram_eigendecompose(g)?;
        let mut t = Self { landmarks, spectrum, rank: 0 };
        t.set_rank(rank)?;
        Ok(t)
    }

    /// A copy retaining `rank` eigenpairs.
    pub fn with_rank(&self, rank: usize) -> Result<Self> {
        let mut t = self.clone();
        t.set_rank(rank)?;
        Ok(t)
    }

    fn set_rank(&mut self, rank: usize) -> Result<()> {
        if rank == 0 || rank > self.spectrum.len() {
            return Err(Error::InvalidParameter(format!("rank must be in 1..={}, got {rank}", self.spectrum.len())));
        }
        for j in 0..rank {
            let v = self.spectrum.eigenvalues[j];
            if v <= 0.0 {
                return Err(Error::NonPositiveEigenvalue { index: j, value: v });
            }
        }
        self.rank = rank;
        Ok(())
    }

    pub fn landmarks(&self) -> &[Vec<f64>] {
        &self.landmarks
    }

    pub fn spectrum(&self) -> &GramSpectrum {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    /// `m′`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `V_{m′} Λ_{m′} V_{m′}ᵀ`.
    pub fn truncated_gram(&self) -> DMatrix<f64> {
        let m = self.landmarks.len();
        let v = self.spectrum.eigenvectors.columns(0, self.rank);
        let lam =
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.spectrum.eigenvalues[..self.rank]));
        let out = v * lam * v.transpose();
        debug_assert_eq!(out.nrows(), m);
        out
    }
}

/// `Φ_{m′}(x)` for landmark-based truncation `t` and kernel `k`.
pub fn nystrom_features(t: &MercerTruncation, k: &dyn Fn(&[f64], &[f64]) -> f64, x: &[f64]) -> Result<Vec<f64>> {
    let dim = t.landmarks[0].len();
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    let kx: Vec<f64> = t.landmarks.iter().map(|l| k(x, l)).collect();
    (0..t.rank)
        .map(|j| {
            let lam = t.spectrum.eigenvalues[j];
            if lam <= 0.0 {
                return Err(Error::NonPositiveEigenvalue { index: j, value: lam });
            }
            let col = t.spectrum.eigenvectors.column(j);
            Ok(col.iter().zip(&kx).map(|(v, k)| v * k).sum::<f64>() / lam.sqrt())
        })
        .collect()
}

/// `Σ_{j>m′} λ_j`. Ranks at or beyond `m` give 0.
pub fn truncation_error_bound(t: &MercerTruncation, rank: usize) -> f64 {
    t.spectrum.eigenvalues.iter().skip(rank).sum()
}

/// A truncation paired with the kernel it was fitted on.
#[derive(Clone)]
pub struct FiniteFeatureMap {
    truncation: MercerTruncation,
    kernel: PairKernel,
}

impl fmt::Debug for FiniteFeatureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteFeatureMap").field("truncation", &self.truncation).finish_non_exhaustive()
    }
}

impl FiniteFeatureMap {
    pub fn new(truncation: MercerTruncation, kernel: PairKernel) -> Self {
        Self { truncation, kernel }
    }

    pub fn fit(kernel: PairKernel, landmarks: Vec<Vec<f64>>, rank: usize) -> Result<Self> {
        let truncation = MercerTruncation::fit(kernel.as_ref(), landmarks, rank)?;
        Ok(Self { truncation, kernel })
    }

    pub fn truncation(&self) -> &MercerTruncation {
        &self.truncation
    }

    pub fn dimension(&self) -> usize {
        self.truncation.rank
    }

    /// Qubits used by the C2QE encoding of `Φ_{m′}`.
    pub fn qubits(&self) -> usize {
        qubit_count_for(self.truncation.rank)
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        nystrom_features(&self.truncation, self.kernel.as_ref(), x)
    }

    pub fn kernel(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.kernel)(x, y)
    }

    /// `⟨Φ(x), Φ(x′)⟩` computed classically.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(linalg::dot(&self.features(x)?, &self.features(y)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MercerEqkEstimate {
    pub value: f64,
    pub norm1_left: f64,
    pub norm1_right: f64,
}

/// `‖Φ(x)‖₁ ‖Φ(x′)‖₁ (2^n Tr{ρ_{Φ(x)} ρ_{Φ(x′)}} - 1)`.
pub fn mercer_to_eqk(fm: &FiniteFeatureMap, x: &[f64], y: &[f64]) -> Result<MercerEqkEstimate> {
    let fx = fm.features(x)?;
    let fy = fm.features(y)?;
    let (a, b) = (linalg::norm1(&fx), linalg::norm1(&fy));
    let rx = c2qe_encode(&L1UnitVector::normalize(&fx)?);
    let ry = c2qe_encode(&L1UnitVector::normalize(&fy)?);
    let dim = (1u64 << rx.qubits()) as f64;
    let value = a * b * (dim * hs_inner(&rx, &ry)? - 1.0);
    Ok(MercerEqkEstimate { value, norm1_left: a, norm1_right: b })
}

/// Observed eigenvalue decay. Nothing here is asserted asymptotically.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayDiagnostics {
    /// `λ_{j+1}/λ_j` where `λ_j > 0`.
    pub ratios: Vec<f64>,
    /// `tail_sums[r] = Σ_{j≥r} λ_j`.
    pub tail_sums: Vec<f64>,
    /// `√(Σ_{j≥r} λ_j²)`, the Frobenius error of the rank-`r` truncation.
    pub frobenius_tails: Vec<f64>,
    /// Least-squares slope of `ln λ_j` against `j` over positive eigenvalues
    /// above `1e-14 λ₁`; negative for decaying spectra.
    pub log_slope: f64,
}

impl DecayDiagnostics {
    /// Smallest rank whose discarded mass is at most `tol`.
    pub fn rank_for_tail(&self, tol: f64) -> usize {
        self.tail_sums.iter().position(|&t| t <= tol).unwrap_or(self.tail_sums.len()).max(1)
    }
}

pub fn decay_diagnostics(spectrum: &GramSpectrum) -> DecayDiagnostics {
    let l = &spectrum.eigenvalues;
    let ratios = l.windows(2).take_while(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    let mut tail_sums = vec![0.0; l.len() + 1];
    let mut frob = vec![0.0; l.len() + 1];
    for j in (0..l.len()).rev() {
        tail_sums[j] = tail_sums[j + 1] + l[j];
        frob[j] = frob[j + 1] + l[j] * l[j];
    }
    let frobenius_tails = frob.into_iter().map(f64::sqrt).collect();

    let floor = l.first().copied().unwrap_or(0.0) * 1e-14;
    let pts: Vec<(f64, f64)> =
        l.iter().enumerate().take_while(|(_, &v)| v > floor && v > 0.0).map(|(j, v)| (j as f64, v.ln())).collect();
    let log_slope = if pts.len() < 2 {
        0.0
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    DecayDiagnostics { ratios, tail_sums, frobenius_tails, log_slope }
}

/// `m` evenly spaced points on `[lo, hi]` (`m ≥ 2`), or the midpoint if `m = 1`.
pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    match m {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(sigma: f64) -> PairKernel {
        Arc::new(move |x: &[f64], y: &[f64]| (-linalg::sq_dist(x, y) / (2.0 * sigma * sigma)).exp())
    }

    fn constant() -> PairKernel {
        Arc::new(|_: &[f64], _: &[f64]| 1.0)
    }

    fn grid(m: usize) -> Vec<Vec<f64>> {
        linspace(-1.0, 1.0, m).into_iter().map(|v| vec![v]).collect()
    }

    #[test]
    fn constant_gram_is_rank_one() {
        let m = 7;
        let s = gram_eigendecompose(&DMatrix::from_element(m, m, 1.0)).unwrap();
        assert!((s.eigenvalues[0] - m as f64).abs() < 1e-12);
        assert!(s.eigenvalues[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(s.is_psd());
    }

    #[test]
    fn identity_gram() {
        let s = gram_eigendecompose(&DMatrix::identity(5, 5)).unwrap();
        assert!(s.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn asymmetric_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(gram_eigendecompose(&g), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn violations_flagged_and_noise_clipped() {
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1e-9, -0.5]));
        let s = gram_eigendecompose(&g).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 0.0, -0.5]);
        assert_eq!(s.clipped, vec![1]);
        assert_eq!(s.violations, vec![(2, -0.5)]);
        assert!(!s.is_psd());
    }

    #[test]
    fn gaussian_spectrum_decays_with_orthonormal_vectors() {
        let t = MercerTruncation::fit(gaussian(1.0).as_ref(), grid(40), 12).unwrap();
        let l = t.eigenvalues();
        assert!(l.windows(2).all(|w| w[0] >= w[1]));
        assert!(l[0] > 0.0 && l[11] < 1e-9 * l[0]);
        let v = &t.spectrum().eigenvectors;
        let gram = v.transpose() * v;
        assert!((gram - DMatrix::identity(40, 40)).abs().max() < 1e-10);
        let d = decay_diagnostics(t.spectrum());
        assert!(d.log_slope < -1.0);
    }

    #[test]
    fn constant_features() {
        let fm = FiniteFeatureMap::fit(constant(), grid(5), 1).unwrap();
        let a = fm.features(&[0.3]).unwrap();
        let b = fm.features(&[-0.9]).unwrap();
        assert_eq!(a.len(), 1);
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!((fm.inner(&[0.3], &[-0.9]).unwrap() - 1.0).abs() < 1e-12);
        assert!((mercer_to_eqk(&fm, &[0.3], &[-0.9]).unwrap().value - 1.0).abs() < 1e-12);
        assert!(matches!(
            MercerTruncation::fit(constant().as_ref(), grid(5), 2),
            Err(Error::NonPositiveEigenvalue { index: 1, .. })
        ));
    }

    #[test]
    fn full_rank_reproduces_gram() {
        let k = gaussian(0.5);
        let lm = grid(8);
        let fm = FiniteFeatureMap::fit(k.clone(), lm.clone(), 8).unwrap();
        for a in &lm {
            for b in &lm {
                assert!((fm.inner(a, b).unwrap() - k(a, b)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn truncation_bounds() {
        let t = MercerTruncation::fit(gaussian(1.0).as_ref(), grid(20), 10).unwrap();
        assert_eq!(truncation_error_bound(&t, 20), 0.0);
        assert!(truncation_error_bound(&t, 10) < truncation_error_bound(&t, 5));
        let r1 = MercerTruncation::fit(constant().as_ref(), grid(6), 1).unwrap();
        assert!(truncation_error_bound(&r1, 1).abs() < 1e-12);
    }

    #[test]
    fn eqk_matches_nystrom_and_kernel() {
        let k = gaussian(1.0);
        let fm = FiniteFeatureMap::fit(k.clone(), grid(40), 12).unwrap();
        assert_eq!(fm.qubits(), 2);
        for x in linspace(-1.0, 1.0, 9) {
            for y in linspace(-1.0, 1.0, 9) {
                let e = mercer_to_eqk(&fm, &[x], &[y]).unwrap();
                assert!((e.value - fm.inner(&[x], &[y]).unwrap()).abs() < 1e-9);
                assert!((e.value - k(&[x], &[y])).abs() < 0.02);
            }
        }
    }

    #[test]
    fn linspace_edges() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(0.0, 1.0, 1), vec![0.5]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
