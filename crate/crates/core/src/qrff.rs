//! Random Fourier features read out as an embedding quantum kernel.
//!
//! The RFF vector `z(x)` has unit 2-norm, so it is rescaled by
//! `g(x) = ‖z(x)‖₁ ∈ [1, √D]` and encoded as a Pauli mixture on
//! `n = ⌈log₄(D+1)⌉` qubits. Then
//!
//! ```text
//! ⟨z(x), z(x')⟩ = g(x) g(x') (2^n Tr{ρ(x)ρ(x')} - 1).
//! ```
//!
//! Any error in the trace estimate is amplified by `g(x)g(x')·2^n`, which is
//! why estimates carry their `g` factors.

use rand::Rng;

use crate::error::Result;
use crate::linalg;
use crate::pauli_state::{c2qe_encode, hs_inner, hs_inner_sampled, qubit_count_for, L1UnitVector, PauliMixtureState};
use crate::rff::{rff_kernel_estimate, RffMap};

#[derive(Debug, Clone, PartialEq)]
pub struct QrffModel {
    map: RffMap,
    qubits: usize,
}

impl QrffModel {
    pub fn new(map: RffMap) -> Self {
        let qubits = qubit_count_for(map.features());
        Self { map, qubits }
    }

    pub fn map(&self) -> &RffMap {
        &self.map
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }
}

/// A kernel estimate together with the 1-norm factors that scale it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrffEstimate {
    pub value: f64,
    pub g_left: f64,
    pub g_right: f64,
}

impl QrffEstimate {
    /// `g(x) g(x') 2^n`, the factor multiplying any trace-estimation error.
    pub fn amplification(&self, qubits: usize) -> f64 {
        self.g_left * self.g_right * (1u64 << qubits) as f64
    }
}

/// `g(x) = ‖z(x)‖₁ = √(2/D) Σ_i |cos⟨ω_i,x⟩| + |sin⟨ω_i,x⟩|`.
pub fn g_factor(model: &QrffModel, x: &[f64]) -> Result<f64> {
    Ok(crate::rff::rff_features(&model.map, x)?.norm1())
}

/// `ρ(x) = C2QE(z(x)/‖z(x)‖₁)`.
pub fn qrff_encode(model: &QrffModel, x: &[f64]) -> Result<PauliMixtureState> {
    Ok(encode_with_factor(model, x)?.0)
}

fn encode_with_factor(model: &QrffModel, x: &[f64]) -> Result<(PauliMixtureState, f64)> {
    let z = crate::rff::rff_features(&model.map, x)?;
    let g = linalg::norm1(z.as_slice());
    let state = c2qe_encode(&L1UnitVector::normalize(z.as_slice())?);
    debug_assert_eq!(state.qubits(), model.qubits);
    Ok((state, g))
}

/// `g(x) g(x') (2^n Tr{ρ(x)ρ(x')} - 1)` with the exact Pauli-basis trace.
pub fn qrff_kernel_estimate(model: &QrffModel, x: &[f64], y: &[f64]) -> Result<QrffEstimate> {
    let (rx, gx) = encode_with_factor(model, x)?;
    let (ry, gy) = encode_with_factor(model, y)?;
    let dim = (1u64 << model.qubits) as f64;
    let value = gx * gy * (dim * hs_inner(&rx, &ry)? - 1.0);
    Ok(QrffEstimate { value, g_left: gx, g_right: gy })
}

/// As [`qrff_kernel_estimate`], with the trace replaced by a `shots`-shot
/// SWAP-test estimate.
pub fn qrff_kernel_estimate_sampled<R: Rng + ?Sized>(
    model: &QrffModel,
    x: &[f64],
    y: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<QrffEstimate> {
    let (rx, gx) = encode_with_factor(model, x)?;
    let (ry, gy) = encode_with_factor(model, y)?;
    let dim = (1u64 << model.qubits) as f64;
    let value = gx * gy * (dim * hs_inner_sampled(&rx, &ry, shots, rng)? - 1.0);
    Ok(QrffEstimate { value, g_left: gx, g_right: gy })
}

/// `|qrff - rff|` for one pair.
pub fn qrff_rff_gap(model: &QrffModel, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok((qrff_kernel_estimate(model, x, y)?.value - rff_kernel_estimate(&model.map, x, y)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli_state::mixture_to_dense;
    use crate::rff::build_rff_map;
    use crate::seeded_rng;
    use crate::spectral::{ShiftInvariantKernel, SpectralSample};
    use std::f64::consts::FRAC_PI_4;

    fn model(d: usize, features: usize, seed: u64) -> QrffModel {
        let k = ShiftInvariantKernel::gaussian(1.0, d).unwrap();
        QrffModel::new(build_rff_map(&k, features, seed).unwrap())
    }

    #[test]
    fn g_factor_single_frequency() {
        let map = RffMap::from_frequencies(1, vec![SpectralSample(vec![1.0])], 0).unwrap();
        let m = QrffModel::new(map);
        assert!((g_factor(&m, &[0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((g_factor(&m, &[FRAC_PI_4]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn g_factor_is_feature_one_norm() {
        let m = model(3, 100, 4);
        let mut rng = seeded_rng(4, 1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = g_factor(&m, &x).unwrap();
            let z = crate::rff::rff_features(m.map(), &x).unwrap();
            let direct: f64 = z.as_slice().iter().map(|v| v.abs()).sum();
            assert!((g - direct).abs() < 1e-12);
            assert!((1.0 - 1e-12..=10.0 + 1e-12).contains(&g));
        }
    }

    #[test]
    fn qubit_counts_follow_feature_dimension() {
        assert_eq!(model(1, 2, 0).qubits(), 1);
        assert_eq!(qubit_count_for(15), 2);
        let m = model(2, 62, 1);
        assert_eq!(m.qubits(), 3);
        let rho = qrff_encode(&m, &[0.3, -0.8]).unwrap();
        assert_eq!(rho.qubits(), 3);
        mixture_to_dense(&rho).unwrap().check_invariants().unwrap();
    }

    #[test]
    fn self_estimate_is_one() {
        let m = model(2, 14, 2);
        let e = qrff_kernel_estimate(&m, &[0.1, 0.2], &[0.1, 0.2]).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matches_classical_d14() {
        let m = model(2, 14, 3);
        let mut rng = seeded_rng(3, 1);
        for _ in 0..100 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let y = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            assert!(qrff_rff_gap(&m, &x, &y).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn sampled_estimate_within_propagated_error() {
        let m = model(2, 14, 5);
        let mut rng = seeded_rng(5, 2);
        let x = [0.3, -0.1];
        let y = [-0.5, 0.4];
        let exact = qrff_kernel_estimate(&m, &x, &y).unwrap();
        let shots = 1_000_000u64;
        let noisy = qrff_kernel_estimate_sampled(&m, &x, &y, shots, &mut rng).unwrap();
        // SWAP-test estimate has sd ≤ 1/√shots; the kernel scales it by g g' 2^n.
        let tol = 3.0 * exact.amplification(m.qubits()) / (4.0 * shots as f64).sqrt();
        assert!((noisy.value - exact.value).abs() <= tol, "{} vs {} (tol {tol})", noisy.value, exact.value);
    }
}
