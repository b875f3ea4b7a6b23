//! Gaussian kernels on preprocessed inputs, and the projected quantum kernel.
//!
//! A composition kernel is `k_f(x,x') = exp(-‖f(x) - f(x')‖²/2σ²)` for a
//! bounded preprocessor `f: X → [-B, B]^{g₁}`. It is PSD for any `f`, and
//! random Fourier features on the range of `f` approximate it with a
//! dimension depending on `g₁`, `B`, and `σ` rather than on `X`.
//!
//! The projected quantum kernel is the special case where `f` collects the
//! single-qubit reduced density matrices of an embedded state `U(x)|0⟩`:
//!
//! ```text
//! k_PQ(x,x') = exp(-γ Σ_k ‖ρ_k(x) - ρ_k(x')‖_F²),   γ = 1/(2σ²).
//! ```

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::pauli_state::L2UnitVector;
use crate::qrff::{qrff_kernel_estimate, QrffEstimate, QrffModel};
use crate::rff::{build_rff_map, required_dimension, BoundReport, RffMap};
use crate::spectral::ShiftInvariantKernel;

/// Slack allowed on the declared preprocessor box.
pub const BOX_TOL: f64 = 1e-9;

/// Largest statevector the circuit simulator will allocate.
pub const MAX_CIRCUIT_QUBITS: usize = 10;

pub type VectorMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A bounded preprocessing function `f: ℝ^d → [-B, B]^{g₁}`.
#[derive(Clone)]
pub struct Preprocessor {
    name: String,
    input_dim: usize,
    output_dim: usize,
    bound: f64,
    evaluator: VectorMap,
}

impl fmt::Debug for Preprocessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Preprocessor")
            .field("name", &self.name)
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .field("bound", &self.bound)
            .finish()
    }
}

impl Preprocessor {
    pub fn new(
        name: impl Into<String>,
        input_dim: usize,
        output_dim: usize,
        bound: f64,
        evaluator: VectorMap,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidParameter("preprocessor dimensions must be positive".into()));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!("preprocessor bound must be positive, got {bound}")));
        }
        Ok(Self { name: name.into(), input_dim, output_dim, bound, evaluator })
    }

    /// `f(x) = x` on `[-B, B]^d`.
    pub fn identity(dim: usize, bound: f64) -> Result<Self> {
        Self::new("identity", dim, dim, bound, Arc::new(|x: &[f64]| x.to_vec()))
    }

    /// Flattened single-qubit RDMs of `circuit`, `g₁ = 4N`, `B = 1`.
    pub fn reduced_density(circuit: EmbeddingCircuit) -> Self {
        let n = circuit.qubits();
        let d = circuit.input_dim();
        let c = Arc::new(circuit);
        let evaluator: VectorMap = Arc::new(move |x: &[f64]| {
            let state = statevector_encode(&c, x).expect("inputs validated by the preprocessor");
            let rdms = reduced_density_matrices(&state, c.qubits()).expect("statevector has 2^N entries");
            rdm_feature_vector(&rdms)
        });
        Self::new("reduced-density", d, 4 * n, 1.0, evaluator).expect("valid dimensions")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// `g₁`.
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// `B`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `f(x)`, checked against the declared box.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let out = (self.evaluator)(x);
        if out.len() != self.output_dim {
            return Err(Error::DimensionMismatch { expected: self.output_dim, got: out.len() });
        }
        for (index, &value) in out.iter().enumerate() {
            if !(value.abs() <= self.bound + BOX_TOL) {
                return Err(Error::OutOfBox { index, value, bound: self.bound });
            }
        }
        Ok(out)
    }
}

/// `k_f(x,x') = exp(-‖f(x) - f(x')‖²/2σ²)`.
#[derive(Debug, Clone)]
pub struct CompositionKernel {
    preprocessor: Preprocessor,
    sigma: f64,
}

impl CompositionKernel {
    pub fn new(preprocessor: Preprocessor, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { preprocessor, sigma })
    }

    pub fn preprocessor(&self) -> &Preprocessor {
        &self.preprocessor
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The Gaussian acting on the preprocessed domain.
    pub fn base_kernel(&self) -> ShiftInvariantKernel {
        ShiftInvariantKernel::gaussian(self.sigma, self.preprocessor.output_dim).expect("validated sigma")
    }
}

pub fn composition_kernel_eval(k: &CompositionKernel, x: &[f64], y: &[f64]) -> Result<f64> {
    let fx = k.preprocessor.apply(x)?;
    let fy = k.preprocessor.apply(y)?;
    Ok((-linalg::sq_dist(&fx, &fy) / (2.0 * k.sigma * k.sigma)).exp())
}

/// RFF on the preprocessed domain: `z_f = z ∘ f`.
#[derive(Debug, Clone)]
pub struct RffPpModel {
    kernel: CompositionKernel,
    map: RffMap,
}

impl RffPpModel {
    pub fn kernel(&self) -> &CompositionKernel {
        &self.kernel
    }

    pub fn map(&self) -> &RffMap {
        &self.map
    }
}

/// Samples `D/2` Gaussian frequencies of dimension `g₁` (stream 0 of `seed`).
pub fn rff_pp_build(k: &CompositionKernel, features: usize, seed: u64) -> Result<RffPpModel> {
    let map = build_rff_map(&k.base_kernel(), features, seed)?;
    Ok(RffPpModel { kernel: k.clone(), map })
}

pub fn rff_pp_features(model: &RffPpModel, x: &[f64]) -> Result<L2UnitVector> {
    let fx = model.kernel.preprocessor.apply(x)?;
    crate::rff::rff_features(&model.map, &fx)
}

/// `⟨z_f(x), z_f(x')⟩`.
pub fn rff_pp_estimate(model: &RffPpModel, x: &[f64], y: &[f64]) -> Result<f64> {
    let fx = model.kernel.preprocessor.apply(x)?;
    let fy = model.kernel.preprocessor.apply(y)?;
    crate::rff::rff_kernel_estimate(&model.map, &fx, &fy)
}

/// QRFF on the preprocessed domain.
#[derive(Debug, Clone)]
pub struct QrffPpModel {
    kernel: CompositionKernel,
    inner: QrffModel,
}

impl QrffPpModel {
    pub fn new(model: RffPpModel) -> Self {
        Self { kernel: model.kernel, inner: QrffModel::new(model.map) }
    }

    pub fn qubits(&self) -> usize {
        self.inner.qubits()
    }

    pub fn inner(&self) -> &QrffModel {
        &self.inner
    }
}

/// `g(f(x)) g(f(x')) (2^n Tr{ρ_f(x)ρ_f(x')} - 1)`.
pub fn qrff_pp_estimate(model: &QrffPpModel, x: &[f64], y: &[f64]) -> Result<QrffEstimate> {
    let fx = model.kernel.preprocessor.apply(x)?;
    let fy = model.kernel.preprocessor.apply(y)?;
    qrff_kernel_estimate(&model.inner, &fx, &fy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Circuit vocabulary: data-driven single-qubit rotations `R_axis(scale·x_i)`
/// and fixed two-qubit entanglers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Gate {
    Rotation { axis: Axis, qubit: usize, data_index: usize, scale: f64 },
    Cnot { control: usize, target: usize },
    Cz { control: usize, target: usize },
}

/// Data-embedding unitary `U(x)` on `N ≤ 10` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCircuit {
    qubits: usize,
    input_dim: usize,
    gates: Vec<Gate>,
}

impl EmbeddingCircuit {
    pub fn new(qubits: usize, input_dim: usize, gates: Vec<Gate>) -> Result<Self> {
        if qubits == 0 || qubits > MAX_CIRCUIT_QUBITS {
            return Err(Error::InvalidGate(format!("circuit needs 1..={MAX_CIRCUIT_QUBITS} qubits, got {qubits}")));
        }
        if input_dim == 0 {
            return Err(Error::InvalidGate("input dimension must be positive".into()));
        }
        for (i, g) in gates.iter().enumerate() {
            match *g {
                Gate::Rotation { qubit, data_index, scale, .. } => {
                    if qubit >= qubits {
                        return Err(Error::InvalidGate(format!("gate {i}: qubit {qubit} out of range")));
                    }
                    if data_index >= input_dim {
                        return Err(Error::InvalidGate(format!("gate {i}: data index {data_index} out of range")));
                    }
                    if !scale.is_finite() {
                        return Err(Error::InvalidGate(format!("gate {i}: non-finite scale")));
                    }
                }
                Gate::Cnot { control, target } | Gate::Cz { control, target } => {
                    if control >= qubits || target >= qubits || control == target {
                        return Err(Error::InvalidGate(format!(
                            "gate {i}: invalid control/target pair ({control}, {target})"
                        )));
                    }
                }
            }
        }
        Ok(Self { qubits, input_dim, gates })
    }

    /// Re-validates a deserialized circuit.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.qubits, self.input_dim, self.gates)
    }

    /// `layers` repetitions of: a Y rotation of every qubit by `x_{q mod d}`,
    /// a Z rotation by `x_{(q+1) mod d}`, then a CNOT ladder.
    pub fn rotation_ladder(qubits: usize, input_dim: usize, layers: usize) -> Result<Self> {
        let mut gates = Vec::new();
        for _ in 0..layers {
            for q in 0..qubits {
                gates.push(Gate::Rotation { axis: Axis::Y, qubit: q, data_index: q % input_dim, scale: 1.0 });
                gates.push(Gate::Rotation { axis: Axis::Z, qubit: q, data_index: (q + 1) % input_dim, scale: 1.0 });
            }
            for q in 0..qubits.saturating_sub(1) {
                gates.push(Gate::Cnot { control: q, target: q + 1 });
            }
        }
        Self::new(qubits, input_dim, gates)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }
}

fn rotation_matrix(axis: Axis, theta: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let re = |v: f64| Complex64::new(v, 0.0);
    match axis {
        Axis::X => [[re(c), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), re(c)]],
        Axis::Y => [[re(c), re(-s)], [re(s), re(c)]],
        Axis::Z => [[Complex64::new(c, -s), re(0.0)], [re(0.0), Complex64::new(c, s)]],
    }
}

fn apply_single(state: &mut [Complex64], qubit: usize, u: &[[Complex64; 2]; 2]) {
    let bit = 1usize << qubit;
    for i in 0..state.len() {
        if i & bit == 0 {
            let a = state[i];
            let b = state[i | bit];
            state[i] = u[0][0] * a + u[0][1] * b;
            state[i | bit] = u[1][0] * a + u[1][1] * b;
        }
    }
}

/// `U(x)|0…0⟩`, basis index bit `q` holding qubit `q`.
pub fn statevector_encode(circuit: &EmbeddingCircuit, x: &[f64]) -> Result<Vec<Complex64>> {
    if x.len() != circuit.input_dim {
        return Err(Error::DimensionMismatch { expected: circuit.input_dim, got: x.len() });
    }
    let mut state = vec![Complex64::new(0.0, 0.0); 1 << circuit.qubits];
    state[0] = Complex64::new(1.0, 0.0);
    for g in &circuit.gates {
        match *g {
            Gate::Rotation { axis, qubit, data_index, scale } => {
                apply_single(&mut state, qubit, &rotation_matrix(axis, scale * x[data_index]));
            }
            Gate::Cnot { control, target } => {
                let (cb, tb) = (1usize << control, 1usize << target);
                for i in 0..state.len() {
                    if i & cb != 0 && i & tb == 0 {
                        state.swap(i, i | tb);
                    }
                }
            }
            Gate::Cz { control, target } => {
                let mask = (1usize << control) | (1usize << target);
                for (i, amp) in state.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
        }
    }
    Ok(state)
}

/// Single-qubit reduced density matrices `ρ_1, …, ρ_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedStateVector {
    pub rdms: Vec<Matrix2<Complex64>>,
}

impl ReducedStateVector {
    /// Hermitian, unit trace and PSD, each within `1e-10`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (k, r) in self.rdms.iter().enumerate() {
            let herm = (r[(0, 1)] - r[(1, 0)].conj()).norm().max(r[(0, 0)].im.abs()).max(r[(1, 1)].im.abs());
            if herm > 1e-10 {
                return Err(format!("RDM {k} not Hermitian ({herm:e})"));
            }
            let (lo, _) = rdm_eigenvalues(r);
            let tr = r[(0, 0)].re + r[(1, 1)].re;
            if (tr - 1.0).abs() > 1e-10 {
                return Err(format!("RDM {k} trace {tr}"));
            }
            if lo < -1e-10 {
                return Err(format!("RDM {k} eigenvalue {lo:e}"));
            }
        }
        Ok(())
    }
}

/// Eigenvalues `(low, high)` of a Hermitian 2×2 matrix.
pub fn rdm_eigenvalues(r: &Matrix2<Complex64>) -> (f64, f64) {
    let a = r[(0, 0)].re;
    let d = r[(1, 1)].re;
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + r[(0, 1)].norm_sqr()).sqrt();
    (mid - rad, mid + rad)
}

/// Partial trace of `|ψ⟩⟨ψ|` onto each qubit.
pub fn reduced_density_matrices(state: &[Complex64], qubits: usize) -> Result<ReducedStateVector> {
    if qubits == 0 || qubits >= usize::BITS as usize || state.len() != 1usize << qubits {
        return Err(Error::DimensionMismatch { expected: 1usize << qubits.min(63), got: state.len() });
    }
    let rdms = (0..qubits)
        .map(|k| {
            let bit = 1usize << k;
            let mut m = Matrix2::<Complex64>::zeros();
            for i in 0..state.len() {
                if i & bit == 0 {
                    let a0 = state[i];
                    let a1 = state[i | bit];
                    m[(0, 0)] += a0 * a0.conj();
                    m[(1, 1)] += a1 * a1.conj();
                    m[(0, 1)] += a0 * a1.conj();
                }
            }
            m[(1, 0)] = m[(0, 1)].conj();
            m
        })
        .collect();
    Ok(ReducedStateVector { rdms })
}

/// Four reals per RDM: `ρ₀₀, ρ₁₁, √2·Re ρ₀₁, √2·Im ρ₀₁`. Euclidean distance
/// between flattenings equals the Frobenius distance between RDM lists.
pub fn rdm_feature_vector(rs: &ReducedStateVector) -> Vec<f64> {
    let s = std::f64::consts::SQRT_2;
    rs.rdms.iter().flat_map(|r| [r[(0, 0)].re, r[(1, 1)].re, s * r[(0, 1)].re, s * r[(0, 1)].im]).collect()
}

/// `Σ_k ‖ρ_k - σ_k‖_F²` computed on the complex matrices.
pub fn frobenius_distance_sq(a: &ReducedStateVector, b: &ReducedStateVector) -> f64 {
    a.rdms.iter().zip(&b.rdms).map(|(x, y)| (x - y).iter().map(|c| c.norm_sqr()).sum::<f64>()).sum()
}

/// `exp(-γ Σ_k ‖ρ_k(x) - ρ_k(x')‖_F²)` via statevector simulation.
pub fn projected_kernel_eval(circuit: &EmbeddingCircuit, gamma: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let rx = reduced_density_matrices(&statevector_encode(circuit, x)?, circuit.qubits)?;
    let ry = reduced_density_matrices(&statevector_encode(circuit, y)?, circuit.qubits)?;
    Ok((-gamma * frobenius_distance_sq(&rx, &ry)).exp())
}

/// The projected kernel as a composition kernel with `σ = 1/√(2γ)`.
pub fn projected_composition_kernel(circuit: &EmbeddingCircuit, gamma: f64) -> Result<CompositionKernel> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    CompositionKernel::new(Preprocessor::reduced_density(circuit.clone()), (2.0 * gamma).sqrt().recip())
}

/// Dimension bound for a composition kernel: the RFF inversion on the
/// `g₁`-dimensional preprocessed domain with `diam ≤ 2B√g₁` and Gaussian
/// spectral variance `g₁/σ²`.
///
/// `input_dim` is carried into the report only; the inversion itself runs in
/// dimension `g₁`.
pub fn projected_kernel_bound(
    input_dim: usize,
    epsilon: f64,
    bound: f64,
    g1: usize,
    sigma: f64,
    delta: f64,
) -> BoundReport {
    let g = g1 as f64;
    let sigma_p = g.sqrt() / sigma;
    let diam = 2.0 * bound * g.sqrt();
    let mut report = required_dimension(g1, epsilon, sigma_p, diam, delta);
    report.dim = g1;
    let _ = input_dim;
    report
}
