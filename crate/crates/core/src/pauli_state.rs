//! Classical-to-quantum embedding of real vectors as Pauli-mixture states.
//!
//! A 1-norm unit vector `r ∈ ℝ^d` is mapped to the `n = ⌈log₄(d+1)⌉`-qubit
//! state
//!
//! ```text
//! ρ_r = (I + Σ_i r_i P_i) / 2^n
//! ```
//!
//! where `P_1, …, P_{4^n-1}` are the non-identity Pauli words. The state is a
//! classical mixture of the Pauli eigenstates `(I ± P_i)/2^n`, drawn with
//! probability `|r_i|`. Because distinct Pauli words are trace-orthogonal,
//! `Tr{ρ_r ρ_s} = (1 + ⟨r, s⟩)/2^n`, which turns Euclidean inner products into
//! Hilbert-Schmidt ones.
//!
//! States are stored sparsely in the Pauli coefficient basis; [`mixture_to_dense`]
//! materializes the `2^n × 2^n` matrix for validation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for accepting user-supplied normalized vectors.
pub const INPUT_NORM_TOL: f64 = 1e-9;

/// Largest qubit count the dense backend will materialize.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Largest qubit count whose Pauli words fit a `u64` index.
pub const MAX_QUBITS: usize = 31;

fn check_and_rescale(entries: Vec<f64>, norm: &'static str, value: f64) -> Result<Vec<f64>> {
    if entries.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !value.is_finite() || (value - 1.0).abs() > INPUT_NORM_TOL {
        return Err(Error::NotNormalized { norm, value });
    }
    Ok(entries.into_iter().map(|x| x / value).collect())
}

/// A real vector with unit 1-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct L1UnitVector(Vec<f64>);

impl L1UnitVector {
    /// Accepts vectors whose 1-norm is within `1e-9` of one and rescales them
    /// to unit norm.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let value = linalg::norm1(&entries);
        check_and_rescale(entries, "1", value).map(Self)
    }

    /// Divides by the 1-norm.
    pub fn normalize(entries: &[f64]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        let value = linalg::norm1(entries);
        if value == 0.0 || !value.is_finite() {
            return Err(Error::ZeroFeatureVector);
        }
        Ok(Self(entries.iter().map(|x| x / value).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// A real vector with unit 2-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct L2UnitVector(Vec<f64>);

impl L2UnitVector {
    /// Accepts vectors whose 2-norm is within `1e-9` of one and rescales them
    /// to unit norm.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let value = linalg::norm2(&entries);
        check_and_rescale(entries, "2", value).map(Self)
    }

    pub fn normalize(entries: &[f64]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        let value = linalg::norm2(entries);
        if value == 0.0 || !value.is_finite() {
            return Err(Error::ZeroFeatureVector);
        }
        Ok(Self(entries.iter().map(|x| x / value).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm1(&self) -> f64 {
        linalg::norm1(&self.0)
    }
}

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_digit(d: u64) -> Self {
        match d {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    /// The 2×2 matrix in the computational basis.
    pub fn matrix(self) -> DMatrix<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let m = match self {
            Pauli::I => [l, o, o, l],
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        };
        DMatrix::from_row_slice(2, 2, &m)
    }
}

/// A non-identity Pauli word on `n` qubits.
///
/// The index is read as little-endian base-4 digits: digit `q` selects the
/// operator on qubit `q` via `0 → I, 1 → X, 2 → Y, 3 → Z`. Qubit `q` is bit
/// `q` of a computational basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWordIndex {
    index: u64,
    qubits: usize,
}

impl PauliWordIndex {
    pub fn new(index: u64, qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS || index == 0 || index >= 1u64 << (2 * qubits) {
            return Err(Error::InvalidPauliIndex { index, qubits });
        }
        Ok(Self { index, qubits })
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// Operator on each qubit, qubit 0 first.
    pub fn paulis(&self) -> Vec<Pauli> {
        (0..self.qubits).map(|q| Pauli::from_digit((self.index >> (2 * q)) & 3)).collect()
    }

    /// Bit masks `(x, z, y_count)`: `P|b⟩ = i^{y_count} (-1)^{popcount(b & z)} |b ⊕ x⟩`.
    fn masks(&self) -> (usize, usize, u32) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ys = 0u32;
        for (q, p) in self.paulis().into_iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    ys += 1;
                }
                Pauli::Z => z |= 1 << q,
            }
        }
        (x, z, ys)
    }
}

/// `n = ⌈log₄(d+1)⌉`: the fewest qubits whose `4^n - 1` non-identity Pauli
/// words can hold `d` coefficients.
pub fn qubit_count_for(d: usize) -> usize {
    assert!(d >= 1, "dimension must be positive");
    let mut n = 0usize;
    let mut capacity: u128 = 0; // 4^n - 1
    while capacity < d as u128 {
        n += 1;
        capacity = (1u128 << (2 * n)) - 1;
    }
    n
}

/// Sign of a sampled Pauli eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `(I + Σ_i r_i P_i)/2^n`, stored by its non-zero Pauli coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliMixtureState {
    qubits: usize,
    /// sorted by index, no zeros
    coeffs: Vec<(u64, f64)>,
}

impl PauliMixtureState {
    /// Builds a state from explicit `(index, coefficient)` pairs.
    ///
    /// Coefficients must have unit total 1-norm; indices must be distinct
    /// non-identity words on `qubits` qubits.
    pub fn from_coefficients(qubits: usize, coeffs: Vec<(u64, f64)>) -> Result<Self> {
        let mut c: Vec<(u64, f64)> = Vec::with_capacity(coeffs.len());
        for (index, value) in coeffs {
            PauliWordIndex::new(index, qubits)?;
            if value != 0.0 {
                c.push((index, value));
            }
        }
        c.sort_by_key(|&(i, _)| i);
        if c.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate Pauli word".into()));
        }
        let total: f64 = c.iter().map(|(_, v)| v.abs()).sum();
        if (total - 1.0).abs() > INPUT_NORM_TOL {
            return Err(Error::NotNormalized { norm: "1", value: total });
        }
        for entry in &mut c {
            entry.1 /= total;
        }
        Ok(Self { qubits, coeffs: c })
    }

    /// The pure eigenstate `(I ± P)/2^n`.
    pub fn pure(word: PauliWordIndex, sign: Sign) -> Self {
        Self { qubits: word.qubits, coeffs: vec![(word.index, sign.value())] }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// Number of stored (non-zero) coefficients.
    pub fn support(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (PauliWordIndex, f64)> + '_ {
        let qubits = self.qubits;
        self.coeffs.iter().map(move |&(index, v)| (PauliWordIndex { index, qubits }, v))
    }

    /// Coefficient of Pauli word `index`, zero when absent.
    pub fn coefficient(&self, index: u64) -> f64 {
        self.coeffs.binary_search_by_key(&index, |&(i, _)| i).map(|pos| self.coeffs[pos].1).unwrap_or(0.0)
    }

    /// `Σ_i r_i r'_i`, iterating the smaller support.
    fn coefficient_overlap(&self, other: &Self) -> f64 {
        let (small, large) = if self.coeffs.len() <= other.coeffs.len() { (self, other) } else { (other, self) };
        small.coeffs.iter().map(|&(i, v)| v * large.coefficient(i)).sum()
    }
}

/// Algorithm C2QE as a deterministic map: entry `j` of `r` (0-based) becomes the
/// coefficient of Pauli word `j + 1`; padding entries are implicit zeros.
pub fn c2qe_encode(r: &L1UnitVector) -> PauliMixtureState {
    let qubits = qubit_count_for(r.dim());
    let coeffs = r.as_slice().iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (j as u64 + 1, v)).collect();
    PauliMixtureState { qubits, coeffs }
}

/// One run of the preparation: draws word `i` with probability `|r_i|` and
/// the sign of `r_i`. The returned component is the pure state
/// `(I + sign·P_i)/2^n`; averaging over draws gives [`c2qe_encode`]'s state.
pub fn sample_pure_component<R: Rng + ?Sized>(r: &L1UnitVector, rng: &mut R) -> (PauliWordIndex, Sign) {
    let weights: Vec<f64> = r.as_slice().iter().map(|v| v.abs()).collect();
    let dist = WeightedIndex::new(&weights).expect("unit 1-norm vector has positive total weight");
    let j = dist.sample(rng);
    let word = PauliWordIndex { index: j as u64 + 1, qubits: qubit_count_for(r.dim()) };
    let sign = if r.as_slice()[j] < 0.0 { Sign::Minus } else { Sign::Plus };
    (word, sign)
}

/// A dense `2^n × 2^n` density matrix, used to cross-check the Pauli-basis
/// shortcuts.
#[derive(Debug, Clone)]
pub struct DenseDensityMatrix {
    qubits: usize,
    entries: DMatrix<Complex64>,
}

impl DenseDensityMatrix {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Largest `|ρ_ij - conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_min_eigenvalue(&self.entries)
    }

    /// `Tr{ρσ}` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        if self.qubits != other.qubits {
            return Err(Error::QubitMismatch(self.qubits, other.qubits));
        }
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.entries[(i, j)] * other.entries[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Hermitian within `1e-12`, unit trace within `1e-12`, minimum eigenvalue
    /// at least `-1e-10`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(format!("not Hermitian: deviation {herm:e}"));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(format!("trace {tr} is not 1"));
        }
        let min = self.min_eigenvalue();
        if min < -1e-10 {
            return Err(format!("negative eigenvalue {min:e}"));
        }
        Ok(())
    }
}

/// Materializes `(I + Σ r_i P_i)/2^n`. Each Pauli word acts as a signed
/// permutation of basis states, so its entries are written directly from the
/// bit masks.
pub fn mixture_to_dense(state: &PauliMixtureState) -> Result<DenseDensityMatrix> {
    let n = state.qubits;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::QubitGuard { qubits: n, max: MAX_DENSE_QUBITS });
    }
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    let mut m = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(scale, 0.0);
    let phases =
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];
    for (word, r) in state.coefficients() {
        let (x, z, ys) = word.masks();
        let base = phases[(ys % 4) as usize] * (r * scale);
        for b in 0..dim {
            let sign = if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(b ^ x, b)] += base * sign;
        }
    }
    Ok(DenseDensityMatrix { qubits: n, entries: m })
}

/// `Tr{ρσ} = (1 + Σ_i r_i r'_i)/2^n`, evaluated in the Pauli basis.
pub fn hs_inner(a: &PauliMixtureState, b: &PauliMixtureState) -> Result<f64> {
    if a.qubits != b.qubits {
        return Err(Error::QubitMismatch(a.qubits, b.qubits));
    }
    Ok((1.0 + a.coefficient_overlap(b)) / (1u64 << a.qubits) as f64)
}

/// Shot-based SWAP-test estimate of `Tr{ρσ}`.
///
/// Each shot measures the ancilla in `|0⟩` with probability
/// `p = (1 + Tr{ρσ})/2`; the estimate is `2·(hits/shots) - 1`.
pub fn hs_inner_sampled<R: Rng + ?Sized>(
    a: &PauliMixtureState,
    b: &PauliMixtureState,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let overlap = hs_inner(a, b)?;
    let p = ((1.0 + overlap) / 2.0).clamp(0.0, 1.0);
    let hits = Binomial::new(shots, p).expect("probability lies in [0, 1]").sample(rng);
    Ok(2.0 * hits as f64 / shots as f64 - 1.0)
}

/// `⟨r, r'⟩ = 2^n Tr{ρ_r ρ_r'} - 1` for states encoding 1-norm unit vectors.
pub fn euclid_from_states(a: &PauliMixtureState, b: &PauliMixtureState) -> Result<f64> {
    let n = a.qubits;
    Ok((1u64 << n) as f64 * hs_inner(a, b)? - 1.0)
}

/// Output of [`renormalized_inner`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormalizedInner {
    /// `‖r‖₁‖r'‖₁ (2^n Tr{ρ_r̃ ρ_r̃'} - 1)`
    pub value: f64,
    pub norm1_left: f64,
    pub norm1_right: f64,
}

/// Inner product of 2-norm unit vectors through 1-norm renormalized
/// encodings; the returned factors lie in `[1, √d]`.
pub fn renormalized_inner(r: &L2UnitVector, s: &L2UnitVector) -> Result<RenormalizedInner> {
    if r.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), got: s.dim() });
    }
    let norm1_left = r.norm1();
    let norm1_right = s.norm1();
    let rho = c2qe_encode(&L1UnitVector::normalize(r.as_slice())?);
    let sigma = c2qe_encode(&L1UnitVector::normalize(s.as_slice())?);
    let value = norm1_left * norm1_right * euclid_from_states(&rho, &sigma)?;
    Ok(RenormalizedInner { value, norm1_left, norm1_right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        a.kronecker(b)
    }

    /// Independent construction: P_{n-1} ⊗ … ⊗ P_0 (qubit 0 least significant).
    fn word_matrix_by_kronecker(word: PauliWordIndex) -> DMatrix<Complex64> {
        let ps = word.paulis();
        let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for p in ps.iter().rev() {
            m = kron(&m, &p.matrix());
        }
        m
    }

    fn random_l1<R: Rng>(d: usize, rng: &mut R) -> L1UnitVector {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        L1UnitVector::normalize(&v).unwrap()
    }

    #[test]
    fn qubit_counts() {
        assert_eq!(qubit_count_for(1), 1);
        assert_eq!(qubit_count_for(3), 1);
        assert_eq!(qubit_count_for(4), 2);
        assert_eq!(qubit_count_for(15), 2);
        assert_eq!(qubit_count_for(16), 3);
        assert_eq!(qubit_count_for(63), 3);
        assert_eq!(qubit_count_for(64), 4);
    }

    #[test]
    fn pauli_indexing_is_little_endian() {
        let w = PauliWordIndex::new(1 + 4 * 3, 2).unwrap();
        assert_eq!(w.paulis(), vec![Pauli::X, Pauli::Z]);
        assert!(PauliWordIndex::new(0, 2).is_err());
        assert!(PauliWordIndex::new(16, 2).is_err());
        assert!(PauliWordIndex::new(15, 2).is_ok());
    }

    #[test]
    fn bitmask_action_matches_kronecker_products() {
        for n in 1..=3 {
            for idx in 1..(1u64 << (2 * n)) {
                let w = PauliWordIndex::new(idx, n).unwrap();
                let st = PauliMixtureState::pure(w, Sign::Plus);
                let dense = mixture_to_dense(&st).unwrap();
                let dim = 1 << n;
                let expect =
                    (DMatrix::identity(dim, dim) + word_matrix_by_kronecker(w)) * Complex64::new(1.0 / dim as f64, 0.0);
                let diff = (dense.entries() - expect).iter().map(|c| c.norm()).fold(0.0, f64::max);
                assert!(diff < 1e-15, "word {idx} on {n} qubits: {diff}");
            }
        }
    }

    #[test]
    fn encode_single_entry() {
        let st = c2qe_encode(&L1UnitVector::new(vec![1.0]).unwrap());
        assert_eq!(st.qubits(), 1);
        assert_eq!(st.support(), 1);
        assert_eq!(st.coefficient(1), 1.0);
        let dense = mixture_to_dense(&st).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((dense.entries()[(i, j)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn encode_pads_implicitly() {
        let st = c2qe_encode(&L1UnitVector::new(vec![0.5, -0.5]).unwrap());
        assert_eq!(st.qubits(), 1);
        assert_eq!(st.support(), 2);
        assert_eq!(st.coefficient(1), 0.5);
        assert_eq!(st.coefficient(2), -0.5);
        assert_eq!(st.coefficient(3), 0.0);
    }

    #[test]
    fn z_state_is_projector() {
        let st = PauliMixtureState::pure(PauliWordIndex::new(3, 1).unwrap(), Sign::Plus);
        let d = mixture_to_dense(&st).unwrap();
        let e = d.entries();
        assert!((e[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(e[(1, 1)].norm() < 1e-15 && e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn unnormalized_rejected() {
        assert!(matches!(L1UnitVector::new(vec![0.5, 0.6]), Err(Error::NotNormalized { .. })));
        assert!(L1UnitVector::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        assert!(L1UnitVector::new(vec![]).is_err());
        assert!(L2UnitVector::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn forty_dim_vector_is_valid_state() {
        let mut rng = seeded_rng(40, 0);
        let r = random_l1(40, &mut rng);
        let st = c2qe_encode(&r);
        assert_eq!(st.qubits(), 3);
        assert_eq!(st.support(), 40);
        mixture_to_dense(&st).unwrap().check_invariants().unwrap();
    }

    #[test]
    fn fifteen_coefficient_mixture() {
        let mut rng = seeded_rng(15, 0);
        let r = random_l1(15, &mut rng);
        let d = mixture_to_dense(&c2qe_encode(&r)).unwrap();
        assert!(d.min_eigenvalue() >= -1e-12);
        assert!((d.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_guard() {
        let st = PauliMixtureState::pure(PauliWordIndex::new(1, 13).unwrap(), Sign::Plus);
        assert!(matches!(mixture_to_dense(&st), Err(Error::QubitGuard { qubits: 13, .. })));
    }

    #[test]
    fn hs_inner_basis_states() {
        let e1 = c2qe_encode(&L1UnitVector::new(vec![1.0, 0.0]).unwrap());
        let e2 = c2qe_encode(&L1UnitVector::new(vec![0.0, 1.0]).unwrap());
        assert_eq!(hs_inner(&e1, &e1).unwrap(), 1.0);
        assert_eq!(hs_inner(&e1, &e2).unwrap(), 0.5);
        assert_eq!(euclid_from_states(&e1, &e1).unwrap(), 1.0);
        assert_eq!(euclid_from_states(&e1, &e2).unwrap(), 0.0);
        let big = c2qe_encode(&L1UnitVector::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap());
        assert_eq!(hs_inner(&e1, &big), Err(Error::QubitMismatch(1, 2)));
    }

    #[test]
    fn hs_inner_matches_dense_n3() {
        let mut rng = seeded_rng(3, 0);
        let a = c2qe_encode(&random_l1(50, &mut rng));
        let b = c2qe_encode(&random_l1(63, &mut rng));
        let fast = hs_inner(&a, &b).unwrap();
        let dense = mixture_to_dense(&a).unwrap().trace_product(&mixture_to_dense(&b).unwrap()).unwrap();
        assert!((fast - dense.re).abs() < 1e-10 && dense.im.abs() < 1e-12);
    }

    #[test]
    fn trace_identity_d25() {
        let mut rng = seeded_rng(25, 0);
        let r = random_l1(25, &mut rng);
        let s = random_l1(25, &mut rng);
        let got = euclid_from_states(&c2qe_encode(&r), &c2qe_encode(&s)).unwrap();
        let direct: f64 = r.as_slice().iter().zip(s.as_slice()).map(|(a, b)| a * b).sum();
        assert!((got - direct).abs() < 1e-12);
    }

    #[test]
    fn renormalized_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = L2UnitVector::new(vec![h, h]).unwrap();
        let out = renormalized_inner(&r, &r).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12);
        assert!((out.norm1_left - 2f64.sqrt()).abs() < 1e-12);
        let a = L2UnitVector::new(vec![1.0, 0.0]).unwrap();
        let b = L2UnitVector::new(vec![0.0, 1.0]).unwrap();
        assert!(renormalized_inner(&a, &b).unwrap().value.abs() < 1e-15);
    }

    #[test]
    fn renormalized_random_d10() {
        let mut rng = seeded_rng(10, 0);
        let mk = |rng: &mut crate::SeededRng| {
            let v: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            L2UnitVector::normalize(&v).unwrap()
        };
        let r = mk(&mut rng);
        let s = mk(&mut rng);
        let out = renormalized_inner(&r, &s).unwrap();
        let direct: f64 = r.as_slice().iter().zip(s.as_slice()).map(|(a, b)| a * b).sum();
        assert!((out.value - direct).abs() < 1e-10);
        for f in [out.norm1_left, out.norm1_right] {
            assert!(f >= 1.0 - 1e-12 && f <= 10f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn sampling_single_support() {
        let r = L1UnitVector::new(vec![1.0]).unwrap();
        let mut rng = seeded_rng(1, 0);
        for _ in 0..100 {
            let (w, s) = sample_pure_component(&r, &mut rng);
            assert_eq!((w.index(), s), (1, Sign::Plus));
        }
    }

    #[test]
    fn sampling_frequencies_and_signs() {
        let r = L1UnitVector::new(vec![0.5, -0.5]).unwrap();
        let mut rng = seeded_rng(2, 0);
        let draws = 100_000;
        let mut x = 0;
        for _ in 0..draws {
            let (w, s) = sample_pure_component(&r, &mut rng);
            match w.index() {
                1 => {
                    assert_eq!(s, Sign::Plus);
                    x += 1;
                }
                2 => assert_eq!(s, Sign::Minus),
                other => panic!("unexpected word {other}"),
            }
        }
        let freq = x as f64 / draws as f64;
        // binomial sd = 0.5/sqrt(1e5) ≈ 0.00158; the band is > 6 sd wide
        assert!((0.49..=0.51).contains(&freq), "{freq}");
    }

    #[test]
    fn zero_entries_never_drawn() {
        let r = L1UnitVector::new(vec![0.3, 0.0, -0.7]).unwrap();
        let mut rng = seeded_rng(3, 0);
        for _ in 0..10_000 {
            assert_ne!(sample_pure_component(&r, &mut rng).0.index(), 2);
        }
    }

    #[test]
    fn sampled_average_reproduces_mixture() {
        // Averaging sampled pure components approaches the encoded coefficients.
        let r = L1UnitVector::new(vec![0.2, -0.5, 0.3]).unwrap();
        let mut rng = seeded_rng(4, 0);
        let mut acc = [0.0; 3];
        let draws = 200_000;
        for _ in 0..draws {
            let (w, s) = sample_pure_component(&r, &mut rng);
            acc[w.index() as usize - 1] += s.value();
        }
        for (a, want) in acc.iter().zip(r.as_slice()) {
            assert!((a / draws as f64 - want).abs() < 0.01);
        }
    }

    #[test]
    fn swap_test_single_shot() {
        let e1 = c2qe_encode(&L1UnitVector::new(vec![1.0, 0.0]).unwrap());
        let e2 = c2qe_encode(&L1UnitVector::new(vec![0.0, 1.0]).unwrap());
        let mut rng = seeded_rng(5, 0);
        for _ in 0..50 {
            let v = hs_inner_sampled(&e1, &e2, 1, &mut rng).unwrap();
            assert!(v == 1.0 || v == -1.0);
        }
        assert!(hs_inner_sampled(&e1, &e2, 0, &mut rng).is_err());
    }

    #[test]
    fn swap_test_identical_pure_states() {
        let e1 = c2qe_encode(&L1UnitVector::new(vec![1.0]).unwrap());
        let mut rng = seeded_rng(6, 0);
        let v = hs_inner_sampled(&e1, &e1, 1_000_000, &mut rng).unwrap();
        assert!((v - 1.0).abs() <= 0.005);
    }

    #[test]
    fn swap_test_half_overlap() {
        let e1 = c2qe_encode(&L1UnitVector::new(vec![1.0, 0.0]).unwrap());
        let e2 = c2qe_encode(&L1UnitVector::new(vec![0.0, 1.0]).unwrap());
        let mut rng = seeded_rng(7, 0);
        let v = hs_inner_sampled(&e1, &e2, 10_000, &mut rng).unwrap();
        // sd = 2·sqrt(0.75·0.25/1e4) ≈ 0.0087
        assert!((v - 0.5).abs() <= 0.02, "{v}");
    }
}
