//! Checks against values computed independently of the library code paths.

use eqk::composition::{projected_kernel_eval, Axis, EmbeddingCircuit, Gate};
use eqk::linalg::hermitian_min_eigenvalue;
use eqk::pauli_state::{c2qe_encode, hs_inner, hs_inner_sampled, L1UnitVector};
use eqk::rff::{
    build_rff_map, central_second_derivative, required_dimension, required_precision_bits, rff_kernel_estimate,
    smooth_dimension_bound,
};
use eqk::seeded_rng;
use eqk::spectral::{
    gaussian_second_moment_quadrature, gaussian_spectral_sample, gram_matrix, spectral_variance, trig_poly_is_psd,
    ShiftInvariantKernel, TrigPolynomial, TrigTerm,
};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

/// `d · ∫ t² N(t; 0, σ⁻²) dt` by the composite trapezoid rule.
fn trapezoid_second_moment(sigma: f64, dim: usize) -> f64 {
    let s2 = 1.0 / (sigma * sigma);
    let half = 12.0 * s2.sqrt();
    let n = 200_000;
    let h = 2.0 * half / n as f64;
    let f = |t: f64| t * t * (-t * t / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
    let inner: f64 = (1..n).map(|i| f(-half + i as f64 * h)).sum();
    dim as f64 * h * (inner + 0.5 * (f(-half) + f(half)))
}

#[test]
fn second_moment_quadratures_agree() {
    for (sigma, d) in [(1.0, 1), (0.5, 2), (2.0, 5), (1.3, 3)] {
        let oracle = trapezoid_second_moment(sigma, d);
        let lib = gaussian_second_moment_quadrature(sigma, d);
        let closed = spectral_variance(&ShiftInvariantKernel::gaussian(sigma, d).unwrap()).unwrap();
        assert!((oracle - lib).abs() < 1e-8 * oracle, "{oracle} vs {lib}");
        assert!((oracle - closed).abs() < 1e-8 * oracle);
        // the d/σ expression only coincides at σ = 1
        if sigma != 1.0 {
            assert!((oracle - d as f64 / sigma).abs() > 1e-3);
        }
    }
}

#[test]
fn gaussian_sampler_moments() {
    let sigma = 0.5;
    let mut rng = seeded_rng(2024, 0);
    let n = 200_000;
    let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let w = gaussian_spectral_sample(sigma, 1, &mut rng).0[0];
        m1 += w;
        m2 += w * w;
        m4 += w.powi(4);
    }
    let (m1, m2, m4) = (m1 / n as f64, m2 / n as f64, m4 / n as f64);
    let var = 1.0 / (sigma * sigma);
    assert!(m1.abs() < 4.0 * (var / n as f64).sqrt());
    assert!((m2 / var - 1.0).abs() < 0.02);
    // Gaussian kurtosis is 3.
    assert!((m4 / (m2 * m2) - 3.0).abs() < 0.1);
}

/// `k⁗(t)` for `k(t) = exp(-t²/2σ²)`.
fn gaussian_fourth_derivative(t: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (t.powi(4) / s2.powi(4) - 6.0 * t * t / s2.powi(3) + 3.0 / (s2 * s2)) * (-t * t / (2.0 * s2)).exp()
}

#[test]
fn fourth_derivative_peaks_at_origin() {
    for sigma in [0.5, 1.0, 2.0] {
        let sup = (0..=20_000)
            .map(|i| gaussian_fourth_derivative(-10.0 * sigma + i as f64 * sigma * 1e-3, sigma).abs())
            .fold(0.0, f64::max);
        assert!((sup - 3.0 / sigma.powi(4)).abs() < 1e-12 * sup);
    }
}

#[test]
fn finite_difference_meets_precision() {
    let sigma = 1.0;
    let k = |d: &[f64]| (-d[0] * d[0] / (2.0 * sigma * sigma)).exp();
    let l = 3.0 / sigma.powi(4);
    for eps in [1e-2, 1e-4, 1e-6] {
        let p = required_precision_bits(l, eps);
        let h = 2f64.powi(-(p as i32));
        let approx = central_second_derivative(&k, 0, &[0.0], h);
        assert!((approx + 1.0).abs() <= eps, "eps {eps}: {approx}");
    }
    assert_eq!(required_precision_bits(12.0, 1.0), 0);
}

#[test]
fn inversion_matches_precomputed_threshold() {
    // D = 53872 is the smallest even D with the bound below 0.01 here;
    // the bound at 53870 is about 0.010006.
    let r = required_dimension(2, 0.1, 1.0, 2.0 * 2f64.sqrt(), 0.01);
    assert_eq!(r.required_dimension, 53872);
    assert!(required_dimension(2, 0.1, 1.0, 1.0, 1.0).required_dimension == 2);
    let s = smooth_dimension_bound(5, 0.2, 1.0, 1.0, 0.05);
    assert!((s.required_dimension as f64 - 22911.0).abs() <= 2.0);
}

#[test]
fn rff_estimate_is_unbiased() {
    let k = ShiftInvariantKernel::gaussian(1.0, 2).unwrap();
    let (x, y) = ([0.4, -0.3], [-0.5, 0.6]);
    let exact = k.eval_pair(&x, &y);
    let n = 2000;
    let vals: Vec<f64> =
        (0..n).map(|s| rff_kernel_estimate(&build_rff_map(&k, 20, s).unwrap(), &x, &y).unwrap()).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((mean - exact).abs() < 4.0 * sd / (n as f64).sqrt(), "{mean} vs {exact}");
}

#[test]
fn swap_test_binomial_statistics() {
    let a = c2qe_encode(&L1UnitVector::normalize(&[0.4, -0.2, 0.1, 0.3]).unwrap());
    let b = c2qe_encode(&L1UnitVector::normalize(&[0.1, 0.5, -0.3, 0.1]).unwrap());
    let t = hs_inner(&a, &b).unwrap();
    let p = (1.0 + t) / 2.0;
    let shots = 500u64;
    let reps = 4000;
    let mut rng = seeded_rng(99, 3);
    let est: Vec<f64> = (0..reps).map(|_| hs_inner_sampled(&a, &b, shots, &mut rng).unwrap()).collect();
    let mean = est.iter().sum::<f64>() / reps as f64;
    let var = est.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let want_var = 4.0 * p * (1.0 - p) / shots as f64;
    assert!((mean - t).abs() < 4.0 * (want_var / reps as f64).sqrt());
    assert!((var / want_var - 1.0).abs() < 0.1);
}

fn random_trig_poly(rng: &mut impl Rng) -> TrigPolynomial {
    let n_terms = rng.random_range(1..=4);
    let mut freqs: Vec<i64> = (0..=6).collect();
    let mut terms = Vec::new();
    for _ in 0..n_terms {
        let w = freqs.remove(rng.random_range(0..freqs.len()));
        let cos = rng.random_range(-0.5..1.0);
        let sin = if w != 0 && rng.random_bool(0.3) { rng.random_range(-0.5..0.5) } else { 0.0 };
        terms.push(TrigTerm { frequency: vec![w], cos, sin });
    }
    TrigPolynomial::new(1, terms).unwrap()
}

/// Independent Gram oracle: a kernel Gram must be symmetric with no
/// eigenvalue below `-1e-8`.
fn gram_oracle_psd(p: &TrigPolynomial, pts: &[f64]) -> bool {
    let m = pts.len();
    let g = DMatrix::from_fn(m, m, |i, j| p.eval(&[pts[i] - pts[j]]));
    let asym = (&g - g.transpose()).abs().max();
    asym <= 1e-10 && SymmetricEigen::new(g).eigenvalues.min() >= -1e-8
}

/// For an asymmetric Gram `S + A`, the Hermitian matrix `S + iA` is PSD
/// exactly when each cosine weight dominates its sine weight, so its
/// eigenvalue says nothing about symmetry.
#[test]
fn hermitian_part_ignores_dominated_sine() {
    let pts: Vec<f64> = (0..12).map(|i| i as f64 * 0.37).collect();
    let m = pts.len();
    let herm = |a: f64, b: f64| {
        let h = DMatrix::from_fn(m, m, |i, j| {
            let d = pts[i] - pts[j];
            Complex64::new(a * d.cos(), b * d.sin())
        });
        hermitian_min_eigenvalue(&h)
    };
    assert!(herm(1.0, 0.5) >= -1e-10);
    assert!(herm(0.2, 0.8) < -1e-3);
}

#[test]
fn trig_verdicts_match_gram_oracle() {
    let mut rng = seeded_rng(7, 0);
    let pts: Vec<f64> = (0..30).map(|i| -3.0 + 6.0 * i as f64 / 29.0 + 0.01 * i as f64).collect();
    for _ in 0..100 {
        let p = random_trig_poly(&mut rng);
        let verdict = trig_poly_is_psd(&p);
        let oracle = gram_oracle_psd(&p, &pts);
        assert_eq!(verdict, oracle, "{p}");
    }
}

#[test]
fn gram_matrix_matches_direct_evaluation() {
    let k = ShiftInvariantKernel::trig_polynomial(TrigPolynomial::cosine(vec![1])).unwrap();
    let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.7]).collect();
    let g = gram_matrix(|a: &[f64], b: &[f64]| k.eval_pair(a, b), &pts).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert!((g[(i, j)] - (pts[i][0] - pts[j][0]).cos()).abs() < 1e-15);
        }
    }
}

// ---- projected kernel against a Kronecker-product unitary simulation ----

type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rotation(axis: Axis, t: f64) -> CMat {
    let (s, co) = ((t / 2.0).sin(), (t / 2.0).cos());
    let m = match axis {
        Axis::X => [c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)],
        Axis::Y => [c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)],
        Axis::Z => [c(co, -s), c(0.0, 0.0), c(0.0, 0.0), c(co, s)],
    };
    DMatrix::from_row_slice(2, 2, &m)
}

/// `I ⊗ … ⊗ U_q ⊗ … ⊗ I` with qubit 0 the least significant factor.
fn embed(u: &CMat, q: usize, n: usize) -> CMat {
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for k in (0..n).rev() {
        let f = if k == q { u.clone() } else { CMat::identity(2, 2) };
        out = out.kronecker(&f);
    }
    out
}

fn controlled(control: usize, target: usize, n: usize, u: &CMat) -> CMat {
    let p0 = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let p1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    embed(&p0, control, n) + embed(&p1, control, n) * embed(u, target, n)
}

fn oracle_rdms(gates: &[Gate], n: usize, x: &[f64]) -> Vec<CMat> {
    let x_gate = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let z_gate = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let dim = 1 << n;
    let mut u = CMat::identity(dim, dim);
    for g in gates {
        let step = match *g {
            Gate::Rotation { axis, qubit, data_index, scale } => {
                embed(&rotation(axis, scale * x[data_index]), qubit, n)
            }
            Gate::Cnot { control, target } => controlled(control, target, n, &x_gate),
            Gate::Cz { control, target } => controlled(control, target, n, &z_gate),
        };
        u = step * u;
    }
    let psi = u.column(0).into_owned();
    let rho = &psi * psi.adjoint();
    (0..n)
        .map(|q| {
            let mut r = CMat::zeros(2, 2);
            for i in 0..dim {
                for j in 0..dim {
                    // trace out every qubit but q
                    if (i & !(1 << q)) == (j & !(1 << q)) {
                        r[((i >> q) & 1, (j >> q) & 1)] += rho[(i, j)];
                    }
                }
            }
            r
        })
        .collect()
}

#[test]
fn projected_kernel_matches_unitary_oracle() {
    let n = 3;
    let gates = vec![
        Gate::Rotation { axis: Axis::X, qubit: 0, data_index: 0, scale: 1.0 },
        Gate::Rotation { axis: Axis::Y, qubit: 1, data_index: 1, scale: 0.8 },
        Gate::Rotation { axis: Axis::Z, qubit: 2, data_index: 0, scale: 1.5 },
        Gate::Cnot { control: 0, target: 1 },
        Gate::Rotation { axis: Axis::Y, qubit: 2, data_index: 1, scale: 1.1 },
        Gate::Cz { control: 1, target: 2 },
        Gate::Cnot { control: 2, target: 0 },
        Gate::Rotation { axis: Axis::X, qubit: 1, data_index: 0, scale: -0.6 },
    ];
    let circuit = EmbeddingCircuit::new(n, 2, gates.clone()).unwrap();
    let mut rng = seeded_rng(11, 0);
    for _ in 0..25 {
        let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let y = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let (rx, ry) = (oracle_rdms(&gates, n, &x), oracle_rdms(&gates, n, &y));
        let dist: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).iter().map(|v| v.norm_sqr()).sum::<f64>()).sum();
        let want = (-0.7 * dist).exp();
        let got = projected_kernel_eval(&circuit, 0.7, &x, &y).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}
