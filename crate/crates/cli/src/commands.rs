use std::sync::Arc;
use std::time::Instant;

use eqk::composition::{
    composition_kernel_eval, projected_kernel_bound, projected_kernel_eval, rff_pp_build, rff_pp_features,
    CompositionKernel,
};
use eqk::linalg::{dot, sq_dist};
use eqk::mercer::{decay_diagnostics, linspace, mercer_to_eqk, FiniteFeatureMap, MercerTruncation, PairKernel};
use eqk::pauli_state::{hs_inner, mixture_to_dense, qubit_count_for, MAX_DENSE_QUBITS};
use eqk::qrff::{qrff_encode, qrff_kernel_estimate, qrff_kernel_estimate_sampled, QrffModel};
use eqk::rff::{
    build_rff_map, failure_bound, required_dimension, required_dimension_with, required_precision_bits,
    rff_kernel_estimate, smooth_dimension_bound, sup_error_estimate, sup_error_on_points, DomainBox, TailExponent,
};
use eqk::seeded_rng;
use eqk::spectral::{
    gaussian_second_moment_quadrature, gaussian_spectral_sample, gram_matrix, gram_psd_verdict, spectral_variance,
    trig_poly_is_even, trig_poly_is_psd, ShiftInvariantKernel, TrigPolynomial, TrigTerm, GRAM_PSD_TOL,
};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{
    BoundsConfig, KernelSpec, LandmarkSpec, MercerDemoConfig, PreprocessorSpec, ProjectedDemoConfig, PsdCheckConfig,
    QrffVerifyConfig, RandomPolySpec, RffSweepConfig,
};
use crate::error::{config_err, CliError, Result};
use crate::output::{CommandOutput, ResultRow};

/// Tolerance for the dense-backend trace cross-check.
pub const DENSE_CHECK_TOL: f64 = 1e-10;

/// Largest qubit count cross-checked against dense matrices.
pub const DENSE_CHECK_QUBITS: usize = 5;

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Linear-interpolated percentile of sorted values, `q ∈ [0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn grid_pairs_guard(points: usize) -> Result<()> {
    let pairs = (points as u128) * (points as u128);
    if pairs > eqk::rff::MAX_GRID_PAIRS {
        return Err(eqk::Error::GridGuard { pairs, max: eqk::rff::MAX_GRID_PAIRS }.into());
    }
    Ok(())
}

fn summary_rows(
    experiment: &str,
    kernel: &str,
    d: usize,
    errors: &[f64],
    epsilon: Option<f64>,
    ms: f64,
) -> Vec<ResultRow> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = vec![
        ResultRow::new(experiment, kernel, "sup_error_median", percentile(&sorted, 0.5)),
        ResultRow::new(experiment, kernel, "sup_error_p10", percentile(&sorted, 0.1)),
        ResultRow::new(experiment, kernel, "sup_error_p90", percentile(&sorted, 0.9)),
        ResultRow::new(experiment, kernel, "sup_error_max", *sorted.last().expect("non-empty")),
    ];
    if let Some(eps) = epsilon {
        let frac = errors.iter().filter(|&&e| e >= eps).count() as f64 / errors.len() as f64;
        rows.push(ResultRow::new(experiment, kernel, "fraction_sup_error_ge_epsilon", frac));
    }
    rows.into_iter().map(|r| r.at(Some(d), None).timed(ms)).collect()
}

/// Sup error of RFF over a grid for every `(D, seed)`, with per-D summaries.
pub fn cmd_rff_sweep(cfg: &RffSweepConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    let kernel = cfg.kernel.build()?;
    let domain = cfg.domain.build(kernel.dim())?;
    let grid_len = domain.grid(cfg.grid_step)?.len();
    let desc = kernel.descriptor();
    let mut out = CommandOutput::default();

    let mut features = cfg.features.clone();
    if cfg.add_required_dimension {
        let (eps, delta) = (cfg.epsilon.expect("validated"), cfg.delta.expect("validated"));
        let sigma_p = spectral_variance(&kernel)?.sqrt();
        let report = required_dimension(kernel.dim(), eps, sigma_p, domain.diameter(), delta);
        let d = report.required_dimension;
        out.rows.push(ResultRow::new(&cfg.experiment, &desc, "required_dimension", d as f64).at(Some(d), None));
        out.rows.push(
            ResultRow::new(&cfg.experiment, &desc, "bound_failure_probability", report.failure_probability)
                .at(Some(d), None),
        );
        out.notes.push(format!(
            "bound inversion: D = {d} for epsilon = {eps}, delta = {delta}, sigma_p^2 = {}, diam = {}",
            report.sigma_p_sq, report.diameter
        ));
        features.push(d);
    }
    features.sort_unstable();
    features.dedup();

    let seeds = cfg.seeds.list();
    let points: Vec<(usize, u64)> = features.iter().flat_map(|&d| seeds.iter().map(move |&s| (d, s))).collect();
    let results: Vec<(usize, u64, f64, f64)> = points
        .par_iter()
        .map(|&(d, s)| {
            let t = Instant::now();
            let map = build_rff_map(&kernel, d, s)?;
            let err = sup_error_estimate(&map, |x: &[f64], y: &[f64]| kernel.eval_pair(x, y), &domain, cfg.grid_step)?;
            Ok((d, s, err, elapsed_ms(t)))
        })
        .collect::<Result<_>>()?;

    for &d in &features {
        let here: Vec<_> = results.iter().filter(|r| r.0 == d).collect();
        for r in &here {
            out.rows.push(ResultRow::new(&cfg.experiment, &desc, "sup_error", r.2).at(Some(d), Some(r.1)).timed(r.3));
        }
        let errs: Vec<f64> = here.iter().map(|r| r.2).collect();
        let total: f64 = here.iter().map(|r| r.3).sum();
        out.rows.extend(summary_rows(&cfg.experiment, &desc, d, &errs, cfg.epsilon, total));
    }
    out.rows.push(ResultRow::new(&cfg.experiment, &desc, "grid_points", grid_len as f64));
    out.sort();
    Ok(out)
}

fn random_pairs(domain: &DomainBox, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = seeded_rng(seed, 1);
    (0..count).map(|_| (domain.sample(&mut rng), domain.sample(&mut rng))).collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    (mean, (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Maximum `|qrff - rff|` per `(D, seed)`, with a dense cross-check for small
/// qubit counts and optional shot-noise statistics.
pub fn cmd_qrff_verify(cfg: &QrffVerifyConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    for &d in &cfg.features {
        let n = qubit_count_for(d);
        if n > MAX_DENSE_QUBITS {
            return Err(CliError::Guard(format!("D = {d} needs {n} qubits, limit is {MAX_DENSE_QUBITS}")));
        }
    }
    let kernel = cfg.kernel.build()?;
    let domain = cfg.domain.build(kernel.dim())?;
    let desc = kernel.descriptor();
    let seeds = cfg.seeds.list();
    let points: Vec<(usize, u64)> = cfg.features.iter().flat_map(|&d| seeds.iter().map(move |&s| (d, s))).collect();

    let blocks: Vec<Vec<ResultRow>> = points
        .par_iter()
        .map(|&(d, s)| {
            let t = Instant::now();
            let model = QrffModel::new(build_rff_map(&kernel, d, s)?);
            let pairs = random_pairs(&domain, cfg.pairs, s);
            let mut rows = Vec::new();
            let mut max_diff = 0.0f64;
            for (x, y) in &pairs {
                let q = qrff_kernel_estimate(&model, x, y)?.value;
                max_diff = max_diff.max((q - rff_kernel_estimate(model.map(), x, y)?).abs());
            }
            let row = |m: &str, v: f64| ResultRow::new(&cfg.experiment, &desc, m, v).at(Some(d), Some(s));
            rows.push(row("max_abs_diff", max_diff));
            rows.push(row("qubits", model.qubits() as f64));

            if model.qubits() <= DENSE_CHECK_QUBITS {
                let mut dense_diff = 0.0f64;
                for (x, y) in &pairs {
                    let (a, b) = (qrff_encode(&model, x)?, qrff_encode(&model, y)?);
                    let dense = mixture_to_dense(&a)?.trace_product(&mixture_to_dense(&b)?)?;
                    dense_diff = dense_diff.max((dense.re - hs_inner(&a, &b)?).abs()).max(dense.im.abs());
                }
                rows.push(row("dense_max_abs_diff", dense_diff));
                rows.push(row("dense_cross_check", flag(dense_diff <= DENSE_CHECK_TOL)));
            }

            if let Some(shots) = cfg.shots {
                let mut rng = seeded_rng(s, 2);
                let mut errors = Vec::with_capacity(pairs.len());
                let mut predicted = Vec::with_capacity(pairs.len());
                for (x, y) in &pairs {
                    let exact = qrff_kernel_estimate(&model, x, y)?;
                    let noisy = qrff_kernel_estimate_sampled(&model, x, y, shots, &mut rng)?;
                    errors.push(noisy.value - exact.value);
                    // SWAP estimate variance is (1 - Tr²)/shots; the kernel scales it.
                    let tr = (exact.value / (exact.g_left * exact.g_right) + 1.0) / (1u64 << model.qubits()) as f64;
                    let sd = ((1.0 - tr * tr).max(0.0) / shots as f64).sqrt();
                    predicted.push(exact.amplification(model.qubits()) * sd);
                }
                let (_, sd) = mean_sd(&errors);
                rows.push(row("shot_max_abs_error", errors.iter().fold(0.0f64, |m, e| m.max(e.abs()))));
                rows.push(row("empirical_std_error", sd));
                rows.push(row("predicted_std_error", mean_sd(&predicted).0));
                rows.push(row("shots", shots as f64));
            }
            let ms = elapsed_ms(t);
            Ok(rows.into_iter().map(|r| r.timed(ms)).collect())
        })
        .collect::<Result<_>>()?;

    let mut out = CommandOutput { rows: blocks.into_iter().flatten().collect(), notes: vec![] };
    out.sort();
    Ok(out)
}

/// Seed, its random pairs, their exact kernel values, and the composition
/// path's max difference.
type PairSet = (u64, Vec<(Vec<f64>, Vec<f64>)>, Vec<f64>, f64);

/// Exact composition (or projected) kernel versus RFF on the preprocessed
/// domain, with the dimension bound for the same setting.
pub fn cmd_projected_demo(cfg: &ProjectedDemoConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    let circuit = cfg.preprocessor.circuit()?;
    let pre = cfg.preprocessor.build()?;
    let domain = cfg.domain.build(cfg.preprocessor.input_dim())?;
    if let PreprocessorSpec::Identity { bound, .. } = cfg.preprocessor {
        let outside = domain.lower().iter().chain(domain.upper()).any(|v| v.abs() > bound);
        if outside {
            return Err(config_err("domain leaves the identity preprocessor box"));
        }
    }
    let sigma = (2.0 * cfg.gamma).sqrt().recip();
    let (g1, b) = (pre.output_dim(), pre.bound());
    let kernel = CompositionKernel::new(pre, sigma)?;
    let desc = match &circuit {
        Some(c) => format!("projected(N={};gates={};gamma={})", c.qubits(), c.gates().len(), cfg.gamma),
        None => format!("identity(d={};B={b};sigma={sigma})", g1),
    };

    let bound = projected_kernel_bound(cfg.preprocessor.input_dim(), cfg.epsilon, b, g1, sigma, cfg.delta);
    let sigma_p = bound.sigma_p_sq.sqrt();
    let mut out = CommandOutput::default();
    let row = |m: &str, v: f64| ResultRow::new(&cfg.experiment, &desc, m, v);
    out.rows.push(row("bound_required_dimension", bound.required_dimension as f64));
    out.rows.push(row("bound_qubits", bound.qubits as f64));
    out.rows.push(row("preprocessed_dimension", g1 as f64));

    let seeds = cfg.seeds.list();
    let sigma2 = sigma * sigma;
    let gauss = move |a: &[f64], c: &[f64]| (-sq_dist(a, c) / (2.0 * sigma2)).exp();

    let grid = match cfg.grid_step {
        Some(step) => {
            let pts = domain.grid(step)?;
            grid_pairs_guard(pts.len())?;
            let pre = kernel.preprocessor();
            Some(pts.iter().map(|p| pre.apply(p)).collect::<eqk::Result<Vec<_>>>()?)
        }
        None => None,
    };

    // Pairs and their exact values depend on the seed only through the pair
    // draw, so they are shared across D.
    let pair_sets: Vec<PairSet> = if grid.is_none() {
        seeds
            .par_iter()
            .map(|&s| {
                let pairs = random_pairs(&domain, cfg.pairs, s);
                let mut exact = Vec::with_capacity(pairs.len());
                let mut path_diff = 0.0f64;
                for (x, y) in &pairs {
                    let comp = composition_kernel_eval(&kernel, x, y)?;
                    if let Some(c) = &circuit {
                        let direct = projected_kernel_eval(c, cfg.gamma, x, y)?;
                        path_diff = path_diff.max((direct - comp).abs());
                        exact.push(direct);
                    } else {
                        exact.push(comp);
                    }
                }
                Ok((s, pairs, exact, path_diff))
            })
            .collect::<Result<_>>()?
    } else {
        vec![]
    };
    for (s, _, exact, diff) in &pair_sets {
        if circuit.is_some() {
            out.rows.push(row("composition_path_max_diff", *diff).at(None, Some(*s)));
        }
        out.rows.push(row("exact_kernel_min", exact.iter().copied().fold(f64::INFINITY, f64::min)).at(None, Some(*s)));
    }

    let points: Vec<(usize, u64)> = cfg.features.iter().flat_map(|&d| seeds.iter().map(move |&s| (d, s))).collect();
    let results: Vec<(usize, u64, f64, f64)> = points
        .par_iter()
        .map(|&(d, s)| {
            let t = Instant::now();
            let model = rff_pp_build(&kernel, d, s)?;
            let err = match &grid {
                Some(fpts) => sup_error_on_points(model.map(), fpts, gauss)?,
                None => {
                    let (_, pairs, exact, _) = pair_sets.iter().find(|p| p.0 == s).expect("seed present");
                    let mut worst = 0.0f64;
                    for ((x, y), k) in pairs.iter().zip(exact) {
                        let zx = rff_pp_features(&model, x)?;
                        let zy = rff_pp_features(&model, y)?;
                        worst = worst.max((dot(zx.as_slice(), zy.as_slice()) - k).abs());
                    }
                    worst
                }
            };
            Ok((d, s, err, elapsed_ms(t)))
        })
        .collect::<Result<_>>()?;

    for &d in &cfg.features {
        let here: Vec<_> = results.iter().filter(|r| r.0 == d).collect();
        for r in &here {
            out.rows.push(row("sup_error", r.2).at(Some(d), Some(r.1)).timed(r.3));
        }
        let errs: Vec<f64> = here.iter().map(|r| r.2).collect();
        let total: f64 = here.iter().map(|r| r.3).sum();
        let within = errs.iter().filter(|&&e| e <= cfg.epsilon).count() as f64 / errs.len() as f64;
        out.rows.extend(summary_rows(&cfg.experiment, &desc, d, &errs, None, total));
        out.rows.push(row("fraction_sup_error_le_epsilon", within).at(Some(d), None));
        let fb = failure_bound(d, g1, cfg.epsilon, sigma_p, bound.diameter);
        out.rows.push(row("bound_failure_probability", fb).at(Some(d), None));
    }
    out.sort();
    Ok(out)
}

/// Draws a random `d = 1` trigonometric polynomial with distinct frequencies
/// in `0..=max_frequency`; cosine weights in `[-0.5, 1)`, occasional sines.
pub fn random_trig_polynomial<R: Rng + ?Sized>(spec: &RandomPolySpec, rng: &mut R) -> TrigPolynomial {
    let n_terms = rng.random_range(1..=spec.max_terms);
    let mut freqs: Vec<i64> = (0..=spec.max_frequency).collect();
    let terms = (0..n_terms)
        .map(|_| {
            let w = freqs.remove(rng.random_range(0..freqs.len()));
            let cos = rng.random_range(-0.5..1.0);
            let sin = if w != 0 && rng.random_bool(spec.sine_probability) { rng.random_range(-0.5..0.5) } else { 0.0 };
            TrigTerm { frequency: vec![w], cos, sin }
        })
        .collect();
    TrigPolynomial::new(1, terms).expect("distinct frequencies, zero frequency without sine")
}

fn psd_points(cfg: &PsdCheckConfig, dim: usize) -> Vec<Vec<f64>> {
    let p = &cfg.points;
    if dim == 1 {
        return linspace(p.lower, p.upper, p.count).into_iter().map(|v| vec![v]).collect();
    }
    let mut rng = seeded_rng(p.seed, 2);
    (0..p.count).map(|_| (0..dim).map(|_| rng.random_range(p.lower..p.upper)).collect()).collect()
}

/// Coefficient-test verdicts versus brute-force Gram eigenvalues.
pub fn cmd_psd_check(cfg: &PsdCheckConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    let mut polys: Vec<TrigPolynomial> =
        cfg.polynomials.iter().map(|p| TrigPolynomial::new(p.dim, p.terms.clone())).collect::<eqk::Result<_>>()?;
    if let Some(r) = &cfg.random {
        let mut rng = seeded_rng(r.seed, 0);
        polys.extend((0..r.count).map(|_| random_trig_polynomial(r, &mut rng)));
    }

    let mut out = CommandOutput::default();
    let mut agree = 0usize;
    for (i, p) in polys.iter().enumerate() {
        let t = Instant::now();
        let pts = psd_points(cfg, p.dim());
        let g =
            gram_matrix(|a: &[f64], b: &[f64]| p.eval(&a.iter().zip(b).map(|(u, v)| u - v).collect::<Vec<_>>()), &pts)?;
        let v = gram_psd_verdict(&g)?;
        let theorem = trig_poly_is_psd(p);
        let ok = theorem == v.psd;
        agree += ok as usize;
        let ms = elapsed_ms(t);
        let desc = p.to_string();
        let rows = [
            ("coefficient_even", flag(trig_poly_is_even(p))),
            ("coefficient_psd", flag(theorem)),
            ("gram_symmetric", flag(v.symmetric)),
            ("gram_asymmetry", v.asymmetry),
            ("gram_min_eigenvalue", v.min_eigenvalue),
            ("gram_psd", flag(v.psd)),
            ("agreement", flag(ok)),
        ];
        for (m, val) in rows {
            out.rows.push(ResultRow::new(&cfg.experiment, &desc, m, val).at(None, Some(i as u64)).timed(ms));
        }
    }
    let all = "all";
    out.rows.push(ResultRow::new(&cfg.experiment, all, "agreement_count", agree as f64));
    out.rows.push(ResultRow::new(&cfg.experiment, all, "polynomial_count", polys.len() as f64));
    out.notes.push(format!(
        "coefficient test agrees with the {}-point Gram test (tolerance {GRAM_PSD_TOL:e}) on {agree}/{} polynomials",
        cfg.points.count,
        polys.len()
    ));
    Ok(out)
}

/// Dimension bounds under both exponent constants, plus the smooth-kernel,
/// composition and finite-difference calculators.
pub fn cmd_bounds(cfg: &BoundsConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    let kernel = cfg.kernel.as_ref().map(KernelSpec::build).transpose()?;
    if let Some(k) = &kernel {
        if k.dim() != cfg.dim {
            return Err(config_err(format!("kernel dimension {} differs from dim {}", k.dim(), cfg.dim)));
        }
    }
    let sigma_p = match (cfg.sigma_p, &kernel) {
        (Some(s), _) => s,
        (None, Some(k)) => spectral_variance(k)?.sqrt(),
        (None, None) => return Err(config_err("need sigma_p or a kernel")),
    };
    let diam = match (cfg.diameter, &cfg.domain) {
        (Some(d), _) => d,
        (None, Some(dom)) => dom.build(cfg.dim)?.diameter(),
        (None, None) => return Err(config_err("need diameter or a domain")),
    };
    crate::config::positive("sigma_p", sigma_p)?;
    crate::config::positive("diameter", diam)?;

    let exp = &cfg.experiment;
    let mut out = CommandOutput::default();
    for (e, label) in [(TailExponent::Conservative, "exponent=8(d+2)"), (TailExponent::Tight, "exponent=4(d+2)")] {
        let r = required_dimension_with(cfg.dim, cfg.epsilon, sigma_p, diam, cfg.delta, e);
        let d = Some(r.required_dimension);
        for (m, v) in [
            ("required_dimension", r.required_dimension as f64),
            ("failure_probability", r.failure_probability),
            ("qubits", r.qubits as f64),
            ("sigma_p_sq", r.sigma_p_sq),
            ("diameter", r.diameter),
        ] {
            out.rows.push(ResultRow::new(exp, label, m, v).at(d, None));
        }
    }

    if let Some(s) = &cfg.smooth {
        let r = smooth_dimension_bound(cfg.dim, cfg.epsilon, s.radius, s.second_derivative_bound, cfg.delta);
        let label = format!("smooth(R={};B={})", s.radius, s.second_derivative_bound);
        out.rows.push(
            ResultRow::new(exp, &label, "required_dimension", r.required_dimension as f64)
                .at(Some(r.required_dimension), None),
        );
        out.rows.push(ResultRow::new(exp, &label, "sigma_p_sq", r.sigma_p_sq).at(Some(r.required_dimension), None));
        out.rows.push(ResultRow::new(exp, &label, "diameter", r.diameter).at(Some(r.required_dimension), None));
    }

    if let Some(c) = &cfg.composition {
        let r = projected_kernel_bound(cfg.dim, cfg.epsilon, c.bound, c.output_dim, c.sigma, cfg.delta);
        let label = format!("composition(g1={};B={};sigma={})", c.output_dim, c.bound, c.sigma);
        let d = Some(r.required_dimension);
        out.rows.push(ResultRow::new(exp, &label, "required_dimension", r.required_dimension as f64).at(d, None));
        out.rows.push(ResultRow::new(exp, &label, "failure_probability", r.failure_probability).at(d, None));
        out.rows.push(ResultRow::new(exp, &label, "qubits", r.qubits as f64).at(d, None));
    }

    if let Some(p) = &cfg.precision {
        let l = p.fourth_derivative_bound.unwrap_or_else(|| 3.0 / p.gaussian_sigma.expect("validated").powi(4));
        let label = format!("finite-difference(L={l})");
        for &eps in &p.epsilon {
            let bits = required_precision_bits(l, eps);
            out.rows.push(ResultRow::new(exp, &label, format!("precision_bits(eps={eps})"), bits as f64));
            out.rows.push(ResultRow::new(exp, &label, format!("step(eps={eps})"), 2f64.powi(-(bits as i32))));
        }
    }

    if let Some(ShiftInvariantKernel::Gaussian { sigma, dim }) = &kernel {
        let label = kernel.as_ref().expect("present").descriptor();
        let quad = gaussian_second_moment_quadrature(*sigma, *dim);
        let closed = *dim as f64 / (sigma * sigma);
        let stated = *dim as f64 / sigma;
        let rel = (stated - quad).abs() / quad;
        out.rows.push(ResultRow::new(exp, &label, "second_moment_quadrature", quad));
        out.rows.push(ResultRow::new(exp, &label, "second_moment_d_over_sigma_sq", closed));
        out.rows.push(ResultRow::new(exp, &label, "second_moment_d_over_sigma", stated));
        out.rows.push(ResultRow::new(exp, &label, "d_over_sigma_relative_discrepancy", rel));
        let mut note = format!(
            "second moment E||w||^2 of the Gaussian spectral measure: quadrature {quad}, d/sigma^2 = {closed}, \
             d/sigma = {stated} (relative discrepancy {rel:.3e}); bounds use d/sigma^2"
        );
        if let Some(m) = &cfg.moment_check {
            let t = Instant::now();
            let mean = sampled_second_moment(*sigma, *dim, m.samples, m.seed);
            let ms = elapsed_ms(t);
            out.rows.push(ResultRow::new(exp, &label, "second_moment_sampled", mean).timed(ms));
            out.rows.push(ResultRow::new(exp, &label, "sampled_relative_error", (mean - quad).abs() / quad).timed(ms));
            note.push_str(&format!("; sampled mean over {} draws {mean}", m.samples));
        }
        if rel > 1e-12 {
            note.push_str("; d/sigma does not match the quadrature");
        }
        out.notes.push(note);
    }
    Ok(out)
}

/// Mean of `‖ω‖²` over `samples` Gaussian spectral draws.
pub fn sampled_second_moment(sigma: f64, dim: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed, 3);
    let total: f64 =
        (0..samples).map(|_| gaussian_spectral_sample(sigma, dim, &mut rng).0.iter().map(|w| w * w).sum::<f64>()).sum();
    total / samples as f64
}

fn product_grid(domain: &DomainBox, per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> =
        domain.lower().iter().zip(domain.upper()).map(|(&l, &u)| linspace(l, u, per_axis)).collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        out = out.into_iter().flat_map(|p| axis.iter().map(move |&v| [p.as_slice(), &[v]].concat())).collect();
    }
    out
}

/// Landmark spectrum, truncation bounds and the EQK readout per rank.
pub fn cmd_mercer_demo(cfg: &MercerDemoConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    let kernel = cfg.kernel.build()?;
    let domain = cfg.domain.build(kernel.dim())?;
    let desc = kernel.descriptor();
    let landmarks = match &cfg.landmarks {
        LandmarkSpec::Points { points } => points.clone(),
        LandmarkSpec::PerAxis { per_axis } => product_grid(&domain, *per_axis),
    };
    if landmarks.is_empty() {
        return Err(config_err("no landmarks"));
    }
    let test = product_grid(&domain, cfg.test_points_per_axis);
    grid_pairs_guard(test.len())?;

    let k = kernel.clone();
    let pk: PairKernel = Arc::new(move |a: &[f64], b: &[f64]| k.eval_pair(a, b));
    let t = Instant::now();
    let base = MercerTruncation::fit(pk.as_ref(), landmarks.clone(), 1).map_err(|e| match e {
        // rank 1 is only a placeholder; a non-positive top eigenvalue is reported below
        eqk::Error::NonPositiveEigenvalue { .. } => config_err("landmark Gram has no positive eigenvalue"),
        other => other.into(),
    })?;
    let spectrum = base.spectrum();
    let diag = decay_diagnostics(spectrum);
    let exp = &cfg.experiment;
    let mut out = CommandOutput::default();
    let ms = elapsed_ms(t);
    for (j, v) in spectrum.eigenvalues.iter().enumerate() {
        out.rows.push(ResultRow::new(exp, &desc, format!("eigenvalue[{}]", j + 1), *v).timed(ms));
    }
    out.rows.push(ResultRow::new(exp, &desc, "landmarks", landmarks.len() as f64));
    out.rows.push(ResultRow::new(exp, &desc, "psd_violations", spectrum.violations.len() as f64));
    out.rows.push(ResultRow::new(exp, &desc, "clipped_eigenvalues", spectrum.clipped.len() as f64));
    out.rows.push(ResultRow::new(exp, &desc, "log_eigenvalue_slope", diag.log_slope));

    let m = landmarks.len();
    let gram: Vec<Vec<f64>> = landmarks.iter().map(|a| landmarks.iter().map(|b| pk(a, b)).collect()).collect();
    let mut ranks = cfg.ranks.clone();
    ranks.sort_unstable();
    ranks.dedup();
    for &r in &ranks {
        let t = Instant::now();
        let row = |metric: &str, v: f64| ResultRow::new(exp, &desc, metric, v).at(Some(r), None);
        if r > m {
            out.rows.push(row("rank_exceeds_landmarks", m as f64));
            continue;
        }
        let trunc = match base.with_rank(r) {
            Ok(t) => t,
            Err(eqk::Error::NonPositiveEigenvalue { index, value }) => {
                out.rows.push(row("truncation_bound", eqk::mercer::truncation_error_bound(&base, r)));
                out.rows.push(row("retained_eigenvalue_nonpositive", value));
                out.rows.push(row("first_nonpositive_index", (index + 1) as f64));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let fm = FiniteFeatureMap::new(trunc, pk.clone());
        let phi_l: Vec<Vec<f64>> = landmarks.iter().map(|x| fm.features(x)).collect::<eqk::Result<_>>()?;
        let recon = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| (gram[i][j] - dot(&phi_l[i], &phi_l[j])).powi(2))
            .sum::<f64>()
            .sqrt();

        let phi_t: Vec<Vec<f64>> = test.par_iter().map(|x| fm.features(x)).collect::<eqk::Result<_>>()?;
        let (off, eqk_vs_classical, eqk_vs_kernel) = (0..test.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = (0.0f64, 0.0f64, 0.0f64);
                for j in 0..test.len() {
                    let classical = dot(&phi_t[i], &phi_t[j]);
                    let exact = pk(&test[i], &test[j]);
                    let q = mercer_to_eqk(&fm, &test[i], &test[j])?.value;
                    acc.0 = acc.0.max((classical - exact).abs());
                    acc.1 = acc.1.max((q - classical).abs());
                    acc.2 = acc.2.max((q - exact).abs());
                }
                Ok(acc)
            })
            .try_reduce(|| (0.0, 0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1), a.2.max(b.2))))
            .map_err(CliError::Library)?;
        let ms = elapsed_ms(t);
        for (metric, v) in [
            ("truncation_bound", eqk::mercer::truncation_error_bound(fm.truncation(), r)),
            ("frobenius_tail", diag.frobenius_tails[r]),
            ("reconstruction_frobenius_error", recon),
            ("off_landmark_max_error", off),
            ("eqk_vs_classical_max", eqk_vs_classical),
            ("eqk_vs_kernel_max", eqk_vs_kernel),
            ("qubits", fm.qubits() as f64),
        ] {
            out.rows.push(row(metric, v).timed(ms));
        }
    }
    out.sort();
    Ok(out)
}
