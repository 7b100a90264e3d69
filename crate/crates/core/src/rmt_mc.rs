//! Monte Carlo estimates of the universal constants `b_0q` from the
//! random-matrix integral over complex symmetric `H` and complex `x`.
//!
//! The weight is `exp(-Tr HH* - |x|^2)` and `dH` is Lebesgue measure for the
//! Hilbert-Schmidt inner product, i.e. in the coordinates `Hh_jj = H_jj`,
//! `Hh_jk = sqrt(2) H_jk` (`j < k`). The Gaussian then has mass
//! `pi^((m^2+m+2)/2)` and the integral becomes an expectation:
//! `b_0q = pi^-m * E[ |det A| ; index(A) = q - m ]` for `A = 2HH* - |x|^2 I`,
//! with `Hh_jk` and `x` independent standard complex Gaussians.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Samples per RNG stream. The partition is fixed so merged sums do not
/// depend on the number of worker threads.
pub const BLOCK_SIZE: u64 = 8192;

/// Relative eigenvalue gap below which a sample is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Standard complex Gaussian, `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One draw `(H, x)` from the Gaussian on `Sym(m, C) x C`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    pub h: DMatrix<Complex64>,
    pub x: Complex64,
}

impl MatrixSample {
    pub fn new(h: DMatrix<Complex64>, x: Complex64) -> Result<Self> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(Error::Domain("H must be a nonempty square matrix".into()));
        }
        if h != h.transpose() {
            return Err(Error::Domain("H must be complex symmetric".into()));
        }
        Ok(MatrixSample { h, x })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// The Hermitian matrix `2HH* - |x|^2 I`.
    pub fn spectral_matrix(&self) -> DMatrix<Complex64> {
        let m = self.dim();
        let mut a = &self.h * self.h.adjoint() * Complex64::new(2.0, 0.0);
        let shift = self.x.norm_sqr();
        for i in 0..m {
            a[(i, i)] -= shift;
        }
        a
    }
}

pub fn sample_matrix<R: Rng + ?Sized>(m: usize, rng: &mut R) -> MatrixSample {
    let mut h = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let z = complex_gaussian(rng);
            if j == k {
                h[(j, j)] = z;
            } else {
                let z = z * std::f64::consts::FRAC_1_SQRT_2;
                h[(j, k)] = z;
                h[(k, j)] = z;
            }
        }
    }
    let x = complex_gaussian(rng);
    MatrixSample { h, x }
}

/// Real eigenvalues of `2HH* - |x|^2 I`, ascending.
pub fn spectral_eigenvalues(sample: &MatrixSample) -> Vec<f64> {
    let eig = SymmetricEigen::new(sample.spectral_matrix());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Morse-type index of a sample and the modulus of its determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub index: usize,
    pub absdet: f64,
}

/// Counts negative eigenvalues of `2HH* - |x|^2 I` and takes `|prod eigenvalues|`.
///
/// Fails with [`Error::Degenerate`] when `min |eig| < 1e-12 * scale`, where
/// `scale` is the larger of `max |eig|` and `2 |H|_F^2 + |x|^2` (the latter
/// catches cancellation when `m = 1`).
pub fn classify(sample: &MatrixSample) -> Result<Classification> {
    let eig = spectral_eigenvalues(sample);
    let max = eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let scale = max.max(2.0 * sample.h.norm_squared() + sample.x.norm_sqr());
    if !(min >= DEGENERACY_THRESHOLD * scale) || scale == 0.0 {
        return Err(Error::Degenerate(format!(
            "spectral matrix is near-singular (min |eig| = {min:e}, max |eig| = {max:e})"
        )));
    }
    Ok(Classification {
        index: eig.iter().filter(|v| **v < 0.0).count(),
        absdet: eig.iter().map(|v| v.abs()).product(),
    })
}

/// Per-index moments of `|det|`, accumulated over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexHistogram {
    pub m: usize,
    /// Sum of `|det|` for each index `k = 0..=m`.
    pub sum: Vec<f64>,
    /// Sum of `|det|^2` for each index.
    pub sum_sq: Vec<f64>,
    pub count: Vec<u64>,
    pub samples: u64,
    pub excluded: u64,
}

impl IndexHistogram {
    fn empty(m: usize) -> Self {
        IndexHistogram {
            m,
            sum: vec![0.0; m + 1],
            sum_sq: vec![0.0; m + 1],
            count: vec![0; m + 1],
            samples: 0,
            excluded: 0,
        }
    }

    fn merge(mut self, other: &IndexHistogram) -> Self {
        for k in 0..=self.m {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
            self.count[k] += other.count[k];
        }
        self.samples += other.samples;
        self.excluded += other.excluded;
        self
    }

    /// `pi^-m`, turning `E|det|` into `b_0q`.
    pub fn normalization(&self) -> f64 {
        std::f64::consts::PI.powi(-(self.m as i32))
    }

    /// Mean and standard error of `|det| 1{index = k}` over all samples;
    /// excluded samples contribute zero.
    pub fn indicator_moments(&self, k: usize) -> (f64, f64) {
        mean_and_stderr(self.sum[k], self.sum_sq[k], self.samples)
    }

    /// `(b_0q estimate, standard error)`.
    pub fn b0q(&self, q: usize) -> (f64, f64) {
        let (mean, se) = self.indicator_moments(q - self.m);
        let c = self.normalization();
        (c * mean, c * se)
    }

    /// Estimate of `sum_q b_0q` with its standard error.
    pub fn b0_total(&self) -> (f64, f64) {
        let s: f64 = self.sum.iter().sum();
        let s2: f64 = self.sum_sq.iter().sum();
        let (mean, se) = mean_and_stderr(s, s2, self.samples);
        let c = self.normalization();
        (c * mean, c * se)
    }
}

fn mean_and_stderr(sum: f64, sum_sq: f64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Generator for block `block` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn run_block(m: usize, seed: u64, block: u64, len: u64) -> IndexHistogram {
    let mut rng = block_rng(seed, block);
    let mut hist = IndexHistogram::empty(m);
    for _ in 0..len {
        let sample = sample_matrix(m, &mut rng);
        hist.samples += 1;
        match classify(&sample) {
            Ok(c) => {
                hist.sum[c.index] += c.absdet;
                hist.sum_sq[c.index] += c.absdet * c.absdet;
                hist.count[c.index] += 1;
            }
            Err(_) => hist.excluded += 1,
        }
    }
    hist
}

/// Classifies `samples` draws in fixed blocks, in parallel on the current
/// rayon pool. The result depends only on `(m, samples, seed)`.
pub fn sample_histogram(m: usize, samples: u64, seed: u64) -> Result<IndexHistogram> {
    if m == 0 {
        return Err(Error::Domain("dimension m must be >= 1".into()));
    }
    let blocks = samples.div_ceil(BLOCK_SIZE);
    let parts: Vec<IndexHistogram> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_SIZE.min(samples - b * BLOCK_SIZE);
            run_block(m, seed, b, len)
        })
        .collect();
    Ok(parts
        .iter()
        .fold(IndexHistogram::empty(m), |acc, part| acc.merge(part)))
}

/// Report for one `b_0q` estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct B0qEstimate {
    pub m: usize,
    pub q: usize,
    pub samples: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub excluded: u64,
    pub seed: u64,
}

impl B0qEstimate {
    /// `pi^m / m! * b_0q`, comparable to the leading coefficient `n_q(m)`.
    pub fn leading_coeff_view(&self) -> (f64, f64) {
        let scale = std::f64::consts::PI.powi(self.m as i32)
            / (1..=self.m).map(|j| j as f64).product::<f64>();
        (scale * self.estimate, scale * self.stderr)
    }
}

pub const MIN_SAMPLES: u64 = 1000;

fn check_request(m: usize, q: usize, samples: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain("dimension m must be >= 1".into()));
    }
    if q < m || q > 2 * m {
        return Err(Error::Domain(format!(
            "Morse index q = {q} outside [{m}, {}]",
            2 * m
        )));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    Ok(())
}

pub fn estimate_b0q(m: usize, q: usize, samples: u64, seed: u64) -> Result<B0qEstimate> {
    check_request(m, q, samples)?;
    let hist = sample_histogram(m, samples, seed)?;
    Ok(estimate_from_histogram(&hist, q, seed))
}

/// Reads one index off a shared histogram (all `q` come from the same draws).
pub fn estimate_from_histogram(hist: &IndexHistogram, q: usize, seed: u64) -> B0qEstimate {
    let (estimate, stderr) = hist.b0q(q);
    B0qEstimate {
        m: hist.m,
        q,
        samples: hist.samples,
        estimate,
        stderr,
        excluded: hist.excluded,
        seed,
    }
}

/// Estimates every `q` in `[m, 2m]` from a single run.
pub fn estimate_all(m: usize, samples: u64, seed: u64) -> Result<Vec<B0qEstimate>> {
    check_request(m, m, samples)?;
    let hist = sample_histogram(m, samples, seed)?;
    Ok((m..=2 * m)
        .map(|q| estimate_from_histogram(&hist, q, seed))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lu_det(a: &DMatrix<Complex64>) -> Complex64 {
        a.clone().lu().determinant()
    }

    #[test]
    fn fixed_classifications() {
        let s = MatrixSample::new(DMatrix::from_element(1, 1, c(1.0, 0.0)), c(0.0, 0.0)).unwrap();
        assert_eq!(
            classify(&s).unwrap(),
            Classification {
                index: 0,
                absdet: 2.0
            }
        );

        let x = c(0.6, -0.8);
        for m in 1..=3 {
            let s = MatrixSample::new(DMatrix::zeros(m, m), x * 2.0).unwrap();
            let cl = classify(&s).unwrap();
            assert_eq!(cl.index, m);
            assert!((cl.absdet - 4f64.powi(m as i32)).abs() < 1e-12);
        }

        let s = MatrixSample::new(DMatrix::identity(2, 2), c(0.0, 0.0)).unwrap();
        let cl = classify(&s).unwrap();
        assert_eq!(cl.index, 0);
        assert!((cl.absdet - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        // 2|h|^2 = |x|^2 exactly.
        let s = MatrixSample::new(
            DMatrix::from_element(1, 1, c(1.0, 0.0)),
            c(2f64.sqrt(), 0.0),
        )
        .unwrap();
        assert!(matches!(classify(&s), Err(Error::Degenerate(_))));
        let s = MatrixSample::new(DMatrix::zeros(2, 2), c(0.0, 0.0)).unwrap();
        assert!(classify(&s).is_err());
    }

    #[test]
    fn non_symmetric_input_rejected() {
        let mut h = DMatrix::zeros(2, 2);
        h[(0, 1)] = c(1.0, 0.0);
        assert!(MatrixSample::new(h, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn samples_are_symmetric_with_expected_moments() {
        let mut rng = block_rng(7, 0);
        let n = 100_000;
        let mut off = Vec::with_capacity(n);
        let mut diag = 0.0;
        for _ in 0..n {
            let s = sample_matrix(2, &mut rng);
            assert_eq!(s.h, s.h.transpose());
            off.push(s.h[(0, 1)].norm_sqr());
            diag += s.h[(0, 0)].norm_sqr();
        }
        let mean = off.iter().sum::<f64>() / n as f64;
        let var = off.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.5).abs() <= 3.0 * se, "E|H12|^2 = {mean} +- {se}");
        assert!((diag / n as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn eigen_solver_sanity() {
        let mut rng = block_rng(11, 3);
        for m in 1..=4 {
            for _ in 0..200 {
                let s = sample_matrix(m, &mut rng);
                let a = s.spectral_matrix();
                let eig = spectral_eigenvalues(&s);
                let trace: f64 = (0..m).map(|i| a[(i, i)].re).sum();
                let sum: f64 = eig.iter().sum();
                let scale = eig.iter().map(|v| v.abs()).sum::<f64>();
                assert!((sum - trace).abs() <= 1e-9 * scale.max(1e-300));
                let det = lu_det(&a);
                let prod: f64 = eig.iter().product();
                assert!(det.im.abs() <= 1e-6 * det.norm().max(1e-300) + 1e-300);
                assert!(
                    (prod - det.re).abs() <= 1e-6 * prod.abs(),
                    "m={m}: {prod} vs {det}"
                );
            }
        }
    }

    #[test]
    fn histogram_partitions_samples() {
        let hist = sample_histogram(2, 20_000, 5).unwrap();
        assert_eq!(hist.samples, 20_000);
        assert_eq!(hist.count.iter().sum::<u64>() + hist.excluded, hist.samples);
        assert!(hist.sum.iter().chain(&hist.sum_sq).all(|v| v.is_finite()));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = estimate_b0q(2, 3, 30_000, 42).unwrap();
        let b = estimate_b0q(2, 3, 30_000, 42).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| estimate_b0q(2, 3, 30_000, 42).unwrap());
        assert_eq!(a, c);
        let d = estimate_b0q(2, 3, 30_000, 43).unwrap();
        assert_ne!(a.estimate, d.estimate);
    }

    #[test]
    fn request_validation() {
        assert!(estimate_b0q(1, 0, 10_000, 1).is_err());
        assert!(estimate_b0q(1, 3, 10_000, 1).is_err());
        assert!(estimate_b0q(1, 1, 999, 1).is_err());
        assert!(estimate_b0q(0, 0, 10_000, 1).is_err());
    }

    #[test]
    fn one_dimensional_estimates() {
        // m = 1: n_1 = 4/3 and n_2 = 1/3.
        let est = estimate_all(1, 200_000, 9).unwrap();
        for (e, target) in est.iter().zip([4.0 / 3.0, 1.0 / 3.0]) {
            let (v, se) = e.leading_coeff_view();
            assert!((v - target).abs() <= 4.0 * se, "q={}: {v} +- {se}", e.q);
        }
    }
}
