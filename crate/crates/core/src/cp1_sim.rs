//! Direct simulation on `CP^1`: random sections of `O(N)`, all critical
//! points of `log ||s||^2`, and their Morse indices.
//!
//! In the affine Fubini-Study frame a section is `f(z) = sum a_j z^j` with
//! `a_j = c_j sqrt(binom(N, j))`, `c_j` i.i.d. standard complex Gaussians,
//! and critical points solve `(1 + |z|^2) f'(z) = N conj(z) f(z)`.
//!
//! Writing `w` for `conj(z)` turns this into a polynomial system `A(z, w) = 0`,
//! `B(z, w) = 0`. `A` is linear in `w`, so `w = f' / (N f - z f')` and
//! substituting into `B` leaves one univariate polynomial whose roots form a
//! superset of the critical points. Roots come from companion-matrix
//! eigenvalues; real solutions (`w = conj z`) are kept and polished by Newton's
//! method on the real system. The chart `zeta = 1/z` covers `|z| > 1`.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rmt_mc::{block_rng, complex_gaussian};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense univariate complex polynomial helpers; coefficients low to high.
mod upoly {
    use super::{Complex64, ZERO};

    pub fn eval(p: &[Complex64], z: Complex64) -> Complex64 {
        p.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `(p(z), p'(z), p''(z))` by Horner.
    pub fn eval2(p: &[Complex64], z: Complex64) -> (Complex64, Complex64, Complex64) {
        let (mut v, mut d1, mut d2) = (ZERO, ZERO, ZERO);
        for &c in p.iter().rev() {
            d2 = d2 * z + d1 * 2.0;
            d1 = d1 * z + v;
            v = v * z + c;
        }
        (v, d1, d2)
    }

    pub fn derivative(p: &[Complex64]) -> Vec<Complex64> {
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| c * j as f64)
            .collect()
    }

    pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![ZERO; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn add_scaled(acc: &mut Vec<Complex64>, p: &[Complex64], s: Complex64) {
        if acc.len() < p.len() {
            acc.resize(p.len(), ZERO);
        }
        for (a, &c) in acc.iter_mut().zip(p) {
            *a += c * s;
        }
    }

    /// Drops top coefficients below `rel * max |coeff|`.
    pub fn trim(p: &mut Vec<Complex64>, rel: f64) {
        let max = p.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        while p.last().is_some_and(|c| c.norm() <= rel * max) {
            p.pop();
        }
    }

    pub fn norm(p: &[Complex64]) -> f64 {
        p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn sqrt_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut b = 1.0f64;
    for j in 0..=n {
        out.push(b.sqrt());
        b = b * (n - j) as f64 / (j + 1) as f64;
    }
    out
}

/// A section of `O(N) -> CP^1` by its coefficients `c_0..c_N` in the
/// orthonormal monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    coeffs: Vec<Complex64>,
}

impl Section {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Domain("a section of O(N) needs N >= 1".into()));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Domain("section coefficients must be finite".into()));
        }
        Ok(Section { coeffs })
    }

    /// Bundle degree `N`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficients of `f(z) = sum c_j sqrt(binom(N, j)) z^j`.
    pub fn frame_coeffs(&self) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .zip(sqrt_binomials(self.degree()))
            .map(|(&c, w)| c * w)
            .collect()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        upoly::eval(&self.frame_coeffs(), z)
    }

    pub fn scaled(&self, s: Complex64) -> Section {
        Section {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// The same section in the chart `zeta = 1/z`: `zeta^N f(1/zeta)`, whose
    /// basis coefficients are `c_{N-j}`.
    pub fn inverted(&self) -> Section {
        Section {
            coeffs: self.coeffs.iter().rev().copied().collect(),
        }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }
}

pub fn sample_section<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Section> {
    if n == 0 {
        return Err(Error::Domain("bundle degree N must be >= 1".into()));
    }
    Section::new((0..=n).map(|_| complex_gaussian(rng)).collect())
}

/// Polynomial in `(z, w)`; `coeffs[i][j]` multiplies `z^i w^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariatePoly {
    coeffs: Vec<Vec<Complex64>>,
}

impl BivariatePoly {
    fn zeros(deg_z: usize, deg_w: usize) -> Self {
        BivariatePoly {
            coeffs: vec![vec![ZERO; deg_w + 1]; deg_z + 1],
        }
    }

    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(ZERO)
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(ZERO, |acc, row| acc * z + upoly::eval(row, w))
    }

    /// Highest power of `w` with a nonzero coefficient.
    pub fn degree_w(&self) -> Option<usize> {
        let width = self.coeffs.iter().map(Vec::len).max().unwrap_or(0);
        (0..width).rev().find(|&j| {
            self.coeffs
                .iter()
                .any(|row| row.get(j).is_some_and(|c| *c != ZERO))
        })
    }

    pub fn degree_z(&self) -> Option<usize> {
        (0..self.coeffs.len())
            .rev()
            .find(|&i| self.coeffs[i].iter().any(|c| *c != ZERO))
    }
}

/// The critical system `A = (1 + zw) f'(z) - N w f(z)`,
/// `B = (1 + zw) g'(w) - N z g(w)` with `g` the conjugate-coefficient
/// polynomial. `z` is critical iff `A(z, conj z) = 0`.
pub fn critical_system(section: &Section) -> Result<(BivariatePoly, BivariatePoly)> {
    if section.is_zero() {
        return Err(Error::Degenerate(
            "the zero section has no critical points".into(),
        ));
    }
    let n = section.degree();
    let f = section.frame_coeffs();
    let fp = upoly::derivative(&f);
    let g: Vec<Complex64> = f.iter().map(|c| c.conj()).collect();
    let gp = upoly::derivative(&g);
    let nf = n as f64;

    let mut a = BivariatePoly::zeros(n, 1);
    for (i, &c) in fp.iter().enumerate() {
        a.coeffs[i][0] += c;
        a.coeffs[i + 1][1] += c;
    }
    for (i, &c) in f.iter().enumerate() {
        a.coeffs[i][1] -= c * nf;
    }

    let mut b = BivariatePoly::zeros(1, n);
    for (j, &c) in gp.iter().enumerate() {
        b.coeffs[0][j] += c;
        b.coeffs[1][j + 1] += c;
    }
    for (j, &c) in g.iter().enumerate() {
        b.coeffs[1][j] -= c * nf;
    }
    Ok((a, b))
}

/// Which affine chart a point is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// Coordinate `z`.
    Affine = 0,
    /// Coordinate `zeta = 1/z`.
    Inverted = 1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointRecord {
    /// Coordinate in `chart`.
    pub z: Complex64,
    pub chart: Chart,
    /// 1 (saddle) or 2 (local maximum of `log ||s||^2`).
    pub morse_index: u8,
    pub hessian_eigs: [f64; 2],
    /// `|A(z, conj z)|` for the input section in this chart.
    pub residual: f64,
}

impl CriticalPointRecord {
    /// Point on the unit sphere under inverse stereographic projection of `z`.
    pub fn sphere_point(&self) -> [f64; 3] {
        let z = match self.chart {
            Chart::Affine => self.z,
            // 1/zeta, written to stay finite at zeta = 0.
            Chart::Inverted => {
                let zeta = self.z;
                let d = 1.0 + zeta.norm_sqr();
                return [
                    2.0 * zeta.re / d,
                    -2.0 * zeta.im / d,
                    (1.0 - zeta.norm_sqr()) / d,
                ];
            }
        };
        let d = 1.0 + z.norm_sqr();
        [2.0 * z.re / d, 2.0 * z.im / d, (z.norm_sqr() - 1.0) / d]
    }
}

pub fn chordal_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Hessian data of `log |f|^2 - N log(1 + |z|^2)` at a critical point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseData {
    pub index: u8,
    pub hessian_eigs: [f64; 2],
    pub u_zzbar: f64,
    pub u_zz: Complex64,
}

fn morse_from_frame(
    f: &[Complex64],
    n: usize,
    z: Complex64,
    marginal_tol: f64,
) -> Result<MorseData> {
    let (v, d1, d2) = upoly::eval2(f, z);
    if v == ZERO {
        return Err(Error::Degenerate(
            "Hessian requested at a zero of the section".into(),
        ));
    }
    let rho = 1.0 + z.norm_sqr();
    let curvature = n as f64 / (rho * rho);
    let ratio = d1 / v;
    let u_zz = d2 / v - ratio * ratio + z.conj() * z.conj() * curvature;
    let u_zzbar = -curvature;
    let modulus = u_zz.norm();
    if (modulus - curvature).abs() <= marginal_tol * curvature {
        return Err(Error::Degenerate(format!(
            "marginal index: |u_zz| = {modulus} vs N/(1+|z|^2)^2 = {curvature}"
        )));
    }
    Ok(MorseData {
        index: if modulus < curvature { 2 } else { 1 },
        hessian_eigs: [2.0 * (u_zzbar - modulus), 2.0 * (u_zzbar + modulus)],
        u_zzbar,
        u_zz,
    })
}

/// Morse index at a critical point `z` of the affine chart.
pub fn morse_index(section: &Section, z: Complex64) -> Result<MorseData> {
    morse_from_frame(&section.frame_coeffs(), section.degree(), z, 1e-8)
}

/// Tolerances of the critical point solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Residual target for Newton refinement; candidates are screened at `sqrt(tol)`.
    pub tol: f64,
    /// Points closer than this (chordal distance) are merged.
    pub dedupe: f64,
    /// A candidate where `||s|| < zero_tol * |c|` collides with a zero of the section.
    pub zero_tol: f64,
    /// Relative margin for the index test `|u_zz| < N / (1 + |z|^2)^2`.
    pub marginal_tol: f64,
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            dedupe: 1e-6,
            zero_tol: 1e-10,
            marginal_tol: 1e-8,
            max_newton: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub points: Vec<CriticalPointRecord>,
    /// Candidates for which Newton's method did not reach the residual target.
    pub newton_failures: usize,
    /// A candidate collided with a zero of the section.
    pub degenerate: bool,
    /// Some point had an undecidable Morse index.
    pub marginal: bool,
    /// The companion eigenvalue solver did not converge.
    pub eigen_failure: bool,
}

impl SolveOutcome {
    pub fn solver_ok(&self) -> bool {
        self.newton_failures == 0 && !self.degenerate && !self.marginal && !self.eigen_failure
    }

    /// `(# index 1, # index 2)`.
    pub fn counts(&self) -> (usize, usize) {
        let q1 = self.points.iter().filter(|p| p.morse_index == 1).count();
        (q1, self.points.len() - q1)
    }
}

/// Parlett-Reinsch diagonal balancing.
fn balance(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    let norm1 = |c: Complex64| c.re.abs() + c.im.abs();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += norm1(a[(j, i)]);
                    r += norm1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c > g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// All roots of `p` (low-to-high, nonzero leading coefficient).
fn polynomial_roots(p: &[Complex64]) -> Option<Vec<Complex64>> {
    let d = p.len().saturating_sub(1);
    if d == 0 {
        return Some(Vec::new());
    }
    let lead = p[d];
    let mut comp = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = ONE;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -p[i] / lead;
    }
    balance(&mut comp);
    let schur = Schur::try_new(comp, f64::EPSILON, 100 * d.max(10))?;
    let (_, t) = schur.unpack();
    Some((0..d).map(|i| t[(i, i)]).collect())
}

fn polish_root(p: &[Complex64], mut z: Complex64) -> Complex64 {
    let mut val = upoly::eval(p, z).norm();
    for _ in 0..8 {
        let (v, d1, _) = upoly::eval2(p, z);
        if d1 == ZERO {
            break;
        }
        let next = z - v / d1;
        let next_val = upoly::eval(p, next).norm();
        if !(next_val < val) {
            break;
        }
        z = next;
        val = next_val;
    }
    z
}

/// `A(z, conj z)` and its Wirtinger derivatives in `z` and `conj z`.
fn real_system(f: &[Complex64], n: usize, z: Complex64) -> (Complex64, Complex64, Complex64) {
    let nf = n as f64;
    let (v, d1, d2) = upoly::eval2(f, z);
    let rho = 1.0 + z.norm_sqr();
    let zb = z.conj();
    let value = d1 * rho - zb * v * nf;
    let dz = d2 * rho - zb * d1 * (nf - 1.0);
    let dzb = z * d1 - v * nf;
    (value, dz, dzb)
}

enum Refined {
    Converged(Complex64, f64),
    Failed,
}

/// Damped Newton on `Re, Im A(z, conj z) = 0`.
fn refine(f: &[Complex64], n: usize, mut z: Complex64, opts: &SolverOptions) -> Refined {
    let (mut value, mut dz, mut dzb) = real_system(f, n, z);
    for _ in 0..opts.max_newton {
        let r = -value;
        let det = dz.norm_sqr() - dzb.norm_sqr();
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let step = (dz.conj() * r - dzb * r.conj()) / det;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial = z + step * t;
            let sys = real_system(f, n, trial);
            if sys.0.norm() < value.norm() || value.norm() == 0.0 {
                accepted = Some((trial, sys));
                break;
            }
            t *= 0.5;
        }
        let Some((next, sys)) = accepted else { break };
        let moved = (next - z).norm();
        z = next;
        (value, dz, dzb) = sys;
        if value.norm() < opts.tol && moved <= 1e-13 * (1.0 + z.norm()) {
            break;
        }
    }
    let res = value.norm();
    if res < opts.tol && z.re.is_finite() && z.im.is_finite() {
        Refined::Converged(z, res)
    } else {
        Refined::Failed
    }
}

struct ChartSolution {
    points: Vec<(Complex64, f64)>,
    newton_failures: usize,
    degenerate: bool,
    eigen_failure: bool,
}

/// Critical points of the frame polynomial `f` (unit coefficient norm) with
/// `|z| <= radius`.
fn solve_chart(
    f: &[Complex64],
    n: usize,
    radius: f64,
    strict: bool,
    opts: &SolverOptions,
) -> ChartSolution {
    let nf = n as f64;
    let fp = upoly::derivative(f);
    // Q = N f - z f'; its z^N coefficient cancels exactly.
    let mut q: Vec<Complex64> = f.iter().map(|c| c * nf).collect();
    for (j, &c) in fp.iter().enumerate() {
        q[j + 1] -= c;
    }
    q.truncate(n);
    let p = fp.clone();
    let g: Vec<Complex64> = f.iter().map(|c| c.conj()).collect();

    let mut p_pow = vec![vec![ONE]];
    let mut q_pow = vec![vec![ONE]];
    for k in 1..=n {
        p_pow.push(upoly::mul(&p_pow[k - 1], &p));
        q_pow.push(upoly::mul(&q_pow[k - 1], &q));
    }
    // g(P/Q) Q^N and g'(P/Q) Q^(N-1).
    let mut big_g = Vec::new();
    let mut big_g1 = Vec::new();
    for (j, &gj) in g.iter().enumerate() {
        let term = upoly::mul(&p_pow[j], &q_pow[n - j]);
        upoly::add_scaled(&mut big_g, &term, gj);
        if j >= 1 {
            let term = upoly::mul(&p_pow[j - 1], &q_pow[n - j]);
            upoly::add_scaled(&mut big_g1, &term, gj * j as f64);
        }
    }
    // (1 + z w) = N f / Q on the curve A = 0, so B Q^N / N = f G1 - z G.
    let mut rho = upoly::mul(f, &big_g1);
    let mut z_g = vec![ZERO];
    z_g.extend_from_slice(&big_g);
    upoly::add_scaled(&mut rho, &z_g, -ONE);
    upoly::trim(&mut rho, 1e-14);

    let mut out = ChartSolution {
        points: Vec::new(),
        newton_failures: 0,
        degenerate: false,
        eigen_failure: false,
    };
    let Some(roots) = polynomial_roots(&rho) else {
        out.eigen_failure = true;
        return out;
    };
    let screen = opts.tol.sqrt();
    let coeff_norm = upoly::norm(f);
    for root in roots {
        if !(root.norm() <= radius * 1.05 + 0.05) {
            continue;
        }
        let z = polish_root(&rho, root);
        let qz = upoly::eval(&q, z);
        let pz = upoly::eval(&p, z);
        // Roots of Q are artefacts of the elimination.
        if qz.norm() <= f64::EPSILON * pz.norm() {
            continue;
        }
        let screened = (pz / qz - z.conj()).norm() < screen;
        let fz = upoly::eval(f, z);
        if screened && fz.norm() * (1.0 + z.norm_sqr()).powf(-nf / 2.0) < opts.zero_tol * coeff_norm
        {
            out.degenerate = true;
            continue;
        }
        // Every nearby root seeds Newton on the real system; only screened
        // seeds must converge.
        match refine(f, n, z, opts) {
            Refined::Converged(z, res) => {
                let inside = if strict {
                    z.norm() < radius
                } else {
                    z.norm() <= radius
                };
                let unseen = out
                    .points
                    .iter()
                    .all(|(p, _)| (p - z).norm() >= opts.dedupe);
                if inside && unseen {
                    out.points.push((z, res));
                }
            }
            Refined::Failed if screened => out.newton_failures += 1,
            Refined::Failed => {}
        }
    }
    out
}

/// Finds every critical point of `log ||s||^2` on the sphere.
///
/// Chart 1 keeps `|z| <= 1`, chart 2 keeps `|zeta| < 1`; duplicates within
/// `opts.dedupe` are merged and each survivor is classified.
pub fn find_critical_points(section: &Section, opts: &SolverOptions) -> Result<SolveOutcome> {
    if section.is_zero() {
        return Err(Error::Degenerate(
            "the zero section has no critical points".into(),
        ));
    }
    let n = section.degree();
    let raw = section.frame_coeffs();
    let scale = upoly::norm(&raw);
    let f1: Vec<Complex64> = raw.iter().map(|c| c / scale).collect();
    let f2: Vec<Complex64> = f1.iter().rev().copied().collect();

    let mut outcome = SolveOutcome {
        points: Vec::new(),
        newton_failures: 0,
        degenerate: false,
        marginal: false,
        eigen_failure: false,
    };
    let mut found: Vec<CriticalPointRecord> = Vec::new();
    for (chart, frame, strict) in [(Chart::Affine, &f1, false), (Chart::Inverted, &f2, true)] {
        let sol = solve_chart(frame, n, 1.0, strict, opts);
        outcome.newton_failures += sol.newton_failures;
        outcome.degenerate |= sol.degenerate;
        outcome.eigen_failure |= sol.eigen_failure;
        for (z, res) in sol.points {
            let record = CriticalPointRecord {
                z,
                chart,
                morse_index: 0,
                hessian_eigs: [0.0; 2],
                residual: res * scale,
            };
            let here = record.sphere_point();
            if found
                .iter()
                .all(|p| chordal_distance(p.sphere_point(), here) >= opts.dedupe)
            {
                found.push(record);
            }
        }
    }
    for mut record in found {
        let frame = match record.chart {
            Chart::Affine => &f1,
            Chart::Inverted => &f2,
        };
        match morse_from_frame(frame, n, record.z, opts.marginal_tol) {
            Ok(data) => {
                record.morse_index = data.index;
                record.hessian_eigs = data.hessian_eigs;
                outcome.points.push(record);
            }
            Err(_) => outcome.marginal = true,
        }
    }
    Ok(outcome)
}

/// Outcome of one random trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub trial: u64,
    pub count_q1: usize,
    pub count_q2: usize,
    /// `count_q1 - count_q2`; topologically `N - 2`.
    pub signed: i64,
    pub solver_ok: bool,
    pub identity_ok: bool,
}

impl TrialStats {
    /// Counted in the ensemble means.
    pub fn accepted(&self) -> bool {
        self.solver_ok && self.identity_ok
    }
}

/// Failure rate above which a run is reported unreliable.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    #[serde(rename = "N")]
    pub n_deg: usize,
    pub trials: u64,
    pub seed: u64,
    pub mean_q1: f64,
    pub stderr_q1: f64,
    pub mean_q2: f64,
    pub stderr_q2: f64,
    /// Fraction of trials with a solver flag or a failed signed-count check.
    pub failure_rate: f64,
    /// Number of trials left out of the means.
    pub excluded: u64,
    pub unreliable: bool,
    #[serde(skip)]
    pub per_trial: Vec<TrialStats>,
}

impl EnsembleStats {
    /// Per-trial audit rows `(trial, count_q1, count_q2, solver_ok)`.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        self.per_trial
            .iter()
            .map(|t| {
                [
                    t.trial.to_string(),
                    t.count_q1.to_string(),
                    t.count_q2.to_string(),
                    t.solver_ok.to_string(),
                ]
            })
            .collect()
    }
}

/// Generator for one trial; independent streams per trial index.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    block_rng(seed, trial)
}

pub fn run_trial(n: usize, seed: u64, trial: u64, opts: &SolverOptions) -> Result<TrialStats> {
    let mut rng = trial_rng(seed, trial);
    let section = sample_section(n, &mut rng)?;
    let outcome = find_critical_points(&section, opts)?;
    let (q1, q2) = outcome.counts();
    let signed = q1 as i64 - q2 as i64;
    Ok(TrialStats {
        trial,
        count_q1: q1,
        count_q2: q2,
        signed,
        solver_ok: outcome.solver_ok(),
        identity_ok: signed == n as i64 - 2,
    })
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, f64::NAN);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `trials` independent trials in parallel on the current rayon pool.
pub fn run_trials(n: usize, trials: u64, seed: u64) -> Result<EnsembleStats> {
    run_trials_with(n, trials, seed, &SolverOptions::default())
}

pub fn run_trials_with(
    n: usize,
    trials: u64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<EnsembleStats> {
    if n < 2 {
        return Err(Error::Domain(format!("simulation needs N >= 2, got {n}")));
    }
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(n, seed, t, opts))
        .collect::<Result<Vec<_>>>()?;
    let accepted: Vec<&TrialStats> = per_trial.iter().filter(|t| t.accepted()).collect();
    let excluded = trials - accepted.len() as u64;
    let (mean_q1, stderr_q1) = mean_stderr(accepted.iter().map(|t| t.count_q1 as f64));
    let (mean_q2, stderr_q2) = mean_stderr(accepted.iter().map(|t| t.count_q2 as f64));
    let failure_rate = excluded as f64 / trials as f64;
    Ok(EnsembleStats {
        n_deg: n,
        trials,
        seed,
        mean_q1,
        stderr_q1,
        mean_q2,
        stderr_q2,
        failure_rate,
        excluded,
        unreliable: failure_rate > MAX_FAILURE_RATE,
        per_trial,
    })
}
