//! Exact chamber integrals
//!
//! ```text
//! P_{c,p}(m) = int_{Y_p} |prod l_j| Delta(l) exp(-sum_{j<m} l_j) * { exp((m+c) l_m)  p < m
//!                                                                 { exp(-l_m)       p = m
//! ```
//!
//! over `Y_p = { l_1 > ... > l_p > 0 > l_{p+1} > ... > l_m }`. Replacing the
//! ordered coordinates by their successive gaps maps `Y_p` onto the positive
//! orthant, and the integrand becomes the product of all consecutive sums
//! `L_ij = x_i + ... + x_j` (`i <= j`) against `exp(-sum_j r_j x_j)` with rates
//! `r_j = j` for `j <= p` and `r_j = j + c` for `j > p`. The polynomial does not
//! depend on `p`, so one expansion per `m` serves every `(p, c)`; each monomial
//! then integrates termwise to `prod a_k! / r_k^(a_k + 1)`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{factorial, Rational};

/// Default largest `m` for which the pair product is expanded.
pub const DEFAULT_MAX_DIMENSION: usize = 6;

static MAX_DIMENSION: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_DIMENSION);

pub fn max_dimension() -> usize {
    MAX_DIMENSION.load(Ordering::Relaxed)
}

/// Raises (or lowers) the expansion ceiling. The `m = 7` expansion has about
/// 1.3 million terms.
pub fn set_max_dimension(limit: usize) {
    MAX_DIMENSION.store(limit, Ordering::Relaxed);
}

/// Parameters of one chamber integral.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChamberSpec {
    m: usize,
    p: usize,
    c: Rational,
}

impl ChamberSpec {
    pub fn new(m: usize, p: usize, c: Rational) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("chamber dimension m must be >= 1".into()));
        }
        if p > m {
            return Err(Error::Domain(format!("chamber p = {p} exceeds m = {m}")));
        }
        if c <= Rational::from_integer(-1) {
            return Err(Error::Domain(format!(
                "chamber shift c = {c} must exceed -1"
            )));
        }
        Ok(ChamberSpec { m, p, c })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn c(&self) -> &Rational {
        &self.c
    }
}

/// Exponential rates after the change of variables to the orthant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateVector(Vec<Rational>);

impl RateVector {
    /// `r_j = j` for `j <= p`, `r_j = j + c` otherwise (1-based `j`).
    pub fn for_chamber(spec: &ChamberSpec) -> Self {
        let rates = (1..=spec.m)
            .map(|j| {
                let j_r = Rational::from_integer(j as i64);
                if j <= spec.p {
                    j_r
                } else {
                    j_r + &spec.c
                }
            })
            .collect();
        RateVector(rates)
    }

    pub fn from_rates(rates: Vec<Rational>) -> Result<Self> {
        if let Some(bad) = rates.iter().find(|r| !r.is_positive()) {
            return Err(Error::Domain(format!("rate {bad} is not positive")));
        }
        Ok(RateVector(rates))
    }

    pub fn rates(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Multivariate polynomial with big-integer coefficients keyed by exponent vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePoly {
    num_vars: usize,
    terms: HashMap<Vec<u16>, BigInt>,
}

impl SparsePoly {
    pub fn constant(num_vars: usize, value: BigInt) -> Self {
        let mut terms = HashMap::new();
        if !value.is_zero() {
            terms.insert(vec![0; num_vars], value);
        }
        SparsePoly { num_vars, terms }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponents: &[u16]) -> Option<&BigInt> {
        self.terms.get(exponents)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u16], &BigInt)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// Largest exponent of each variable over all terms.
    pub fn max_degrees(&self) -> Vec<u16> {
        let mut out = vec![0u16; self.num_vars];
        for exps in self.terms.keys() {
            for (o, &e) in out.iter_mut().zip(exps) {
                *o = (*o).max(e);
            }
        }
        out
    }

    /// Multiplies in place by the linear form `x_lo + ... + x_hi` (0-based, inclusive).
    pub fn mul_consecutive_sum(&mut self, lo: usize, hi: usize) {
        let mut next: HashMap<Vec<u16>, BigInt> =
            HashMap::with_capacity(self.terms.len() * (hi - lo + 1));
        for (exps, coeff) in &self.terms {
            for k in lo..=hi {
                let mut e = exps.clone();
                e[k] += 1;
                *next.entry(e).or_insert_with(BigInt::zero) += coeff;
            }
        }
        next.retain(|_, c| !c.is_zero());
        self.terms = next;
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.num_vars, "point dimension mismatch");
        self.terms
            .iter()
            .map(|(exps, coeff)| {
                exps.iter()
                    .zip(point)
                    .map(|(&e, x)| x.pow(e as i32).expect("nonnegative exponent"))
                    .fold(Rational::from_integer(coeff.clone()), |acc, v| acc * v)
            })
            .sum()
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exps, coeff)| {
                let c: f64 = num_traits::ToPrimitive::to_f64(coeff).unwrap_or(f64::NAN);
                exps.iter()
                    .zip(point)
                    .fold(c, |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }
}

type ExpansionCache = RwLock<HashMap<usize, Arc<SparsePoly>>>;

fn cache() -> &'static ExpansionCache {
    static CACHE: OnceLock<ExpansionCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Expansion of `prod_{1 <= i <= j <= m} (x_i + ... + x_j)`, cached per `m`.
pub fn expand_pair_product(m: usize) -> Result<Arc<SparsePoly>> {
    if m == 0 {
        return Err(Error::Domain("pair product needs m >= 1".into()));
    }
    let limit = max_dimension();
    if m > limit {
        return Err(Error::Capacity { m, limit });
    }
    if let Some(p) = cache().read().expect("cache poisoned").get(&m) {
        return Ok(Arc::clone(p));
    }
    let mut poly = SparsePoly::constant(m, BigInt::one());
    // Longest forms last keeps the intermediate maps smallest.
    for len in 1..=m {
        for lo in 0..=(m - len) {
            poly.mul_consecutive_sum(lo, lo + len - 1);
        }
    }
    let poly = Arc::new(poly);
    let mut guard = cache().write().expect("cache poisoned");
    Ok(Arc::clone(guard.entry(m).or_insert(poly)))
}

/// `prod_k a_k! / r_k^(a_k + 1)`, the integral of `prod x_k^a_k exp(-r_k x_k)`
/// over the positive orthant.
pub fn integrate_monomial(exponents: &[u16], rates: &RateVector) -> Result<Rational> {
    if exponents.len() != rates.len() {
        return Err(Error::Domain(format!(
            "monomial has {} exponents but {} rates were given",
            exponents.len(),
            rates.len()
        )));
    }
    let mut acc = Rational::one();
    for (&a, r) in exponents.iter().zip(rates.rates()) {
        if !r.is_positive() {
            return Err(Error::Domain(format!("rate {r} is not positive")));
        }
        let moment =
            Rational::from_integer(factorial(a as u64)).checked_div(&r.pow(a as i32 + 1)?)?;
        acc = acc * moment;
    }
    Ok(acc)
}

/// Exact `P_{c,p}(m)`.
pub fn chamber_integral(spec: &ChamberSpec) -> Result<Rational> {
    let poly = expand_pair_product(spec.m)?;
    let rates = RateVector::for_chamber(spec);
    Ok(integrate_poly(&poly, &rates))
}

/// Sums `coeff * integrate_monomial` over all terms using one common
/// denominator, so the inner loop is pure integer arithmetic.
///
/// With `r_k = n_k / d_k` and `E_k` one more than the top exponent of `x_k`,
/// each moment is `a! d_k^(a+1) n_k^(E_k - a - 1) / n_k^(E_k)`.
pub(crate) fn integrate_poly(poly: &SparsePoly, rates: &RateVector) -> Rational {
    let max_deg = poly.max_degrees();
    let mut denominator = BigInt::one();
    let mut weights: Vec<Vec<BigInt>> = Vec::with_capacity(rates.len());
    for (k, r) in rates.rates().iter().enumerate() {
        debug_assert!(r.is_positive());
        let (n, d) = (r.numer().abs(), r.denom().clone());
        let top = max_deg[k] as u32 + 1;
        denominator *= num_traits::pow(n.clone(), top as usize);
        let w = (0..top)
            .map(|a| {
                factorial(a as u64)
                    * num_traits::pow(d.clone(), a as usize + 1)
                    * num_traits::pow(n.clone(), (top - a - 1) as usize)
            })
            .collect();
        weights.push(w);
    }
    let numerator: BigInt = poly
        .terms()
        .map(|(exps, coeff)| {
            exps.iter()
                .enumerate()
                .fold(coeff.clone(), |acc, (k, &a)| acc * &weights[k][a as usize])
        })
        .sum();
    Rational::new(numerator, denominator).expect("rates are positive")
}

/// `(m+1) prod_{j=1}^m j! / 2^j`, the value of `P_{c,m}(m)` for every `c`.
pub fn ordered_positive_closed_form(m: usize) -> Rational {
    (1..=m).fold(Rational::from_integer(m as i64 + 1), |acc, j| {
        acc * Rational::new(factorial(j as u64), BigInt::one() << j).expect("nonzero")
    })
}
