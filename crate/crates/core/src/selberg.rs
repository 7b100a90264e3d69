//! Selberg's integral and its exponential limit as gamma products.
//!
//! Exact evaluation is available whenever every gamma argument is a positive
//! half-integer; anything else is computed through log-gamma and tagged
//! inexact.

use crate::error::{Error, Result};
use crate::exactnum::{gamma_rational, PiPower, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelbergParams {
    pub n: usize,
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
}

impl SelbergParams {
    pub fn new(n: usize, alpha: Rational, beta: Rational, gamma: Rational) -> Self {
        SelbergParams {
            n,
            alpha,
            beta,
            gamma,
        }
    }
}

/// Result of a Selberg evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum SelbergValue {
    Exact(PiPower),
    /// Log-gamma fallback for non-half-integer arguments.
    Inexact(f64),
}

impl SelbergValue {
    pub fn is_exact(&self) -> bool {
        matches!(self, SelbergValue::Exact(_))
    }

    pub fn exact(&self) -> Option<&PiPower> {
        match self {
            SelbergValue::Exact(v) => Some(v),
            SelbergValue::Inexact(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            SelbergValue::Exact(v) => v.to_f64(),
            SelbergValue::Inexact(x) => *x,
        }
    }
}

/// `gamma > -min(1/n, alpha/(n-1), beta/(n-1))` together with positivity of
/// `alpha` (and `beta` when present), checked exactly.
fn check_validity(
    n: usize,
    alpha: &Rational,
    beta: Option<&Rational>,
    gamma: &Rational,
) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("Selberg integral needs n >= 1".into()));
    }
    if !alpha.is_positive() {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    if let Some(b) = beta {
        if !b.is_positive() {
            return Err(Error::Domain(format!("beta = {b} must be positive")));
        }
    }
    let mut bound = Rational::frac(1, n as i64);
    if n > 1 {
        let nm1 = Rational::from_integer(n as i64 - 1);
        bound = bound.min(alpha / &nm1);
        if let Some(b) = beta {
            bound = bound.min(b / &nm1);
        }
    }
    if *gamma <= -&bound {
        return Err(Error::Domain(format!(
            "gamma = {gamma} outside the convergence region gamma > -{bound}"
        )));
    }
    Ok(())
}

/// Gamma arguments of the finite formula, split into numerator and denominator.
fn finite_arguments(p: &SelbergParams) -> (Vec<Rational>, Vec<Rational>) {
    let one = Rational::one();
    let mut num = Vec::with_capacity(3 * p.n);
    let mut den = Vec::with_capacity(2 * p.n);
    for j in 0..p.n {
        let jg = Rational::from_integer(j as i64) * &p.gamma;
        num.push(&one + &p.gamma + &jg);
        num.push(&p.alpha + &jg);
        num.push(&p.beta + &jg);
        den.push(&one + &p.gamma);
        let shift = Rational::from_integer((p.n + j) as i64 - 1) * &p.gamma;
        den.push(&p.alpha + &p.beta + shift);
    }
    (num, den)
}

fn exp_arguments(n: usize, alpha: &Rational, gamma: &Rational) -> (Vec<Rational>, Vec<Rational>) {
    let one = Rational::one();
    let mut num = Vec::with_capacity(2 * n);
    let mut den = Vec::with_capacity(n);
    for j in 0..n {
        let jg = Rational::from_integer(j as i64) * gamma;
        num.push(&one + gamma + &jg);
        num.push(alpha + &jg);
        den.push(&one + gamma);
    }
    (num, den)
}

fn exact_ratio(num: &[Rational], den: &[Rational]) -> Option<PiPower> {
    let top = num
        .iter()
        .map(gamma_rational)
        .collect::<Option<Vec<_>>>()?
        .into_iter()
        .product::<PiPower>();
    let bottom = den
        .iter()
        .map(gamma_rational)
        .collect::<Option<Vec<_>>>()?
        .into_iter()
        .product::<PiPower>();
    top.checked_div(&bottom).ok()
}

fn float_ratio(num: &[Rational], den: &[Rational]) -> f64 {
    let lg = |x: &Rational| libm::lgamma(x.to_f64());
    let log: f64 = num.iter().map(lg).sum::<f64>() - den.iter().map(lg).sum::<f64>();
    log.exp()
}

/// `int_{[0,1]^n} |Delta|^(2 gamma) prod x^(alpha-1) (1-x)^(beta-1) dx`.
pub fn selberg_finite(params: &SelbergParams) -> Result<SelbergValue> {
    check_validity(params.n, &params.alpha, Some(&params.beta), &params.gamma)?;
    let (num, den) = finite_arguments(params);
    Ok(match exact_ratio(&num, &den) {
        Some(v) => SelbergValue::Exact(v),
        None => SelbergValue::Inexact(float_ratio(&num, &den)),
    })
}

/// `int_{[0,inf)^n} |Delta|^(2 gamma) prod x^(alpha-1) exp(-x) dx`.
pub fn selberg_exp(n: usize, alpha: &Rational, gamma: &Rational) -> Result<SelbergValue> {
    check_validity(n, alpha, None, gamma)?;
    let (num, den) = exp_arguments(n, alpha, gamma);
    Ok(match exact_ratio(&num, &den) {
        Some(v) => SelbergValue::Exact(v),
        None => SelbergValue::Inexact(float_ratio(&num, &den)),
    })
}

/// Log-gamma evaluation of either form; `exponential` selects the limit form
/// and ignores `beta`.
pub fn selberg_float(params: &SelbergParams, exponential: bool) -> Result<f64> {
    let (num, den) = if exponential {
        check_validity(params.n, &params.alpha, None, &params.gamma)?;
        exp_arguments(params.n, &params.alpha, &params.gamma)
    } else {
        check_validity(params.n, &params.alpha, Some(&params.beta), &params.gamma)?;
        finite_arguments(params)
    };
    Ok(float_ratio(&num, &den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chamber::ordered_positive_closed_form;
    use crate::exactnum::factorial;

    fn r(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    fn exact_rational(v: SelbergValue) -> Rational {
        v.exact().expect("exact").to_rational().expect("rational")
    }

    #[test]
    fn finite_examples() {
        let one =
            |a, b, g| exact_rational(selberg_finite(&SelbergParams::new(1, a, b, g)).unwrap());
        assert_eq!(one(r(1, 1), r(1, 1), r(1, 2)), r(1, 1));
        assert_eq!(one(r(2, 1), r(1, 1), r(1, 2)), r(1, 2));
        let two = selberg_finite(&SelbergParams::new(2, r(1, 1), r(1, 1), r(1, 1))).unwrap();
        assert_eq!(exact_rational(two), r(1, 6));
    }

    #[test]
    fn exp_examples() {
        assert_eq!(
            exact_rational(selberg_exp(1, &r(1, 1), &r(3, 2)).unwrap()),
            r(1, 1)
        );
        assert_eq!(
            exact_rational(selberg_exp(1, &r(2, 1), &r(1, 2)).unwrap()),
            r(1, 1)
        );
        for m in 1..=6 {
            let v = exact_rational(selberg_exp(m, &r(2, 1), &r(1, 2)).unwrap());
            let expected =
                Rational::from_integer(factorial(m as u64)) * ordered_positive_closed_form(m);
            assert_eq!(v, expected, "m = {m}");
        }
    }

    #[test]
    fn half_integer_pi_content() {
        // n = 1, alpha = 1/2: Gamma(1/2) = sqrt(pi).
        let v = selberg_exp(1, &r(1, 2), &r(1, 2)).unwrap();
        assert_eq!(v.exact().unwrap().pi_half_exponent(), 1);
        assert!((v.to_f64() - std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn float_mode() {
        let p = SelbergParams::new(1, r(1, 1), r(1, 1), r(1, 2));
        assert!((selberg_float(&p, false).unwrap() - 1.0).abs() < 1e-12);
        let p = SelbergParams::new(2, r(2, 1), r(1, 1), r(1, 2));
        assert!((selberg_float(&p, true).unwrap() - 1.5).abs() < 1.5e-12);
        let p = SelbergParams::new(1, r(7, 3), r(1, 1), Rational::zero());
        let v = selberg_float(&p, false).unwrap();
        assert!((v - 3.0 / 7.0).abs() < 1e-12 * 3.0 / 7.0);
    }

    #[test]
    fn non_half_integer_falls_back() {
        let p = SelbergParams::new(1, r(7, 3), r(1, 1), Rational::zero());
        let v = selberg_finite(&p).unwrap();
        assert!(!v.is_exact());
        assert!((v.to_f64() - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn validity_region() {
        assert!(selberg_finite(&SelbergParams::new(0, r(1, 1), r(1, 1), r(1, 1))).is_err());
        assert!(selberg_finite(&SelbergParams::new(2, r(0, 1), r(1, 1), r(1, 1))).is_err());
        assert!(selberg_finite(&SelbergParams::new(2, r(1, 1), r(-1, 1), r(1, 1))).is_err());
        // n = 3: bound is min(1/3, 1/2 / 2, 1) = 1/4.
        let p = |g| SelbergParams::new(3, r(1, 2), r(2, 1), g);
        assert!(selberg_finite(&p(r(-1, 4))).is_err());
        assert!(selberg_finite(&p(r(-1, 5))).is_ok());
        assert!(selberg_exp(2, &r(1, 1), &r(-1, 2)).is_err());
        assert!(selberg_exp(2, &r(1, 1), &r(-2, 5)).is_ok());
        assert!(selberg_float(&p(r(-1, 3)), false).is_err());
    }

    #[test]
    fn finite_converges_to_exponential_limit() {
        // Rescaling x -> x / B turns (1 - x)^(B-1) into exp(-x) as B grows:
        // B^(n alpha + n(n-1) gamma) S_n(alpha, B, gamma) -> S_n^exp(alpha, gamma).
        let (n, alpha, gamma) = (3usize, r(2, 1), r(1, 2));
        let limit = selberg_exp(n, &alpha, &gamma).unwrap().to_f64();
        let mut last = f64::INFINITY;
        for b in [100i64, 1_000, 10_000] {
            let p = SelbergParams::new(n, alpha.clone(), r(b, 1), gamma.clone());
            let (num, den) = finite_arguments(&p);
            let power = n as f64 * alpha.to_f64() + (n * (n - 1)) as f64 * gamma.to_f64();
            let log = num.iter().map(|x| libm::lgamma(x.to_f64())).sum::<f64>()
                - den.iter().map(|x| libm::lgamma(x.to_f64())).sum::<f64>()
                + power * (b as f64).ln();
            let err = (log.exp() - limit).abs() / limit;
            assert!(
                err < last,
                "B = {b}: error {err} did not decrease from {last}"
            );
            last = err;
        }
        assert!(last < 1e-2);
    }
}
