//! Expected numbers of critical points on `CP^m` for sections of `O(N)`, and
//! the universal leading coefficients `n_q(m)` of the large-`N` expansion.
//!
//! Everything here is assembled from [`chamber_integral`] with the
//! substitution `p = 2m - q`: the shift is `c = 1 - 2/N` for the exact
//! `CP^m` counts and `c = 1` for the leading coefficients.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::chamber::{chamber_integral, ChamberSpec};
use crate::error::{Error, Result};
use crate::exactnum::{factorial, Rational};

fn check_dimension(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain("dimension m must be >= 1".into()));
    }
    Ok(())
}

fn check_index(m: usize, q: usize) -> Result<()> {
    check_dimension(m)?;
    if q < m || q > 2 * m {
        return Err(Error::Domain(format!(
            "Morse index q = {q} outside [{m}, {}]",
            2 * m
        )));
    }
    Ok(())
}

fn check_degree(n_deg: u64) -> Result<()> {
    if n_deg < 2 {
        return Err(Error::Domain(format!(
            "bundle degree N = {n_deg}; the count formula holds for N >= 2"
        )));
    }
    Ok(())
}

/// `2^((m^2+m+2)/2) / prod_{j=1}^m j!`. The exponent is an integer since
/// `m^2 + m` is even.
pub fn universal_prefactor(m: usize) -> Rational {
    let power = (m * m + m + 2) / 2;
    let denom: BigInt = (1..=m as u64).map(factorial).product();
    Rational::new(BigInt::one() << power, denom).expect("nonzero")
}

fn chamber_for_index(m: usize, q: usize, shift: Rational) -> Result<Rational> {
    // q = m is the all-positive chamber, whose rates ignore the shift.
    let spec = ChamberSpec::new(m, 2 * m - q, shift)?;
    chamber_integral(&spec)
}

/// Expected number of index-`q` critical points of a random section of
/// `O(N) -> CP^m`.
pub fn cpm_exact_count(m: usize, n_deg: u64, q: usize) -> Result<Rational> {
    check_index(m, q)?;
    check_degree(n_deg)?;
    let n = Rational::from_integer(n_deg);
    let shift = Rational::one() - Rational::new(2, n_deg).expect("N >= 2");
    let degree_factor = (&n - Rational::one())
        .pow(m as i32 + 1)?
        .checked_div(&(Rational::from_integer(m as i64 + 2) * &n - Rational::from_integer(2)))?;
    Ok(universal_prefactor(m) * degree_factor * chamber_for_index(m, q, shift)?)
}

/// `2(m+1)(N-1)^(m+1) / ((m+2)N - 2)`.
pub fn closed_form_min_index(m: usize, n_deg: u64) -> Result<Rational> {
    check_dimension(m)?;
    check_degree(n_deg)?;
    let n = Rational::from_integer(n_deg);
    let top =
        Rational::from_integer(2 * (m as i64 + 1)) * (&n - Rational::one()).pow(m as i32 + 1)?;
    top.checked_div(&(Rational::from_integer(m as i64 + 2) * n - Rational::from_integer(2)))
}

/// `((N-1)^(m+1) + (-1)^m) / N`, the topological signed count.
pub fn signed_count(m: usize, n_deg: u64) -> Result<Rational> {
    check_dimension(m)?;
    if n_deg == 0 {
        return Err(Error::Domain("bundle degree N must be >= 1".into()));
    }
    let n = Rational::from_integer(n_deg);
    let sign = Rational::from_integer(if m.is_multiple_of(2) { 1 } else { -1 });
    ((&n - Rational::one()).pow(m as i32 + 1)? + sign).checked_div(&n)
}

/// Leading coefficient `n_q(m)` of the index-`q` count.
pub fn leading_coeff(m: usize, q: usize) -> Result<Rational> {
    check_index(m, q)?;
    let prefactor = universal_prefactor(m) * Rational::frac(1, m as i64 + 2);
    Ok(prefactor * chamber_for_index(m, q, Rational::one())?)
}

/// `n(m) = sum_q n_q(m)`.
pub fn leading_total(m: usize) -> Result<Rational> {
    check_dimension(m)?;
    (m..=2 * m).map(|q| leading_coeff(m, q)).sum()
}

/// Exact per-index counts for one `(m, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub m: usize,
    pub n_deg: u64,
    pub per_q: BTreeMap<usize, Rational>,
    pub total: Rational,
    /// `sum_q (-1)^(q-m) N_q`; equals [`signed_count`].
    pub signed: Rational,
    pub float_view: BTreeMap<usize, f64>,
}

pub fn count_report(m: usize, n_deg: u64) -> Result<CountReport> {
    check_dimension(m)?;
    check_degree(n_deg)?;
    let mut per_q = BTreeMap::new();
    for q in m..=2 * m {
        per_q.insert(q, cpm_exact_count(m, n_deg, q)?);
    }
    let total: Rational = per_q.values().sum();
    let signed: Rational = per_q
        .iter()
        .map(|(&q, v)| {
            if (q - m).is_multiple_of(2) {
                v.clone()
            } else {
                -v
            }
        })
        .sum();
    let float_view = per_q.iter().map(|(&q, v)| (q, v.to_f64())).collect();
    Ok(CountReport {
        m,
        n_deg,
        per_q,
        total,
        signed,
        float_view,
    })
}

impl CountReport {
    /// Flat rows `(m, N, q, exact, float)`; `q` is also `total` or `signed`.
    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        let mut rows: Vec<[String; 5]> = self
            .per_q
            .iter()
            .map(|(q, v)| {
                [
                    self.m.to_string(),
                    self.n_deg.to_string(),
                    q.to_string(),
                    v.to_string(),
                    v.to_f64().to_string(),
                ]
            })
            .collect();
        for (label, v) in [("total", &self.total), ("signed", &self.signed)] {
            rows.push([
                self.m.to_string(),
                self.n_deg.to_string(),
                label.to_string(),
                v.to_string(),
                v.to_f64().to_string(),
            ]);
        }
        rows
    }
}

impl Serialize for CountReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let per_q: BTreeMap<String, &Rational> =
            self.per_q.iter().map(|(q, v)| (q.to_string(), v)).collect();
        let float_view: BTreeMap<String, f64> = self
            .float_view
            .iter()
            .map(|(q, v)| (q.to_string(), *v))
            .collect();
        let mut map = serializer.serialize_map(Some(6))?;
        map.serialize_entry("m", &self.m)?;
        map.serialize_entry("N", &self.n_deg)?;
        map.serialize_entry("per_q", &per_q)?;
        map.serialize_entry("total", &self.total)?;
        map.serialize_entry("signed", &self.signed)?;
        map.serialize_entry("float_view", &float_view)?;
        map.end()
    }
}

/// Leading coefficients `n_q(m)` and their sum `n(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingReport {
    pub m: usize,
    pub n_q: BTreeMap<usize, Rational>,
    pub n_total: Rational,
}

pub fn leading_report(m: usize) -> Result<LeadingReport> {
    check_dimension(m)?;
    let mut n_q = BTreeMap::new();
    for q in m..=2 * m {
        n_q.insert(q, leading_coeff(m, q)?);
    }
    let n_total = n_q.values().sum();
    Ok(LeadingReport { m, n_q, n_total })
}

impl LeadingReport {
    /// Rows `(m, key, exact, float)` with keys `n_<q>` and `n`.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        self.n_q
            .iter()
            .map(|(q, v)| (format!("n_{q}"), v))
            .chain(std::iter::once(("n".to_string(), &self.n_total)))
            .map(|(k, v)| [self.m.to_string(), k, v.to_string(), v.to_f64().to_string()])
            .collect()
    }
}

/// Serialized flat: `{"m": 1, "n_1": "4/3", "n_2": "1/3", "n": "5/3", "float_view": {...}}`.
impl Serialize for LeadingReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut float_view: BTreeMap<String, f64> = self
            .n_q
            .iter()
            .map(|(q, v)| (format!("n_{q}"), v.to_f64()))
            .collect();
        float_view.insert("n".into(), self.n_total.to_f64());
        let mut map = serializer.serialize_map(Some(self.n_q.len() + 3))?;
        map.serialize_entry("m", &self.m)?;
        for (q, v) in &self.n_q {
            map.serialize_entry(&format!("n_{q}"), v)?;
        }
        map.serialize_entry("n", &self.n_total)?;
        map.serialize_entry("float_view", &float_view)?;
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn count_examples() {
        assert_eq!(cpm_exact_count(1, 3, 1).unwrap(), r(16, 7));
        assert_eq!(cpm_exact_count(1, 3, 2).unwrap(), r(9, 7));
        for m in 1..=4 {
            for q in m..=2 * m {
                assert_eq!(
                    cpm_exact_count(m, 2, q).unwrap(),
                    r(1, 1),
                    "m = {m}, q = {q}"
                );
            }
        }
    }

    #[test]
    fn count_domain_errors() {
        assert!(matches!(cpm_exact_count(1, 3, 0), Err(Error::Domain(_))));
        assert!(matches!(cpm_exact_count(1, 3, 3), Err(Error::Domain(_))));
        assert!(matches!(cpm_exact_count(2, 1, 2), Err(Error::Domain(_))));
        assert!(matches!(cpm_exact_count(0, 3, 0), Err(Error::Domain(_))));
        assert!(closed_form_min_index(1, 1).is_err());
        assert!(signed_count(1, 0).is_err());
        assert!(leading_coeff(2, 5).is_err());
        assert!(leading_total(0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_min_index(1, 2).unwrap(), r(1, 1));
        assert_eq!(closed_form_min_index(2, 3).unwrap(), r(24, 5));
        assert_eq!(closed_form_min_index(1, 3).unwrap(), r(16, 7));
    }

    #[test]
    fn signed_examples() {
        assert_eq!(signed_count(1, 3).unwrap(), r(1, 1));
        assert_eq!(signed_count(2, 2).unwrap(), r(1, 1));
        assert_eq!(signed_count(1, 1).unwrap(), r(-1, 1));
        for m in 1..=5 {
            for n in 1..=15 {
                assert!(signed_count(m, n).unwrap().is_integer());
            }
        }
    }

    #[test]
    fn leading_examples() {
        for m in 1..=5 {
            assert_eq!(
                leading_coeff(m, m).unwrap(),
                r(2 * (m as i64 + 1), m as i64 + 2)
            );
        }
        assert_eq!(leading_coeff(1, 2).unwrap(), r(1, 3));
        assert_eq!(leading_coeff(1, 1).unwrap(), r(4, 3));
        assert_eq!(leading_total(1).unwrap(), r(5, 3));
        let n2 = leading_total(2).unwrap();
        assert!(r(3, 2) < n2 && n2 < r(7, 3), "n(2) = {n2}");
    }

    #[test]
    fn reports() {
        let rep = count_report(1, 3).unwrap();
        assert_eq!(rep.per_q[&1], r(16, 7));
        assert_eq!(rep.per_q[&2], r(9, 7));
        assert_eq!(rep.total, r(25, 7));
        assert_eq!(rep.signed, r(1, 1));
        assert_eq!(rep.float_view[&1], 16.0 / 7.0);

        let rep = count_report(1, 2).unwrap();
        assert_eq!(rep.total, r(2, 1));
        assert_eq!(rep.signed, Rational::zero());
        assert_eq!(count_report(2, 2).unwrap().total, r(3, 1));

        let json = serde_json::to_value(count_report(1, 3).unwrap()).unwrap();
        assert_eq!(json["per_q"]["1"], "16/7");
        assert_eq!(json["per_q"]["2"], "9/7");
        assert_eq!(json["signed"], "1");
        assert_eq!(json["N"], 3);

        let json = serde_json::to_value(leading_report(1).unwrap()).unwrap();
        assert_eq!(json["n_1"], "4/3");
        assert_eq!(json["n_2"], "1/3");
        assert_eq!(json["n"], "5/3");
    }

    #[test]
    fn report_invariants() {
        for m in 1..=3 {
            for n in [2u64, 3, 7] {
                let rep = count_report(m, n).unwrap();
                assert_eq!(rep.total, rep.per_q.values().sum::<Rational>());
                assert!(rep.per_q.values().all(Rational::is_positive));
                assert_eq!(rep.signed, signed_count(m, n).unwrap());
            }
            let lead = leading_report(m).unwrap();
            assert_eq!(lead.n_total, lead.n_q.values().sum::<Rational>());
            assert!(lead.n_q.values().all(Rational::is_positive));
        }
    }

    #[test]
    fn counts_approach_leading_coefficients() {
        // |N^-m count - n_q| shrinks like 1/N: the error roughly halves per doubling.
        for m in 1..=3 {
            for q in m..=2 * m {
                let target = leading_coeff(m, q).unwrap().to_f64();
                let errs: Vec<f64> = [10u64, 20, 40, 80]
                    .iter()
                    .map(|&n| {
                        let c = cpm_exact_count(m, n, q).unwrap().to_f64();
                        (c / (n as f64).powi(m as i32) - target).abs()
                    })
                    .collect();
                for w in errs.windows(2) {
                    let ratio = w[0] / w[1];
                    assert!((1.6..2.6).contains(&ratio), "m={m} q={q} ratio={ratio}");
                }
                assert!(errs[3] * 80.0 < 10.0 * target.max(1.0));
            }
        }
    }
}
