//! Brute-force quadrature of the chamber integrals over the ordered domain
//! `l_1 > ... > l_p > 0 > l_{p+1} > ... > l_m`, using the original
//! Vandermonde integrand rather than the expanded orthant form.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use holocrit::chamber::{chamber_integral, ChamberSpec};
use holocrit::Rational;

const PANEL: f64 = 2.0;
/// Truncation length for a unit decay rate.
const LENGTH: f64 = 40.0;

fn integrand(l: &[f64], p: usize, c: f64) -> f64 {
    let m = l.len();
    let abs_prod: f64 = l.iter().map(|x| x.abs()).product();
    let mut vandermonde = 1.0;
    for i in 0..m {
        for j in i + 1..m {
            vandermonde *= l[i] - l[j];
        }
    }
    let exponent = if p == m {
        -l.iter().sum::<f64>()
    } else {
        -l[..m - 1].iter().sum::<f64>() + (m as f64 + c) * l[m - 1]
    };
    abs_prod * vandermonde * exponent.exp()
}

/// Coordinates are filled in the order l_p, ..., l_1, then l_{p+1}, ..., l_m,
/// each bounded by the previously filled neighbour.
struct Nested {
    rule: GaussLegendre,
    order: Vec<usize>,
    p: usize,
    c: f64,
    panels: usize,
}

impl Nested {
    fn integrate(&self, depth: usize, point: &mut Vec<f64>) -> f64 {
        if depth == self.order.len() {
            return integrand(point, self.p, self.c);
        }
        let slot = self.order[depth];
        let upward = slot < self.p;
        let start = if upward {
            if slot + 1 < self.p {
                point[slot + 1]
            } else {
                0.0
            }
        } else if slot > self.p {
            point[slot - 1]
        } else {
            0.0
        };
        let mut total = 0.0;
        for k in 0..self.panels {
            let (a, b) = if upward {
                (start + k as f64 * PANEL, start + (k + 1) as f64 * PANEL)
            } else {
                (start - (k + 1) as f64 * PANEL, start - k as f64 * PANEL)
            };
            total += self.rule.integrate(a, b, |x| {
                point[slot] = x;
                self.integrate(depth + 1, point)
            });
        }
        total
    }
}

fn quadrature(m: usize, p: usize, c: f64) -> f64 {
    let order: Vec<usize> = (0..p).rev().chain(p..m).collect();
    let nested = Nested {
        rule: GaussLegendre::new(NonZeroUsize::new(10).unwrap()),
        order,
        p,
        c,
        panels: (LENGTH / (1.0 + c).min(1.0) / PANEL).ceil() as usize,
    };
    let mut point = vec![0.0; m];
    nested.integrate(0, &mut point)
}

#[test]
fn chamber_integral_matches_direct_quadrature() {
    for m in 1..=3usize {
        for p in 0..=m {
            for c in [
                Rational::zero(),
                Rational::frac(1, 3),
                Rational::one(),
                Rational::frac(-1, 2),
            ] {
                let exact = chamber_integral(&ChamberSpec::new(m, p, c.clone()).unwrap())
                    .unwrap()
                    .to_f64();
                let numeric = quadrature(m, p, c.to_f64());
                let rel = (numeric - exact).abs() / exact.abs();
                assert!(
                    rel <= 1e-6,
                    "m={m} p={p} c={c}: quadrature {numeric} vs exact {exact} (rel {rel:e})"
                );
            }
        }
    }
}
