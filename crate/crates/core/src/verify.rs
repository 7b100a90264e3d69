//! Self-checks of the whole toolkit: exact identities, Monte Carlo agreement
//! and reproducibility. Used by the acceptance tests and `holocrit verify`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::chamber::{chamber_integral, ordered_positive_closed_form, ChamberSpec};
use crate::counts::{cpm_exact_count, leading_coeff, leading_total, signed_count};
use crate::cp1_sim::{run_trials, EnsembleStats};
use crate::error::{Error, Result};
use crate::exactnum::{factorial, Rational};
use crate::rmt_mc::{estimate_all, B0qEstimate};
use crate::selberg::selberg_exp;

/// Which group of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Exact rational identities only (fast).
    Exact,
    /// Exact checks plus the sampling checks and their reproducibility.
    Mc,
    /// Every check; currently the same set as `Mc`.
    All,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Level::Exact),
            "mc" => Ok(Level::Mc),
            "all" => Ok(Level::All),
            other => Err(Error::Parse(format!(
                "unknown verification level '{other}' (expected exact, mc or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyConfig {
    pub mc_samples: u64,
    pub sim_trials: u64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            mc_samples: 1_000_000,
            sim_trials: 2000,
            seed: 20_240_917,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}. {}: {}", self.id, self.name, self.detail)
    }
}

fn check(id: u8, name: &'static str, failures: Vec<String>, ok_detail: String) -> CheckResult {
    let passed = failures.is_empty();
    let detail = if passed {
        ok_detail
    } else {
        let shown: Vec<_> = failures.iter().take(3).cloned().collect();
        format!("{} failure(s): {}", failures.len(), shown.join("; "))
    };
    CheckResult {
        id,
        name,
        passed,
        detail,
    }
}

fn degree_rational(n: u64) -> Rational {
    Rational::from_integer(n)
}

/// Minimum-index count against `2(m+1)(N-1)^(m+1) / ((m+2)N - 2)`.
pub fn check_closed_form() -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for m in 1..=5usize {
        for n in 2..=20u64 {
            let got = cpm_exact_count(m, n, m)?;
            let nm1 = Rational::from_integer(n - 1);
            let expected = Rational::from_integer(2 * (m as i64 + 1)) * nm1.pow(m as i32 + 1)?
                / (Rational::from_integer(m as i64 + 2) * degree_rational(n)
                    - Rational::from_integer(2));
            cases += 1;
            if got != expected {
                failures.push(format!("m={m} N={n}: {got} != {expected}"));
            }
        }
    }
    Ok(check(
        1,
        "minimum-index closed form",
        failures,
        format!("{cases} cases exact, m 1-5, N 2-20"),
    ))
}

/// Alternating sum of the counts against the signed count.
pub fn check_signed_identity() -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for m in 1..=4usize {
        for n in 2..=12u64 {
            let mut alternating = Rational::zero();
            for q in m..=2 * m {
                let v = cpm_exact_count(m, n, q)?;
                alternating = if q % 2 == 0 {
                    alternating + v
                } else {
                    alternating - v
                };
            }
            let closed = signed_count(m, n)?;
            let expected = if m % 2 == 0 {
                closed.clone()
            } else {
                -closed.clone()
            };
            let direct = (Rational::from_integer(n - 1).pow(m as i32 + 1)?
                + Rational::from_integer(if m % 2 == 0 { 1 } else { -1 }))
                / degree_rational(n);
            cases += 1;
            if alternating != expected || closed != direct {
                failures.push(format!("m={m} N={n}: {alternating} vs {expected}"));
            }
        }
    }
    Ok(check(
        2,
        "signed-count identity",
        failures,
        format!("{cases} cases exact, m 1-4, N 2-12"),
    ))
}

pub fn check_degree_two() -> Result<CheckResult> {
    let mut failures = Vec::new();
    for m in 1..=5usize {
        let mut total = Rational::zero();
        for q in m..=2 * m {
            let v = cpm_exact_count(m, 2, q)?;
            if v != Rational::one() {
                failures.push(format!("m={m} q={q}: {v} != 1"));
            }
            total += v;
        }
        if total != Rational::from_integer(m as i64 + 1) {
            failures.push(format!("m={m}: total {total} != {}", m + 1));
        }
    }
    Ok(check(
        3,
        "N = 2 counts",
        failures,
        "every count 1 and total m+1 for m 1-5".into(),
    ))
}

pub fn check_monotonicity() -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut strict = 0;
    for m in 1..=4usize {
        for n in [3u64, 5, 10] {
            let shift = Rational::one() - Rational::frac(2, n as i64);
            for q in m..2 * m {
                let p = Rational::from_integer((2 * m - q) as i64);
                let factor = (&p / &(&p + &shift)).pow(2)?;
                let lhs = cpm_exact_count(m, n, q + 1)?;
                let rhs = factor * cpm_exact_count(m, n, q)?;
                let ok = if m == 1 { lhs == rhs } else { lhs < rhs };
                if !ok {
                    let relation = if m == 1 { "==" } else { "<" };
                    failures.push(format!("m={m} N={n} q={q}: {lhs} {relation} {rhs} fails"));
                }
                if m > 1 {
                    strict += 1;
                }
            }
        }
    }
    Ok(check(
        4,
        "index monotonicity",
        failures,
        format!("{strict} strict inequalities for m 2-4, equality at m = 1"),
    ))
}

pub fn check_leading_coefficients() -> Result<CheckResult> {
    let mut failures = Vec::new();
    for m in 1..=6usize {
        let got = leading_coeff(m, m)?;
        let expected = Rational::frac(2 * (m as i64 + 1), m as i64 + 2);
        if got != expected {
            failures.push(format!("n_m({m}) = {got} != {expected}"));
        }
    }
    let n1 = leading_total(1)?;
    if n1 != Rational::frac(5, 3) {
        failures.push(format!("n(1) = {n1} != 5/3"));
    }
    for m in 2..=5usize {
        let total = leading_total(m)?;
        let lower = Rational::frac(2 * (m as i64 + 1), m as i64 + 2);
        let upper = Rational::frac(2 * m as i64 + 3, 3);
        if !(lower < total && total < upper) {
            failures.push(format!("m={m}: n = {total} not in ({lower}, {upper})"));
        }
    }
    Ok(check(
        5,
        "leading coefficients",
        failures,
        "n_m(m) = 2(m+1)/(m+2) for m 1-6, n(1) = 5/3, strict bounds for m 2-5".into(),
    ))
}

pub fn check_selberg_equivalence() -> Result<CheckResult> {
    let mut failures = Vec::new();
    let half = Rational::frac(1, 2);
    let two = Rational::from_integer(2);
    for m in 1..=6usize {
        let m_fact = Rational::from_integer(factorial(m as u64));
        let closed = &m_fact * &ordered_positive_closed_form(m);
        let selberg = selberg_exp(m, &two, &half)?;
        let selberg = match selberg.exact().map(|v| v.to_rational()) {
            Some(Ok(v)) => v,
            _ => {
                failures.push(format!("m={m}: Selberg value not rational"));
                continue;
            }
        };
        for c in [Rational::zero(), Rational::frac(1, 3), Rational::one()] {
            let chamber = &m_fact * &chamber_integral(&ChamberSpec::new(m, m, c.clone())?)?;
            if chamber != selberg || selberg != closed {
                failures.push(format!(
                    "m={m} c={c}: chamber {chamber}, Selberg {selberg}, closed {closed}"
                ));
            }
        }
    }
    Ok(check(
        6,
        "Selberg oracle equivalence",
        failures,
        "chamber, Selberg and closed form agree exactly for m 1-6".into(),
    ))
}

/// Sampling output of the random-matrix check, serialized for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixRun {
    pub estimates: Vec<B0qEstimate>,
}

pub fn matrix_run(config: &VerifyConfig) -> Result<MatrixRun> {
    let mut estimates = Vec::new();
    for m in 1..=2usize {
        estimates.extend(estimate_all(m, config.mc_samples, config.seed)?);
    }
    Ok(MatrixRun { estimates })
}

pub fn check_matrix_run(run: &MatrixRun) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut worst_exclusion: f64 = 0.0;
    for est in &run.estimates {
        let (value, stderr) = est.leading_coeff_view();
        let target = leading_coeff(est.m, est.q)?.to_f64();
        let z = (value - target).abs() / stderr;
        worst = worst.max(z);
        if !(z <= 3.0) {
            failures.push(format!(
                "m={} q={}: {value:.5} +- {stderr:.5} vs {target:.5}",
                est.m, est.q
            ));
        }
        let exclusion = est.excluded as f64 / est.samples as f64;
        worst_exclusion = worst_exclusion.max(exclusion);
        if !(exclusion < 1e-4) {
            failures.push(format!("m={}: exclusion rate {exclusion:e}", est.m));
        }
    }
    let samples = run.estimates.first().map_or(0, |e| e.samples);
    Ok(check(
        7,
        "random-matrix Monte Carlo",
        failures,
        format!(
            "{samples} samples per m; worst deviation {worst:.2} stderr; exclusion rate <= {worst_exclusion:e}"
        ),
    ))
}

pub const SIMULATION_DEGREES: [usize; 3] = [2, 3, 5];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRun {
    pub ensembles: Vec<EnsembleStats>,
}

pub fn simulation_run(config: &VerifyConfig) -> Result<SimulationRun> {
    let ensembles = SIMULATION_DEGREES
        .iter()
        .map(|&n| run_trials(n, config.sim_trials, config.seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationRun { ensembles })
}

pub fn check_simulation_run(run: &SimulationRun) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut min_identity_rate: f64 = 1.0;
    for stats in &run.ensembles {
        let n = stats.n_deg;
        let targets = [
            cpm_exact_count(1, n as u64, 1)?.to_f64(),
            cpm_exact_count(1, n as u64, 2)?.to_f64(),
        ];
        let observed = [
            (stats.mean_q1, stats.stderr_q1),
            (stats.mean_q2, stats.stderr_q2),
        ];
        for (q, ((mean, stderr), target)) in observed.iter().zip(targets).enumerate() {
            let dev = (mean - target).abs();
            if !(dev <= 3.0 * stderr) {
                failures.push(format!(
                    "N={n} q={}: {mean:.4} +- {stderr:.4} vs {target:.4}",
                    q + 1
                ));
            }
            if *stderr > 0.0 {
                worst = worst.max(dev / stderr);
            }
        }
        let holds = stats.per_trial.iter().filter(|t| t.identity_ok).count();
        let rate = holds as f64 / stats.trials as f64;
        min_identity_rate = min_identity_rate.min(rate);
        if rate < 0.99 {
            failures.push(format!(
                "N={n}: identity holds in {:.2}% of trials",
                100.0 * rate
            ));
        }
        let silent = stats
            .per_trial
            .iter()
            .filter(|t| t.solver_ok && !t.identity_ok)
            .count();
        if silent > 0 {
            failures.push(format!(
                "N={n}: {silent} identity violation(s) not flagged by the solver"
            ));
        }
    }
    let trials = run.ensembles.first().map_or(0, |e| e.trials);
    Ok(check(
        8,
        "CP1 critical point simulation",
        failures,
        format!(
            "{trials} trials for N in {SIMULATION_DEGREES:?}; worst deviation {worst:.2} stderr; identity rate >= {:.2}%",
            100.0 * min_identity_rate
        ),
    ))
}

/// Reruns both sampling checks on a two-thread pool and compares the JSON.
pub fn check_determinism(
    config: &VerifyConfig,
    matrix: &MatrixRun,
    sim: &SimulationRun,
) -> Result<CheckResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(2)
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let (matrix2, sim2) =
        pool.install(|| -> Result<_> { Ok((matrix_run(config)?, simulation_run(config)?)) })?;
    let mut failures = Vec::new();
    if to_json(matrix) != to_json(&matrix2) {
        failures.push("random-matrix report differs".into());
    }
    if to_json(sim) != to_json(&sim2) {
        failures.push("simulation report differs".into());
    }
    for (a, b) in sim.ensembles.iter().zip(&sim2.ensembles) {
        if a.csv_rows() != b.csv_rows() {
            failures.push(format!("N={}: per-trial rows differ", a.n_deg));
        }
    }
    Ok(check(
        9,
        "determinism",
        failures,
        "byte-identical reports for checks 7-8 on a rerun with a different thread count".into(),
    ))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("reports serialize")
}

pub fn exact_checks() -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_closed_form()?,
        check_signed_identity()?,
        check_degree_two()?,
        check_monotonicity()?,
        check_leading_coefficients()?,
        check_selberg_equivalence()?,
    ])
}

pub fn sampling_checks(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let matrix = matrix_run(config)?;
    let sim = simulation_run(config)?;
    Ok(vec![
        check_matrix_run(&matrix)?,
        check_simulation_run(&sim)?,
        check_determinism(config, &matrix, &sim)?,
    ])
}

pub fn run(level: Level, config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    out.extend(exact_checks()?);
    if matches!(level, Level::Mc | Level::All) {
        out.extend(sampling_checks(config)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_parsing() {
        assert_eq!("exact".parse::<Level>().unwrap(), Level::Exact);
        assert_eq!("mc".parse::<Level>().unwrap(), Level::Mc);
        assert_eq!("all".parse::<Level>().unwrap(), Level::All);
        assert!("fast".parse::<Level>().is_err());
    }

    #[test]
    fn failures_are_summarized() {
        let r = check(1, "x", vec!["a".into(), "b".into()], "fine".into());
        assert!(!r.passed);
        assert_eq!(r.detail, "2 failure(s): a; b");
        assert_eq!(r.to_string(), "[FAIL] 1. x: 2 failure(s): a; b");
    }

    #[test]
    fn small_sampling_run_is_reproducible() {
        let config = VerifyConfig {
            mc_samples: 5000,
            sim_trials: 30,
            seed: 3,
        };
        let matrix = matrix_run(&config).unwrap();
        let sim = simulation_run(&config).unwrap();
        assert!(check_determinism(&config, &matrix, &sim).unwrap().passed);
    }
}
