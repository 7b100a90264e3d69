use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use holocrit::counts::{count_report, leading_report};
use holocrit::cp1_sim::run_trials;
use holocrit::rmt_mc::{estimate_all, estimate_b0q, B0qEstimate};
use holocrit::selberg::{selberg_exp, selberg_finite, SelbergParams, SelbergValue};
use holocrit::verify::{self, Level, VerifyConfig};
use holocrit::Rational;

/// Highest acceptable fraction of excluded random-matrix samples.
const MAX_EXCLUSION_RATE: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(
    name = "holocrit",
    version,
    about = "Exact and simulated counts of critical points of random holomorphic sections"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sampling commands (default: available cores).
    #[arg(long, global = true, env = "HOLOCRIT_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact expected number of critical points of each Morse index on CP^m.
    Exact {
        #[arg(long)]
        m: usize,
        #[arg(long = "N")]
        n: u64,
        /// Report a single index instead of all of [m, 2m].
        #[arg(long)]
        q: Option<usize>,
    },
    /// Leading coefficients of the counts as N grows.
    Leading {
        #[arg(long)]
        m: usize,
    },
    /// Selberg integral; omitting --beta selects the exponential form.
    Selberg {
        /// Number of integration variables.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        alpha: Rational,
        #[arg(long)]
        beta: Option<Rational>,
        #[arg(long)]
        gamma: Rational,
    },
    /// Random-matrix Monte Carlo estimate of b_0q.
    #[command(name = "b0q-mc")]
    B0qMc {
        #[arg(long)]
        m: usize,
        /// Single index; all of [m, 2m] when omitted.
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, env = "HOLOCRIT_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Direct simulation of random sections of O(N) on CP^1.
    Simulate {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, env = "HOLOCRIT_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Run the self-verification suite.
    Verify {
        #[arg(long, default_value = "exact")]
        level: Level,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, env = "HOLOCRIT_SEED", default_value_t = VerifyConfig::default().seed)]
        seed: u64,
    },
}

/// Exit statuses beyond success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok = 0,
    Usage = 1,
    VerificationFailed = 2,
    Unreliable = 3,
}

struct Output {
    body: String,
    status: Status,
}

impl Output {
    fn ok(body: String) -> Self {
        Output {
            body,
            status: Status::Ok,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Domain(String),
    Io(String),
}

impl From<holocrit::Error> for CliError {
    fn from(e: holocrit::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn to_csv<R, I, S>(header: &[&str], rows: R) -> CliResult<String>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct SingleCount<'a> {
    m: usize,
    #[serde(rename = "N")]
    n: u64,
    q: usize,
    exact: &'a Rational,
    float_view: f64,
}

fn exact_command(m: usize, n: u64, q: Option<usize>, format: Format) -> CliResult<Output> {
    let report = count_report(m, n)?;
    let body = match (q, format) {
        (Some(q), _) => {
            let value = report.per_q.get(&q).ok_or_else(|| {
                CliError::Domain(format!("Morse index q = {q} outside [{m}, {}]", 2 * m))
            })?;
            if format == Format::Json {
                to_json(&SingleCount {
                    m,
                    n,
                    q,
                    exact: value,
                    float_view: value.to_f64(),
                })
            } else {
                let row = [
                    m.to_string(),
                    n.to_string(),
                    q.to_string(),
                    value.to_string(),
                    value.to_f64().to_string(),
                ];
                to_csv(&["m", "N", "q", "exact", "float"], [row])?
            }
        }
        (None, Format::Json) => to_json(&report),
        (None, Format::Csv) => to_csv(&["m", "N", "q", "exact", "float"], report.csv_rows())?,
    };
    Ok(Output::ok(body))
}

fn leading_command(m: usize, format: Format) -> CliResult<Output> {
    let report = leading_report(m)?;
    Ok(Output::ok(match format {
        Format::Json => to_json(&report),
        Format::Csv => to_csv(&["m", "key", "exact", "float"], report.csv_rows())?,
    }))
}

#[derive(Serialize)]
struct SelbergReport {
    n: usize,
    alpha: Rational,
    beta: Option<Rational>,
    gamma: Rational,
    form: &'static str,
    exact: bool,
    /// Exact value as `coefficient*pi^(k/2)`, absent for log-gamma results.
    value: Option<String>,
    coefficient: Option<Rational>,
    pi_half_exponent: Option<i32>,
    float_view: f64,
}

fn selberg_command(
    n: usize,
    alpha: Rational,
    beta: Option<Rational>,
    gamma: Rational,
    format: Format,
) -> CliResult<Output> {
    let (value, form) = match &beta {
        Some(b) => (
            selberg_finite(&SelbergParams::new(
                n,
                alpha.clone(),
                b.clone(),
                gamma.clone(),
            ))?,
            "finite",
        ),
        None => (selberg_exp(n, &alpha, &gamma)?, "exponential"),
    };
    let exact = match &value {
        SelbergValue::Exact(v) => Some(v),
        SelbergValue::Inexact(_) => None,
    };
    let report = SelbergReport {
        n,
        alpha,
        beta,
        gamma,
        form,
        exact: value.is_exact(),
        value: exact.map(|v| v.to_string()),
        coefficient: exact.map(|v| v.coeff().clone()),
        pi_half_exponent: exact.map(|v| v.pi_half_exponent()),
        float_view: value.to_f64(),
    };
    Ok(Output::ok(match format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let opt = |v: &Option<String>| v.clone().unwrap_or_default();
            let row = [
                report.n.to_string(),
                report.alpha.to_string(),
                opt(&report.beta.as_ref().map(Rational::to_string)),
                report.gamma.to_string(),
                report.form.to_string(),
                opt(&report.value),
                report.float_view.to_string(),
            ];
            to_csv(
                &["n", "alpha", "beta", "gamma", "form", "exact", "float"],
                [row],
            )?
        }
    }))
}

fn estimate_row(e: &B0qEstimate) -> [String; 7] {
    [
        e.m.to_string(),
        e.q.to_string(),
        e.samples.to_string(),
        e.estimate.to_string(),
        e.stderr.to_string(),
        e.excluded.to_string(),
        e.seed.to_string(),
    ]
}

fn b0q_command(
    m: usize,
    q: Option<usize>,
    samples: u64,
    seed: u64,
    format: Format,
) -> CliResult<Output> {
    let estimates = match q {
        Some(q) => vec![estimate_b0q(m, q, samples, seed)?],
        None => estimate_all(m, samples, seed)?,
    };
    let body = match format {
        Format::Json if estimates.len() == 1 => to_json(&estimates[0]),
        Format::Json => to_json(&estimates),
        Format::Csv => to_csv(
            &[
                "m", "q", "samples", "estimate", "stderr", "excluded", "seed",
            ],
            estimates.iter().map(estimate_row),
        )?,
    };
    let excluded = estimates.first().map_or(0, |e| e.excluded);
    let status = if excluded as f64 / samples as f64 >= MAX_EXCLUSION_RATE {
        Status::Unreliable
    } else {
        Status::Ok
    };
    Ok(Output { body, status })
}

fn simulate_command(n: usize, trials: u64, seed: u64, format: Format) -> CliResult<Output> {
    let stats = run_trials(n, trials, seed)?;
    let body = match format {
        Format::Json => to_json(&stats),
        Format::Csv => to_csv(
            &["trial", "count_q1", "count_q2", "solver_ok"],
            stats.csv_rows(),
        )?,
    };
    let status = if stats.unreliable {
        Status::Unreliable
    } else {
        Status::Ok
    };
    Ok(Output { body, status })
}

#[derive(Serialize)]
struct VerifyReport {
    level: &'static str,
    passed: bool,
    checks: Vec<verify::CheckResult>,
}

fn verify_command(level: Level, config: VerifyConfig, format: Format) -> CliResult<Output> {
    let checks = verify::run(level, &config)?;
    let passed = checks.iter().all(|c| c.passed);
    let body = match format {
        Format::Json => to_json(&VerifyReport {
            level: match level {
                Level::Exact => "exact",
                Level::Mc => "mc",
                Level::All => "all",
            },
            passed,
            checks,
        }),
        Format::Csv => to_csv(
            &["id", "name", "passed", "detail"],
            checks.iter().map(|c| {
                [
                    c.id.to_string(),
                    c.name.to_string(),
                    c.passed.to_string(),
                    c.detail.clone(),
                ]
            }),
        )?,
    };
    let status = if passed {
        Status::Ok
    } else {
        Status::VerificationFailed
    };
    Ok(Output { body, status })
}

fn execute(cli: Cli) -> CliResult<Output> {
    let format = cli.format;
    match cli.command {
        Command::Exact { m, n, q } => exact_command(m, n, q, format),
        Command::Leading { m } => leading_command(m, format),
        Command::Selberg {
            m,
            alpha,
            beta,
            gamma,
        } => selberg_command(m, alpha, beta, gamma, format),
        Command::B0qMc {
            m,
            q,
            samples,
            seed,
        } => b0q_command(m, q, samples, seed, format),
        Command::Simulate { n, trials, seed } => simulate_command(n, trials, seed, format),
        Command::Verify {
            level,
            samples,
            trials,
            seed,
        } => verify_command(
            level,
            VerifyConfig {
                mc_samples: samples,
                sim_trials: trials,
                seed,
            },
            format,
        ),
    }
}

fn write_output(out: Option<&PathBuf>, mut body: String) -> CliResult<()> {
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match out {
        Some(path) => fs::write(path, body)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() {
                Status::Usage
            } else {
                Status::Ok
            };
            let _ = e.print();
            return ExitCode::from(status as u8);
        }
    };
    let out = cli.out.clone();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(Status::Usage as u8);
        }
    };
    let result = pool
        .install(|| execute(cli))
        .and_then(|output| write_output(out.as_ref(), output.body).map(|()| output.status));
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(CliError::Domain(msg)) | Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(Status::Usage as u8)
        }
    }
}
