use std::process::{Command, Output};

use serde_json::Value;

fn holocrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holocrit"))
        .args(args)
        .env_remove("HOLOCRIT_SEED")
        .env_remove("HOLOCRIT_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("valid JSON")
}

#[test]
fn exact_counts_as_json() {
    let out = holocrit(&["exact", "--m", "1", "--N", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["per_q"]["1"], "16/7");
    assert_eq!(v["per_q"]["2"], "9/7");
    assert_eq!(v["signed"], "1");
    assert!(stdout(&out).ends_with('\n'));
}

#[test]
fn exact_single_index() {
    let v = json(&holocrit(&["exact", "--m", "2", "--N", "2", "--q", "3"]));
    assert_eq!(v["exact"], "1");
    assert_eq!(v["q"], 3);
}

#[test]
fn leading_coefficients() {
    let v = json(&holocrit(&["leading", "--m", "1"]));
    assert_eq!(v["n_1"], "4/3");
    assert_eq!(v["n_2"], "1/3");
    assert_eq!(v["n"], "5/3");
}

#[test]
fn csv_output_is_rfc4180() {
    let out = holocrit(&["exact", "--m", "1", "--N", "3", "--format", "csv"]);
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["m", "N", "q", "exact", "float"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(&rows[0][3], "16/7");
    assert_eq!(&rows[2][2], "total");

    // Details containing commas must be quoted.
    let verify = stdout(&holocrit(&[
        "verify", "--level", "exact", "--format", "csv",
    ]));
    assert!(verify.contains("\"95 cases exact, m 1-5, N 2-20\""));
}

#[test]
fn selberg_forms() {
    let v = json(&holocrit(&[
        "selberg", "--m", "2", "--alpha", "2", "--gamma", "1/2",
    ]));
    assert_eq!(v["form"], "exponential");
    assert_eq!(v["value"], "3/2");
    let v = json(&holocrit(&[
        "selberg", "--m", "1", "--alpha", "1/2", "--beta", "1", "--gamma", "1",
    ]));
    assert_eq!(v["form"], "finite");
    assert_eq!(v["value"], "2");
    let v = json(&holocrit(&[
        "selberg", "--m", "1", "--alpha", "1/2", "--gamma", "1",
    ]));
    assert_eq!(v["pi_half_exponent"], 1);
    let v = json(&holocrit(&[
        "selberg", "--m", "1", "--alpha", "7/3", "--beta", "1", "--gamma", "0",
    ]));
    assert_eq!(v["exact"], false);
    assert!(v["value"].is_null());
}

#[test]
fn domain_and_usage_errors_exit_one() {
    for args in [
        &["exact", "--m", "0", "--N", "3"][..],
        &["exact", "--m", "1", "--N", "3", "--q", "5"],
        &["exact", "--m", "1", "--N", "3", "--bogus"],
        &["exact", "--m", "1"],
        &["selberg", "--m", "2", "--alpha", "1", "--gamma", "-1"],
        &["b0q-mc", "--m", "1", "--samples", "10"],
        &["simulate", "--N", "1", "--trials", "5"],
        &["verify", "--level", "fast"],
        &["frobnicate"],
    ] {
        let out = holocrit(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
    assert_eq!(holocrit(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_exact_passes() {
    let out = holocrit(&["verify", "--level", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 6);
}

#[test]
fn monte_carlo_is_deterministic_across_job_counts() {
    let args = ["b0q-mc", "--m", "1", "--samples", "20000", "--seed", "11"];
    let one = holocrit(&[&args[..], &["--jobs", "1"]].concat());
    let four = holocrit(&[&args[..], &["--jobs", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    for key in [
        "m", "q", "samples", "estimate", "stderr", "excluded", "seed",
    ] {
        assert!(v[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn seed_from_environment() {
    let run = |env_seed: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_holocrit"));
        cmd.args(["simulate", "--N", "3", "--trials", "20"])
            .args(extra);
        cmd.env_remove("HOLOCRIT_SEED");
        if let Some(s) = env_seed {
            cmd.env("HOLOCRIT_SEED", s);
        }
        cmd.output().unwrap()
    };
    let from_env = run(Some("42"), &[]);
    let from_flag = run(None, &["--seed", "42"]);
    assert_eq!(from_env.stdout, from_flag.stdout);
    let v: Value = serde_json::from_slice(&from_env.stdout).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["N"], 3);
    assert_eq!(v["unreliable"], false);
}

#[test]
fn simulation_csv_and_out_file() {
    let dir = std::env::temp_dir().join(format!("holocrit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trials.csv");
    let out = holocrit(&[
        "simulate",
        "--N",
        "2",
        "--trials",
        "10",
        "--seed",
        "5",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,count_q1,count_q2,solver_ok"));
    assert_eq!(lines.next(), Some("0,1,1,true"));
    assert_eq!(text.lines().count(), 11);
    assert!(text.ends_with('\n'));
    std::fs::remove_dir_all(&dir).unwrap();
}
