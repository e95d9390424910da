//! Output-schema and contract tests for the `digitree` binary.

use std::process::{Command, Output};

fn digitree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_digitree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = digitree(args);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn table3_schema_and_truncated_values() {
    let out = stdout(&["table3", "--kmax", "10", "--tol", "1e-12"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "m,mean_correlation,mean_correlation_3dp");
    let truncated: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(truncated, ["0.927", "0.925", "0.924", "0.922", "0.921"]);
    assert!(lines[1].starts_with("2,0.927241603"));
}

#[test]
fn table4_truncated_values() {
    let out = stdout(&["table4", "--kmax", "10"]);
    let truncated: Vec<String> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().to_string())
        .collect();
    assert_eq!(truncated, ["0.751", "0.814", "0.841", "0.856"]);
}

#[test]
fn moments_header_and_small_values() {
    let out = stdout(&[
        "moments", "--family", "binary-trie", "--p", "0.5", "--nmax", "8",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "n,es,ek,en,es2,ek2,en2,esk,esn,ekn,var_s,var_k,var_n,cov_sk,cov_sn,cov_kn,rho_sk,rho_sn,rho_kn"
    );
    assert_eq!(lines.len(), 10); // header + n = 0..=8
    let row2: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(row2[0], "2");
    assert_eq!(row2[1], "2"); // ES(2) = 2.0
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let args = [
        "simulate", "--family", "mary-trie", "--m", "3", "--n", "200", "--trials", "50",
        "--seed", "11",
    ];
    assert_eq!(stdout(&args), stdout(&args));
    let args = [
        "moments", "--family", "bucket-dst", "--p", "0.4", "--bucket", "3", "--nmax", "64",
        "--format", "json",
    ];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn moments_json_round_trips_against_the_library() {
    let out = stdout(&[
        "moments", "--family", "binary-trie", "--p", "0.5", "--nmax", "8", "--format", "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["meta"]["command"], "moments");
    assert_eq!(doc["meta"]["nmax"], 8);
    let table = digitree::moment_table_binary_trie(0.5, 8).unwrap();
    assert_eq!(doc["data"], serde_json::to_value(&table).unwrap());
}

#[test]
fn simulate_csv_rows_and_single_trial() {
    let out = stdout(&[
        "simulate", "--family", "binary-trie", "--p", "0.5", "--n", "16", "--trials", "1",
        "--seed", "5",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "trial,size,kpl,npl");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn fourier_csv_schema() {
    let out = stdout(&[
        "fourier", "--family", "mary-trie", "--m", "2", "--series", "cov", "--kmax", "1",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k,re,im,terms,last_term");
    assert_eq!(lines.len(), 4); // header + k = -1, 0, 1
    assert!(lines[2].starts_with("0,1.779227486"));
}

#[test]
fn histogram_json_counts_sum_to_trials() {
    let out = stdout(&[
        "histogram", "--family", "binary-trie", "--p", "0.3", "--n", "64", "--trials", "500",
        "--seed", "2", "--bins", "6", "--format", "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    let counts = doc["data"]["counts"].as_array().unwrap();
    assert_eq!(counts.len(), 36);
    let total: u64 = counts.iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 500);
}

#[test]
fn cltcheck_reports_and_passes_at_moderate_size() {
    let out = stdout(&[
        "cltcheck", "--family", "binary-trie", "--p", "0.5", "--n", "512", "--trials", "1500",
        "--seed", "3", "--calibrate", "--format", "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["data"]["report"]["samples"], 1500);
    assert_eq!(doc["data"]["report"]["pass"], true);
    assert_eq!(doc["data"]["calibration"]["pass"], true);
    assert_eq!(doc["meta"]["centering"], "exact moments");
}

#[test]
fn rho_outputs_match_family_support() {
    let out = stdout(&["rho", "--family", "binary-trie", "--p", "0.3", "--n", "100"]);
    assert_eq!(out, "n,rho\n100,0\n");
    let out = stdout(&["rho", "--family", "patricia", "--m", "4", "--n", "100"]);
    assert!(out.starts_with("n,rho\n100,0.81"));
}

#[test]
fn exit_codes_by_error_class() {
    // usage: unknown flag (clap) and invalid probability
    assert_eq!(digitree(&["moments", "--bogus"]).status.code(), Some(2));
    let out = digitree(&[
        "moments", "--family", "binary-trie", "--p", "1.5", "--nmax", "8",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // model: no closed form for bucket DST correlation
    let out = digitree(&[
        "rho", "--family", "bucket-dst", "--p", "0.5", "--bucket", "2", "--n", "64",
    ]);
    assert_eq!(out.status.code(), Some(3));
    // model: aperiodic spectrum cannot produce k > 0 coefficients
    let out = digitree(&[
        "fourier", "--family", "binary-trie", "--p", "0.3", "--series", "cov", "--kmax", "2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    // limits: table cap
    let out = digitree(&[
        "moments", "--family", "binary-trie", "--p", "0.5", "--nmax", "100000",
    ]);
    assert_eq!(out.status.code(), Some(5));
    // error records are machine readable
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is a JSON record");
    assert_eq!(err["error"]["kind"], "limits");
    assert_eq!(err["error"]["exit_code"], 5);
}

#[test]
fn out_flag_and_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["table4", "--out", "tables/t4.csv"];
    let out = Command::new(env!("CARGO_BIN_EXE_digitree"))
        .args(args)
        .env("DIGITREE_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let written = std::fs::read_to_string(dir.path().join("tables/t4.csv")).unwrap();
    assert_eq!(written, stdout(&["table4"]));
}

#[test]
fn figure2_data_grid() {
    let out = stdout(&["figure2-data"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,rho_exact,f_periodic,f_mean");
    assert!(lines[1].starts_with("32,"));
    assert!(lines.last().unwrap().starts_with("4096,"));
    // exact correlation approaches the periodic prediction down the grid
    let parse = |line: &str| -> (f64, f64) {
        let mut it = line.split(',');
        it.next();
        (
            it.next().unwrap().parse().unwrap(),
            it.next().unwrap().parse().unwrap(),
        )
    };
    let (rho_first, f_first) = parse(lines[1]);
    let (rho_last, f_last) = parse(lines.last().unwrap());
    assert!((rho_last - f_last).abs() < (rho_first - f_first).abs());
}
