use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn kuznetsov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kuznetsov")).args(args).env_remove("KUZNETSOV_THREADS").output().expect("binary runs")
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn value(r: &Value) -> (f64, f64) {
    (r["value"][0].as_f64().unwrap(), r["value"][1].as_f64().unwrap())
}

#[test]
fn kwl_auto_at_plus_plus_uses_whittaker_identity() {
    let out = kuznetsov(&["kernel", "--kind", "kwl", "--y", "0.01,0.02", "--mu", "0.4,0.1", "--route", "auto"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!(r["command"], "kernel");
    assert_eq!(r["representation"], "whittaker_identity");
    assert!(r["err_estimate"].as_f64().unwrap() >= 0.0);
    assert_eq!(r["library_version"], env!("CARGO_PKG_VERSION"));

    let series = records(&kuznetsov(&["kernel", "--kind", "kwl", "--y", "0.01,0.02", "--route", "series"]));
    let (a, b) = (value(r), value(&series[0]));
    assert!(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() < 1e-8 * b.0.hypot(b.1));
}

#[test]
fn kw4_negative_y1_by_mellin_barnes_matches_series() {
    let mb = kuznetsov(&["kernel", "--kind", "kw4", "--y1", "-0.05", "--route", "mb"]);
    assert!(mb.status.success(), "{}", String::from_utf8_lossy(&mb.stderr));
    let mb = records(&mb);
    assert_eq!(mb.len(), 1);
    assert_eq!(mb[0]["representation"], "mellin_barnes");
    assert_eq!(mb[0]["inputs"]["y1"], -0.05);
    let series = records(&kuznetsov(&["kernel", "--kind", "kw4", "--y1", "-0.05", "--route", "series"]));
    let (a, b) = (value(&mb[0]), value(&series[0]));
    assert!(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() < 1e-7 * b.0.hypot(b.1));
}

#[test]
fn grid_is_row_major() {
    let out = kuznetsov(&["kernel", "--kind", "jwl", "--y1-range", "0.01,0.1,10", "--y2-range", "-0.2,-0.02,10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 100);
    for (k, r) in recs.iter().enumerate() {
        let y1 = 0.01 + 0.09 * (k / 10) as f64 / 9.0;
        let y2 = -0.2 + 0.18 * (k % 10) as f64 / 9.0;
        assert!((r["inputs"]["y"][0].as_f64().unwrap() - y1).abs() < 1e-15);
        assert!((r["inputs"]["y"][1].as_f64().unwrap() - y2).abs() < 1e-15);
        assert_eq!(r["representation"], "series");
    }
}

#[test]
fn csv_has_header_and_one_row_per_point() {
    let out = kuznetsov(&["kernel", "--kind", "kw4", "--y1-range", "0.01,0.05,5", "--csv"]);
    assert!(out.status.success());
    let mut rd = csv::Reader::from_reader(&out.stdout[..]);
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.last().unwrap(), "representation");
    assert_eq!(&header[8..11], ["re", "im", "err_estimate"]);
    let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(&rows[0][7], "");
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["kernel", "--kind", "kwl-signed", "--y1-range", "-0.3,-0.01,4", "--y2-range", "0.01,0.2,3"];
    let a = kuznetsov(&args);
    let b = kuznetsov(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(records(&a).iter().all(|r| r["wall_time_ms"] == 0.0));
}

#[test]
fn timing_flag_reports_wall_time() {
    let out = kuznetsov(&["--timing", "whittaker", "--y", "1.0,1.0", "--mu", "0.4,0.1"]);
    assert!(out.status.success());
    assert!(records(&out)[0]["wall_time_ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["kernel", "--kind", "kw5", "--y", "0.1,0.1"][..],
        &["kernel", "--kind", "kwl", "--route", "fast", "--y", "0.1,0.1"],
        &["kernel", "--kind", "jwl", "--route", "mb", "--y", "0.1,0.1"],
        &["kernel", "--kind", "kwl"],
        &["kernel", "--kind", "kw4", "--y1", "0.1", "--y2", "0.2"],
        &["kernel", "--kind", "kwl-signed", "--y", "0.1,0.1", "--route", "series"],
        &["kernel", "--kind", "kwl", "--y", "0.1,0.1", "--mu", "0.2,0.2", "--route", "series"],
        &["kernel", "--kind", "kwl", "--y", "0.1,0.1", "--tolerance", "0.5"],
        &["--threads", "0", "kloosterman", "--w", "wl", "--m", "1,1", "--n", "1,1", "--c", "1,1"],
        &["kloosterman", "--w", "w2", "--m", "1,1", "--n", "1,1", "--c", "1,1"],
        &["kloosterman", "--w", "wl", "--m", "1,1", "--n", "1,1", "--c", "0,1"],
        &["verify", "--suite", "nonsense"],
    ] {
        let out = kuznetsov(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn verify_barnes_reports_every_check() {
    let out = kuznetsov(&["verify", "--suite", "barnes"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = records(&out);
    let checks: Vec<_> = lines.iter().filter(|l| l.get("check").is_some()).collect();
    assert!(checks.len() >= 52);
    for c in &checks {
        assert!(c["residual"].as_f64().unwrap() < 1e-8);
        assert_eq!(c["tolerance"], 1e-8);
        assert_eq!(c["passed"], true);
    }
    let summary = lines.last().unwrap();
    assert_eq!(summary["failures"], 0);
}

#[test]
fn verify_recurrence_is_tight() {
    let out = kuznetsov(&["verify", "--suite", "recurrence"]);
    assert_eq!(out.status.code(), Some(0));
    let summary = records(&out).pop().unwrap();
    assert!(summary["max_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn trivial_kloosterman_sum_is_one() {
    let out = kuznetsov(&["kloosterman", "--w", "wl", "--m", "1,1", "--n", "1,1", "--c", "1,1"]);
    assert!(out.status.success());
    assert_eq!(value(&records(&out)[0]), (1.0, 0.0));
}

#[test]
fn kloosterman_gate_zero() {
    let out = kuznetsov(&["kloosterman", "--w", "w4", "--m", "1,1", "--n", "1,2", "--c", "1,1"]);
    assert!(out.status.success());
    assert_eq!(value(&records(&out)[0]), (0.0, 0.0));
}

#[test]
fn whittaker_record_has_tight_error() {
    let out = kuznetsov(&["whittaker", "--y", "1.0,1.0", "--mu", "0.4,0.1"]);
    assert!(out.status.success());
    let r = &records(&out)[0];
    assert!(r["err_estimate"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["inputs"]["mu"], serde_json::json!([0.0, 0.4, 0.0, 0.1]));
}

#[test]
fn geometric_w4_emits_terms_then_sum_and_reruns_identically() {
    let args = ["geometric", "--w", "w4", "--m", "1,1", "--n", "1,1", "--cmax", "1"];
    let a = kuznetsov(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let recs = records(&a);
    let (terms, sum) = recs.split_at(recs.len() - 1);
    assert!(!terms.is_empty());
    assert!(terms.iter().all(|t| t["representation"] == "term"));
    assert_eq!(sum[0]["representation"], "partial_sum");
    assert_eq!(sum[0]["inputs"]["terms"], terms.len());
    let total = terms.iter().map(|t| value(t).0).sum::<f64>();
    assert!((total - value(&sum[0]).0).abs() <= 1e-12 * total.abs().max(1e-300));
    assert_eq!(kuznetsov(&args).stdout, a.stdout);
}

#[test]
fn geometric_gate_failure_sums_to_zero() {
    let out = kuznetsov(&["geometric", "--w", "w4", "--m", "1,1", "--n", "2,1", "--cmax", "1"]);
    assert!(out.status.success());
    let recs = records(&out);
    assert_eq!(value(recs.last().unwrap()), (0.0, 0.0));
    assert!(recs[..recs.len() - 1].iter().all(|t| t["inputs"]["weight"].is_null()));
}

#[test]
fn config_file_overrides_and_rejects_unknown_keys() {
    let mut good = tempfile::NamedTempFile::new().unwrap();
    writeln!(good, "threads = 1\n[series]\nprecision = \"dd\"").unwrap();
    let out = kuznetsov(&["--config", good.path().to_str().unwrap(), "kernel", "--kind", "jw4", "--y1", "0.02"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dd = value(&records(&out)[0]);
    let plain = value(&records(&kuznetsov(&["kernel", "--kind", "jw4", "--y1", "0.02", "--precision", "double"]))[0]);
    assert!((dd.0 - plain.0).abs() < 1e-12 * plain.0.abs());

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "[series]\ntol = 1e-9").unwrap();
    let out = kuznetsov(&["--config", bad.path().to_str().unwrap(), "kernel", "--kind", "jw4", "--y1", "0.02"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["kernel", "--kind", "kw4", "--y1-range", "-0.1,0.1,6"];
    let one = kuznetsov(&[&["--threads", "1"][..], &args].concat());
    let four = Command::new(env!("CARGO_BIN_EXE_kuznetsov")).args(args).env("KUZNETSOV_THREADS", "4").output().unwrap();
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn geometric_wl_has_four_sign_pairs_per_modulus() {
    let out = kuznetsov(&["geometric", "--w", "wl", "--m", "1,1", "--n", "1,1", "--cmax", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 4 + 1);
    let eps: Vec<_> = recs[..4].iter().map(|r| r["inputs"]["eps"].clone()).collect();
    assert_eq!(eps, [serde_json::json!([1, 1]), serde_json::json!([1, -1]), serde_json::json!([-1, 1]), serde_json::json!([-1, -1])]);
    assert!(recs.iter().all(|r| r["err_estimate"].as_f64().unwrap() >= 0.0));
}
