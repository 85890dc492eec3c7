use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn gft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gft"))
        .args(args)
        .env_remove("GFT_DEFAULT_POLICY")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn result<'a>(report: &'a Value, kind: &str) -> &'a Value {
    report["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["kind"] == kind)
        .unwrap_or_else(|| panic!("no {kind} result"))
}

fn write_series(dir: &Path, name: &str, lead: i64, coeffs: &[f64]) -> PathBuf {
    let path = dir.join(name);
    let coeffs: Vec<[f64; 2]> = coeffs.iter().map(|&c| [c, 0.0]).collect();
    fs::write(&path, json!({ "lead": lead, "coeffs": coeffs }).to_string()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn check(f: &Path, g: &Path, class: &[&str]) -> Output {
    let mut args = vec!["check", "--f", s(f), "--g", s(g)];
    args.extend_from_slice(class);
    gft(&args)
}

#[test]
fn identity_pair_is_a_member() {
    let dir = TempDir::new().unwrap();
    let z = write_series(dir.path(), "z.json", 1, &[1.0]);
    let out = check(&z, &z, &["--p", "1", "--k", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["command"], "check");
    assert!(result(&r, "consistency")["consistent"].as_bool().unwrap());
    assert!((result(&r, "membership")["real_part"]["min_margin"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn odd_reciprocal_series_has_unit_margin() {
    let dir = TempDir::new().unwrap();
    // z/(1 - z) needs many terms before its truncation is starlike of order 1/2 at r = 0.95
    let f: Vec<f64> = (0..=1024).map(|j| if j % 2 == 0 { 1.0 / (j as f64 + 1.0) } else { 0.0 }).collect();
    let f = write_series(dir.path(), "f.json", 1, &f);
    let g = write_series(dir.path(), "g.json", 1, &[1.0; 1025]);
    let out = check(&f, &g, &["--p", "1", "--k", "2", "--gamma", "0"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let membership = result(&r, "membership");
    assert!((membership["real_part"]["min_margin"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(result(&r, "schwarz")["max_modulus"].as_f64().unwrap() < 1e-9);
    assert!(result(&r, "nonvanishing")["nonvanishing"].as_bool().unwrap());
}

#[test]
fn large_second_coefficient_is_rejected() {
    let dir = TempDir::new().unwrap();
    let f = write_series(dir.path(), "f.json", 1, &[1.0, -0.9]);
    let g = write_series(dir.path(), "g.json", 1, &[1.0]);
    let out = check(&f, &g, &["--p", "1", "--k", "2"]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    let membership = result(&r, "membership");
    assert!(!membership["real_part"]["holds"].as_bool().unwrap());
    assert!(membership["real_part"]["min_margin"].as_f64().unwrap() < 0.0);
    assert!(result(&r, "consistency")["consistent"].as_bool().unwrap());
}

#[test]
fn comparison_function_outside_its_order_is_a_non_member() {
    let dir = TempDir::new().unwrap();
    let f = write_series(dir.path(), "f.json", 1, &[1.0]);
    let g = write_series(dir.path(), "g.json", 1, &[1.0, 0.9]);
    let out = check(&f, &g, &["--p", "1", "--k", "3"]);
    assert_eq!(code(&out), 1);
    assert_eq!(result(&report(&out), "starlike")["holds"], false);
}

#[test]
fn malformed_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let z = write_series(dir.path(), "z.json", 1, &[1.0]);
    let unnormalized = write_series(dir.path(), "u.json", 1, &[2.0]);
    let missing = dir.path().join("missing.json");

    for out in [
        check(&bad, &z, &["--p", "1", "--k", "1"]),
        check(&missing, &z, &["--p", "1", "--k", "1"]),
        check(&unnormalized, &z, &["--p", "1", "--k", "1"]),
        check(&z, &z, &["--p", "1", "--k", "1", "--gamma", "1"]),
        check(&z, &z, &["--p", "0", "--k", "1"]),
        check(&z, &z, &["--p", "1", "--k", "1", "--rmax", "1.5"]),
        gft(&["check", "--f", s(&z)]),
        gft(&["bounds", "--p", "1", "--k", "1", "--r", "1.0"]),
        gft(&["no-such-command"]),
    ] {
        assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn symmetrized_product_of_half_plane_map() {
    let dir = TempDir::new().unwrap();
    let g = write_series(dir.path(), "g.json", 1, &[1.0; 65]);
    let out = gft(&["gk", "--g", s(&g), "--p", "1", "--k", "2"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let res = &r["results"][0];
    assert_eq!(res["g_k"]["lead"], 2);
    assert_eq!(res["G_k"]["lead"], 1);
    for (j, c) in res["G_k"]["coeffs"].as_array().unwrap().iter().enumerate() {
        let want = if j % 2 == 0 { 1.0 } else { 0.0 };
        assert!((c[0].as_f64().unwrap() - want).abs() < 1e-12 && c[1].as_f64().unwrap().abs() < 1e-12);
    }
    assert!(res["residual"].as_f64().unwrap() < 1e-6);

    let z2 = write_series(dir.path(), "z2.json", 2, &[1.0]);
    let out = gft(&["gk", "--g", s(&z2), "--p", "2", "--k", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["results"][0]["g_k"]["lead"], 6);
}

#[test]
fn bounds_table_and_csv() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("bounds.csv");
    let out = gft(&["bounds", "--p", "1", "--k", "1", "--r", "0,0.25,0.5,0.75", "--csv", s(&csv_path)]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let rows = r["results"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["growth_lower"], 0.0);
    assert_eq!(rows[0]["growth_upper"], 0.0);
    let half = &rows[2];
    for (key, want) in [
        ("deriv_lower", 4.0 / 27.0),
        ("deriv_upper", 12.0),
        ("growth_lower", 2.0 / 9.0),
        ("growth_upper", 2.0),
        ("psi_lower", 1.0 / 3.0),
        ("psi_upper", 3.0),
    ] {
        assert!((half[key].as_f64().unwrap() - want).abs() < 1e-8, "{key}");
    }
    for pair in rows.windows(2) {
        for key in ["deriv_upper", "growth_upper", "gk_upper", "psi_upper"] {
            assert!(pair[0][key].as_f64().unwrap() <= pair[1][key].as_f64().unwrap());
        }
    }

    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.len(), 9);
    assert_eq!(header[0], "r");
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 4);
    assert_eq!(records[2][2].parse::<f64>().unwrap(), rows[2]["deriv_upper"].as_f64().unwrap());
}

fn synth(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["synth", "--seed", "11", "--p", "2", "--k", "2", "--gamma", "0.5", "--out-dir", s(dir)];
    args.extend_from_slice(extra);
    gft(&args)
}

#[test]
fn synthesis_is_deterministic_and_checks_clean() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (out_a, out_b) = (synth(a.path(), &[]), synth(b.path(), &[]));
    assert_eq!(code(&out_a), 0, "{}", String::from_utf8_lossy(&out_a.stderr));
    assert_eq!(code(&out_b), 0);
    for name in ["f.json", "g.json", "certificate.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let out = check(&a.path().join("f.json"), &a.path().join("g.json"), &["--p", "2", "--k", "2", "--gamma", "0.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    let cert: Value = serde_json::from_slice(&fs::read(a.path().join("certificate.json")).unwrap()).unwrap();
    let recorded = cert["membership"]["real_part"]["min_margin"].as_f64().unwrap();
    let rechecked = result(&report(&out), "membership")["real_part"]["min_margin"].as_f64().unwrap();
    assert_eq!(recorded, rechecked);
}

#[test]
fn zero_cap_gives_the_unperturbed_member() {
    let dir = TempDir::new().unwrap();
    let out = synth(dir.path(), &["--beta", "0", "--base", "extremal"]);
    assert_eq!(code(&out), 0);
    let cert: Value = serde_json::from_slice(&fs::read(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert!(cert["w"]["coeffs"].as_array().unwrap().iter().all(|c| c[0] == 0.0 && c[1] == 0.0));

    // H == p means z f' = p G_k, so the Schwarz recovery is identically zero
    let out = check(&dir.path().join("f.json"), &dir.path().join("g.json"), &["--p", "2", "--k", "2", "--gamma", "0.5"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert!(result(&r, "schwarz")["max_modulus"].as_f64().unwrap() < 1e-12);
    assert!((result(&r, "membership")["min_re_h"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn sweep_over_a_small_grid() {
    let args = ["verify-all", "--p", "1,2", "--k", "1,2", "--gamma-fractions", "0,0.5", "--seeds", "1"];
    let out = gft(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let summaries: Vec<&Value> = r["results"].as_array().unwrap().iter().filter(|v| v["kind"] == "summary").collect();
    assert_eq!(summaries.len(), 15);
    assert!(summaries.iter().all(|s| s["failed"] == 0 && s["passed"] == 8));
    assert_eq!(r["inputs"]["seeds"], 1);

    let again = report(&gft(&args));
    assert_eq!(again["results"], r["results"]);
}

#[test]
fn corrupted_sweep_reports_failures_with_seeds() {
    let out = gft(&["verify-all", "--p", "1", "--k", "2", "--gamma-fractions", "0", "--seeds", "2", "--corrupt"]);
    assert_eq!(code(&out), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().any(|l| l.starts_with("FAIL") && l.contains("seed")), "{stderr}");
    let r = report(&out);
    let failures: Vec<&Value> = r["results"].as_array().unwrap().iter().filter(|v| v["kind"] == "failure").collect();
    assert!(!failures.is_empty());
    assert!(failures
        .iter()
        .any(|f| (f["check"] == "membership" || f["check"] == "distortion") && !f["witness"].is_null()));
}

#[test]
fn policy_file_from_environment() {
    let dir = TempDir::new().unwrap();
    let policy = dir.path().join("policy.json");
    fs::write(&policy, json!({ "radii": [0.5], "angles_per_circle": 16, "r_max": 0.5, "margin_tol": 1e-9 }).to_string())
        .unwrap();
    let z = write_series(dir.path(), "z.json", 1, &[1.0]);
    let out = Command::new(env!("CARGO_BIN_EXE_gft"))
        .args(["check", "--f", s(&z), "--g", s(&z), "--p", "1", "--k", "1", "--angles", "32"])
        .env("GFT_DEFAULT_POLICY", &policy)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["policy"]["radii"], json!([0.5]));
    assert_eq!(r["policy"]["angles_per_circle"], 32);
}
