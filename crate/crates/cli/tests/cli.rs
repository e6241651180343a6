use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eon_core::report::{read_csv, read_json, ReportRow};
use tempfile::TempDir;

fn eonbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eonbp")).args(args).env_remove("EON_WORKERS").output().unwrap()
}

fn config(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    path.to_str().unwrap().to_string()
}

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "tests", "fixtures", name].iter().collect();
    path.to_str().unwrap().to_string()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn overall(path: &Path) -> Vec<ReportRow> {
    read_csv(fs::File::open(path).unwrap()).unwrap().into_iter().filter(ReportRow::is_overall).collect()
}

#[test]
fn exact_sweep_writes_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let prefix = dir.path().join("link10");
    ok(&eonbp(&[
        "exact",
        "--config",
        &config("link10.toml"),
        "--loads",
        "0.1,0.6,1.2",
        "--mode",
        "rf,ff",
        "--out",
        prefix.to_str().unwrap(),
    ]));
    let csv_text = fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert!(csv_text.starts_with("mode,engine,variant,load,od,class,bp,overall_bp,runtime_s,meta\n"));
    let rows = overall(&prefix.with_extension("csv"));
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().filter(|r| r.mode == "rf").count(), 3);
    assert!((rows[0].bp - 6.7748e-3).abs() < 1e-6);
    assert!(rows.iter().all(|r| r.runtime_s > 0.0));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(prefix.with_extension("json")).unwrap()).unwrap();
    let points = json.as_array().unwrap();
    assert_eq!(points.len(), 6);
    assert_eq!(points[0]["entries"].as_array().unwrap().len(), 2);
    assert_eq!(points[3]["mode"], "ff");
    assert_eq!(points[3]["meta"]["states"], "33");
    let back = read_json(fs::File::open(prefix.with_extension("json")).unwrap()).unwrap();
    assert_eq!(back, read_csv(fs::File::open(prefix.with_extension("csv")).unwrap()).unwrap());
}

#[test]
fn approx_sweep_reports_convergence() {
    let out = ok(&eonbp(&[
        "approx",
        "--variant",
        "soc",
        "--config",
        &config("nsfnet_c10.toml"),
        "--loads",
        "0.1,0.6,1.2,7.2",
    ]));
    let rows: Vec<_> = read_csv(out.as_bytes()).unwrap().into_iter().filter(ReportRow::is_overall).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.variant, "soc");
        assert_eq!(r.meta_value("converged"), Some("true"));
        assert!(r.meta_value("iterations").unwrap().parse::<usize>().unwrap() <= 200);
    }
}

#[test]
fn approx_all_variants_and_modes() {
    let out = ok(&eonbp(&["approx", "--config", &config("two_link.toml"), "--variant", "all", "--mode", "all"]));
    let rows: Vec<_> = read_csv(out.as_bytes()).unwrap().into_iter().filter(ReportRow::is_overall).collect();
    assert_eq!(rows.len(), 12);
    let uni = rows.iter().find(|r| r.mode == "rf" && r.variant == "uniform").unwrap();
    assert!((uni.bp - 2.7e-2).abs() < 1e-3);
}

#[test]
fn counts_table() {
    let out = ok(&eonbp(&["counts", "--C", "7", "--d", "3,4"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x,k,d,total,non_blocking,frag_blocking,resource_blocking");
    assert!(lines.contains(&"3,2,4,5,2,3,0"));
    assert!(lines.contains(&"4,2,4,4,0,0,4"));
    let ff = ok(&eonbp(&["counts", "--C", "7", "--d", "3,4", "--policy", "ff"]));
    assert!(ff.lines().any(|l| l == "3,2,4,3,2,1,0"));
}

#[test]
fn sim_is_seeded() {
    let run = |seed: &str| {
        ok(&eonbp(&["sim", "--config", &config("two_link.toml"), "--requests", "20000", "--seed", seed]))
            .lines()
            .filter(|l| l.contains(",*,*,"))
            .map(|l| l.split(',').nth(6).unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}

#[test]
fn compare_against_fixture() {
    let dir = TempDir::new().unwrap();
    let prefix = dir.path().join("two");
    ok(&eonbp(&["exact", "--config", &config("two_link.toml"), "--mode", "all", "--out", prefix.to_str().unwrap()]));
    let expected = dir.path().join("expected.csv");
    let text = fs::read_to_string(fixture("two_link.csv")).unwrap();
    let exact_only: Vec<&str> = text.lines().filter(|l| !l.contains(",approx,")).collect();
    fs::write(&expected, exact_only.join("\n")).unwrap();

    let csv = prefix.with_extension("csv");
    let json = prefix.with_extension("json");
    let out = ok(&eonbp(&["compare", expected.to_str().unwrap(), csv.to_str().unwrap(), "--tol", "sig:2"]));
    assert!(out.contains("4 of 4 rows within sig:2"), "{out}");
    ok(&eonbp(&["compare", csv.to_str().unwrap(), json.to_str().unwrap(), "--tol", "rel:0"]));

    let fail = eonbp(&["compare", expected.to_str().unwrap(), csv.to_str().unwrap(), "--tol", "rel:0.001"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL"));

    let mismatch = eonbp(&["compare", &fixture("nsfnet_c10.csv"), csv.to_str().unwrap()]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("not present"));
}

#[test]
fn diagnostics_directories() {
    let dir = TempDir::new().unwrap();
    let states = dir.path().join("states");
    let trace = dir.path().join("trace");
    ok(&eonbp(&["exact", "--config", &config("ring3.toml"), "--dump-states", states.to_str().unwrap()]));
    assert_eq!(fs::read_dir(&states).unwrap().count(), 6);
    ok(&eonbp(&[
        "approx",
        "--config",
        &config("two_link.toml"),
        "--variant",
        "ees",
        "--trace",
        trace.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(trace.join("trace_rf_ees_0.1.csv")).unwrap();
    assert!(text.starts_with("iteration,max_delta,xbar_0,xbar_1\n"));
}

#[test]
fn errors_exit_nonzero_with_context() {
    let bad_flag = eonbp(&["exact", "--config", &config("link10.toml"), "--mode", "xx"]);
    assert_ne!(bad_flag.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&bad_flag.stderr).contains("unknown mode"));

    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "nodes=[1,2]\nlinks=[[1,2]]\ncapacity=3\nclasses=[{d=4,mu=1.0}]\nod_pairs=\"all\"\nloads=[0.1]\n")
        .unwrap();
    let out = eonbp(&["exact", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("classes[0].d"), "{err}");

    let missing = eonbp(&["approx", "--config", "/nonexistent.toml"]);
    assert_eq!(missing.status.code(), Some(2));

    let capped = dir.path().join("capped.toml");
    let base = fs::read_to_string(config("two_link.toml")).unwrap();
    fs::write(&capped, format!("{base}state_cap = 100\n")).unwrap();
    let out = eonbp(&["exact", "--config", capped.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("state-space cap"));
}

#[test]
fn worker_count_from_env() {
    let run = |workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_eonbp"))
            .args(["exact", "--config", &config("link10.toml")])
            .env("EON_WORKERS", workers)
            .output()
            .unwrap()
    };
    assert!(run("2").status.success());
    let zero = run("0");
    assert_eq!(zero.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&zero.stderr).contains("EON_WORKERS"));
}
