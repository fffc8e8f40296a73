use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const EXE: &str = env!("CARGO_BIN_EXE_spellkit");

fn bundled_station() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_station.csv")
}

fn spellkit(args: &[&str], input: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(EXE);
    cmd.args(args);
    if let Some(p) = input {
        cmd.arg("--input").arg(p);
    }
    if let Some(d) = out {
        cmd.arg("--out").arg(d);
    }
    cmd.env_remove("SPELLKIT_THREADS");
    cmd.output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema_validator() -> jsonschema::Validator {
    let schema = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json"));
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(report: &Value) {
    let validator = schema_validator();
    let errors: Vec<String> = validator.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn write_csv(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

/// Daily series starting 2000-01-01 with `rainy` marking the rainy days.
fn series_csv(days: usize, rainy: impl Fn(usize) -> bool) -> String {
    let start = chrono::NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let mut s = String::from("date,depth_mm\n");
    for d in 0..days {
        let date = start + chrono::Days::new(d as u64);
        s.push_str(&format!("{date},{}\n", if rainy(d) { "4.2" } else { "0.0" }));
    }
    s
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(spellkit(&["frobnicate"], None, None).status.code(), Some(1));
    assert_eq!(spellkit(&["fit"], None, None).status.code(), Some(1));
    let station = bundled_station();
    assert_eq!(spellkit(&["fit", "--season", "winter"], Some(&station), None).status.code(), Some(1));
    assert_eq!(spellkit(&["fit", "--alpha", "1.5"], Some(&station), None).status.code(), Some(1));
    assert_eq!(spellkit(&["gof", "--replicates", "10"], Some(&station), None).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_0() {
    let out = spellkit(&["--help"], None, None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["extract", "fit", "gof", "trend", "report"] {
        assert!(text.contains(cmd), "help lists {cmd}");
    }
    assert_eq!(spellkit(&["--version"], None, None).status.code(), Some(0));
}

#[test]
fn bad_threads_variable_is_a_usage_error() {
    let out = Command::new(EXE)
        .args(["extract", "--input"])
        .arg(bundled_station())
        .env("SPELLKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    assert_eq!(spellkit(&["extract"], Some(&missing), None).status.code(), Some(2));

    let bad_row = write_csv(dir.path(), "bad.csv", "date,depth_mm\n2000-01-01,0.0\n2000-01-02,lots\n");
    let out = spellkit(&["extract"], Some(&bad_row), None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let backwards = write_csv(dir.path(), "back.csv", "date,depth_mm\n2000-01-02,0.0\n2000-01-01,1.0\n");
    assert_eq!(spellkit(&["extract"], Some(&backwards), None).status.code(), Some(2));

    let empty = write_csv(dir.path(), "empty.csv", "");
    assert_eq!(spellkit(&["extract"], Some(&empty), None).status.code(), Some(2));
}

#[test]
fn too_few_rainy_days_refuses_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), "dry.csv", &series_csv(120, |d| d == 10 || d == 50));
    let out = spellkit(&["report", "--method", "dm", "--replicates", "100"], Some(&input), Some(dir.path()));
    assert_ne!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sample too small"), "{stderr}");
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["complete"], Value::Bool(false));
    assert_valid(&report);
}

#[test]
fn extract_writes_samples_and_a_valid_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = spellkit(&["extract"], Some(&bundled_station()), Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("extract.json"));
    assert_valid(&report);
    let samples = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(samples.starts_with("period,variable,order,value\n"));
    let year_it = samples.lines().filter(|l| l.starts_with("year,it,")).count();
    assert_eq!(year_it, 2212);
}

#[test]
fn extract_to_stdout() {
    let out = spellkit(&["extract", "--season", "s1"], Some(&bundled_station()), None);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let periods = report["periods"].as_array().unwrap();
    assert_eq!(periods.len(), 1);
    assert_eq!(periods[0]["period"], "s1");
    assert_valid(&report);
}

fn families(report: &Value) -> Vec<String> {
    let mut out = Vec::new();
    for p in report["periods"].as_array().unwrap() {
        for v in p["variables"].as_array().unwrap() {
            out.push(format!(
                "{}/{}:{}:{}",
                p["period"].as_str().unwrap(),
                v["variable"].as_str().unwrap(),
                v["n"],
                v["selection"]["fit"]["family"].as_str().unwrap_or("-")
            ));
        }
    }
    out
}

#[test]
fn bundled_station_golden_selection() {
    let dir = tempfile::tempdir().unwrap();
    let out = spellkit(&["fit"], Some(&bundled_station()), Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("fit.json"));
    assert_valid(&report);
    let golden = [
        "year/it:2212:lerch3",
        "year/ws:1297:extended_log",
        "year/ds:1284:polylog",
        "year/wch:979:extended_log",
        "year/dch:520:polylog",
        "s1/it:790:polylog",
        "s1/ws:595:geometric",
        "s1/ds:592:polylog",
        "s1/wch:462:geometric",
        "s1/dch:146:geometric",
        "s2/it:1422:lerch3",
        "s2/ws:702:geometric",
        "s2/ds:692:polylog",
        "s2/wch:517:geometric",
        "s2/dch:374:polylog",
    ];
    assert_eq!(families(&report), golden);
}

#[test]
fn gof_and_trend_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = spellkit(&["gof", "--season", "year", "--replicates", "200"], Some(&bundled_station()), Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("gof.json"));
    assert_valid(&report);
    for v in report["periods"][0]["variables"].as_array().unwrap() {
        let gof = &v["selection"]["gof"];
        let p = gof["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(gof["replicates"], 200);
    }

    let out = spellkit(&["trend", "--season", "year"], Some(&bundled_station()), Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("trend.json"));
    assert_valid(&report);
    for v in report["periods"][0]["variables"].as_array().unwrap() {
        let tau = v["trend"]["tau"].as_f64().unwrap();
        assert!(tau.abs() <= 1.0);
        assert!(v["trend"]["corrected"].is_object());
    }
}

#[test]
fn report_writes_plot_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = spellkit(&["report", "--season", "s2", "--replicates", "100", "--seed", "7"], Some(&bundled_station()), Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("report.json"));
    assert_valid(&report);
    let methods = report["periods"][0]["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 2);
    let abs = std::fs::read_to_string(dir.path().join("abs_diff.csv")).unwrap();
    assert!(abs.starts_with("period,variable,k,observed_freq,abs_diff_dm,abs_diff_im\n"));
    assert!(abs.lines().count() > 1);
    let quantiles = std::fs::read_to_string(dir.path().join("quantiles.csv")).unwrap();
    assert!(quantiles.lines().any(|l| l.contains("see")), "{quantiles}");
    for name in ["frequencies.csv", "survival_ratios.csv", "cumfreq_ratios.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn empty_period_gives_header_only_tables() {
    let dir = tempfile::tempdir().unwrap();
    // Rain only in January and February, so the April-September season is empty.
    let input = write_csv(dir.path(), "winter.csv", &series_csv(366, |d| d < 59 && d % 3 == 0));
    let out = spellkit(&["report", "--season", "s1", "--replicates", "100"], Some(&input), Some(dir.path()));
    assert_ne!(out.status.code(), Some(1));
    for t in ["frequencies.csv", "abs_diff.csv", "survival_ratios.csv", "cumfreq_ratios.csv"] {
        let body = std::fs::read_to_string(dir.path().join(t)).unwrap();
        assert_eq!(body.lines().count(), 1, "{t}: {body}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["report", "--season", "year", "--replicates", "150", "--seed", "42"];
    assert_eq!(spellkit(&args, Some(&bundled_station()), Some(a.path())).status.code(), Some(0));
    assert_eq!(spellkit(&args, Some(&bundled_station()), Some(b.path())).status.code(), Some(0));
    let names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(!names.is_empty());
    for name in names {
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), std::fs::read(b.path().join(&name)).unwrap());
    }
}
