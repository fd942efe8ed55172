use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_trafficscope");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("TRAFFICSCOPE_LOG")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Synthetic pair of years with a spring dip in the later one.
fn synth(dir: &Path, dropout: &str) -> PathBuf {
    let data = dir.join("data");
    let out = run(&[
        "synth", "--compare", "2018", "2020", "--dropout", dropout, "--spring-factor", "0.5", "--out", p(&data),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data.join("trafficscope.ini")
}

fn read_column(path: &Path) -> BTreeMap<u32, Option<f64>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let (m, v) = l.split_once(',').unwrap();
            (m.parse().unwrap(), (!v.is_empty()).then(|| v.parse().unwrap()))
        })
        .collect()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn full_data_calendar_is_all_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), "0");
    let out_dir = tmp.path().join("q");
    let out = run(&["--config", p(&cfg), "quality", "--year", "2018", "--window", "7-10", "--out", p(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cal = fs::read_to_string(out_dir.join("calendar_2018.csv")).unwrap();
    let rows: Vec<&str> = cal.lines().skip(1).collect();
    assert_eq!(rows.len(), 365);
    assert!(rows.iter().all(|r| r.ends_with(",1.000000")), "{cal}");
    assert!(!out_dir.join("calendar_2020.csv").exists());
}

#[test]
fn trend_change_matches_formula() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), "0.1");
    let out_dir = tmp.path().join("t");
    let out = run(&["--config", p(&cfg), "trends", "--compare", "2018", "2020", "--out", p(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for dt in ["weekday", "saturday", "sunday"] {
        for w in ["morning", "evening"] {
            let base = read_column(&out_dir.join(format!("trend_2018_{dt}_{w}.csv")));
            let other = read_column(&out_dir.join(format!("trend_2020_{dt}_{w}.csv")));
            let change = read_column(&out_dir.join(format!("trend_change_2018_2020_{dt}_{w}.csv")));
            assert_eq!(change.len(), 12);
            for m in 1..=12 {
                let expected = match (base[&m], other[&m]) {
                    (Some(b), Some(o)) if b != 0.0 => Some(100.0 * (o - b) / b),
                    _ => None,
                };
                match (expected, change[&m]) {
                    (Some(e), Some(c)) => assert!((e - c).abs() < 1e-4, "{dt} {w} month {m}: {e} vs {c}"),
                    (None, None) => {}
                    (e, c) => panic!("{dt} {w} month {m}: {e:?} vs {c:?}"),
                }
            }
        }
    }
    // The spring dip shows up as a large decline.
    let change = read_column(&out_dir.join("trend_change_2018_2020_weekday_morning.csv"));
    assert!(change[&4].unwrap() < -40.0);
    assert!(change[&1].unwrap().abs() < 10.0);
}

#[test]
fn missing_stations_file_fails_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), "0");
    let out_dir = tmp.path().join("h");
    let out = run(&[
        "--config",
        p(&cfg),
        "--stations",
        p(&tmp.path().join("nope.csv")),
        "--out",
        p(&out_dir),
        "hotspot",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
    assert!(!out_dir.exists());
}

#[test]
fn report_is_deterministic_and_leaves_inputs_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), "0.2");
    let inputs = snapshot(&tmp.path().join("data"));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&["--config", p(&cfg), "--compare", "2018", "2020", "--out", p(dir), "report"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert_eq!(sa, sb);
    for name in [
        "calendar_2018.svg",
        "trend_weekday_morning.svg",
        "hotspot_2020.svg",
        "matrix_S001_2018_m01.svg",
        "balance_S001_2018_2020_evening.svg",
        "hotspot_rank_2018_2020.csv",
        "balance_S001_2018_2020.csv",
    ] {
        assert!(sa.contains_key(name), "missing {name}");
    }
    assert_eq!(snapshot(&tmp.path().join("data")), inputs);
}

#[test]
fn data_errors_exit_two_and_point_at_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), "0");
    let out_dir = tmp.path().join("x");
    let out = run(&["--config", p(&cfg), "--year", "2018", "--class", "truck", "--out", p(&out_dir), "harmonize"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ingest_report_2018.json"), "{stderr}");
    assert!(out_dir.join("ingest_report_2018.json").exists());
    assert!(!out_dir.join("harmonized_2018.csv").exists());

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "not,a,header\n").unwrap();
    let out = run(&["--counts", &format!("2018={}", p(&bad)), "--out", p(&out_dir), "ingest"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["quality", "--window", "10-7"]).status.code(), Some(1));
    assert_eq!(run(&["quality"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn ingest_summarizes_each_year() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), "0");
    let out_dir = tmp.path().join("i");
    let out = run(&["--config", p(&cfg), "--out", p(&out_dir), "ingest"]);
    assert!(out.status.success());
    let summary = fs::read_to_string(out_dir.join("summary_2020.csv")).unwrap();
    // 5 stations, 366 days, two directions.
    assert!(summary.contains("records,3660\n"), "{summary}");
    assert!(summary.contains("stations,5\n"));
    assert!(summary.contains("total_truck,0\n"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("ingest_report_2018.json")).unwrap()).unwrap();
    assert_eq!(report["n_rows_accepted"], 3650);
    assert!(out_dir.join("stations_report.json").exists());
}
