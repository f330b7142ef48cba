use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bkgraph"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

#[test]
fn ring_spectrum_is_two_pi_n() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("ring_spectrum.toml"), dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(stdout_json(&o)["status"], "ok");
    let path = dir.path().join("spectrum.csv");
    assert_eq!(header(&path), ["n", "k_n", "g_n"]);
    let rows = read_csv(&path);
    assert!(rows.len() >= 50);
    let tau = 2.0 * std::f64::consts::PI;
    for row in &rows {
        let k: f64 = row[1].parse().unwrap();
        let n = (k / tau).round();
        assert!((k - tau * n).abs() <= 1e-9, "k = {k}");
        assert_eq!(row[2], "1");
    }
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum.json")).unwrap()).unwrap();
    assert!(json["diagnostics"]["step"].as_f64().unwrap() > 0.0);
}

#[test]
fn heat_trace_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("interval_heat.toml"), dir.path(), &[]);
    assert!(o.status.success());
    let path = dir.path().join("heat_trace.csv");
    assert_eq!(&header(&path)[..3], ["t", "spectral", "theta"]);
    for row in read_csv(&path) {
        let spectral: f64 = row[1].parse().unwrap();
        let theta: f64 = row[2].parse().unwrap();
        assert!((spectral - theta).abs() <= 1e-10);
    }
    assert!(stdout_json(&o)["summary"]["max_abs_diff"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn validate_rejects_non_hermitian_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("bad_hermiticity.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    let report = stdout_json(&o);
    assert_eq!(report["status"], "error");
    assert_eq!(report["code"], "HERMITICITY_VIOLATION");
    let saved: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
}

#[test]
fn halfline_demo_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs().join("zeta_packet.toml"), dir.path(), &[]);
    assert!(o.status.success());
    let path = dir.path().join("amplitude.csv");
    assert_eq!(&header(&path)[..4], ["k", "re_a", "im_a", "abs2_a"]);
    let rows = read_csv(&path);
    assert_eq!(rows.len(), 301);
    for row in rows {
        let v: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
        assert!((v[3] - (v[1] * v[1] + v[2] * v[2])).abs() <= 1e-15 * (1.0 + v[3]));
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    for name in ["ring_spectrum", "ring_trace", "star_neumann_trace", "random_weyl", "zeta_packet", "counting_compare"]
    {
        let cfg = configs().join(format!("{name}.toml"));
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let oa = run(&cfg, a.path(), &["--seed", "5"]);
        let ob = run(&cfg, b.path(), &["--seed", "5"]);
        assert!(oa.status.success() && ob.status.success(), "{name}");
        assert_eq!(oa.stdout, ob.stdout, "{name}");
        assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()), "{name}");
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    for name in ["random_weyl", "robin_spectrum", "zeta_packet"] {
        let cfg = configs().join(format!("{name}.toml"));
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert!(run(&cfg, a.path(), &["--threads", "1"]).status.success());
        assert!(run(&cfg, b.path(), &["--threads", "4"]).status.success());
        assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()), "{name}");
    }
}

#[test]
fn seed_selects_the_random_graph() {
    let cfg = configs().join("random_weyl.toml");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&cfg, a.path(), &["--seed", "1"]).status.success());
    assert!(run(&cfg, b.path(), &["--seed", "2"]).status.success());
    assert_ne!(fs::read(a.path().join("weyl.json")).unwrap(), fs::read(b.path().join("weyl.json")).unwrap());
}

#[test]
fn every_example_config_runs() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let dir = tempfile::tempdir().unwrap();
        let o = run(&path, dir.path(), &[]);
        let report = stdout_json(&o);
        let expect_ok = !path.file_name().unwrap().to_string_lossy().starts_with("bad_");
        assert_eq!(o.status.success(), expect_ok, "{}: {report}", path.display());
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&dir.path().join("nope.toml"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["code"], "CONFIG_IO");
}
