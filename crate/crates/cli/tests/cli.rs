use std::path::Path;
use std::process::{Command, Output};

fn holosec(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holosec"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HOLO_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: [&str; 4] = ["--trials", "4", "--snr", "0,10"];

#[test]
fn validate_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = holosec(&["validate"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().count() >= 5);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
    assert!(dir.path().join("validate.manifest.json").exists());
}

#[test]
fn snr_sweep_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [&["snr-sweep", "--seed", "7"][..], &SMALL[..]].concat();
    for d in [&a, &b] {
        let o = holosec(&args, d.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("snr-sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("snr-sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["subcommand"], "snr-sweep");
    assert_eq!(manifest["config"]["trials"], 4);
    assert_eq!(manifest["csv_schema_version"], 1);
}

#[test]
fn csv_rows_cover_schemes_and_snr_points() {
    let dir = tempfile::tempdir().unwrap();
    let args = [&["snr-sweep", "--pa", "both", "--delta", "1/8"][..], &SMALL[..]].concat();
    let o = holosec(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(dir.path().join("snr-sweep.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0], "sweep");
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() == 0.125));
}

#[test]
fn flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"trials": 9, "seed": 3, "pa": "fixed"}"#).unwrap();
    let args = ["snr-sweep", "--config", cfg.to_str().unwrap(), "--trials", "2", "--snr", "5"];
    let o = holosec(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("snr-sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["trials"], 2);
    assert_eq!(manifest["seed"], 3);
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), r#"{"trials": 9, "seed": 3, "pa": "fixed"}"#);
}

#[test]
fn config_errors_exit_two_and_name_the_parameter() {
    let dir = tempfile::tempdir().unwrap();
    for (args, param) in [
        (vec!["csi-sweep", "--xi", "0,2"], "xi"),
        (vec!["snr-sweep", "--snr", "10:0:5"], "snr"),
        (vec!["snr-sweep", "--delta", "0.7"], "spacing"),
        (vec!["snr-sweep", "--pa", "greedy"], "pa"),
        (vec!["snr-sweep", "--trials", "0"], "trials"),
    ] {
        let o = holosec(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(param), "{args:?}: {}", stderr(&o));
    }
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    let o = holosec(&["snr-sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_key"), "{}", stderr(&o));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_holosec"))
        .args(["validate", "--out"])
        .arg(dir.path())
        .env("HOLO_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("HOLO_THREADS"));
}

#[test]
fn empty_null_space_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("crowded.json");
    std::fs::write(&cfg, r#"{"heatmap_spacing": 0.25, "heatmap_resolution": 1}"#).unwrap();
    let o = holosec(&["heatmap", "--trials", "1", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!dir.path().join("heatmap.csv").exists());
}

#[test]
fn oracle_compare_writes_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let o = holosec(&["oracle-compare", "--trials", "12", "--seed", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(dir.path().join("oracle-compare.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["instance", "sca", "grid"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    for r in rows {
        let (sca, grid): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(sca.is_finite() && grid.is_finite() && sca >= 0.0);
    }
}
