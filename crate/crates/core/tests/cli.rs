//! The `geosbm` binary: exit codes, output files, determinism.

use std::path::Path;
use std::process::Command;

fn geosbm(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_geosbm"))
        .args(args)
        .env("GEOSBM_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

const SMALL: &[&str] = &[
    "--n", "80", "--p1", "0.4", "--p2", "0.1", "--kappa", "0.5", "--gamma", "6",
];

fn with<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(SMALL);
    v.extend_from_slice(extra);
    v
}

fn strip_timing(json: &str) -> String {
    json.lines()
        .filter(|l| !l.contains("wall_time_seconds"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn single_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = geosbm(d.path(), &with("single", &["--seed", "3"]));
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let ra = std::fs::read_to_string(a.path().join("single.json")).unwrap();
    let rb = std::fs::read_to_string(b.path().join("single.json")).unwrap();
    assert_eq!(strip_timing(&ra), strip_timing(&rb));
    for key in [
        "config_sha256",
        "\"version\"",
        "\"seed\"",
        "top_eigenvalues",
        "classification",
    ] {
        assert!(ra.contains(key), "missing {key}");
    }
}

#[test]
fn config_errors_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    let out = geosbm(d.path(), &["single", "--n", "81"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("even"));
    let out = geosbm(d.path(), &["single", "--kappa", "0.99"]);
    assert_eq!(out.status.code(), Some(1));
    let out = geosbm(d.path(), &["moments", "--l-max", "9", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = geosbm(d.path(), &["single", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let out = geosbm(d.path(), &["single", "--estimator", "magic"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_and_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"n": 60, "p1": 0.4, "p2": 0.1, "kappa": 0.5, "gamma": 4, "trials": 2, "seed": 5}"#,
    )
    .unwrap();
    let out = geosbm(
        d.path(),
        &[
            "regimes",
            "--config",
            cfg.to_str().unwrap(),
            "--gamma-grid",
            "4,8",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(d.path().join("regimes.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["provenance"]["config"]["n"], 60);
    assert_eq!(
        v["provenance"]["config"]["gamma_grid"],
        serde_json::json!([4.0, 8.0])
    );
}

#[test]
fn sweep_spectra_moments_isolated_outputs() {
    let d = tempfile::tempdir().unwrap();
    let out = geosbm(
        d.path(),
        &with("sweep", &["--gamma-grid", "3,12", "--trials", "2"]),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let agg = std::fs::read_to_string(d.path().join("sweep_aggregate.csv")).unwrap();
    assert!(agg.starts_with("# geosbm"));
    assert_eq!(agg.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let out = geosbm(
        d.path(),
        &with("spectra", &["--bins", "25", "--dump-matrices"]),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["perturbed", "sbm", "mean"] {
        let csv = std::fs::read_to_string(d.path().join(format!("spectra_{name}.csv"))).unwrap();
        let rows: Vec<&str> = csv
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .collect();
        assert_eq!(rows.len(), 25);
        let total: usize = rows
            .iter()
            .map(|r| r.rsplit(',').next().unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, 80);
    }
    let dump = geosbm::dump::read_dump(&d.path().join("adjacency.ut")).unwrap();
    assert_eq!(dump.matrix.nrows(), 80);

    let out = geosbm(
        d.path(),
        &[
            "moments", "--n", "50", "--gamma", "2", "--l-max", "3", "--trials", "0",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("moments.json")).unwrap())
            .unwrap();
    assert_eq!(m["rows"][0]["exact"], 50.0 * 49.0 / 17.0);
    assert!(m["rows"][0]["monte_carlo_mean"].is_null());
    assert!(m["normalization_note"]
        .as_str()
        .unwrap()
        .contains("factor of 2"));

    let out = geosbm(
        d.path(),
        &["isolated", "--n", "40", "--gamma", "3", "--trials", "5"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let iso: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("isolated.json")).unwrap())
            .unwrap();
    assert!(iso["expected"].as_f64().unwrap() > 0.0);
}
