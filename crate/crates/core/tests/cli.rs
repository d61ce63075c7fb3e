//! Command-line runs on coarse grids compared against stored tables.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the stored tables.

use std::path::PathBuf;
use std::process::Command;

use casimir_core::cli::{main_with_args, run, Cli};
use clap::Parser;

const GOLDEN: &[(&str, &str)] = &[
    (
        "plane_plane_drude",
        "plane-plane --material drude --gamma-d 1e-2 --wp-d 400 --tau-grid log:1e-1:1e2:7",
    ),
    (
        "temperature_sphere_drude",
        "entropy-vs-temperature --geometry sphere-sphere --ratio-dR 20 --material drude --gamma-d 1e-2 --wp-d 400 --tau-grid log:1e-1:1e2:7",
    ),
    ("temperature_sphere_pec", "entropy-vs-temperature --ratio-dR 20 --material pec --tau-grid log:1e-1:1e2:7"),
    ("mie_ratios", "mie-table --material drude --wp-R 20 --sigma-R 125663.70614359173 --kR-grid log:1e-6:1e1:8"),
    (
        "channels_entropy",
        "channels --ratio-dR 20 --material drude --gamma-d 1e2 --wp-d 400 --observable entropy --tau-grid log:1e-1:1e2:5",
    ),
    (
        "channels_free_energy",
        "channels --ratio-dR 20 --material drude --gamma-d 10 --wp-d 400 --observable free-energy --tau-grid log:1e-1:1e2:5",
    ),
    (
        "channels_pairs_close",
        "channels --ratio-dR 2.75 --material pec --observable entropy --lmax 4 --pair-lmax 2 --tau-grid log:1e-1:1e1:3",
    ),
    ("distance_pec", "entropy-vs-distance --material pec --tauR 1 --dR-grid lin:3:21:4 --modes dipole,srt,full --lmax 8"),
    (
        "distance_drude",
        "entropy-vs-distance --material drude --wp-R 20 --gamma-R 5e-4 --tauR 1 --dR-grid lin:5:25:3 --modes dipole,srt --lmax 8",
    ),
];

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.csv"))
}

fn render(args: &str) -> String {
    let cli = Cli::try_parse_from(std::iter::once("casimir").chain(args.split_whitespace())).unwrap();
    let table = run(&cli.command, false).unwrap();
    let mut out = Vec::new();
    table.write_csv(&mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn close(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y || (x - y).abs() <= 1e-10 * x.abs().max(y.abs()),
        _ => a == b,
    }
}

fn compare(name: &str, fresh: &str, stored: &str) {
    let (fl, sl): (Vec<&str>, Vec<&str>) = (fresh.lines().collect(), stored.lines().collect());
    assert_eq!(fl.len(), sl.len(), "{name}: line count");
    for (i, (f, s)) in fl.iter().zip(&sl).enumerate() {
        let (fc, sc): (Vec<&str>, Vec<&str>) = if f.starts_with('#') {
            (f.splitn(2, ": ").collect(), s.splitn(2, ": ").collect())
        } else {
            (f.split(',').collect(), s.split(',').collect())
        };
        assert_eq!(fc.len(), sc.len(), "{name}: line {i} shape");
        for (a, b) in fc.iter().zip(&sc) {
            assert!(close(a, b), "{name}: line {i}: `{a}` vs stored `{b}`");
        }
    }
}

#[test]
fn golden_tables() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (name, args) in GOLDEN {
        let fresh = render(args);
        let path = golden_path(name);
        if update {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &fresh).unwrap();
            continue;
        }
        let stored = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        compare(name, &fresh, &stored);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = GOLDEN[1].1;
    assert_eq!(render(args), render(args));
    let args = GOLDEN[7].1;
    assert_eq!(render(args), render(args));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let outputs: Vec<Vec<u8>> = [1, 3]
        .iter()
        .map(|n| {
            let path = dir.path().join(format!("t{n}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_casimir"))
                .args(GOLDEN[7].1.split_whitespace())
                .args(["--no-timestamp", "--threads", &n.to_string(), "--output"])
                .arg(&path)
                .status()
                .unwrap();
            assert!(status.success());
            std::fs::read(&path).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn header_and_columns() {
    let csv = render(GOLDEN[2].1);
    let comments: Vec<&str> = csv.lines().filter(|l| l.starts_with('#')).collect();
    for key in ["# casimir:", "# schema:", "# spec-sha256:", "# lmax:", "# n-max-reached:", "# max-tail-bound:", "# S_HT_P:"] {
        assert!(comments.iter().any(|l| l.starts_with(key)), "missing {key}");
    }
    let columns = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(columns.starts_with("tau,S_total,S_TM,S_TE,S_mix,F_total,F_TM,F_TE,F_mix,err_est,"));
    assert!(!csv.contains("timestamp"));
}

#[test]
fn json_output() {
    let cli = Cli::try_parse_from(["casimir", "plane-plane", "--tau-grid", "1,10"]).unwrap();
    let table = run(&cli.command, true).unwrap();
    let mut out = Vec::new();
    table.write_json(&mut out).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["metadata"]["timestamp-unix"].is_string());
    let s = v["rows"][1]["S_total"].as_f64().unwrap();
    assert!((s / v["metadata"]["S_HT_P"].as_str().unwrap().parse::<f64>().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn spec_hash_tracks_inputs() {
    let parse = |s: &str| Cli::try_parse_from(std::iter::once("casimir").chain(s.split_whitespace())).unwrap();
    let a = parse("plane-plane --tau-grid 1,2");
    let b = parse("plane-plane --tau-grid 1,2 --format json --no-timestamp");
    let c = parse("plane-plane --tau-grid 1,3");
    assert_eq!(a.command.spec_hash(), b.command.spec_hash());
    assert_ne!(a.command.spec_hash(), c.command.spec_hash());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();
    let code = |args: &[&str]| main_with_args(std::iter::once("casimir").chain(args.iter().copied()));
    assert_eq!(code(&["plane-plane", "--tau-grid", "5", "--output", out]), 0);
    assert!(std::fs::read_to_string(out).unwrap().contains("S_total"));
    // unknown flag, bad grid, overlapping spheres, missing Drude parameter
    assert_eq!(code(&["plane-plane", "--bogus"]), 2);
    assert_eq!(code(&["plane-plane", "--tau-grid", "log:0:1:3"]), 2);
    assert_eq!(code(&["entropy-vs-temperature", "--ratio-dR", "1.5", "--output", out]), 2);
    assert_eq!(code(&["plane-plane", "--material", "drude", "--wp-d", "400", "--output", out]), 2);
    // a non-contracting round trip is a numerical-validity failure
    assert_eq!(
        code(&["entropy-vs-distance", "--dR-grid", "2.0000001", "--modes", "full", "--lmax", "2", "--output", out]),
        3
    );
}
