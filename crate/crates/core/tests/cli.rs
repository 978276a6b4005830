use std::path::Path;
use std::process::{Command, Output};

use coopshift::cli::CONFIG_KEYS;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coopshift"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "ions = 2\ncycles = 12\nmeasurements_per_dwell = 5\nseed = 5\n";

fn simulate(dir: &Path, cfg: &str) -> Output {
    let out = dir.to_str().unwrap();
    run(&["--quiet", "--out-dir", out, "simulate", "--config", cfg])
}

fn long_flags(help: &str) -> Vec<String> {
    help.split_whitespace()
        .filter(|w| w.starts_with("--"))
        .map(|w| w.trim_end_matches(|c: char| !c.is_alphanumeric() && c != '-').to_string())
        .collect()
}

#[test]
fn help_documents_flags_and_config_keys() {
    let expected: &[(&str, &[&str])] = &[
        ("chain", &["--ions", "--axial-freq-mhz", "--mass-u", "--charge"]),
        ("shift", &["--separation-um", "--near-field", "--oscillator-strength-mhz"]),
        (
            "curve",
            &["--ions", "--spacing-min", "--spacing-max", "--points", "--pol", "--thermal-sigma-um", "--samples"],
        ),
        ("simulate", &["--config"]),
        ("allan", &["--input", "--dwell-s", "--setting-a", "--setting-b", "--taus"]),
        ("fit", &["--input", "--ions", "--pol"]),
    ];
    for (sub, flags) in expected {
        let o = run(&[sub, "--help"]);
        assert!(o.status.success(), "{sub} --help");
        let text = String::from_utf8_lossy(&o.stdout);
        let listed = long_flags(&text);
        for f in flags.iter().chain(&["--seed", "--out-dir", "--quiet"]) {
            assert!(listed.iter().any(|l| l == f), "{sub} --help lacks {f}");
        }
        if *sub == "simulate" {
            for (key, _) in CONFIG_KEYS {
                assert!(text.contains(key), "simulate --help lacks config key {key}");
            }
        }
    }
}

#[test]
fn zero_ions_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ions = 0\n");
    let o = simulate(dir.path(), &cfg);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("ions"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ionz = 2\n");
    let o = simulate(dir.path(), &cfg);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("ionz"), "{}", stderr(&o));
}

#[test]
fn domain_errors_exit_nonzero() {
    assert!(!run(&["chain", "--ions", "2", "--axial-freq-mhz=-0.81"]).status.success());
    assert!(!run(&["shift", "--separation-um=-1"]).status.success());
    assert!(!run(&["fit", "--input", "/nonexistent/points.csv"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ions = 2\nseed = 1\nseed = 2\n");
    assert!(!simulate(dir.path(), &cfg).status.success());
}

#[test]
fn same_seed_gives_identical_series() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), SMALL);
    assert!(simulate(a.path(), &cfg).status.success());
    assert!(simulate(b.path(), &cfg).status.success());
    let sa = std::fs::read(a.path().join("series.csv")).unwrap();
    let sb = std::fs::read(b.path().join("series.csv")).unwrap();
    assert!(!sa.is_empty());
    assert_eq!(sa, sb);
}

#[test]
fn summary_parses_and_manifest_lists_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = write_config(cfg_dir.path(), SMALL);
    assert!(simulate(dir.path(), &cfg).status.success());

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["seed"], 5);
    assert!(summary["summary"]["pair"]["mean_khz"].is_number());
    assert_eq!(summary["manifest"]["config"]["ions"], "2");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    let mut listed: Vec<String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let mut present: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    listed.sort();
    present.sort();
    assert_eq!(listed, present);
    assert_eq!(summary["manifest"]["files"], manifest["files"]);
}

#[test]
fn allan_and_fit_read_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert!(simulate(dir.path(), &cfg).status.success());
    let series = dir.path().join("series.csv");
    let o = run(&["allan", "--input", series.to_str().unwrap(), "--setting-b", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("tau_s,sigma_mhz\n"));
    assert!(text.lines().count() > 2);

    let pts = dir.path().join("points.csv");
    std::fs::write(&pts, "spacing_um,shift_khz,sigma_khz\n4.9,10,2\n5.0,-20,2\n5.1,12,2\n5.3,-8,2\n").unwrap();
    let o = run(&["fit", "--input", pts.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(fit["oscillator_strength_mhz"].is_number());
    assert_eq!(fit["points"], 4);
}

#[test]
fn chain_and_shift_print_tables() {
    let o = run(&["chain", "--ions", "2", "--axial-freq-mhz", "0.81"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).lines().count() >= 3);
    let o = run(&["shift", "--separation-um", "5"]);
    assert!(o.status.success());
    assert!(!o.stdout.is_empty());
}
