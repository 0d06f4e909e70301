use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_kakeya-lab");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("KAKEYA_LAB_JOBS").output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_line(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("an error line")).unwrap()
}

#[test]
fn sweep_zero_map_recovers_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--map", "zero", "--n", "3", "--t-steps", "64", "--mesh", "2048", "--out", "sv.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sv.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,sv"));
    assert_eq!(lines.count(), 64);
    let fit = json(&dir.path().join("sv.fit.json"));
    assert_eq!(fit["schema_version"], 1);
    assert_eq!(fit["command"], "sweep");
    let lead = fit["results"]["fit"]["leading"].as_f64().unwrap();
    assert!((lead - PI).abs() < 1e-5, "{lead}");
    assert_eq!(fit["results"]["lower_bound"]["passed"], true);
}

#[test]
fn measure_zero_map_is_near_cone_volume() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["measure", "--map", "zero", "--n", "3", "--h", "0.01", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(0));
    let m = json(&dir.path().join("m.json"));
    let v = m["results"]["value"].as_f64().unwrap();
    assert!((v - PI / 3.0).abs() < 0.1 * PI / 3.0, "{v}");
    assert_eq!(m["params"]["h"], 0.01);
    assert!(m["params"].get("out").is_none());
}

#[test]
fn verify_core_lists_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--suite", "core", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&dir.path().join("verify.json"));
    let checks = v["results"]["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    assert!(checks.iter().all(|c| c["name"].is_string() && c["passed"] == true));
    assert_eq!(v["results"]["failed"], 0);
}

#[test]
fn verify_reduced_suite_in_four_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("verify.json"))["results"]["all_passed"], true);
}

#[test]
fn slice_writes_winding_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["slice", "--map", "radial:r=0.5", "--t", "0.5", "--h", "0.02", "--out", "wind.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("wind.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,wind,masked"));
    let report = json(&dir.path().join("wind.json"));
    let (st, gr) = (report["results"]["sv_stokes"].as_f64().unwrap(), report["results"]["sv_grid"].as_f64().unwrap());
    assert!((st - gr).abs() < 0.05 * st);
    assert!(fs::read_to_string(dir.path().join("wind.gp")).unwrap().contains("'wind.csv'"));
}

#[test]
fn manifest_hashes_every_emitted_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["moll", "--map", "lacunary:alpha=0.6", "--mesh", "1024", "--out", "moll.json"]);
    assert_eq!(out.status.code(), Some(0));
    let manifest = json(&dir.path().join("MANIFEST.json"));
    assert_eq!(manifest["schema_version"], 1);
    let files = manifest["files"].as_array().unwrap();
    let mut listed: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    listed.sort();
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "MANIFEST.json")
        .collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    for f in files {
        let hash = f["sha256"].as_str().unwrap();
        assert_eq!(hash.len(), 64);
        assert!(hash.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), hash);
    }
}

fn manifest_of(dir: &Path, args: &[&str]) -> String {
    let out = run_in(dir, args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    fs::read_to_string(dir.join("MANIFEST.json")).unwrap()
}

#[test]
fn repeated_runs_are_bit_identical() {
    let args = ["tubes", "--map", "radial:r=0.3", "--delta", "0.08", "--shuffle", "--seed", "11", "--l-values", "1,2"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = manifest_of(a.path(), &[&args[..], &["--jobs", "1"]].concat());
    let second = manifest_of(b.path(), &[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(first, second);
}

#[test]
fn seed_changes_shuffled_output() {
    let base = ["tubes", "--delta", "0.08", "--shuffle"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = manifest_of(a.path(), &[&base[..], &["--seed", "1"]].concat());
    let second = manifest_of(b.path(), &[&base[..], &["--seed", "2"]].concat());
    assert_ne!(first, second);
}

/// Every subcommand: flags and the equivalent config file give the same files.
#[test]
fn config_file_reproduces_flags() {
    let cases: &[&[(&str, &str)]] = &[
        &[("command", "sweep"), ("map", "radial:r=0.5"), ("t-steps", "17"), ("mesh", "512")],
        &[("command", "slice"), ("map", "lacunary:alpha=0.7"), ("t", "0.4"), ("epsilon", "0.05"), ("h", "0.03")],
        &[("command", "measure"), ("map", "radial:r=0.2"), ("h", "0.04")],
        &[("command", "tubes"), ("delta", "0.1"), ("shuffle", "true"), ("seed", "5")],
        &[("command", "moll"), ("map", "lacunary:alpha=0.8"), ("mesh", "512"), ("epsilons", "0.2,0.1,0.05")],
        &[("command", "regularity"), ("map", "lacunary:alpha=0.5"), ("theta", "0.25"), ("mesh", "128"), ("delta", "0.1")],
        &[("command", "line-kakeya"), ("trials", "3"), ("seed", "9"), ("cap", "0.2"), ("samples", "50")],
        &[("command", "verify"), ("suite", "core"), ("n", "4")],
    ];
    for case in cases {
        let command = case[0].1;
        let mut flags = vec![command.to_string()];
        let mut text = String::from("# generated\n");
        for (k, v) in *case {
            if *k == "command" {
                text.push_str(&format!("command={v}\n"));
                continue;
            }
            // Underscored keys are accepted as spellings of dashed flags.
            text.push_str(&format!("{}={v}\n", k.replace('-', "_")));
            flags.push(format!("--{k}"));
            if *v != "true" {
                flags.push(v.to_string());
            }
        }
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let flag_refs: Vec<&str> = flags.iter().map(String::as_str).collect();
        let via_flags = manifest_of(a.path(), &flag_refs);
        fs::write(b.path().join("run.cfg"), text).unwrap();
        let via_config = manifest_of(b.path(), &["--config", "run.cfg"]);
        assert_eq!(via_flags, via_config, "{command}");
    }
}

#[test]
fn explicit_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.cfg"), "command=measure\nh=0.05\nout=m.json\n").unwrap();
    let out = run_in(dir.path(), &["--config", "m.cfg", "--h", "0.04"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("m.json"))["params"]["h"], 0.04);
}

#[test]
fn unknown_flag_exits_2_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--frobnicate", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_line(&out);
    assert_eq!(e["error"], "unknown_flag");
    assert_eq!(e["flag"], "--frobnicate");
}

#[test]
fn out_of_range_values_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    for (args, flag) in [
        (&["measure", "--h", "0.5"][..], "--h"),
        (&["sweep", "--mesh", "3"][..], "--mesh"),
        (&["sweep", "--n", "5"][..], "--n"),
        (&["tubes", "--delta", "0.9"][..], "--delta"),
        (&["sweep", "--epsilon", "NaN"][..], "--epsilon"),
        (&["sweep", "--map", "wobbly"][..], "--map"),
        (&["measure", "--n", "4"][..], "--n"),
        (&["line-kakeya", "--x", "2,0"][..], "--x"),
        (&["line-kakeya", "--map", "radial:r=0.5", "--x", "0.1,0,0"][..], "--x"),
    ] {
        let out = run_in(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_line(&out)["flag"], flag, "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "file, not a directory").unwrap();
    let out = run_in(dir.path(), &["measure", "--h", "0.05", "--out", "blocker/m.json"]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_line(&out);
    assert_eq!(e["error"], "unwritable_path");
    assert_eq!(e["flag"], "--out");
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--config", "absent.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["flag"], "--config");
}

#[test]
fn jobs_environment_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["measure", "--h", "0.05", "--jobs", "2"])
        .current_dir(dir.path())
        .env("KAKEYA_LAB_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["flag"], "KAKEYA_LAB_JOBS");
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("line-kakeya"));
}
