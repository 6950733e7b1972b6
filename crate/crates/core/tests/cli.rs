//! End-to-end runs of the `nslab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nslab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nslab")).current_dir(dir).args(args).output().expect("spawn nslab")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = nslab(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    for name in ["a.nsrf", "b.nsrf"] {
        ok(d.path(), &["generate", "--family", "random", "--n", "16", "--seed", "3", "--out", name]);
    }
    let a = fs::read(d.path().join("a.nsrf")).unwrap();
    assert_eq!(a, fs::read(d.path().join("b.nsrf")).unwrap());
    ok(d.path(), &["norms", "--field", "a.nsrf"]);
}

#[test]
fn simulate_and_map_reproduce() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["simulate", "--preset", "beltrami-perturbation", "--out", "r0"]);
    // the lattice needs r >= two cells and the cylinder inside the run
    let cfg = fs::read_to_string(d.path().join("r0/config.toml")).unwrap().replace("t_end = 0.5", "t_end = 0.9");
    fs::write(d.path().join("run.toml"), cfg).unwrap();
    for run in ["r1", "r2"] {
        ok(d.path(), &["simulate", "--config", "run.toml", "--out", run]);
        let map = format!("{run}/map.csv");
        ok(d.path(), &["regular-map", "--traj", run, "--radii", "0.8", "--times", "0.7,0.75", "--offsets", "-1,0,1", "--out", &map]);
    }
    for file in ["energy.csv", "monitor.csv", "map.csv"] {
        let a = fs::read(d.path().join("r1").join(file)).unwrap();
        assert_eq!(a, fs::read(d.path().join("r2").join(file)).unwrap(), "{file} differs");
    }
    let energy = fs::read_to_string(d.path().join("r1/energy.csv")).unwrap();
    assert!(energy.starts_with("# config-hash: "));
}

#[test]
fn verify_ckn_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        ok(d.path(), &["verify-ckn", "--n", "16", "--size", "4", "--q", "6", "--out", name]);
    }
    let a = fs::read_to_string(d.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(d.path().join("b.csv")).unwrap());
    // header, 2 parameter sets x 3 weights x 4 members
    assert!(a.lines().filter(|l| !l.starts_with('#')).count() > 24);
}

#[test]
fn configuration_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(nslab(d.path(), &["simulate", "--preset", "no-such-preset"]).status.code(), Some(2));
    fs::write(d.path().join("bad.toml"), "scenario = \"x\"\nbogus = 1\n").unwrap();
    assert_eq!(nslab(d.path(), &["simulate", "--config", "bad.toml"]).status.code(), Some(2));
    assert_eq!(nslab(d.path(), &["verify-stein", "--a", "5"]).status.code(), Some(2));
    assert_eq!(nslab(d.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "scenario = \"unstable\"\nseed = 4\n\n[grid]\nn = 16\n\n[solver]\ndt = 0.1\nt_end = 5.0\nblowup_factor = 100.0\n\n[initial]\nkind = \"random\"\nkmax = 5\nenergy = 1e8\n";
    fs::write(d.path().join("blow.toml"), cfg).unwrap();
    let out = nslab(d.path(), &["simulate", "--config", "blow.toml", "--out", "blow"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
