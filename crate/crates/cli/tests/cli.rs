use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn small_config(dir: &Path) -> String {
    format!(
        r#"[potential]
family = "sin2"
v0 = 8.0
a = 1.0

[numerics]
n_pw = 129
n_kappa = 64
n_bands = 4
cells = 8
points_per_cell = 64
n_sites = 11
boundary = "zero"
overlap_band = 6
seed_modes = 128
delta0 = 4.0
tail_window = [1e-10, 1e-3]

[sweep]
hbars = [0.25, 0.2, 0.16, 0.125]
etas = [0.0, -3.0, -50.0]
sigma = 1.0

[io]
output_dir = "{}"
cache_dir = "{}"
"#,
        dir.join("out").display(),
        dir.join("cache").display()
    )
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_bhreduce"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cut = cfg.split("[numerics]").nth(1).unwrap();
    let o = run(dir.path(), &format!("[numerics]{cut}"), &["bands"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("potential"), "{}", stderr(&o));
}

#[test]
fn malformed_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "[potential]\nfamily = \"sin2\"\nv0 = = 8\n", &["bands"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = run(dir.path(), &small_config(dir.path()).replace("cells = 8", "cells = 8\nspeed = 2"), &["bands"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("speed"), "{}", stderr(&o));
}

#[test]
fn low_sigma_needs_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path()).replace("sigma = 1.0", "sigma = 0.4");
    assert_eq!(run(dir.path(), &cfg, &["dnls"]).status.code(), Some(2));
    let o = run(dir.path(), &cfg, &["dnls", "--allow-low-sigma"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("out/dnls_ladder.csv").exists());
}

#[test]
fn bands_second_run_comes_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out/bands_hbar_0.2.csv");
    let first = run(dir.path(), &cfg, &["bands"]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert!(!stderr(&first).contains("cache hit"));
    let a = fs::read_to_string(&out).unwrap();
    let second = run(dir.path(), &cfg, &["bands"]);
    assert!(stderr(&second).contains("cache hit"));
    assert_eq!(a, fs::read_to_string(&out).unwrap());

    for e in fs::read_dir(dir.path().join("cache")).unwrap() {
        let p = e.unwrap().path();
        let text = fs::read_to_string(&p).unwrap().replacen("\"version\":1", "\"version\":0", 1);
        fs::write(&p, text).unwrap();
    }
    let third = run(dir.path(), &cfg, &["bands"]);
    assert!(stderr(&third).contains("rebuilding"), "{}", stderr(&third));
    assert_eq!(a, fs::read_to_string(&out).unwrap());

    let finer = cfg.replace("n_kappa = 64", "n_kappa = 32");
    let fourth = run(dir.path(), &finer, &["bands"]);
    assert!(!stderr(&fourth).contains("cache hit"));
}

#[test]
fn scan_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &small_config(dir.path()), &["scan", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["params.csv", "dnls_ladder.csv", "continuum.csv", "transition.csv", "fits.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let continuum = fs::read_to_string(out.join("continuum.csv")).unwrap();
    let header: Vec<&str> = continuum.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "h1_error").unwrap();
    let linear: Vec<&str> = continuum.lines().skip(1).filter(|l| l.split(',').nth(1) == Some("0.0")).collect();
    assert_eq!(linear.len(), 4);
    assert!(linear.iter().all(|l| l.split(',').nth(col) == Some("0.0")));
    let fits: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fits.json")).unwrap()).unwrap();
    assert!(fits["s0"].as_f64().unwrap() > 1.8);
}

#[test]
fn subcommands_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for (cmd, file) in [("wannier", "wannier.json"), ("params", "params.csv"), ("reconstruct", "continuum.csv")] {
        let o = run(dir.path(), &cfg, &[cmd]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        assert!(dir.path().join("out").join(file).exists(), "{cmd}");
    }
    assert!(dir.path().join("out/states").read_dir().unwrap().count() > 0);
}

#[test]
fn verify_exit_code_follows_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &small_config(dir.path()), &["verify"]);
    let table = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = table.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(lines.len(), 11, "{table}");
    let any_fail = lines.iter().any(|l| l.starts_with("FAIL"));
    assert_eq!(o.status.code(), Some(if any_fail { 1 } else { 0 }), "{table}");
    assert!(dir.path().join("out/verify.json").exists());
}
