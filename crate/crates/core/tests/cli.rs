//! End-to-end tests of the `movopt` binary and the CSV schemas it writes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MINIMAL: &str = r#"
horizon = 0.1
seed = 5

[params]
sigma = 0.32
c = 1.0
carrying_capacity = 250

[init]
kind = "point_mass"
x0 = 0.0
n0 = 3
"#;

const FIG1: &str = r#"
horizon = 4.0
seed = 11

[params]
sigma = 0.32
c = 1.0
carrying_capacity = 250

[grid]
half_width = 5.5
n_cells = 256
dt = 1e-3
"#;

fn movopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_movopt"))
        .args(args)
        .env_remove("MOVOPT_OUT_DIR")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = movopt(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn simulate(dir: &Path, config: &str) -> PathBuf {
    let cfg = write_config(dir, config);
    let out = dir.join("run");
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    out
}

#[test]
fn minimal_simulation_writes_documented_files() {
    let tmp = tempfile::tempdir().unwrap();
    let run = simulate(tmp.path(), MINIMAL);
    for name in ["events.csv", "traits.csv", "mass.csv", "manifest.json"] {
        assert!(run.join(name).is_file(), "{name} missing");
    }
    let (h, events) = read_csv(&run.join("events.csv"));
    assert_eq!(h, ["id", "parent_id", "child_rank", "birth_time", "death_time"]);
    assert!(events.len() >= 3);
    assert_eq!(events[0][1], "");
    let (h, traits) = read_csv(&run.join("traits.csv"));
    assert_eq!(h, ["id", "t", "x_moving"]);
    let at_zero: Vec<_> = traits.iter().filter(|r| f(&r[1]) == 0.0).collect();
    assert_eq!(at_zero.len(), 3);
    assert!(at_zero.iter().all(|r| f(&r[2]) == 0.0));
    let (h, mass) = read_csv(&run.join("mass.csv"));
    assert_eq!(h, ["t", "mass"]);
    assert_eq!(mass.len(), 3);
    assert_eq!(f(&mass[0][1]), 3.0 / 250.0);

    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["params"]["sigma"], 0.32);
    for file in manifest["outputs"].as_array().unwrap() {
        assert!(run.join(file.as_str().unwrap()).is_file());
    }
}

#[test]
fn same_seed_gives_identical_bytes_and_seed_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FIG1);
    let cfg = cfg.to_str().unwrap();
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    ok(&["simulate", "--config", cfg, "--out-dir", dirs[0].to_str().unwrap()]);
    ok(&["simulate", "--config", cfg, "--out-dir", dirs[1].to_str().unwrap()]);
    ok(&["simulate", "--config", cfg, "--seed", "12", "--out-dir", dirs[2].to_str().unwrap()]);
    for name in ["events.csv", "traits.csv", "mass.csv"] {
        let a = std::fs::read(dirs[0].join(name)).unwrap();
        assert_eq!(a, std::fs::read(dirs[1].join(name)).unwrap(), "{name}");
        assert_ne!(a, std::fs::read(dirs[2].join(name)).unwrap(), "{name}");
    }
}

#[test]
fn out_dir_can_come_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let out = tmp.path().join("from_env");
    let status = Command::new(env!("CARGO_BIN_EXE_movopt"))
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("MOVOPT_OUT_DIR", &out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("mass.csv").is_file());
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    for (bad, field) in [
        (MINIMAL.replace("sigma = 0.32", "sigma = 0.32\nsigam = 0.3"), "sigam"),
        (MINIMAL.replace("sigma = 0.32", "sigma = 0.0"), "sigma"),
        (MINIMAL.replace("horizon = 0.1", "horizon = 0.12"), "horizon"),
        (MINIMAL.replace("n0 = 3", "n0 = 0"), "init.n0"),
    ] {
        let cfg = write_config(tmp.path(), &bad);
        let out = movopt(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", tmp.path().join("x").to_str().unwrap()]);
        assert!(!out.status.success());
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(field), "expected {field} in {err}");
    }
}

#[test]
fn lineages_from_a_run_have_forward_and_reversed_blocks() {
    let tmp = tempfile::tempdir().unwrap();
    let run = simulate(tmp.path(), FIG1);
    let out = tmp.path().join("lin");
    ok(&[
        "lineages", "--run-dir", run.to_str().unwrap(), "--n-samples", "3", "--frame", "fixed", "--out-dir",
        out.to_str().unwrap(),
    ]);
    let (h, rows) = read_csv(&out.join("lineages.csv"));
    assert_eq!(h, ["sample_id", "t", "value", "frame", "direction"]);
    let n_grid = 81;
    assert_eq!(rows.len(), 3 * 2 * n_grid);
    for s in 0..3 {
        let block = |k: usize| &rows[(2 * s + k) * n_grid..(2 * s + k + 1) * n_grid];
        let (fwd, rev) = (block(0), block(1));
        assert!(fwd.iter().all(|r| r[0] == s.to_string() && r[3] == "fixed" && r[4] == "forward"));
        assert!(rev.iter().all(|r| r[4] == "reversed"));
        for i in 0..n_grid {
            assert_eq!(fwd[i][1], rev[i][1]);
            assert_eq!(fwd[i][2], rev[n_grid - 1 - i][2]);
        }
    }
    // the fixed-frame lineage ends at a trait carried by an alive individual
    let paths = movopt::io::read_lineages(&out.join("lineages.csv")).unwrap();
    assert_eq!(paths.len(), 6);
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn lone_survivor_lineage_is_its_own_path() {
    let tmp = tempfile::tempdir().unwrap();
    let base = MINIMAL
        .replace("n0 = 3", "n0 = 1")
        .replace("carrying_capacity = 250", "carrying_capacity = 1")
        .replace("[init]", "[mode]\nkind = \"frozen\"\nlambda = 0.0\n\n[init]");
    for seed in 0..40 {
        let run = simulate(tmp.path(), &base.replace("seed = 5", &format!("seed = {seed}")));
        let (_, events) = read_csv(&run.join("events.csv"));
        if events.len() != 1 || !events[0][4].is_empty() {
            continue;
        }
        ok(&["lineages", "--run-dir", run.to_str().unwrap(), "--out-dir", run.to_str().unwrap()]);
        let (_, traits) = read_csv(&run.join("traits.csv"));
        let (_, lineage) = read_csv(&run.join("lineages.csv"));
        let forward: Vec<&String> = lineage.iter().filter(|r| r[4] == "forward").map(|r| &r[2]).collect();
        let own: Vec<&String> = traits.iter().map(|r| &r[2]).collect();
        assert_eq!(forward, own);
        assert!(run.join("manifest.json").is_file() && run.join("lineages_manifest.json").is_file());
        return;
    }
    panic!("no single-individual run found");
}

#[test]
fn lineages_of_an_extinct_run_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let doomed = MINIMAL
        .replace("x0 = 0.0", "x0 = -30.0")
        .replace("n0 = 3", "n0 = 1");
    let run = simulate(tmp.path(), &doomed);
    let out = movopt(&["lineages", "--run-dir", run.to_str().unwrap(), "--out-dir", tmp.path().join("l").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("extinct"));
    let (_, mass) = read_csv(&run.join("mass.csv"));
    assert!(mass.iter().skip(1).all(|r| f(&r[1]) == 0.0));
}

#[test]
fn lineage_batch_uses_replicate_ids() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &FIG1.replace("horizon = 4.0", "horizon = 1.0"));
    let out = tmp.path().join("batch");
    ok(&[
        "--workers", "2", "lineages", "--config", cfg.to_str().unwrap(), "--replicates", "4", "--out-dir",
        out.to_str().unwrap(),
    ]);
    let (_, rows) = read_csv(&out.join("lineages.csv"));
    let mut ids: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    ids.dedup();
    assert_eq!(ids, ["0", "1", "2", "3"]);
    assert_eq!(rows.len(), 4 * 2 * 21);
}

#[test]
fn spine_export_matches_closed_form_endpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FIG1);
    let out = tmp.path().join("spine");
    ok(&["spine", "--config", cfg.to_str().unwrap(), "--n-paths", "5", "--out-dir", out.to_str().unwrap()]);
    let (h, rows) = read_csv(&out.join("spine_marginals.csv"));
    assert_eq!(h, ["t", "mean", "variance"]);
    let (sigma, c, horizon) = (0.32f64, 1.0f64, 4.0f64);
    let first = &rows[0];
    assert!((f(&first[1]) + c * (-sigma * horizon).exp()).abs() < 1e-12);
    assert!((f(&first[2]) - sigma / (1.0 + (sigma * horizon).tanh())).abs() < 1e-12);
    let last = rows.last().unwrap();
    assert_eq!(f(&last[0]), horizon);
    assert!((f(&last[1]) + c).abs() < 1e-12 && (f(&last[2]) - sigma).abs() < 1e-12);
    let (h, paths) = read_csv(&out.join("spine_paths.csv"));
    assert_eq!(h, ["sample_id", "t", "value"]);
    assert_eq!(paths.len(), 5 * 81);
    let (h, _) = read_csv(&out.join("stationary.csv"));
    assert_eq!(h, ["x", "density"]);
}

#[test]
fn pde_export_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FIG1);
    let out = tmp.path().join("pde");
    ok(&["pde", "--config", cfg.to_str().unwrap(), "--snapshot-interval", "2.0", "--out-dir", out.to_str().unwrap()]);

    let (h, f_rows) = read_csv(&out.join("stationary.csv"));
    assert_eq!(h, ["x", "density"]);
    let dx = f(&f_rows[1][0]) - f(&f_rows[0][0]);
    let mass: f64 = f_rows.iter().map(|r| f(&r[1])).sum::<f64>() * dx;
    assert!((mass - 0.34).abs() < 1e-6, "{mass}");

    let (h, m_rows) = read_csv(&out.join("mean_offspring.csv"));
    assert_eq!(h, ["t", "x", "m"]);
    assert!(m_rows.iter().filter(|r| f(&r[0]) == 0.0).all(|r| f(&r[2]) == 1.0));
    assert_eq!(m_rows.len(), 3 * 257);

    let (h, p_rows) = read_csv(&out.join("pde.csv"));
    assert_eq!(h, ["t", "x", "f"]);
    assert_eq!(p_rows.len(), 3 * 257);
}

#[test]
fn help_documents_schemas() {
    let out = ok(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for line in [
        "id, parent_id, child_rank, birth_time, death_time",
        "id, t, x_moving",
        "t, mass",
        "sample_id, t, value, frame, direction",
    ] {
        assert!(text.contains(line), "{line}");
    }
    for cmd in ["simulate", "lineages", "spine", "pde", "validate"] {
        assert!(text.contains(cmd));
    }
    let out = ok(&["validate", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("--budget") && text.contains("--inject-fault") && text.contains("--workers"));
}
