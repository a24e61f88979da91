use std::path::Path;
use std::process::{Command, Output};

fn coalesce(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coalesce"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn gen_duality_passes_with_full_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = coalesce(dir.path(), &["gen-duality"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path(), "gen-duality");
    assert_eq!(r["verdict"], "pass");
    assert!(r["result"]["max_abs_gap"].as_f64().unwrap() <= 1e-9);
    assert_eq!(r["config"]["replicates"], 1000);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS gen-duality"));
}

#[test]
fn stationary_reports_intensity_near_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = coalesce(dir.path(), &["stationary", "--replicates", "200", "--core-length", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path(), "stationary");
    let rho = r["result"]["intensity"]["mean"].as_f64().unwrap();
    assert!((rho / 0.729_011_132_947_226_981_4 - 1.0).abs() <= 0.05, "{rho}");
}

#[test]
fn simulate_at_time_zero_dumps_starts() {
    let dir = tempfile::tempdir().unwrap();
    let out = coalesce(dir.path(), &["simulate", "--kind", "bm", "--starts", "-1,0.5,2", "--t", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("simulate-bm.csv")).unwrap();
    assert_eq!(csv, "time,x1,x2,x3\n0,-1,0.5,2\n");
    let out = coalesce(dir.path(), &["simulate", "--kind", "walk", "--starts", "[0, 3]", "--t", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("simulate-walk.csv")).unwrap();
    assert_eq!(csv, "time,x1,x2\n0,0,3\n");
}

#[test]
fn walk_dump_moves_by_unit_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = coalesce(
        dir.path(),
        &["simulate", "--kind", "walk", "--starts", "0,1,3", "--t", "5", "--seed", "4"],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("simulate-walk.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 2);
    for w in rows.windows(2) {
        assert!(w[1][0] >= w[0][0]);
        let moved: f64 = w[0][1..].iter().zip(&w[1][1..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(moved <= 1.0);
        assert!(w[1][1..].windows(2).all(|p| p[0] <= p[1]));
    }
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("qv.toml");
    std::fs::write(&file, "seed = 11\nreplicates = 300\nh = 0.01\nstarts = [0.0, 0.25]\n").unwrap();
    let out = coalesce(dir.path(), &["qv-check", "--config", file.to_str().unwrap(), "--replicates", "400"]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let r = report(dir.path(), "qv-check");
    assert_eq!(r["seed"], 11);
    assert_eq!(r["config"]["replicates"], 400);
    assert_eq!(r["config"]["h"], 0.01);
    assert_eq!(r["config"]["starts"][1], 0.25);
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["wedge", "--no-such-key", "1"][..],
        &["bm-duality", "--h", "0"],
        &["staggered-duality", "--t", "0.5"],
        &["rw-duality", "--replicates", "5"],
        &["simulate", "--kind", "staggered", "--starts", "0,1", "--births", "0"],
    ] {
        let out = coalesce(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn failing_verdict_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = coalesce(dir.path(), &["wedge", "--smoke", "--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(dir.path(), "wedge")["verdict"], "fail");
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for workers in ["1", "3"] {
        let out = coalesce(dir.path(), &["bm-duality", "--smoke", "--seed", "9", "--workers", workers]);
        assert_eq!(out.status.code(), Some(0));
        texts.push(std::fs::read(dir.path().join("bm-duality.json")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn all_smoke_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = coalesce(dir.path(), &["all", "--smoke", "--seed", "3"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("11 of 11 passed"));
    assert!(dir.path().join("airy-table.json").exists());
}
