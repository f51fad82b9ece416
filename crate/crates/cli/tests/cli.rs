use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardedge"))
}

fn run(args: &[&str], out: &Path) -> i32 {
    let o = bin().args(args).arg("--out").arg(out).output().expect("binary runs");
    if !o.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&o.stderr));
    }
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let head = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (head, rows)
}

#[test]
fn hfun_table() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    assert_eq!(run(&["hfun"], &a), 0);
    let (head, rows) = read_csv(&a.join("hfun.csv"));
    assert_eq!(head, ["x", "phi", "H"]);
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r[2] >= r[1]));
    let zero = rows.iter().find(|r| r[0] == 0.0).unwrap();
    assert_eq!(zero[1], 0.5);

    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("hfun.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "hfun");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);

    let b = tmp.path().join("b");
    assert_eq!(run(&["hfun"], &b), 0);
    assert_eq!(fs::read(a.join("hfun.csv")).unwrap(), fs::read(b.join("hfun.csv")).unwrap());
}

#[test]
fn per_degree_profiles() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "n = 101\n[profile]\ndegrees = [60, 90, 100]\n");
    let out = tmp.path().join("o");
    assert_eq!(run(&["profile", "--config", cfg.to_str().unwrap()], &out), 0);
    let (head, rows) = read_csv(&out.join("profile_ginibre_n101.csv"));
    assert_eq!(head, ["x", "exact", "truncated", "quasi", "limit"]);
    for r in rows.iter().filter(|r| r[0] > 0.0) {
        assert!(r[1..].iter().all(|v| *v == 0.0));
    }
    // each |w_j|² peaks at the rescaled position of its own Γ_{j/n}
    for (j, lo, hi) in [(60, -2.6, -2.0), (90, -0.8, -0.4), (100, -0.3, 0.0)] {
        let (_, rows) = read_csv(&out.join(format!("poly_ginibre_n101_j{j}.csv")));
        let top = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
        assert!(top[0] >= lo && top[0] <= hi, "j={j} peaks at {}", top[0]);
    }
}

fn window_sup(path: &Path) -> f64 {
    let (_, rows) = read_csv(path);
    rows.iter()
        .filter(|r| r[0] >= -3.0 - 1e-9 && r[0] <= -0.5 + 1e-9)
        .map(|r| (r[1] - r[4]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn profile_error_shrinks_with_n() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["profile", "--n", "256,1024"], &out), 0);
    let e256 = window_sup(&out.join("profile_ginibre_n256.csv"));
    let e1024 = window_sup(&out.join("profile_ginibre_n1024.csv"));
    assert!(e1024 < e256, "{e1024} vs {e256}");
}

#[test]
fn verify_report_and_fault_injection() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run(&["verify"], &out), 0);

    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schema/verify-report.schema.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert!(jsonschema::is_valid(&schema, &report));
    assert_eq!(report["all_pass"], true);
    assert!(!jsonschema::is_valid(&schema, &serde_json::json!({"checks": []})));

    // scale every cached log-norm of the n = 64 table
    let cache = fs::read_dir(out.join("cache"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with("ginibre_n64_"))
        .unwrap();
    let mut c: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cache).unwrap()).unwrap();
    for v in c["log_h"].as_array_mut().unwrap() {
        *v = serde_json::json!(v.as_f64().unwrap() - 0.01);
    }
    fs::write(&cache, c.to_string()).unwrap();
    assert_eq!(run(&["verify"], &out), 1);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["trace_identity_n64"]);
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", "bogus = 3\n");
    assert_eq!(run(&["hfun", "--config", bad.to_str().unwrap()], tmp.path()), 2);
    let bad = write_config(tmp.path(), "pot.toml", "[potential]\nname = \"power\"\n");
    assert_eq!(run(&["profile", "--config", bad.to_str().unwrap()], tmp.path()), 2);
    let bad = write_config(tmp.path(), "win.toml", "n = [64, 256]\n[converge]\nwindow = [-1.0, 0.0]\n");
    assert_eq!(run(&["converge", "--config", bad.to_str().unwrap()], tmp.path()), 2);
}

#[test]
fn tolerance_failure_exit_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "q.toml", "[quadrature]\nmax_panels = 2\nabs_tol = 1e-15\nrel_tol = 1e-15\n");
    assert_eq!(run(&["hfun", "--config", cfg.to_str().unwrap()], tmp.path()), 3);
}

#[test]
fn converge_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "n = [256, 1024]\n[potential]\nname = \"power\"\np = 2.0\n");
    let out = tmp.path().join("o");
    assert_eq!(run(&["converge", "--config", cfg.to_str().unwrap()], &out), 0);
    let (head, rows) = read_csv(&out.join("converge_power2.csv"));
    assert_eq!(head, ["n", "error"]);
    assert!(rows[1][1] < rows[0][1]);
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("converge_power2.json")).unwrap()).unwrap();
    assert!(rep["rate_estimate"].as_f64().unwrap() < 0.0);
}

const SMALL_CHAIN: &str = "n = 16\nseed = 4\n[sample]\nburn_in = 200\nbatch_len = 50\n";

#[test]
fn sample_resume_matches_uninterrupted_run() {
    let tmp = TempDir::new().unwrap();
    let full = write_config(tmp.path(), "full.toml", &format!("{SMALL_CHAIN}sweeps = 1200\n"));
    let half = write_config(tmp.path(), "half.toml", &format!("{SMALL_CHAIN}sweeps = 600\n"));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["sample", "--config", full.to_str().unwrap()], &a), 0);
    assert_eq!(run(&["sample", "--config", half.to_str().unwrap()], &b), 0);
    let ckpt = b.join("chain_n16_seed4.bin");
    let resume = write_config(
        tmp.path(),
        "resume.toml",
        &format!("{SMALL_CHAIN}sweeps = 1200\nresume = {:?}\n", ckpt.to_str().unwrap()),
    );
    let c = tmp.path().join("c");
    assert_eq!(run(&["sample", "--config", resume.to_str().unwrap()], &c), 0);
    assert_eq!(fs::read(a.join("chain_n16_seed4.bin")).unwrap(), fs::read(c.join("chain_n16_seed4.bin")).unwrap());

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("agreement_n16.json")).unwrap()).unwrap();
    assert_eq!(summary["outside_droplet"], 0);
    assert!(summary["max_radius"].as_f64().unwrap() <= 1.0);
    let (head, _) = read_csv(&a.join("histogram_n16.csv"));
    assert_eq!(head, ["bin_lo", "bin_hi", "count", "intensity"]);
}

#[test]
fn sample_agreement_failure_exit_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &format!("{SMALL_CHAIN}sweeps = 800\nquantile = 1e-12\n"));
    assert_eq!(run(&["sample", "--config", cfg.to_str().unwrap()], tmp.path()), 3);
}
