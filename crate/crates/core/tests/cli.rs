use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn plap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(args)
        .output()
        .expect("plap binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_path2(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("path2.json");
    fs::write(&path, r#"{"nodes":4,"boundary":[0,3],"edges":[[0,1,1.0],[1,2,1.0],[2,3,1.0]]}"#).unwrap();
    path
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn gridgen_examples() {
    let dir = TempDir::new().unwrap();
    let g21 = dir.path().join("g21.json");
    assert_eq!(code(&plap(&["gridgen", "--rows", "21", "--cols", "21", "--out", s(&g21)])), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&g21).unwrap()).unwrap();
    assert_eq!(v["nodes"], 441);
    let edges = v["edges"].as_array().unwrap();
    assert!(edges.iter().all(|e| e[2].as_f64() == Some(20.0)));

    let g3 = dir.path().join("g3.json");
    assert_eq!(code(&plap(&["gridgen", "--rows", "3", "--cols", "3", "--out", s(&g3)])), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&g3).unwrap()).unwrap();
    assert_eq!(v["boundary"].as_array().unwrap().len(), 8);

    let bad = dir.path().join("bad.json");
    assert_eq!(code(&plap(&["gridgen", "--rows", "1", "--cols", "5", "--out", s(&bad)])), 64);
}

#[test]
fn solve_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let graph = write_path2(&dir);
    let out = dir.path().join("run");
    let o = plap(&["solve", "--graph", s(&graph), "--p", "3", "--k", "2", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let lambda = r["lambda_p"].as_f64().unwrap();
    assert!((lambda - 5.0).abs() < 5e-6);
    for key in [
        "lambda_lin", "residual", "linear_index", "multiplicity", "morse_R", "morse_negR", "converged", "iters", "p", "k",
        "tau", "delta",
    ] {
        assert!(r.get(key).is_some(), "report.json lacks {key}");
    }

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "iter,lambda,err_mu,err_nu,err,residual");
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[4], cols[2].max(cols[3]));
    }
    let ef = fs::read_to_string(out.join("eigenfunction.csv")).unwrap();
    assert!(ef.starts_with("node_id,value"));
    assert_eq!(ef.lines().count(), 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for name in ["report.json", "trace.csv", "eigenfunction.csv"] {
        assert!(outputs.iter().any(|o| o.ends_with(name)), "manifest lacks {name}");
    }
}

#[test]
fn solve_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    assert_eq!(code(&plap(&["gridgen", "--rows", "6", "--cols", "6", "--out", s(&g)])), 0);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = plap(&["solve", "--graph", s(&g), "--p", "3", "--k", "3", "--seed", "5", "--out", s(out)]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    assert_eq!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
}

#[test]
fn solve_rejections_and_non_convergence() {
    let dir = TempDir::new().unwrap();
    let graph = write_path2(&dir);
    let out = dir.path().join("run");
    assert_eq!(code(&plap(&["solve", "--graph", s(&graph), "--p", "3", "--k", "0", "--out", s(&out)])), 64);
    assert_eq!(code(&plap(&["solve", "--graph", s(&graph), "--p", "3", "--k", "3", "--out", s(&out)])), 64);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&plap(&["solve", "--graph", s(&missing), "--p", "3", "--k", "1", "--out", s(&out)])), 64);

    let o = plap(&[
        "solve", "--graph", s(&graph), "--p", "3", "--k", "1", "--max-iter", "2", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(report(&out)["converged"], false);
    assert_eq!(fs::read_to_string(out.join("trace.csv")).unwrap().lines().count(), 3);
}

#[test]
fn sweep_path_at_p4() {
    let dir = TempDir::new().unwrap();
    let graph = write_path2(&dir);
    let out = dir.path().join("sweep");
    let o = plap(&["sweep", "--graph", s(&graph), "--p", "4", "--kmax", "2", "--jobs", "2", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for (row, exact) in rows.iter().zip([1.0, 9.0]) {
        let lambda: f64 = row[col("lambda_p")].parse().unwrap();
        assert!((lambda - exact).abs() < 1e-5 * exact, "{lambda} vs {exact}");
    }
    assert!(out.join("k1").join("eigenfunction.csv").exists());
    assert!(out.join("k2").join("report.json").exists());
}

#[test]
fn sweep_of_one_matches_solve() {
    let dir = TempDir::new().unwrap();
    let graph = write_path2(&dir);
    let sweep = dir.path().join("sweep");
    let solve = dir.path().join("solve");
    assert_eq!(code(&plap(&["sweep", "--graph", s(&graph), "--p", "3", "--kmax", "1", "--out", s(&sweep)])), 0);
    assert_eq!(code(&plap(&["solve", "--graph", s(&graph), "--p", "3", "--k", "1", "--out", s(&solve)])), 0);
    assert_eq!(report(&sweep.join("k1")), report(&solve));
}

#[test]
fn verify_examples() {
    let dir = TempDir::new().unwrap();
    let graph = write_path2(&dir);
    let ef = dir.path().join("f.csv");
    fs::write(&ef, "node_id,value\n1,1\n2,-1\n").unwrap();

    let o = plap(&["verify", "--graph", s(&graph), "--eigenfunction", s(&ef), "--lambda", "5", "--p", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("residual: 0e0"), "{text}");
    assert!(text.contains("linear_index: 2"));
    assert!(text.contains("morse_R: 1"));
    assert!(text.contains("morse_negR: 0"));
    assert!(text.contains("duality_edge_residual: 0e0"));

    let o = plap(&["verify", "--graph", s(&graph), "--eigenfunction", s(&ef), "--lambda", "4.9", "--p", "3"]);
    assert_eq!(code(&o), 1);

    fs::write(&ef, "node_id,value\n1,1\n").unwrap();
    let o = plap(&["verify", "--graph", s(&graph), "--eigenfunction", s(&ef), "--lambda", "5", "--p", "3"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn fdcheck_examples() {
    let dir = TempDir::new().unwrap();
    let graph = write_path2(&dir);
    let o = plap(&["fdcheck", "--graph", s(&graph), "--p", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    for line in stdout(&o).lines() {
        let err: f64 = line.split("max_rel_err=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
        assert!(err < 1e-5, "{line}");
    }

    let g4 = dir.path().join("g4.json");
    assert_eq!(code(&plap(&["gridgen", "--rows", "4", "--cols", "4", "--out", s(&g4)])), 0);
    let o = plap(&["fdcheck", "--graph", s(&g4), "--p", "3", "--k", "2", "--weights", "ones"]);
    let text = stdout(&o);
    assert!(text.contains("grad_inv_lambda: SKIPPED"), "{text}");
    assert_eq!(code(&o), 0, "{text}");

    assert_eq!(code(&plap(&["fdcheck", "--graph", s(&graph), "--p", "2"])), 64);
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(code(&plap(&["frobnicate"])), 64);
    assert_eq!(code(&plap(&["--help"])), 0);
}
