use std::path::Path;
use std::process::{Command, Output};

use gartfima::spectrum::spectral_density;
use gartfima::ModelSpec;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gartfima")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

#[test]
fn simulate_then_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let sim = run(&["simulate", "--d", "0.4", "--lambda", "0.2", "--u", "0.1", "--n", "1000", "--seed", "7", "--out", "x.csv"], p);
    assert_eq!(code(&sim), 0, "{}", String::from_utf8_lossy(&sim.stderr));
    let text = std::fs::read_to_string(p.join("x.csv")).unwrap();
    assert!(text.starts_with("x\n"));
    assert_eq!(text.lines().count(), 1001);

    let est = run(&["estimate", "--method", "nls", "--input", "x.csv", "--out", "est.json"], p);
    assert_eq!(code(&est), 0, "{}", String::from_utf8_lossy(&est.stderr));
    let v = read_json(&p.join("est.json"));
    for key in ["d", "lambda", "u", "sigma2", "objective", "converged"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(num(&v["d"]).abs() <= 0.5 && num(&v["lambda"]) >= 0.0 && num(&v["u"]).abs() < 1.0);

    let m = read_json(&p.join("est.json.manifest.json"));
    assert_eq!(m["subcommand"], "estimate");
    let digest = hex::encode(Sha256::digest(text.as_bytes()));
    assert_eq!(m["input"]["sha256"], digest.as_str());

    let fc = run(&["forecast", "-i", "x.csv", "--model", "est.json", "--out", "fc.json", "--residuals", "res.csv"], p);
    assert_eq!(code(&fc), 0, "{}", String::from_utf8_lossy(&fc.stderr));
    let res = std::fs::read_to_string(p.join("res.csv")).unwrap();
    assert!(res.starts_with("t,actual,predicted,residual\n750,"));
    assert_eq!(res.lines().count(), 251);
    assert_eq!(read_json(&p.join("fc.json"))["split_index"], 750);
}

#[test]
fn runs_are_reproducible_from_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = ["simulate", "--d", "0.3", "--lambda", "0.1", "--u", "0.5", "--ar", "0.4", "--n", "300", "--seed", "11", "--out", "a.csv"];
    assert_eq!(code(&run(&args, p)), 0);
    let m = read_json(&p.join("a.csv.manifest.json"));
    assert_eq!(m["seeds"][0], 11);
    let mut replay: Vec<String> = m["argv"].as_array().unwrap()[1..].iter().map(|s| s.as_str().unwrap().to_string()).collect();
    *replay.last_mut().unwrap() = "b.csv".into();
    let replay: Vec<&str> = replay.iter().map(String::as_str).collect();
    assert_eq!(code(&run(&replay, p)), 0);
    assert_eq!(std::fs::read(p.join("a.csv")).unwrap(), std::fs::read(p.join("b.csv")).unwrap());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["estimate"], dir.path());
    assert_eq!(code(&o), 1);
    let o = run(&["spectrum", "--bogus"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--points"));
    let o = Command::new(env!("CARGO_BIN_EXE_gartfima"))
        .args(["acvf", "--max-lag", "2"])
        .env("GARTFIMA_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn strict_mode_rejects_unit_u() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["acvf", "--d", "0.3", "--lambda", "0", "--u", "1.0", "--strict"], dir.path())), 2);
    let ok = run(&["acvf", "--d", "0.2", "--lambda", "0", "--u", "1.0", "--max-lag", "3"], dir.path());
    assert_eq!(code(&ok), 0);
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.starts_with("lag,gamma\n0,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn spectrum_values_survive_text_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["spectrum", "--d", "0.3", "--lambda", "0.4", "--u", "0.2", "--ma", "-0.3", "--points", "64"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,f"));
    let spec = ModelSpec::core(0.3, 0.4, 0.2, 1.0).with_ma(vec![-0.3]);
    let mut rows = 0;
    for line in lines {
        let (w, f) = line.split_once(',').unwrap();
        let w: f64 = w.parse().unwrap();
        assert_eq!(f.parse::<f64>().unwrap(), spectral_density(&spec, w).unwrap());
        rows += 1;
    }
    assert_eq!(rows, 64);
    // manifest goes to stderr when the output is stdout
    let m: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m["subcommand"], "spectrum");
}

#[test]
fn bad_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.csv"), "x\n1.0\nabc\n").unwrap();
    let o = run(&["estimate", "-i", "bad.csv"], p);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
    assert_eq!(code(&run(&["estimate", "-i", "missing.csv"], p)), 2);
    std::fs::write(p.join("short.csv"), "3.5\n").unwrap();
    assert_eq!(code(&run(&["estimate", "-i", "short.csv"], p)), 2);
}

#[test]
fn montecarlo_and_selection_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = run(
        &["montecarlo", "--d", "0.3", "--lambda", "0.2", "--u", "0.4", "--n", "256", "--reps", "3", "--method", "whittle", "--seed", "5", "--out", "mc.csv", "--summary", "mc.json"],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(p.join("mc.csv")).unwrap();
    assert!(csv.starts_with("replication,seed,converged,error,d,lambda,u\n"));
    assert_eq!(csv.lines().count(), 4);
    let s = read_json(&p.join("mc.json"));
    assert_eq!(s["parameters"][0]["name"], "d");
    assert!(s["parameters"][0]["stats"]["median"].is_number());

    assert_eq!(code(&run(&["simulate", "--d", "0.2", "--lambda", "0.3", "--u", "0.5", "--n", "600", "--seed", "2", "-o", "y.csv"], p)), 0);
    let o = run(&["select-orders", "-i", "y.csv", "--p-max", "1", "--q-max", "0", "-o", "sel.json"], p);
    assert_eq!(code(&o), 0);
    let sel = read_json(&p.join("sel.json"));
    assert_eq!(sel["candidates"].as_array().unwrap().len(), 2);

    let o = run(&["compare", "-i", "y.csv", "--candidates", "ARMA:0:0,GARTFIMA:0:0", "-o", "cmp.json"], p);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&p.join("cmp.json"))["rows"].as_array().unwrap().len(), 2);
}
