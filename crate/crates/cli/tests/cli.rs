use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use compgeo_cli::config::RunConfig;

fn compgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compgeo")).args(args).output().expect("spawn compgeo")
}

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn bound_horocylinder_prints_one_half() {
    let scenario = examples().join("scenarios/horocylinder.json");
    let out = compgeo(&["bound", "--scenario", scenario.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("0.5"));
    let out = compgeo(&["bound", "--scenario", scenario.to_str().unwrap(), "--json"]);
    let v = stdout_json(&out);
    assert_eq!(v["bound"], 0.5);
    assert_eq!(v["exact"], "1/2");
}

#[test]
fn cmc_prints_ln3_and_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("profile.csv");
    let svg = dir.path().join("profile.svg");
    let out = compgeo(&[
        "cmc",
        "--n",
        "2",
        "--H",
        "1",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r0 = stdout_json(&out)["critical_radius"].as_f64().unwrap();
    assert!((r0 - 3f64.ln()).abs() <= 1e-8, "{r0}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("r,u,du,flux\n"));
    let svg = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(doc.root_element().attribute("viewBox"), Some("0 0 800 500"));
}

#[test]
fn survival_svg_is_a_monotone_polyline() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("survival.svg");
    let out = compgeo(&["bm", "--model", "exp_quartic", "--paths", "500", "--svg", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let line = doc.descendants().find(|n| n.has_tag_name("polyline")).expect("polyline");
    // screen y grows downward, so a nonincreasing survival curve has
    // nondecreasing y
    let ys: Vec<f64> = line
        .attribute("points")
        .unwrap()
        .split_whitespace()
        .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(ys.len() > 2);
    assert!(ys.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn shipped_configs_round_trip_and_run() {
    let dir = examples().join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        let back = RunConfig::from_json(&cfg.to_json(), &path).unwrap();
        assert_eq!(back, cfg, "{}", path.display());
        let out = compgeo(&["--config", path.to_str().unwrap(), "--dump-config"]);
        assert_eq!(out.status.code(), Some(0));
        let dumped = RunConfig::from_json(std::str::from_utf8(&out.stdout).unwrap(), &path).unwrap();
        assert_eq!(dumped, cfg);
        seen += 1;
    }
    assert!(seen >= 8);
    for name in ["criterion_exp_quartic.json", "jacobi_sinh.json", "riccati_random.json"] {
        let out = compgeo(&["--config", dir.join(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"command":{"subcommand":"cmc","n":2,"h":1.0,"rmax":5.0}}"#).unwrap();
    let out = compgeo(&["--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spacing"));
    assert_eq!(compgeo(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(compgeo(&["verify", "--chart", "klein"]).status.code(), Some(2));
    let out = compgeo(&["verify", "--chart", "warped-exp", "--level", "0", "--scale", "0.5", "--grid", "64"]);
    assert_eq!(out.status.code(), Some(1), "negative control is a FAIL verdict");
    let out = compgeo(&["riccati", "--k", "-0.5", "--direction", "lower"]);
    assert_eq!(out.status.code(), Some(1), "unmet hypotheses are not a PASS");
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_compgeo"))
            .args(["riccati", "--dim", "3", "--dump-config"])
            .env("COMPGEO_SEED", seed)
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
}
