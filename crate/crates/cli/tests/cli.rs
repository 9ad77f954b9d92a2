use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use strainmap_core::kplane::CurvatureBound;
use strainmap_core::mspace::FiniteMetricSpace;
use strainmap_core::strainer::{rlong_radius, strain_quality, Strainer};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strainmap")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn sphere(dir: &Path, name: &str, n: usize, seed: u64) {
    ok(dir, &["sample", "sphere", "--radius", "1", "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", name]);
}

#[test]
fn sample_is_deterministic_and_reloads_exactly() {
    let t = TempDir::new().unwrap();
    sphere(t.path(), "a.txt", 500, 7);
    sphere(t.path(), "b.txt", 500, 7);
    let a = std::fs::read_to_string(t.path().join("a.txt")).unwrap();
    assert_eq!(a, std::fs::read_to_string(t.path().join("b.txt")).unwrap());
    let space = FiniteMetricSpace::load(t.path().join("a.txt")).unwrap();
    assert_eq!(space.len(), 500);
    assert_eq!(space.to_text(), a);
    // No temp files left behind.
    assert_eq!(std::fs::read_dir(t.path()).unwrap().count(), 2);
}

#[test]
fn usage_errors_exit_two() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    assert_eq!(code(&run(p, &["sample", "sphere", "--radius", "0", "--n", "10", "--seed", "1"])), 2);
    assert_eq!(code(&run(p, &["sample", "sphere", "--radius", "1", "--n", "10"])), 2);
    assert_eq!(code(&run(p, &["sample", "box", "--dims", "1,-1", "--n", "10", "--seed", "1"])), 2);
    assert_eq!(code(&run(p, &["frobnicate"])), 2);
    assert_eq!(code(&run(p, &["validate", "--space", "missing.txt"])), 2);
    sphere(p, "a.txt", 20, 1);
    assert_eq!(code(&run(p, &["strain", "--space", "a.txt", "--n", "2", "--delta", "0.2", "--R", "-1", "--seed", "1"])), 2);
    let mut none = vec!["glue", "--source", "a.txt", "--target", "a.txt", "--delta", "0.2", "--R", "0.4"];
    none.extend(["--n", "2"]);
    assert_eq!(code(&run(p, &none)), 2, "seed is never defaulted");
}

#[test]
fn config_file_values_and_flag_override() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    std::fs::write(p.join("run.cfg"), "# sampler\nmodel = torus\nl1_len = 2\nl2_len = 3\nN = 40\nseed = 5\n").unwrap();
    ok(p, &["--config", "run.cfg", "sample", "--out", "a.txt"]);
    ok(p, &["--config", "run.cfg", "sample", "--n", "60", "--out", "b.txt"]);
    assert_eq!(FiniteMetricSpace::load(p.join("a.txt")).unwrap().len(), 40);
    assert_eq!(FiniteMetricSpace::load(p.join("b.txt")).unwrap().len(), 60);
    std::fs::write(p.join("bad.cfg"), "delta = 0.2\n").unwrap();
    let out = run(p, &["--config", "bad.cfg", "sample", "sphere"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `delta`"));
}

#[test]
fn validate_reports_and_tolerance_flag() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    // d(0,2) exceeds d(0,1) + d(1,2) by 1e-6.
    let bad = "N 3\nk none\n0 1 2.000001\n1 0 1\n2.000001 1 0\n";
    std::fs::write(p.join("bad.txt"), bad).unwrap();
    let out = run(p, &["validate", "--space", "bad.txt", "--out", "r.json"]);
    assert_eq!(code(&out), 3);
    let r = read_json(p.join("r.json"));
    assert_eq!(r["validation"]["valid"], false);
    assert_eq!(r["validation"]["offending_triples"][0]["y"], 1);
    ok(p, &["validate", "--space", "bad.txt", "--tol", "1e-5"]);
    // Loading for other commands is refused, unless --tol allows it.
    assert_eq!(code(&run(p, &["strain", "--space", "bad.txt", "--k", "0", "--n", "1", "--delta", "0.2", "--R", "0.1", "--seed", "1"])), 3);

    sphere(p, "s.txt", 120, 3);
    ok(p, &["validate", "--space", "s.txt", "--k", "1", "--trials", "2000", "--seed", "1"]);
    assert_eq!(code(&run(p, &["validate", "--space", "s.txt", "--k", "4", "--trials", "2000", "--seed", "1"])), 3);
}

#[test]
fn strain_witnesses_reverify() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    sphere(p, "s.txt", 300, 11);
    ok(p, &["strain", "--space", "s.txt", "--n", "2", "--delta", "0.2", "--R", "0.4", "--seed", "2", "--out", "st.json"]);
    let space = FiniteMetricSpace::load(p.join("s.txt")).unwrap();
    let k = CurvatureBound::new(1.0).unwrap();
    let rep = read_json(p.join("st.json"));
    let pts = rep["points"].as_array().unwrap();
    assert!(!pts.is_empty());
    assert_eq!(rep["count"].as_u64().unwrap() as usize, pts.len());
    for pt in pts {
        let s: Strainer = serde_json::from_value(pt["witness"]["strainer"].clone()).unwrap();
        assert_eq!(s.base as u64, pt["point"].as_u64().unwrap());
        assert!(strain_quality(&space, k, &s).unwrap().delta_star < 0.2);
        assert!(rlong_radius(&space, &s, 0.2) > 0.4);
    }
    ok(p, &["strain", "--space", "s.txt", "--n", "2", "--delta", "0.2", "--R", "50", "--seed", "2", "--out", "none.json"]);
    assert_eq!(read_json(p.join("none.json"))["count"], 0);
}

#[test]
fn chart_with_given_pairs() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    sphere(p, "s.txt", 200, 4);
    ok(p, &["chart", "--space", "s.txt", "--base", "0", "--pairs", "1:2,3:4", "--radius", "0.5", "--seed", "1", "--out", "c.json"]);
    let c = read_json(p.join("c.json"));
    assert_eq!(c["chart"]["strainer"]["pairs"][1][0], 3);
    assert!(c["domain_size"].as_u64().unwrap() >= 1);
    assert_eq!(code(&run(p, &["chart", "--space", "s.txt", "--base", "0", "--pairs", "1:999", "--radius", "0.5", "--seed", "1"])), 2);
    assert_eq!(code(&run(p, &["chart", "--space", "s.txt", "--base", "0", "--pairs", "1-2", "--radius", "0.5", "--seed", "1"])), 2);
}

fn glue_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["glue", "--delta", "0.2", "--R", "0.4", "--n", "2", "--seed", "3"];
    v.extend_from_slice(extra);
    v
}

#[test]
fn identity_glue_gives_zero_defects_end_to_end() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    sphere(p, "s.txt", 400, 12);
    ok(p, &glue_args(&["--source", "s.txt", "--target", "s.txt", "--map", "auto", "--out", "g.json", "--csv", "g.csv"]));
    let g = read_json(p.join("g.json"));
    assert_eq!(g["result"]["in_regime"], true);
    assert_eq!(g["result"]["nu"].as_f64().unwrap(), 0.0);
    for pt in g["result"]["points"].as_array().unwrap() {
        assert_eq!(pt["point"], pt["hbar"]);
    }
    let csv = std::fs::read_to_string(p.join("g.csv")).unwrap();
    assert!(csv.starts_with("point,h,hbar,"));
    assert_eq!(csv.lines().count(), g["result"]["points"].as_array().unwrap().len() + 1);

    // An explicit identity map file gives the same result.
    let map: String = (0..400).map(|i| format!("{i} {i}\n")).collect();
    std::fs::write(p.join("id.map"), map).unwrap();
    ok(p, &glue_args(&["--source", "s.txt", "--target", "s.txt", "--map", "id.map", "--out", "g2.json"]));
    assert_eq!(read_json(p.join("g2.json"))["result"], g["result"]);

    ok(p, &["verify", "--result", "g.json", "--source", "s.txt", "--target", "s.txt", "--seed", "1", "--band", "0.05,1",
        "--out", "v.json", "--md", "v.md", "--csv", "v.csv"]);
    let v = read_json(p.join("v.json"));
    assert_eq!(v["distance"]["max_defect"].as_f64().unwrap(), 0.0);
    assert_eq!(v["claims"]["max_claim1"].as_f64().unwrap(), 0.0);
    assert_eq!(v["claims"]["max_claim2"].as_f64().unwrap(), 0.0);
    let md = std::fs::read_to_string(p.join("v.md")).unwrap();
    assert!(md.contains("| max distance defect | 0.0000000000000000e0 |"));
    let csv = std::fs::read_to_string(p.join("v.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.contains(",0.0000000000000000e0,0.0000000000000000e0,true,")));
}

#[test]
fn out_of_regime_needs_force_and_is_flagged() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    sphere(p, "a.txt", 300, 1);
    sphere(p, "b.txt", 300, 2);
    let out = run(p, &glue_args(&["--source", "a.txt", "--target", "b.txt", "--out", "g.json"]));
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta^2 R"));
    assert!(!p.join("g.json").exists());
    ok(p, &glue_args(&["--source", "a.txt", "--target", "b.txt", "--force", "--out", "g.json"]));
    let g = read_json(p.join("g.json"));
    assert_eq!(g["result"]["in_regime"], false);
    assert_eq!(g["result"]["config"]["force"], true);
    let strict = run(p, &["verify", "--result", "g.json", "--source", "a.txt", "--target", "b.txt", "--seed", "1", "--strict"]);
    assert_eq!(code(&strict), 3);
}

#[test]
fn malformed_map_files() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    sphere(p, "s.txt", 30, 1);
    for (name, body) in [("short.map", "0 0\n"), ("range.map", "0 99\n"), ("twice.map", "0 0\n0 1\n"), ("junk.map", "a b\n")] {
        std::fs::write(p.join(name), body).unwrap();
        let out = run(p, &glue_args(&["--source", "s.txt", "--target", "s.txt", "--map", name]));
        assert_eq!(code(&out), 2, "{name}");
    }
}

#[test]
fn pipeline_outputs_are_bit_identical() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    sphere(p, "a.txt", 300, 21);
    sphere(p, "b.txt", 300, 22);
    for tag in ["1", "2"] {
        let g = format!("g{tag}.json");
        ok(p, &glue_args(&["--source", "a.txt", "--target", "b.txt", "--force", "--out", &g]));
        ok(p, &["verify", "--result", &g, "--source", "a.txt", "--target", "b.txt", "--seed", "5",
            "--out", &format!("v{tag}.json"), "--md", &format!("v{tag}.md")]);
    }
    let same = |a: &str, b: &str| std::fs::read(p.join(a)).unwrap() == std::fs::read(p.join(b)).unwrap();
    assert!(same("g1.json", "g2.json"));
    assert!(same("v1.md", "v2.md"));
    // The reports differ only in the result path recorded in the header.
    let (mut v1, mut v2) = (read_json(p.join("v1.json")), read_json(p.join("v2.json")));
    v1["run"]["params"]["result"] = Value::Null;
    v2["run"]["params"]["result"] = Value::Null;
    assert_eq!(v1, v2);
}

#[test]
fn counterexample_default_and_controls() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    ok(p, &["counterexample", "--seed", "1", "--out", "ce.json", "--md", "ce.md"]);
    let ce = read_json(p.join("ce.json"));
    assert_eq!(ce["counterexample"]["verdict"], "RatioConclusionFails");
    assert!(ce["counterexample"]["com_distance"].as_f64().unwrap() > 0.0);
    assert_eq!(ce["lemma"]["hypotheses"]["weight_condition"], false);

    ok(p, &["counterexample", "--seed", "1", "--w1", "0.5,0.3,0.2", "--w2", "0.5,0.3,0.2", "--out", "same.json"]);
    assert_eq!(read_json(p.join("same.json"))["counterexample"]["verdict"], "NoCounterexample");

    ok(p, &["counterexample", "--seed", "1", "--w1", "0.5,0.25,0.25", "--w2", "0.501,0.249,0.25", "--out", "lemma.json"]);
    let l = read_json(p.join("lemma.json"));
    assert_eq!(l["lemma"]["hypotheses"]["weight_condition"], true);
    assert!(l["lemma"]["max_ratio_defect"].as_f64().unwrap() <= 0.1);
    assert!(l["lemma"]["max_angle_defect"].as_f64().unwrap() <= 0.1);

    ok(p, &["counterexample", "--layout", "random", "--seed", "2206", "--out", "rnd.json"]);
    assert_eq!(read_json(p.join("rnd.json"))["counterexample"]["verdict"], "RatioConclusionFails");
    assert_eq!(code(&run(p, &["counterexample", "--seed", "1", "--w1", "0.5,0.5"])), 2);
}
