use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cvmaxcut"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const STAR4: &str = r#"{"n": 4, "edges": [[0, 1, 1], [0, 2, 1], [0, 3, 1]]}"#;

#[test]
fn oracle_examples() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "star.json", STAR4);
    let out = run(dir.path(), &["oracle", "--graph", "star.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("o/oracle.json"));
    assert_eq!(v["mc"], 3.0);
    assert_eq!(v["maximizers"], serde_json::json!([[0, 1, 1, 1]]));
    assert_eq!(serde_json::from_slice::<Value>(&out.stdout).unwrap(), v);

    write(dir.path(), "pair.json", r#"{"n": 2, "edges": [[0, 1, 2.5]]}"#);
    let out = run(dir.path(), &["oracle", "--graph", "pair.json", "--out", "p"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("p/oracle.json"))["mc"], 2.5);
}

/// Enumerates all 2^n labelings with explicit bit loops, independent of the
/// library's mask convention.
fn enumerate(n: usize, edges: &[(usize, usize, f64)]) -> (f64, Vec<Vec<u8>>) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = Vec::new();
    for code in 0u32..(1 << n) {
        let side: Vec<u8> = (0..n).map(|k| ((code >> k) & 1) as u8).collect();
        if side[0] != 0 {
            continue;
        }
        let w: f64 = edges.iter().filter(|(i, j, _)| side[*i] != side[*j]).map(|e| e.2).sum();
        if w > best + 1e-12 {
            best = w;
            arg = vec![side];
        } else if (w - best).abs() <= 1e-12 {
            arg.push(side);
        }
    }
    arg.sort();
    (best, arg)
}

#[test]
fn oracle_matches_independent_enumerator_on_random_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut edges = Vec::new();
    for i in 0..6 {
        for j in (i + 1)..6 {
            if rng.random_bool(0.6) {
                edges.push((i, j, (rng.random_range(0.1..2.0f64) * 100.0).round() / 100.0));
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let text = serde_json::json!({"n": 6, "edges": edges.iter().map(|&(i, j, w)| serde_json::json!([i, j, w])).collect::<Vec<_>>()});
    write(dir.path(), "g.json", &text.to_string());
    assert_eq!(run(dir.path(), &["oracle", "--graph", "g.json"]).status.code(), Some(0));
    let v = json(&dir.path().join("out/oracle.json"));
    let (mc, maximizers) = enumerate(6, &edges);
    assert!((v["mc"].as_f64().unwrap() - mc).abs() < 1e-12);
    let mut got: Vec<Vec<u8>> = serde_json::from_value(v["maximizers"].clone()).unwrap();
    got.sort();
    assert_eq!(got, maximizers);
}

#[test]
fn invalid_graph_is_a_config_error_naming_the_edge() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", r#"{"n": 3, "edges": [[0, 1, 1], [2, 2, 1]]}"#);
    let out = run(dir.path(), &["solve", "--graph", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("edge 1") && err.contains("self-loop"), "{err}");
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "star.json", STAR4);
    write(dir.path(), "typo.json", r#"{"graph": "star.json", "learnig_rate": 0.1}"#);
    let out = run(dir.path(), &["solve", "--config", "typo.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learnig_rate"));
    let out = run(dir.path(), &["solve", "--graph", "star.json", "--n-layers", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_layers"));
    assert_eq!(run(dir.path(), &["solve", "--graph", "missing.json"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["solve"]).status.code(), Some(2));
}

#[test]
fn size_guards_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let big = serde_json::json!({"n": 25, "edges": (1..25).map(|j| serde_json::json!([0, j, 1])).collect::<Vec<_>>()});
    write(dir.path(), "big.json", &big.to_string());
    assert_eq!(run(dir.path(), &["oracle", "--graph", "big.json"]).status.code(), Some(4));
    write(dir.path(), "seven.json", r#"{"n": 7, "edges": [[0, 1, 1]]}"#);
    assert_eq!(run(dir.path(), &["solve", "--graph", "seven.json", "--cutoff", "30"]).status.code(), Some(4));
}

#[test]
fn divergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "star.json", STAR4);
    let out = run(dir.path(), &["solve", "--graph", "star.json", "--learning-rate", "1e6", "--steps", "4", "--cutoff", "4"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

fn without_metadata(path: &Path) -> Value {
    let mut v = json(path);
    v.as_object_mut().unwrap().remove("metadata");
    v
}

#[test]
fn zero_steps_gives_single_row_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "star.json", STAR4);
    let out = run(dir.path(), &["solve", "--graph", "star.json", "--steps", "0", "--out", "z"]);
    assert_eq!(out.status.code(), Some(0));
    let z = dir.path().join("z");
    assert_eq!(files(&z), ["distribution.json", "loss.csv", "manifest.json", "params.csv", "summary.json"]);
    let loss = std::fs::read_to_string(z.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 2);
    assert!(loss.starts_with("step,loss,regularized_loss\n0,"));
    let params = std::fs::read_to_string(z.join("params.csv")).unwrap();
    // 4 modes x 4 Gaussian roles, all at step 0
    assert_eq!(params.lines().count(), 17);
    assert!(params.lines().skip(1).all(|l| l.starts_with("0,l0.")));
    let summary = json(&z.join("summary.json"));
    for key in ["best_assignment", "best_probability", "mc", "achieved_ratio", "metadata"] {
        assert!(summary.get(key).is_some(), "summary lacks {key}");
    }
    let dist = json(&z.join("distribution.json"));
    assert!(dist["leakage"].as_f64().is_some());
    assert!(dist["outcomes"].as_array().unwrap().iter().all(|o| o["outcome"].as_array().unwrap().len() == 4));
}

#[test]
fn reruns_are_byte_identical_and_manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "star.json", STAR4);
    let args = ["solve", "--graph", "star.json", "--steps", "3", "--seed", "11", "--ng-kind", "kerr", "--cutoff", "6"];
    for out in ["a", "b"] {
        let mut a = args.to_vec();
        a.extend(["--out", out]);
        assert_eq!(run(dir.path(), &a).status.code(), Some(0));
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for f in ["loss.csv", "params.csv", "distribution.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(without_metadata(&a.join("summary.json")), without_metadata(&b.join("summary.json")));

    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["config"]["fd_step"], 1e-4);
    let mut config = manifest["config"].clone();
    config["out_dir"] = "c".into();
    write(dir.path(), "replay.json", &config.to_string());
    assert_eq!(run(dir.path(), &["solve", "--config", "replay.json"]).status.code(), Some(0));
    let c = dir.path().join("c");
    for f in ["loss.csv", "params.csv", "distribution.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(c.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "star.json", STAR4);
    write(dir.path(), "cfg.json", r#"{"graph": "star.json", "steps": 1, "seed": 1, "cutoff": 4, "out_dir": "from_file"}"#);
    assert_eq!(run(dir.path(), &["solve", "--config", "cfg.json", "--seed", "2", "--out", "flag"]).status.code(), Some(0));
    assert!(!dir.path().join("from_file").exists());
    let m = json(&dir.path().join("flag/manifest.json"));
    assert_eq!(m["config"]["seed"], 2);
    assert_eq!(m["config"]["steps"], 1);
}

#[test]
fn embed_check_reports() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "star.json", STAR4);
    assert_eq!(run(dir.path(), &["embed-check", "--graph", "star.json", "--cutoff", "9"]).status.code(), Some(0));
    let r = json(&dir.path().join("out/embed_check.json"));
    assert!(r["takagi_error"].as_f64().unwrap() <= 1e-10);
    assert!(r["mesh_unitarity_error"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["squeezings"].as_array().unwrap().len(), 4);
    // the raw star adjacency has spectral radius sqrt(3), so sigma_A is not a state
    assert_eq!(r["sigma_a"]["physical"], false);
    assert!(r["search_scaling"]["found"]["d"].as_f64().is_some());
    assert_eq!(r["sigma_a_rescaled"]["physical"], true);
    for k in ["mean", "covariance", "fock_norm"] {
        assert!(r["moment_discrepancy"][k].as_f64().is_some());
    }

    assert_eq!(
        run(dir.path(), &["embed-check", "--graph", "star.json", "--cutoff", "17", "--margin", "0.5", "--out", "wide"])
            .status
            .code(),
        Some(0)
    );
    let wide = json(&dir.path().join("wide/embed_check.json"));
    assert!(wide["moment_discrepancy"]["covariance"].as_f64().unwrap() <= 1e-4);

    write(dir.path(), "empty.json", r#"{"n": 3, "edges": []}"#);
    let out = run(dir.path(), &["embed-check", "--graph", "empty.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn ml_schema_and_singleton_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "star.json", STAR4);
    let base = ["--steps", "2", "--cutoff", "5", "--seed", "3"];
    for (layers, out) in [("1", "one"), ("2", "two")] {
        let mut a = vec!["ml", "--n-layers", layers, "--out", out];
        a.extend(base);
        assert_eq!(run(dir.path(), &a).status.code(), Some(0));
    }
    let one = json(&dir.path().join("one/report.json"));
    let two = json(&dir.path().join("two/report.json"));
    let keys = |v: &Value| v.as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    assert_eq!(keys(&one), keys(&two));
    assert_eq!(keys(&one["graphs"][0]), keys(&two["graphs"][0]));
    assert_eq!(one["graphs"].as_array().unwrap().len(), 4);
    assert_eq!(json(&dir.path().join("one/manifest.json"))["config"]["star_size"], 4);

    let mut m = vec!["ml", "--graph", "star.json", "--out", "ml1"];
    m.extend(base);
    let mut s = vec!["solve", "--graph", "star.json", "--out", "s1"];
    s.extend(base);
    assert_eq!(run(dir.path(), &m).status.code(), Some(0));
    assert_eq!(run(dir.path(), &s).status.code(), Some(0));
    for f in ["loss.csv", "params.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("ml1").join(f)).unwrap(),
            std::fs::read(dir.path().join("s1").join(f)).unwrap()
        );
    }
}
