use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kinschauder"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(cfg).arg("--out").arg(out).args(extra).env("KINSCHAUDER_CACHE", out.join("cache")).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn group_axioms_pass_quickly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"experiment": {"kind": "group_axioms", "d": 2, "s": 0.5, "samples": 50}, "seed": 3}"#);
    let t = Instant::now();
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&tmp.path().join("out/report.json"));
    assert_eq!(rep["verdict"], "pass");
    assert_eq!(rep["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(rep["config_hash"].as_str().unwrap().len(), 64);
    assert!(rep["cache"]["hits"].is_u64());
    assert!(rep["git_rev"].is_string());
    for f in ["samples.csv", "measured.csv", "summary.txt"] {
        assert!(tmp.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn indicator_scaling_writes_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"experiment": {"kind": "indicator_scaling", "s": 1.0, "d": 1}}"#);
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("out/scaling.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|c| c.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    let slope = (rows[4].1 / rows[0].1).ln() / (rows[4].0 / rows[0].0).ln();
    assert!((slope - 2.0).abs() < 0.1, "{slope}");
    let rep = json(&tmp.path().join("out/report.json"));
    let fitted = rep["reports"][0]["measured"]["slope"].as_f64().unwrap();
    assert!((fitted - 2.0).abs() < 0.1);
}

#[test]
fn invalid_s_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"experiment": {"kind": "indicator_scaling", "s": 1.5, "radii": [1.0]}}"#);
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("s out of (0,1]"), "{err}");
    let rec = json(&tmp.path().join("out/error.json"));
    assert_eq!(rec["status"], "config_invalid");
    assert_eq!(rec["errors"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, body) in ["{", r#"{"experiment": {"kind": "nope"}}"#, r#"{"experiment": {"kind": "group_axioms", "extra": 1}}"#]
        .iter()
        .enumerate()
    {
        let cfg = write(tmp.path(), &format!("c{i}.json"), body);
        assert_eq!(run(&cfg, &tmp.path().join("out"), &[]).status.code(), Some(2), "{body}");
    }
    let missing = run(&tmp.path().join("absent.json"), &tmp.path().join("out"), &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn failed_check_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"experiment": {"kind": "hypoellipticity", "b": [[0, 0], [0, 0]]}}"#);
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let summary = fs::read_to_string(tmp.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("verdict: Fail"));
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"experiment": {"kind": "absorption", "eps": 0.5, "tau": 0.6}}"#);
    let blocker = write(tmp.path(), "file", "");
    let o = run(&cfg, &blocker.join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    let rec: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["status"], "runtime_failure");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"experiment": {"kind": "kernel", "kernel": {"name": "perturbed_holder", "eps": 0.2}, "s": 0.4, "checks": ["upperbound", "holder"]}, "seed": 11}"#,
    );
    for out in ["a", "b"] {
        assert_eq!(run(&cfg, &tmp.path().join(out), &["--no-cache", "--threads", "1"]).status.code(), Some(0));
    }
    for f in ["report.json", "measured.csv", "summary.txt"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
    let rep = json(&tmp.path().join("a/report.json"));
    assert_eq!(rep["cache"]["enabled"], false);
}

#[test]
fn corpus_is_seeded_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write(tmp.path(), "s.json", r#"{"seed": 5, "eps": [0.1, 0.2], "shape": [7, 9, 9]}"#);
    for out in ["a", "b"] {
        let o = bin().arg("corpus").arg(&spec).arg("--out").arg(tmp.path().join(out)).output().unwrap();
        assert_eq!(o.status.code(), Some(0));
    }
    for bundle in ["bundle_00", "bundle_01"] {
        for f in ["f.kgf", "a.kgf", "b.kgf", "c.kgf", "h.kgf", "manifest.json"] {
            let a = fs::read(tmp.path().join("a").join(bundle).join(f)).unwrap();
            assert_eq!(a, fs::read(tmp.path().join("b").join(bundle).join(f)).unwrap(), "{bundle}/{f}");
            if f.ends_with(".kgf") {
                assert_eq!(&a[..4], b"KGF1");
            }
        }
    }
    let top = json(&tmp.path().join("a/manifest.json"));
    let h: Vec<f64> = top["bundles"].as_array().unwrap().iter().map(|b| b["a_holder"].as_f64().unwrap()).collect();
    assert!(h[0] > 0.0 && h[0] < h[1], "{h:?}");

    let other = write(tmp.path(), "t.json", r#"{"seed": 6, "eps": [0.1], "shape": [7, 9, 9]}"#);
    bin().arg("corpus").arg(&other).arg("--out").arg(tmp.path().join("c")).output().unwrap();
    assert_ne!(fs::read(tmp.path().join("a/bundle_00/f.kgf")).unwrap(), fs::read(tmp.path().join("c/bundle_00/f.kgf")).unwrap());
}

#[test]
fn constant_coefficient_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write(tmp.path(), "s.json", r#"{"seed": 1, "a": 2.0, "eps": [0.0]}"#);
    let o = bin().arg("corpus").arg(&spec).arg("--out").arg(tmp.path().join("c")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m = json(&tmp.path().join("c/bundle_00/manifest.json"));
    assert_eq!(m["a_constant"], true);
    assert_eq!(m["a_min"].as_f64(), Some(2.0));
    assert_eq!(m["a_max"].as_f64(), Some(2.0));
    assert!(m["a_holder"]["seminorm"].as_f64().unwrap() < 1e-12);
}

#[test]
fn corpus_rejects_degenerate_diffusion() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write(tmp.path(), "s.json", r#"{"a": 0.1, "eps": [0.2]}"#);
    let o = bin().arg("corpus").arg(&spec).arg("--out").arg(tmp.path().join("c")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
