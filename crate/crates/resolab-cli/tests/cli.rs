use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use resolab_cli::config::ExperimentConfig;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn resolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resolab")).args(args).output().expect("binary runs")
}

fn run_ok(sub: &str, config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = resolab(&args);
    assert!(o.status.success(), "{sub} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn box_well_matches_golden_resonances() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok("resonances", &configs().join("box_well.toml"), tmp.path(), &[]);
    let got = json(&tmp.path().join("resonances_summary.json"));
    let want = json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/box_well_resonances.json"));
    let run = &got["runs"][0];
    assert_eq!(run["h"], want["h"]);
    let (g, w) = (run["resonances"].as_array().unwrap(), want["resonances"].as_array().unwrap());
    assert_eq!(g.len(), w.len());
    for (a, b) in g.iter().zip(w) {
        for key in ["re", "im"] {
            let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
            assert!((x - y).abs() < 1e-8, "{key}: {x} vs {y}");
        }
        assert_eq!(a["multiplicity"], b["multiplicity"]);
    }
    assert_eq!(got["pass"], true);
}

#[test]
fn zero_potential_has_no_resonances() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok("resonances", &configs().join("zero.toml"), tmp.path(), &[]);
    let s = json(&tmp.path().join("resonances_summary.json"));
    for run in s["runs"].as_array().unwrap() {
        assert_eq!(run["count"], 0);
        assert!(run["resonances"].as_array().unwrap().is_empty());
    }
}

#[test]
fn malformed_config_exits_1_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.toml", "h_list = [1.0, 0.5\n[potential]\nkind = \"box\"\n");
    let o = resolab(&["resonances", "--config", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2, column 1"), "{err}");
    let unknown = write(tmp.path(), "unknown.toml", "[potential]\nkind = \"box\"\na = 1.0\ndepth = 1.0\n\n[region]\nrmax = 3.0\n");
    let o = resolab(&["det", "--config", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 7"));
    assert_eq!(resolab(&["det"]).status.code(), Some(1));
    assert_eq!(resolab(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_2_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    // -1 lies outside the default sheet
    let cfg = write(tmp.path(), "c.toml", "[potential]\nkind = \"box\"\na = 1.0\ndepth = 1.0\n\n[det]\npoints = [[-1.0, 0.0]]\n");
    let out = tmp.path().join("out");
    let o = resolab(&["det", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let d = json(&out.join("error.json"));
    assert_eq!(d["subcommand"], "det");
    assert!(d["error"].as_str().unwrap().contains("branch"));
}

#[test]
fn outputs_carry_version_and_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let path = configs().join("box_well.toml");
    run_ok("det", &path, tmp.path(), &[]);
    let hash = ExperimentConfig::load(&path).unwrap().sha256();
    let csv = fs::read_to_string(tmp.path().join("det.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), format!("# resolab {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines.next().unwrap(), format!("# config sha256 {hash}"));
    assert_eq!(lines.next().unwrap(), "h,p,re_z,im_z,re_ln_d,im_ln_d,re_d,im_d");
    // 17 significant digits
    let first = lines.next().unwrap().split(',').nth(4).unwrap().to_string();
    assert_eq!(first.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
    assert_eq!(json(&tmp.path().join("det_summary.json"))["config_sha256"], hash.as_str());
}

#[test]
fn h_override_replaces_the_list() {
    let tmp = tempfile::tempdir().unwrap();
    let path = configs().join("zero.toml");
    run_ok("resonances", &path, tmp.path(), &["--h", "0.8,0.4,0.2"]);
    let s = json(&tmp.path().join("resonances_summary.json"));
    let hs: Vec<f64> = s["runs"].as_array().unwrap().iter().map(|r| r["h"].as_f64().unwrap()).collect();
    assert_eq!(hs, vec![0.8, 0.4, 0.2]);
    assert_ne!(s["config_sha256"], ExperimentConfig::load(&path).unwrap().sha256().as_str());
    let o = resolab(&["resonances", "--config", path.to_str().unwrap(), "--h", "-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let path = configs().join("barrier.toml");
    let dirs: Vec<PathBuf> = ["t1", "t3", "t3b"].iter().map(|d| tmp.path().join(d)).collect();
    for (d, n) in dirs.iter().zip(["1", "3", "3"]) {
        for sub in ["det", "resonances", "ssf", "counterexample"] {
            run_ok(sub, &path, d, &["--threads", n]);
        }
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for name in names {
        let a = fs::read(dirs[0].join(&name)).unwrap();
        for d in &dirs[1..] {
            assert_eq!(a, fs::read(d.join(&name)).unwrap(), "{name:?} differs");
        }
    }
}

#[test]
fn barrier_summaries_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let path = configs().join("barrier.toml");
    run_ok("ssf", &path, tmp.path(), &[]);
    let s = json(&tmp.path().join("ssf_summary.json"));
    assert!(s["birman_krein_rel_dev"].as_f64().unwrap() < 1e-2);
    assert_eq!(s["pass"], true);
    run_ok("counterexample", &path, tmp.path(), &[]);
    assert_eq!(json(&tmp.path().join("counterexample_summary.json"))["pass"], true);
}

#[test]
fn zeta_check_on_the_box_well() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok("zeta-check", &configs().join("box_well.toml"), tmp.path(), &[]);
    let s = json(&tmp.path().join("zeta_summary.json"));
    assert!(s["fredholm_zeta_rel_dev"].as_f64().unwrap() < 1e-2, "{s}");
    assert_eq!(s["pass"], true);
}

#[test]
fn distort_check_on_the_box_well() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok("distort-check", &configs().join("well_distort.toml"), tmp.path(), &[]);
    let s = json(&tmp.path().join("distort_summary.json"));
    assert!(s["max_resonance_mismatch"].as_f64().unwrap() < 1e-3, "{s}");
    assert_eq!(s["pass"], true);
}

#[test]
fn shipped_configs_round_trip() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let a = ExperimentConfig::load(&path).unwrap();
        let b = ExperimentConfig::from_toml(&a.to_toml()).unwrap();
        assert_eq!(a, b, "{}", path.display());
    }
}
