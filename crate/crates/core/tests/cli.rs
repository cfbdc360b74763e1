use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};
use tempfile::TempDir;

use v2vbench::cli::{exit, main_with_args};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("v2vbench").chain(args.iter().copied()))
}

fn digest(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn tree(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    digest(&p),
                );
            }
        }
    }
    out
}

fn gen(dir: &Path, seed: &str, scenarios: &str, frames: &str) {
    let out = dir.to_str().unwrap();
    let code = run(&[
        "gen",
        "--seed",
        seed,
        "--scenarios",
        scenarios,
        "--max-frames",
        frames,
        "--out",
        out,
    ]);
    assert_eq!(code, exit::OK);
}

fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            headers
                .iter()
                .zip(rec.unwrap().iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn gen_manifest_hash_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    gen(a.path(), "42", "5", "1");
    gen(b.path(), "42", "5", "1");
    assert_eq!(
        digest(&a.path().join("manifest.json")),
        digest(&b.path().join("manifest.json"))
    );
    assert_eq!(tree(a.path()), tree(b.path()));

    let c = TempDir::new().unwrap();
    gen(c.path(), "43", "5", "1");
    assert_ne!(
        digest(&a.path().join("manifest.json")),
        digest(&c.path().join("manifest.json"))
    );
}

#[test]
fn run_output_is_byte_identical_on_rerun() {
    let data = TempDir::new().unwrap();
    gen(data.path(), "42", "2", "1");
    let d = data.path().to_str().unwrap();
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for (out, workers) in [(&a, "1"), (&b, "2")] {
        let o = out.path().to_str().unwrap();
        assert_eq!(
            run(&["run", "--dataset", d, "--out", o, "--workers", workers]),
            exit::OK
        );
    }
    let ta = tree(a.path());
    assert!(ta.contains_key("results.csv") && ta.contains_key("summary.json"));
    assert!(ta
        .keys()
        .any(|k| k.starts_with("plots") && k.ends_with(".svg")));
    assert_eq!(ta, tree(b.path()));
}

#[test]
fn sampled_cav_mean_near_target() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "42", "200", "1");
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    let mean = summary["cav_count"]["mean"].as_f64().unwrap();
    assert!((mean - 2.89).abs() <= 0.15, "mean CAVs {mean}");
}

#[test]
fn empty_strategy_list_is_a_usage_error() {
    let data = TempDir::new().unwrap();
    gen(data.path(), "42", "1", "1");
    let out = TempDir::new().unwrap();
    let code = run(&[
        "run",
        "--dataset",
        data.path().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--strategies",
        "",
    ]);
    assert_eq!(code, exit::USAGE);
    assert_eq!(run(&["frobnicate"]), exit::USAGE);
}

#[test]
fn missing_dataset_is_a_data_error() {
    let out = TempDir::new().unwrap();
    let missing = out.path().join("none");
    let code = run(&[
        "run",
        "--dataset",
        missing.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, exit::DATA);
}

#[test]
fn compression_ladder_hits_nominal_rates() {
    let data = TempDir::new().unwrap();
    gen(data.path(), "42", "1", "1");
    let out = TempDir::new().unwrap();
    let code = run(&[
        "sweep",
        "compression",
        "--dataset",
        data.path().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--codec-ladder",
        "1,64,4096",
    ]);
    assert_eq!(code, exit::OK);
    let rows = csv_rows(&out.path().join("results.csv"));
    let mut rungs: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for r in &rows {
        rungs.insert(
            r["codec"].clone(),
            (
                r["nominal_rate"].parse().unwrap(),
                r["rate"].parse().unwrap(),
            ),
        );
    }
    assert_eq!(rungs.len(), 3);
    let mut nominal: Vec<f64> = rungs.values().map(|v| v.0).collect();
    nominal.sort_by(f64::total_cmp);
    assert_eq!(nominal, [1.0, 64.0, 4096.0]);
    for (codec, (n, rate)) in rungs {
        assert!(
            (rate - n).abs() <= 0.05 * n,
            "{codec}: rate {rate} vs nominal {n}"
        );
    }
    assert!(out.path().join("plots").read_dir().unwrap().count() >= 1);
}

#[test]
fn stats_mass_equals_ground_truth_count() {
    let data = TempDir::new().unwrap();
    gen(data.path(), "7", "1", "1");
    let out = TempDir::new().unwrap();
    let code = run(&[
        "stats",
        "--dataset",
        data.path().to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, exit::OK);
    let polar_mass: u64 = csv_rows(&out.path().join("polar_density.csv"))
        .iter()
        .map(|r| r["count"].parse::<u64>().unwrap())
        .sum();
    let boxes = csv_rows(&out.path().join("results.csv")).len() as u64;
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("summary.json")).unwrap()).unwrap();
    assert!(boxes > 0);
    assert_eq!(polar_mass, boxes);
    assert_eq!(summary["ground_truth"].as_u64(), Some(boxes));
}
