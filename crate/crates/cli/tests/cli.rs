// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn actsteer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actsteer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = actsteer(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

struct Demo {
    _dir: TempDir,
    root: PathBuf,
}

impl Demo {
    fn new(config: &str) -> Self {
        let dir = TempDir::new().unwrap();
        let root = dir.path().to_path_buf();
        ok(&["demo", "--config", config, "--out", s(&root)]);
        Demo { _dir: dir, root }
    }

    fn path(&self, name: &str) -> String {
        self.root.join(name).to_str().unwrap().to_string()
    }

    fn estimate(&self, out: &str, extra: &[&str]) -> String {
        let (model, src, tgt, out) = (
            self.path("model.json"),
            self.path("src.txt"),
            self.path("tgt.txt"),
            self.path(out),
        );
        let mut args = vec![
            "estimate", "--model", &model, "--src", &src, "--tgt", &tgt, "--out", &out,
        ];
        args.extend_from_slice(extra);
        ok(&args)
    }

    fn sweep(&self, maps: &str, lambdas: &str, out: &str) -> Vec<Vec<String>> {
        let (model, src, tgt, maps, out) = (
            self.path("model.json"),
            self.path("src.txt"),
            self.path("tgt.txt"),
            self.path(maps),
            self.path(out),
        );
        ok(&[
            "sweep",
            "--model",
            &model,
            "--maps",
            &maps,
            "--src",
            &src,
            "--tgt",
            &tgt,
            "--lambdas",
            lambdas,
            "--out",
            &out,
        ]);
        fs::read_to_string(&out)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    }

    fn maps_json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn demo_writes_all_files_deterministically() {
    let (a, b) = (Demo::new("tanh-3-layer"), Demo::new("tanh-3-layer"));
    for name in ["model.json", "src.txt", "tgt.txt", "config.json"] {
        assert_eq!(
            fs::read(a.path(name)).unwrap(),
            fs::read(b.path(name)).unwrap(),
            "{name}"
        );
    }
    let config: Value =
        serde_json::from_str(&fs::read_to_string(a.path("config.json")).unwrap()).unwrap();
    assert_eq!(config["seed"], 7);
    assert_eq!(config["n_samples"], 2000);
}

#[test]
fn repeated_estimation_is_byte_identical() {
    let demo = Demo::new("tanh-3-layer");
    let flags = ["--layers", "1,3,5", "--causal", "--seed", "11"];
    demo.estimate("first.json", &flags);
    demo.estimate("second.json", &flags);
    assert_eq!(
        fs::read(demo.path("first.json")).unwrap(),
        fs::read(demo.path("second.json")).unwrap()
    );
    assert_eq!(demo.maps_json("first.json")["metadata"]["seed"], 11);
}

#[test]
fn mean_method_has_unit_slopes() {
    let demo = Demo::new("identity-2-layer");
    demo.estimate("mean.json", &["--method", "mean", "--layers", "0,1"]);
    let maps = demo.maps_json("mean.json");
    for layer in maps["layers"].as_array().unwrap() {
        assert!(floats(&layer["omega"]).iter().all(|&w| w == 1.0));
    }
}

#[test]
fn identical_populations_estimate_identity() {
    let demo = Demo::new("tanh-3-layer");
    let (model, src, out) = (
        demo.path("model.json"),
        demo.path("src.txt"),
        demo.path("same.json"),
    );
    ok(&[
        "estimate", "--model", &model, "--src", &src, "--tgt", &src, "--layers", "1,3,5", "--out",
        &out,
    ]);
    for layer in demo.maps_json("same.json")["layers"].as_array().unwrap() {
        assert!(floats(&layer["omega"])
            .iter()
            .all(|w| (w - 1.0).abs() < 1e-6));
        assert!(floats(&layer["beta"]).iter().all(|b| b.abs() < 1e-6));
    }
}

#[test]
fn estimate_reports_footprint_and_costs() {
    let demo = Demo::new("tanh-3-layer");
    let stdout = demo.estimate("maps.json", &["--layers", "1,3,5"]);
    assert!(stdout.contains("lambda_semantics=interpolation"));
    assert!(stdout.contains("memory_footprint: 192 bytes, 384 with support"));
    assert_eq!(stdout.matches("fit cost").count(), 3);
}

#[test]
fn zero_strength_sweep_matches_the_unsteered_model() {
    let demo = Demo::new("tanh-3-layer");
    demo.estimate("maps.json", &["--layers", "1,3,5", "--causal"]);
    let rows = demo.sweep("maps.json", "0", "zero.csv");
    assert_eq!(
        rows.len(),
        3,
        "one row per mapped layer; 5 is also the output layer"
    );
    for row in rows {
        assert_eq!(row[4], row[5], "W1 before/after at λ=0");
        assert_eq!(row[6], row[7], "probe before/after at λ=0");
    }
}

#[test]
fn sweep_rows_are_sorted_and_final_w1_falls() {
    let demo = Demo::new("tanh-3-layer");
    demo.estimate("maps.json", &["--layers", "1,3,5", "--causal"]);
    let rows = demo.sweep("maps.json", "1,0,0.5", "sweep.csv");
    let final_rows: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[3] == "5")
        .map(|r| (r[2].parse().unwrap(), r[5].parse().unwrap()))
        .collect();
    let lambdas: Vec<f64> = final_rows.iter().map(|r| r.0).collect();
    assert_eq!(lambdas, vec![0.0, 0.5, 1.0]);
    assert!(
        final_rows.windows(2).all(|w| w[1].1 <= w[0].1),
        "{final_rows:?}"
    );
}

#[test]
fn exact_oracle_matches_target_at_its_layer() {
    let demo = Demo::new("wide-shallow");
    demo.estimate("exact.json", &["--method", "exact_oracle", "--layers", "1"]);
    let (model, src, tgt, maps) = (
        demo.path("model.json"),
        demo.path("src.txt"),
        demo.path("tgt.txt"),
        demo.path("exact.json"),
    );
    let stdout = ok(&[
        "eval", "--model", &model, "--maps", &maps, "--src", &src, "--tgt", &tgt, "--lambda", "1",
        "--layers", "1",
    ]);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["layers"][0]["w1_after"].as_f64(), Some(0.0));
    assert!(report["layers"][0]["w1_before"].as_f64().unwrap() > 0.0);
}

#[test]
fn baselines_are_labelled_as_bias_multipliers() {
    let demo = Demo::new("tanh-3-layer");
    let stdout = demo.estimate("caa.json", &["--method", "caa", "--layers", "1"]);
    assert!(stdout.contains("lambda_semantics=bias_multiplier"));
    assert_eq!(
        demo.maps_json("caa.json")["lambda_semantics"],
        "bias_multiplier"
    );
}

#[test]
fn collect_and_apply_write_activation_files() {
    let demo = Demo::new("identity-2-layer");
    let (model, src) = (demo.path("model.json"), demo.path("src.txt"));
    let acts = demo.path("acts");
    ok(&[
        "collect", "--model", &model, "--src", &src, "--layers", "0,1", "--out", &acts,
    ]);
    let header = fs::read_to_string(demo.root.join("acts/layer1.act")).unwrap();
    assert!(header.starts_with("act v1 n=1000 m=4 layer=1 pooling=mean"));

    demo.estimate("maps.json", &["--layers", "0"]);
    let (maps, out) = (demo.path("maps.json"), demo.path("out.act"));
    ok(&[
        "apply", "--model", &model, "--maps", &maps, "--src", &src, "--lambda", "0", "--out", &out,
    ]);
    let steered = fs::read_to_string(&out).unwrap();
    assert!(steered.starts_with("act v1 n=1000 m=4 layer=1"));
    // λ = 0 leaves the model untouched, so outputs equal the collected last layer.
    assert_eq!(steered.lines().nth(1), header.lines().nth(1));
}

#[test]
fn exit_codes_separate_usage_from_runtime_errors() {
    let demo = Demo::new("identity-2-layer");
    let (model, src, tgt, out) = (
        demo.path("model.json"),
        demo.path("src.txt"),
        demo.path("tgt.txt"),
        demo.path("x.json"),
    );
    let base = [
        "estimate", "--model", &model, "--src", &src, "--tgt", &tgt, "--out", &out,
    ];
    let run = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        actsteer(&args).status.code()
    };
    assert_eq!(run(&["--layers", "0"]), Some(0));
    assert_eq!(run(&["--layers", "0", "--method", "bogus"]), Some(2));
    assert_eq!(run(&["--layers", "0", "--support", "q:0.9,0.1"]), Some(2));
    assert_eq!(run(&["--layers", "0", "--lambda", "-1"]), Some(2));
    assert_eq!(run(&["--layers", "7"]), Some(2));
    assert_eq!(run(&[]), Some(2));
    assert_eq!(actsteer(&["frobnicate"]).status.code(), Some(2));

    let missing = demo.path("missing.txt");
    let status = actsteer(&[
        "estimate", "--model", &model, "--src", &missing, "--tgt", &tgt, "--layers", "0", "--out",
        &out,
    ])
    .status;
    assert_eq!(status.code(), Some(1));
}
