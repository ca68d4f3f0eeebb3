mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use c2s_core::model::{C2sParameters, ModelConfig};
use c2s_core::sounding::window_count;
use c2s_lab::config;
use c2s_lab::format::{read_checkpoint, read_dataset};
use c2s_lab::manifest::{manifest_path, RunManifest};

fn c2s(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_c2s")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let o = c2s(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn sim_config(&self, n_positions: usize) -> PathBuf {
        let p = self.path("sim.toml");
        std::fs::write(&p, config::to_toml(&common::small_sim(n_positions))).unwrap();
        p
    }

    fn train_config(&self, steps: usize) -> PathBuf {
        let p = self.path("train.toml");
        let text = format!(
            "[model]\nn_layers = 1\nd_model = 8\nn_heads = 2\nffn_width = 16\n\n[train]\nsteps = {steps}\nbatch_size = 32\neval_every = 0\n"
        );
        std::fs::write(&p, text).unwrap();
        p
    }

    fn simulate(&self, n_positions: usize) -> PathBuf {
        let out = self.path("data.c2s");
        let cfg = self.sim_config(n_positions);
        ok(&["simulate", "--config", s(&cfg), "--out", s(&out), "--quiet"]);
        out
    }

    fn train(&self, data: &Path, kind: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(&format!("{kind}.ckpt"));
        let cfg = self.train_config(30);
        let mut args = vec!["train", "--dataset", s(data), "--model", kind, "--config", s(&cfg), "--out", s(&out), "-q"];
        args.extend_from_slice(extra);
        ok(&args);
        out
    }
}

fn manifest(p: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(manifest_path(p)).unwrap()).unwrap()
}

#[test]
fn simulate_writes_dataset_and_manifest() {
    let f = Fixture::new();
    let data = f.simulate(20);
    let ds = read_dataset(&data).unwrap();
    assert_eq!(ds.window_count(1), window_count([20; 4], 1));
    let m = manifest(&data);
    assert_eq!(m.subcommand, "simulate");
    assert_eq!(m.seed, Some(1));
    assert_eq!(m.outputs, vec![data.clone()]);
    assert_eq!(m.config["n_positions"], 20);

    let again = f.path("again.c2s");
    let cfg = f.sim_config(20);
    ok(&["simulate", "--config", s(&cfg), "--out", s(&again), "-q"]);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());

    let reseeded = f.path("reseeded.c2s");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&reseeded), "--seed", "9", "-q"]);
    assert_ne!(std::fs::read(&data).unwrap(), std::fs::read(&reseeded).unwrap());
    assert_eq!(read_dataset(&reseeded).unwrap().provenance.seed, 9);
}

#[test]
fn simulate_rejects_short_trajectories() {
    let f = Fixture::new();
    let cfg = f.sim_config(5);
    let o = c2s(&["simulate", "--config", s(&cfg), "--out", s(&f.path("x.c2s")), "--n-p", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trajectory shorter than N_p"));
    assert!(!f.path("x.c2s").exists());

    let bad = f.path("bad.toml");
    std::fs::write(&bad, "n_positions = \"many\"\n").unwrap();
    assert_eq!(c2s(&["simulate", "--config", s(&bad), "--out", s(&f.path("y.c2s"))]).status.code(), Some(2));
}

#[test]
fn help_embeds_defaults() {
    let o = ok(&["simulate", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("n_positions = 120"), "{text}");
    assert!(text.contains("[sounding]"));
    let o = ok(&["train", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("steps = 3000") && text.contains("[model]"));
    assert_eq!(c2s(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn train_usage_and_zero_lr() {
    let f = Fixture::new();
    let data = f.simulate(110);
    let cfg = f.train_config(5);
    let o = c2s(&["train", "--dataset", s(&data), "--model", "transformer", "--out", s(&f.path("m.ckpt"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown model kind"));

    let o = c2s(&["train", "--dataset", s(&f.path("none.c2s")), "--model", "ae", "--out", s(&f.path("m.ckpt"))]);
    assert_eq!(o.status.code(), Some(2));

    let out = f.path("zero.ckpt");
    ok(&[
        "train", "--dataset", s(&data), "--model", "c2s-ae", "--config", s(&cfg), "--lr", "0", "--seed", "3", "--out",
        s(&out), "-q",
    ]);
    let c = read_checkpoint(&out).unwrap();
    let init = C2sParameters::<f32>::init(ModelConfig {
        seed: 3,
        ..c.checkpoint.params.config
    })
    .unwrap();
    assert_eq!(c.checkpoint.params, init);
    let curve = std::fs::read_to_string(c2s_lab::cli::sibling(&out, "curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 6);
    assert!(curve.starts_with("step,loss,recon,latent\n"));
    assert_eq!(manifest(&out).seed, Some(3));
}

#[test]
fn train_eval_infer_bench_export() {
    let f = Fixture::new();
    let data = f.simulate(110);
    let ae = f.train(&data, "c2s-ae", &[]);
    let base = f.train(&data, "baseline", &[]);
    assert_eq!(
        read_checkpoint(&ae).unwrap().checkpoint.meta.fingerprint,
        read_checkpoint(&base).unwrap().checkpoint.meta.fingerprint
    );

    // same seed, same bits
    let again = f.path("again.ckpt");
    let cfg = f.train_config(30);
    ok(&["train", "--dataset", s(&data), "--model", "c2s-ae", "--config", s(&cfg), "--out", s(&again), "-q"]);
    assert_eq!(std::fs::read(&ae).unwrap(), std::fs::read(&again).unwrap());

    let report = f.path("report.csv");
    ok(&["eval", "--ae", s(&ae), "--baseline", s(&base), "--dataset", s(&data), "--out", s(&report), "-q"]);
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_p,mse_baseline,mse_ae,improvement_pct,latency_ms_mean,latency_ms_std");
    assert_eq!(lines.len(), 7);
    let n_ps: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(n_ps, ["1", "2", "4", "8", "16", "32"]);
    assert!(c2s_lab::cli::sibling(&report, "summary.txt").exists());

    let same = f.path("same.csv");
    ok(&["eval", "--ae", s(&ae), "--baseline", s(&ae), "--dataset", s(&data), "--n-p", "1,4", "--out", s(&same), "-q"]);
    for l in std::fs::read_to_string(&same).unwrap().lines().skip(1) {
        assert_eq!(l.split(',').nth(3), Some("0.0"), "{l}");
    }
    let o = c2s(&["eval", "--ae", s(&f.path("gone.ckpt")), "--baseline", s(&ae), "--dataset", s(&data), "--out", s(&same)]);
    assert_eq!(o.status.code(), Some(2));

    let csi = f.path("csi.csv");
    std::fs::write(&csi, "magnitude,phase\n0.01,0.5\n0.012,-1.0\n0.009,3.0\n0.02,0.0\n").unwrap();
    let dps = f.path("dps.csv");
    ok(&["infer", "--ckpt", s(&base), "--csi", s(&csi), "--out", s(&dps), "-q"]);
    let pred = c2s_lab::report::read_dps(&dps).unwrap();
    assert_eq!(pred.len(), 4);
    assert!(pred.iter().all(|d| d.n_bins() == 31 && d.power.iter().all(|&p| p >= 0.0)));
    let paths = std::fs::read_to_string(c2s_lab::cli::sibling(&dps, "paths.csv")).unwrap();
    assert!(paths.starts_with("row,delay_s,range_m,power\n"));
    assert!(paths.lines().count() > 1);

    let lat = f.path("lat.csv");
    ok(&["bench", "--ckpt", s(&ae), "--repeats", "3", "--out", s(&lat), "-q"]);
    let text = std::fs::read_to_string(&lat).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("n_p,repeats,latency_ms_mean,latency_ms_std\n"));
    assert_eq!(manifest(&lat).subcommand, "bench");
    let o = c2s(&["bench", "--ckpt", s(&ae), "--repeats", "0", "--out", s(&lat)]);
    assert_eq!(o.status.code(), Some(2));

    let exported = f.path("exp.csv");
    ok(&["export", s(&dps), "--out", s(&exported)]);
    assert_eq!(std::fs::read_to_string(&exported).unwrap().lines().count(), 1 + 4 * 31);
    let o = ok(&["export", s(&report), "--db"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("n_p,mse_baseline_db,mse_ae_db,improvement_pct\n"));
    assert_eq!(text.lines().count(), 7);

    let empty = f.path("empty.csv");
    std::fs::write(&empty, "row,delay_step_s\n").unwrap();
    let o = ok(&["export", s(&empty)]);
    assert_eq!(String::from_utf8_lossy(&o.stdout), "row,bin,delay_s,power\n");
}
