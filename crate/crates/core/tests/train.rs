use c2s_core::channel::*;
use c2s_core::model::*;
use c2s_core::ndiff::AdamConfig;
use c2s_core::sounding::*;
use c2s_core::train::*;
use c2s_core::{Error, SPEED_OF_LIGHT};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 5e-9;

fn norm() -> NormStats {
    NormStats {
        floor_db: -120.0,
        dps_mean_db: 0.0,
        dps_std_db: 1.0,
        csi_mag_mean: 0.0,
        csi_mag_std: 1.0,
        version: NORM_STATS_VERSION,
    }
}

/// Hand-built dataset: `n_seq` sequences of `len` rows with row-dependent
/// values.
fn synthetic(n_seq: usize, len: usize, n_bins: usize, n_p: usize) -> Dataset {
    let seqs = (0..n_seq)
        .map(|s| {
            let dps = (0..len * n_bins).map(|i| 1e-3 * (1 + (i * 7 + s * 3) % 13) as f32).collect();
            let csi = (0..len).flat_map(|r| [0.1 + 0.01 * (r + s) as f32, 0.3 * s as f32 - 0.5]).collect();
            Sequence::new(s as u32, s % 2 == 0, 0, n_bins, dps, csi).unwrap()
        })
        .collect();
    Dataset::new(n_bins, n_p, DT, seqs, norm(), Provenance::default()).unwrap()
}

#[test]
fn spatial_split_holds_out_the_last_positions() {
    let ds = synthetic(4, 10, 3, 1);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let w = split.windows_for(1);
    let starts: std::collections::BTreeSet<u32> = w.test.iter().map(|w| w.start).collect();
    // positions 8..=10 counted from one
    assert_eq!(starts.into_iter().collect::<Vec<_>>(), vec![7, 8, 9]);
    assert_eq!(w.test.len(), 12);
    assert_eq!(w.train.len() + w.val.len(), 28);
    let val_seqs: std::collections::BTreeSet<u32> = w.val.iter().map(|w| w.seq).collect();
    assert_eq!(val_seqs.len(), 1);
    assert!(w.train.iter().all(|t| !val_seqs.contains(&t.seq)));
}

#[test]
fn spatial_split_keeps_train_and_test_positions_disjoint() {
    let ds = synthetic(5, 40, 3, 4);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    for n_p in [1, 4, 8] {
        let w = split.windows_for(n_p);
        for s in 0..5u32 {
            let rows = |ws: &[WindowRef]| -> std::collections::BTreeSet<u32> {
                ws.iter().filter(|w| w.seq == s).flat_map(|w| w.start..w.start + n_p as u32).collect()
            };
            let (tr, va, te) = (rows(&w.train), rows(&w.val), rows(&w.test));
            assert!(tr.is_disjoint(&te) && va.is_disjoint(&te));
            assert!(te.iter().all(|&r| r >= 28));
        }
    }
}

#[test]
fn split_fits_stats_on_training_rows_only() {
    let ds = synthetic(6, 20, 4, 1);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let train: Vec<WindowRef> = split.windows_for(1).train;
    let want = NormStats::fit(
        train.iter().map(|w| ds.window(*w, 1).dps),
        train.iter().map(|w| ds.window(*w, 1).csi),
        -120.0,
    )
    .unwrap();
    assert!((split.norm.dps_mean_db - want.dps_mean_db).abs() < 1e-9);
    assert!((split.norm.dps_std_db - want.dps_std_db).abs() < 1e-9);
    assert!((split.norm.csi_mag_mean - want.csi_mag_mean).abs() < 1e-12);
    assert!((split.norm.csi_mag_std - want.csi_mag_std).abs() < 1e-12);
}

#[test]
fn random_split_is_reproducible_and_disjoint() {
    let ds = synthetic(3, 30, 2, 2);
    let cfg = SplitConfig {
        policy: SplitPolicy::Random,
        seed: 11,
        ..Default::default()
    };
    let a = split_dataset(&ds, &cfg).unwrap().windows_for(2);
    let b = split_dataset(&ds, &cfg).unwrap().windows_for(2);
    assert_eq!(a, b);
    let c = split_dataset(&ds, &SplitConfig { seed: 12, ..cfg }).unwrap().windows_for(2);
    assert_ne!(a.test, c.test);
    let mut all: Vec<WindowRef> = a.train.iter().chain(&a.val).chain(&a.test).copied().collect();
    let n = all.len();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), n);
    assert_eq!(n, ds.window_count(2));
    assert_eq!(a.test.len(), (n as f64 * 0.3).round() as usize);
}

#[test]
fn too_few_positions_for_the_policy() {
    let ds = synthetic(3, 4, 2, 2);
    assert!(matches!(
        split_dataset(&ds, &SplitConfig::default()),
        Err(Error::TooFewPositions(_))
    ));
    let one = synthetic(1, 30, 2, 1);
    assert!(matches!(
        split_dataset(&one, &SplitConfig::default()),
        Err(Error::TooFewPositions(_))
    ));
}

fn toy_cfg() -> SoundingConfig {
    // 15 m range bins over 31 bins
    SoundingConfig {
        sampling_rate_hz: 20e6,
        bandwidth_hz: 16e6,
        pn_degree: 5,
        n_bins: 31,
        periods: 8,
        ..Default::default()
    }
}

fn toy_dataset(seed: u64, n_positions: usize, n_pairs: usize, scenarios: &[Scenario]) -> Dataset {
    toy_dataset_with(seed, n_positions, n_pairs, scenarios, -6.0, TrajectoryConfig::default())
}

fn toy_dataset_with(
    seed: u64,
    n_positions: usize,
    n_pairs: usize,
    scenarios: &[Scenario],
    scatter_db: f64,
    traj: TrajectoryConfig,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats = ChannelStats {
        min_paths: 2,
        max_paths: 2,
        excess_delay_mean_s: 200e-9,
        power_decay_s: 400e-9,
        scatter_power_db: scatter_db,
        ..Default::default()
    };
    let trajs: Vec<Trajectory> = scenarios
        .iter()
        .map(|&s| make_trajectory(s, n_positions, &traj, &stats, &toy_cfg(), &mut rng).unwrap())
        .collect();
    let spec = DatasetSpec {
        n_pairs,
        n_p: 1,
        snr_db: 30.0,
        ..Default::default()
    };
    build_dataset(&trajs, &toy_cfg(), &spec, Provenance { seed, generator: "toy".into() }, &mut rng).unwrap()
}

fn small_model() -> ModelConfig {
    ModelConfig {
        n_layers: 1,
        d_model: 16,
        n_heads: 2,
        ffn_width: 32,
        n_bins: 31,
        ..Default::default()
    }
}

fn quick(steps: usize) -> TrainConfig {
    TrainConfig {
        steps,
        batch_size: 16,
        train_n_p: vec![1, 2, 4],
        eval_every: 50,
        val_n_p: vec![1, 4],
        ..Default::default()
    }
}

#[test]
fn zero_learning_rate_keeps_initial_parameters() {
    let ds = toy_dataset(1, 20, 2, &[Scenario::Los, Scenario::Nlos]);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let cfg = TrainConfig {
        adam: AdamConfig { lr: 0.0, ..Default::default() },
        ..quick(20)
    };
    for kind in [ModelKind::C2sAe, ModelKind::Baseline] {
        let out = train(kind, &ds, &split, &small_model(), &cfg, 3).unwrap();
        let init = C2sParameters::<f32>::init(ModelConfig { seed: 3, ..small_model() }).unwrap();
        assert_eq!(out.checkpoint.params, init);
        assert_eq!(out.checkpoint.meta.steps, 20);
        assert_eq!(out.curve.len(), 20);
    }
}

#[test]
fn training_is_deterministic_and_budgets_match() {
    let ds = toy_dataset(2, 20, 2, &[Scenario::Los, Scenario::Nlos]);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let a = train(ModelKind::C2sAe, &ds, &split, &small_model(), &quick(40), 5).unwrap();
    let b = train(ModelKind::C2sAe, &ds, &split, &small_model(), &quick(40), 5).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.checkpoint.params, b.checkpoint.params);
    let base = train(ModelKind::Baseline, &ds, &split, &small_model(), &quick(40), 5).unwrap();
    assert_eq!(a.fingerprint, base.fingerprint);
    assert_eq!(base.checkpoint.meta.kind, ModelKind::Baseline);
    let other = train(ModelKind::Baseline, &ds, &split, &small_model(), &quick(40), 6).unwrap();
    assert_ne!(other.fingerprint, base.fingerprint);
    assert!(a.curve.iter().all(|c| (c.loss - (c.recon + c.latent)).abs() < 1e-5));
}

#[test]
fn training_reduces_the_loss_and_keeps_the_best_validation_point() {
    let ds = toy_dataset(3, 24, 3, &[Scenario::Los, Scenario::Nlos]);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let out = train(ModelKind::Baseline, &ds, &split, &small_model(), &quick(300), 0).unwrap();
    let head: f64 = out.curve[..30].iter().map(|c| c.loss).sum::<f64>() / 30.0;
    let tail: f64 = out.curve[270..].iter().map(|c| c.loss).sum::<f64>() / 30.0;
    assert!(tail < 0.5 * head, "{head} -> {tail}");
    let best = out.val_curve.iter().map(|v| v.mse).fold(f64::INFINITY, f64::min);
    assert_eq!(out.checkpoint.meta.best_val_mse, best);
    assert_eq!(out.val_curve.last().unwrap().step, 300);
}

#[test]
fn huge_learning_rate_reports_divergence() {
    let ds = toy_dataset(4, 20, 2, &[Scenario::Los, Scenario::Nlos]);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let cfg = TrainConfig {
        adam: AdamConfig { lr: 1e30, ..Default::default() },
        ..quick(50)
    };
    let r = train(ModelKind::C2sAe, &ds, &split, &small_model(), &cfg, 0);
    assert!(matches!(r, Err(Error::Divergence { .. })), "{r:?}");
}

#[test]
fn invalid_train_configs_are_rejected() {
    let ds = toy_dataset(5, 20, 2, &[Scenario::Los, Scenario::Nlos]);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let bad = TrainConfig { batch_size: 0, ..quick(1) };
    assert!(matches!(train(ModelKind::C2sAe, &ds, &split, &small_model(), &bad, 0), Err(Error::Config(_))));
    let bad_model = ModelConfig { n_bins: 1023, ..small_model() };
    assert!(train(ModelKind::C2sAe, &ds, &split, &bad_model, &quick(1), 0).is_err());
}

fn trained_pair(ds: &Dataset, split: &Split, steps: usize) -> (C2sCheckpoint, C2sCheckpoint) {
    let ae = train(ModelKind::C2sAe, ds, split, &small_model(), &quick(steps), 0).unwrap();
    let base = train(ModelKind::Baseline, ds, split, &small_model(), &quick(steps), 0).unwrap();
    (ae.checkpoint, base.checkpoint)
}

#[test]
fn evaluation_arithmetic() {
    let ds = toy_dataset(6, 24, 2, &[Scenario::Los, Scenario::Nlos]);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let (ae, base) = trained_pair(&ds, &split, 60);

    let same = evaluate_mse(&ae, &ae, &ds, &split, &[1, 2, 4], false).unwrap();
    assert!(same.rows.iter().all(|r| r.improvement_pct() == 0.0));

    let rep = evaluate_mse(&ae, &base, &ds, &split, &[1, 4], true).unwrap();
    assert_eq!(rep.rows.len(), 2);
    for (row, pred) in rep.rows.iter().zip(&rep.predictions) {
        assert_eq!(row.n_p, pred.n_p);
        assert_eq!(row.n_windows, split.windows_for(row.n_p).test.len());
        let mut sa = 0.0;
        let mut sb = 0.0;
        for i in 0..pred.target.len() {
            sa += (pred.ae[i] - pred.target[i]).powi(2);
            sb += (pred.baseline[i] - pred.target[i]).powi(2);
        }
        let n = pred.target.len() as f64;
        assert_eq!(n as usize, row.n_windows * row.n_p * 31);
        assert!((sa / n - row.mse_ae).abs() < 1e-9);
        assert!((sb / n - row.mse_baseline).abs() < 1e-9);
        let want = (row.mse_baseline - row.mse_ae) / row.mse_baseline * 100.0;
        assert!((row.improvement_pct() - want).abs() < 1e-12);
    }
}

#[test]
fn mismatched_stats_are_rejected() {
    let ds = toy_dataset(7, 24, 2, &[Scenario::Los, Scenario::Nlos]);
    let split = split_dataset(&ds, &SplitConfig::default()).unwrap();
    let (ae, mut base) = trained_pair(&ds, &split, 5);
    base.norm.dps_mean_db += 1.0;
    assert!(matches!(
        evaluate_mse(&ae, &base, &ds, &split, &[1], false),
        Err(Error::NormStatsMismatch)
    ));
}

#[test]
fn seed_summary_statistics() {
    let row = |ae: f64, b: f64| EvalRow {
        n_p: 4,
        n_windows: 1,
        mse_baseline: b,
        mse_ae: ae,
        ae_roundtrip_mse: 0.0,
        latency_ms_mean: None,
        latency_ms_std: None,
    };
    let reports: Vec<EvalReport> = [(0.5, 0.6), (0.7, 0.8)]
        .iter()
        .map(|&(a, b)| EvalReport {
            rows: vec![row(a, b)],
            seeds: vec![0],
            provenance: Provenance::default(),
            predictions: vec![],
        })
        .collect();
    let s = summarize(&reports);
    assert_eq!(s.len(), 1);
    assert!((s[0].mse_ae_mean - 0.6).abs() < 1e-12);
    assert!((s[0].mse_ae_std - 0.1).abs() < 1e-12);
    assert!((s[0].improvement_pct() - (0.7 - 0.6) / 0.7 * 100.0).abs() < 1e-9);
}

#[test]
fn trained_decoder_finds_the_dominant_bin() {
    // one range bin per step and a weak scatterer, so the CSI magnitude
    // identifies the direct-path bin
    let traj = TrajectoryConfig { start_m: 15.0, step_m: 15.0 };
    let los = [Scenario::Los; 5];
    let ds = toy_dataset_with(8, 12, 2, &los, -15.0, traj);
    let split = split_dataset(&ds, &SplitConfig { val_fraction: 0.3, ..Default::default() }).unwrap();
    let cfg = TrainConfig {
        steps: 3000,
        adam: AdamConfig { lr: 3e-3, ..Default::default() },
        ..quick(0)
    };
    let ck = train(ModelKind::Baseline, &ds, &split, &small_model(), &cfg, 0).unwrap().checkpoint;
    let dt = toy_cfg().delay_step();
    let (mut hits, mut total) = (0, 0);
    for (si, seq) in ds.sequences().iter().enumerate() {
        if split.is_val_sequence(si) {
            continue;
        }
        for r in (0..seq.len()).filter(|&r| !split.is_test_row(si, r)) {
            let truth = seq.dps()[r * 31..(r + 1) * 31].iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            let csi = [CsiSample {
                magnitude: seq.csi()[2 * r] as f64,
                phase: seq.csi()[2 * r + 1] as f64,
            }];
            let pred = &ck.predict_dps(&csi, dt).unwrap()[0];
            assert!(pred.power.iter().all(|&p| p >= 0.0));
            let got = pred.power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            hits += usize::from(got == truth);
            total += 1;
        }
    }
    assert!(hits as f64 >= 0.9 * total as f64, "{hits}/{total}");
}

fn spectrum(bins: &[(usize, f64)], n: usize) -> DelayPowerSpectrum {
    let mut p = vec![0.0; n];
    for &(k, v) in bins {
        p[k] = v;
    }
    DelayPowerSpectrum::new(p, DT).unwrap()
}

#[test]
fn extract_paths_examples() {
    let d = spectrum(&[(10, 1.0), (50, 0.25)], 128);
    let e = extract_paths(&d, -20.0, 2).unwrap();
    assert_eq!(e.len(), 2);
    assert!((e[0].delay_s - 10.0 * DT).abs() < 1e-18 && e[0].power == 1.0);
    assert!((e[1].delay_s - 50.0 * DT).abs() < 1e-18 && e[1].power == 0.25);

    let mut p = vec![1e-4; 64];
    p[1] = 1.0;
    let e = extract_paths(&DelayPowerSpectrum::new(p, DT).unwrap(), -20.0, 2).unwrap();
    assert_eq!(e.len(), 1);
    assert!((e[0].range_m - 1.4990).abs() < 1e-4);
    assert_eq!(e[0].range_m, SPEED_OF_LIGHT * e[0].delay_s);

    assert!(extract_paths(&spectrum(&[], 16), -20.0, 2).unwrap().is_empty());
    assert!(matches!(extract_paths(&spectrum(&[(1, 1.0)], 4), 3.0, 2), Err(Error::Config(_))));
}

#[test]
fn extract_paths_reads_a_three_path_channel() {
    let cfg = SoundingConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let mut bins = [0usize; 3];
        bins[0] = rng.gen_range(5..300);
        bins[1] = bins[0] + rng.gen_range(3..100);
        bins[2] = bins[1] + rng.gen_range(3..100);
        let paths: Vec<Path> = bins
            .iter()
            .enumerate()
            .map(|(i, &b)| Path {
                delay_s: b as f64 * cfg.delay_step(),
                gain: Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(-3.0..3.0)),
                is_los: false,
                id: i as u32,
            })
            .collect();
        let ps = PathSet::new(paths, cfg.carrier_hz, cfg.delay_extent()).unwrap();
        let taps = synth_taps(&ps, &cfg);
        let d = DelayPowerSpectrum::new(taps.iter().map(|t| t.norm_sqr()).collect(), cfg.delay_step()).unwrap();
        let est = extract_paths(&d, -25.0, 2).unwrap();
        let rep = ranging_error(&ps, &est, Some(cfg.delay_step()));
        assert!(rep.missed.is_empty());
        for m in &rep.matches {
            assert!(m.delay_error_s.abs() <= cfg.delay_step());
            let want = ps.paths()[m.true_index].power();
            assert!((est[m.est_index].power / want - 1.0).abs() < 0.2);
        }
    }
}

fn truth(delays: &[f64]) -> PathSet {
    let paths = delays
        .iter()
        .enumerate()
        .map(|(i, &d)| Path {
            delay_s: d,
            gain: Complex64::new(1.0, 0.0),
            is_los: i == 0,
            id: i as u32,
        })
        .collect();
    PathSet::new(paths, 3.5e9, 1023.0 * DT).unwrap()
}

#[test]
fn ranging_error_examples() {
    let t = truth(&[20.0 * DT, 45.0 * DT, 90.0 * DT]);
    let exact: Vec<PathEstimate> = t.paths().iter().map(|p| PathEstimate::from_delay(p.delay_s, 1.0)).collect();
    let r = ranging_error(&t, &exact, None);
    assert!(r.missed.is_empty() && r.false_alarms.is_empty());
    assert!(r.matches.iter().all(|m| m.delay_error_s == 0.0 && m.range_error_m == 0.0));

    let r = ranging_error(&t, &[], None);
    assert_eq!(r.missed, vec![0, 1, 2]);
    assert!(r.matches.is_empty());

    let shifted: Vec<PathEstimate> = t.paths().iter().map(|p| PathEstimate::from_delay(p.delay_s + DT, 1.0)).collect();
    let r = ranging_error(&t, &shifted, None);
    for m in &r.matches {
        assert!((m.range_error_m - SPEED_OF_LIGHT * DT).abs() < 1e-9);
        assert!((m.range_error_m - 1.499).abs() < 1e-3);
    }

    let far = [PathEstimate::from_delay(500.0 * DT, 1.0)];
    let r = ranging_error(&t, &far, Some(2.0 * DT));
    assert_eq!(r.missed.len(), 3);
    assert_eq!(r.false_alarms, vec![0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extracted_paths_are_sorted_and_separated(
        power in proptest::collection::vec(0.0f64..1.0, 8..200),
        sep in 1usize..6,
        thr in -40.0f64..-1.0,
    ) {
        let d = DelayPowerSpectrum::new(power, DT).unwrap();
        let est = extract_paths(&d, thr, sep).unwrap();
        for w in est.windows(2) {
            prop_assert!(w[1].delay_s > w[0].delay_s);
            prop_assert!(((w[1].delay_s - w[0].delay_s) / DT).round() as usize >= sep);
        }
        for e in &est {
            prop_assert!(e.delay_s >= 0.0 && e.power > 0.0);
            prop_assert!((e.range_m - SPEED_OF_LIGHT * e.delay_s).abs() < 1e-9);
        }
    }

    #[test]
    fn improvement_is_recomputable(b in 1e-6f64..10.0, a in 0.0f64..10.0) {
        let p = improvement_pct(b, a);
        prop_assert!((p - (b - a) / b * 100.0).abs() < 1e-9 * (1.0 + p.abs()));
    }
}
