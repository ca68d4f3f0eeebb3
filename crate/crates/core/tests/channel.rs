use c2s_core::channel::*;
use c2s_core::{Error, SPEED_OF_LIGHT};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> SoundingConfig {
    SoundingConfig::default()
}

fn path(delay_s: f64, gain: Complex64, id: u32) -> Path {
    Path {
        delay_s,
        gain,
        is_los: false,
        id,
    }
}

fn set(paths: Vec<Path>) -> PathSet {
    let c = cfg();
    PathSet::new(paths, c.carrier_hz, c.delay_extent()).unwrap()
}

fn dt() -> f64 {
    cfg().delay_step()
}

#[test]
fn los_direct_path_sits_at_geometric_delay() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ps = sample_channel(Scenario::Los, 150.0, &ChannelStats::default(), &cfg(), &mut rng).unwrap();
    let first = ps.paths()[0];
    assert!(first.is_los);
    assert!((first.delay_s - 150.0 / SPEED_OF_LIGHT).abs() < 1e-18);
    assert!((first.delay_s * 1e9 - 500.3).abs() < 0.05);
    assert!((2..=8).contains(&ps.len()));
}

#[test]
fn nlos_has_no_los_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let ps = sample_channel(Scenario::Nlos, 80.0, &ChannelStats::default(), &cfg(), &mut rng).unwrap();
        assert!(ps.los().is_none());
        assert!((2..=8).contains(&ps.len()));
    }
}

#[test]
fn direct_path_outside_grid_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // grid extent is 1023 × 5 ns ≈ 5.1 µs ≈ 1533 m
    let r = sample_channel(Scenario::Los, 2000.0, &ChannelStats::default(), &cfg(), &mut rng);
    assert!(matches!(r, Err(Error::DelayOutOfGrid { .. })));
    let r = sample_channel(Scenario::Los, 0.0, &ChannelStats::default(), &cfg(), &mut rng);
    assert!(matches!(r, Err(Error::Config(_))));
}

/// Excess delays follow the configured exponential law (KS test) and the
/// mean scatterer power per excess-delay bin follows the configured decay.
#[test]
fn scatterer_statistics_follow_configured_laws() {
    let stats = ChannelStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = 150.0;
    let direct = d / SPEED_OF_LIGHT;
    let p_ref = stats.reference_power(d);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for i in 0..10_000 {
        let sc = if i % 2 == 0 { Scenario::Los } else { Scenario::Nlos };
        let ps = sample_channel(sc, d, &stats, &cfg(), &mut rng).unwrap();
        for p in ps.paths().iter().filter(|p| !p.is_los) {
            samples.push((p.delay_s - direct, p.power() / p_ref));
        }
    }
    let n = samples.len();
    let mut ex: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ex.sort_by(f64::total_cmp);
    let mean = stats.excess_delay_mean_s;
    let ks = ex
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-x / mean).exp();
            (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 1.63 / (n as f64).sqrt(), "KS {ks} over {n} samples");

    let width = 20e-9;
    for b in 0..8 {
        let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
        let in_bin: Vec<&(f64, f64)> = samples.iter().filter(|s| s.0 >= lo && s.0 < hi).collect();
        // exact bin average of the configured law under the exponential delay density
        let a = 1.0 / mean + 1.0 / stats.power_decay_s;
        let law_num = (1.0 / mean) * ((-a * lo).exp() - (-a * hi).exp()) / a;
        let law_den = (-lo / mean).exp() - (-hi / mean).exp();
        let expect = stats.scatter_profile(0.0) * law_num / law_den;
        let got = in_bin.iter().map(|s| s.1).sum::<f64>() / in_bin.len() as f64;
        let tol = 4.0 / (in_bin.len() as f64).sqrt();
        assert!(
            (got / expect - 1.0).abs() < tol,
            "bin {b}: mean power {got}, law {expect}, {} samples",
            in_bin.len()
        );
    }
}

#[test]
fn on_grid_path_is_an_exact_tap() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ps = set(vec![path(5.0 * dt(), Complex64::new(3.0, 4.0), 0)]);
    let c = synth_cir(&ps, &cfg(), f64::INFINITY, &mut rng).unwrap();
    assert_eq!(c.periods(), 128);
    for p in 0..c.periods() {
        let row = c.period(p);
        assert!((row[5].norm() - 5.0).abs() < 1e-12);
        for (k, t) in row.iter().enumerate() {
            if k != 5 {
                assert!(t.norm_sqr() < 25.0 * 1e-6);
            }
        }
    }
}

#[test]
fn empty_channel_is_noise_at_configured_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ps = PathSet::empty(3.5e9, cfg().delay_extent());
    let snr = 10.0;
    let c = synth_cir(&ps, &cfg(), snr, &mut rng).unwrap();
    let want = noise_power(&ps, snr);
    assert_eq!(want, 0.1);
    let got = c.taps().iter().map(|t| t.norm_sqr()).sum::<f64>() / c.taps().len() as f64;
    assert!((got / want - 1.0).abs() < 0.1, "{got} vs {want}");
}

#[test]
fn off_grid_energy_is_preserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = Complex64::new(0.6, -0.8);
    let ps = set(vec![path(5.5 * dt(), g, 0)]);
    let c = synth_cir(&ps, &cfg(), f64::INFINITY, &mut rng).unwrap();
    let row = c.period(0);
    let e: f64 = row.iter().map(|t| t.norm_sqr()).sum();
    assert!((e - g.norm_sqr()).abs() < 1e-3 * g.norm_sqr());
    assert!((row[5].norm() - row[6].norm()).abs() < 1e-12);
    assert!(row[5].norm() < g.norm());
}

#[test]
fn pn_sequences_have_maximal_period() {
    assert_eq!(generate_pn_sequence(3, 0b1011).unwrap().len(), 7);
    assert_eq!(generate_pn_sequence(10, default_taps(10).unwrap()).unwrap().len(), 1023);
    assert!(matches!(
        generate_pn_sequence(4, 0b10101),
        Err(Error::DegeneratePolynomial { .. })
    ));
}

#[test]
fn pn_autocorrelation_matches_brute_force() {
    let s = generate_pn_sequence(10, default_taps(10).unwrap()).unwrap();
    let n = s.len();
    let fast = circular_autocorrelation(&s);
    for lag in 0..n {
        let brute: f64 = (0..n).map(|i| s[i] * s[(i + lag) % n]).sum();
        assert_eq!(fast[lag], brute);
        assert_eq!(brute, if lag == 0 { 1023.0 } else { -1.0 });
    }
}

#[test]
fn sounding_single_path_shows_m_sequence_floor() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let c = SoundingConfig { periods: 2, ..cfg() };
    let g = Complex64::new(0.5, 0.25);
    let ps = set(vec![path(40.0 * dt(), g, 0)]);
    let cir = sound_cir(&ps, &c, f64::INFINITY, &mut rng).unwrap();
    let row = cir.period(1);
    let peak = (0..1023).max_by(|&a, &b| row[a].norm().total_cmp(&row[b].norm())).unwrap();
    assert_eq!(peak, 40);
    assert!((row[40] - g).norm() < 1e-12);
    for (k, t) in row.iter().enumerate() {
        if k != 40 {
            assert!((*t - (-g / 1023.0)).norm() < 1e-12, "bin {k}: {t}");
        }
    }
}

#[test]
fn sounding_rejects_wrong_sequence_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ps = set(vec![path(0.0, Complex64::new(1.0, 0.0), 0)]);
    let r = sound_cir_with(&ps, &cfg(), &[1.0; 511], 20.0, &mut rng);
    assert!(matches!(r, Err(Error::LengthMismatch { expected: 1023, found: 511 })));
}

/// Noise-only records. Per bin, the correlation output is complex Gaussian
/// with variance `noise_power / N`. At most 1% of bins may exceed 3σ, and
/// with the family-wise (Bonferroni) threshold over 1023 bins at most 1% of
/// trials may contain any exceedance.
#[test]
fn sounding_noise_floor() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let c = SoundingConfig { periods: 1, ..cfg() };
    let ps = PathSet::empty(c.carrier_hz, c.delay_extent());
    let sigma = (noise_power(&ps, 0.0) / 1023.0).sqrt();
    let bonferroni = (1023.0f64 / 0.01).ln().sqrt();
    let trials = 2000;
    let (mut over3, mut bad_trials, mut var) = (0usize, 0usize, 0.0);
    for _ in 0..trials {
        let cir = sound_cir(&ps, &c, 0.0, &mut rng).unwrap();
        let row = cir.period(0);
        var += row.iter().map(|t| t.norm_sqr()).sum::<f64>() / 1023.0;
        over3 += row.iter().filter(|t| t.norm() > 3.0 * sigma).count();
        bad_trials += usize::from(row.iter().any(|t| t.norm() > bonferroni * sigma));
    }
    assert!((var / trials as f64 / (sigma * sigma) - 1.0).abs() < 0.05);
    assert!((over3 as f64) < 0.01 * (trials * 1023) as f64);
    // expected 20 exceedances, Poisson upper tail at 1e-4
    assert!(bad_trials <= 38, "{bad_trials} trials");
}

fn two_path_trial(rng: &mut ChaCha8Rng, c: &SoundingConfig) -> bool {
    let a = rng.gen_range(20.0..400.0);
    let b = a + rng.gen_range(5.0..200.0);
    let truth = [a, b];
    let ps = set(vec![
        path(a * dt(), Complex64::from_polar(1.0, rng.gen_range(-3.0..3.0)), 0),
        path(b * dt(), Complex64::from_polar(rng.gen_range(0.5..1.0), rng.gen_range(-3.0..3.0)), 1),
    ]);
    let cir = sound_cir(&ps, c, 20.0, rng).unwrap();
    let pw: Vec<f64> = cir.mean_taps().iter().map(|t| t.norm_sqr()).collect();
    let mut idx: Vec<usize> = (0..pw.len()).collect();
    idx.sort_by(|&x, &y| pw[y].total_cmp(&pw[x]));
    // two strongest bins that are not adjacent
    let first = idx[0];
    let second = *idx.iter().find(|&&k| k.abs_diff(first) > 1).unwrap();
    let mut found = [first as f64, second as f64];
    found.sort_by(f64::total_cmp);
    truth.iter().zip(found).all(|(t, f)| (t - f).abs() <= 1.0)
}

#[test]
fn sounding_recovers_two_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let c = SoundingConfig { periods: 4, ..cfg() };
    let ok = (0..20).filter(|_| two_path_trial(&mut rng, &c)).count();
    assert!(ok >= 19, "{ok}/20");
}

#[test]
fn trajectory_reaches_four_hundred_metres() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let stats = ChannelStats::default();
    let t = make_trajectory(Scenario::Los, 79, &TrajectoryConfig::default(), &stats, &cfg(), &mut rng).unwrap();
    assert_eq!(t.len(), 79);
    assert_eq!(t.points.last().unwrap().distance_m, 400.0);
    let one = make_trajectory(Scenario::Nlos, 1, &TrajectoryConfig::default(), &stats, &cfg(), &mut rng).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one.points[0].distance_m, 10.0);
    assert!(matches!(
        make_trajectory(Scenario::Los, 0, &TrajectoryConfig::default(), &stats, &cfg(), &mut rng),
        Err(Error::Config(_))
    ));
}

#[test]
fn trajectory_geometry_evolves_smoothly() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let stats = ChannelStats::default();
    let t = make_trajectory(Scenario::Los, 60, &TrajectoryConfig::default(), &stats, &cfg(), &mut rng).unwrap();
    for (k, w) in t.points.windows(2).enumerate() {
        assert_eq!(w[0].position as usize, k);
        assert_eq!(w[1].position, w[0].position + 1);
        assert!((w[1].distance_m - w[0].distance_m - 5.0).abs() < 1e-9);
        let (a, b) = (w[0].paths.los().unwrap(), w[1].paths.los().unwrap());
        assert!(b.delay_s > a.delay_s);
        assert!((b.delay_s - w[1].distance_m / SPEED_OF_LIGHT).abs() < 1e-18);
        let step = 5.0 / SPEED_OF_LIGHT;
        for p in w[1].paths.paths().iter().filter(|p| !p.is_los) {
            let q = w[0].paths.paths().iter().find(|q| q.id == p.id).unwrap();
            let drift = (p.delay_s - q.delay_s) - step;
            assert!(drift.abs() <= stats.delay_drift_s + 1e-15, "drift {drift}");
            let ratio = (p.gain.norm() / q.gain.norm()).ln();
            let loss = 0.5 * (stats.reference_power(w[1].distance_m) / stats.reference_power(w[0].distance_m)).ln();
            assert!((ratio - loss).abs() <= stats.gain_drift + 1e-12);
        }
    }
}

#[test]
fn same_seed_reproduces_trajectory_and_cir() {
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = make_trajectory(Scenario::Nlos, 5, &TrajectoryConfig::default(), &ChannelStats::default(), &cfg(), &mut rng)
            .unwrap();
        let c = synth_cir(&t.points[4].paths, &cfg(), 25.0, &mut rng).unwrap();
        (t, c)
    };
    assert_eq!(run(14), run(14));
    assert_ne!(run(14).1, run(15).1);
}

fn separated_paths(seed: u64, k: usize, on_grid: bool) -> PathSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = (0..k)
        .map(|i| {
            let base = 20.0 + 40.0 * i as f64;
            let frac = if on_grid { 0.0 } else { rng.gen_range(0.0..1.0) };
            path(
                (base + frac) * dt(),
                Complex64::from_polar(rng.gen_range(0.01..2.0), rng.gen_range(-3.0..3.0)),
                i as u32,
            )
        })
        .collect();
    set(paths)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noiseless_energy_matches_path_power(seed in any::<u64>(), k in 1usize..8, on_grid in any::<bool>()) {
        let ps = separated_paths(seed, k, on_grid);
        let taps = synth_taps(&ps, &cfg());
        let e: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        prop_assert!((e / ps.total_power() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sounding_tracks_ideal_taps_at_high_snr(seed in any::<u64>(), k in 1usize..5, snr in 30.0f64..50.0) {
        let c = SoundingConfig { periods: 4, ..cfg() };
        let ps = separated_paths(seed, k, false);
        let ideal = synth_taps(&ps, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let cir = sound_cir(&ps, &c, snr, &mut rng).unwrap();
        let floor: f64 = ideal.iter().map(|t| t.norm()).sum::<f64>() / 1023.0;
        let sigma = (noise_power(&ps, snr) / 1023.0 / c.periods as f64).sqrt();
        // 5σ keeps the family-wise exceedance over 1023 bins negligible
        let bound = floor + 5.0 * sigma;
        for (a, b) in cir.mean_taps().iter().zip(&ideal) {
            prop_assert!((a - b).norm() < bound);
        }
    }

    #[test]
    fn path_sets_are_sorted_with_at_most_one_los(seed in any::<u64>(), d in 10.0f64..1000.0, los in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = if los { Scenario::Los } else { Scenario::Nlos };
        let ps = sample_channel(sc, d, &ChannelStats::default(), &cfg(), &mut rng).unwrap();
        prop_assert!(ps.paths().windows(2).all(|w| w[0].delay_s <= w[1].delay_s));
        prop_assert!(ps.paths().iter().all(|p| p.delay_s >= 0.0 && p.delay_s < cfg().delay_extent()));
        prop_assert_eq!(ps.paths().iter().filter(|p| p.is_los).count(), usize::from(los));
    }
}
