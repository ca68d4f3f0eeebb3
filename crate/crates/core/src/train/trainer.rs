use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::batch::NormalizedData;
use super::eval::decode_mse;
use super::split::{sample_windows, Split, SplitConfig};
use crate::error::{Error, Result};
use crate::model::{
    baseline_loss_graph, joint_loss_graph, C2sCheckpoint, C2sParameters, ModelConfig, ModelKind, Precision,
    TrainingMeta,
};
use crate::ndiff::{Adam, AdamConfig, Graph, Tensor};
use crate::real::Real;
use crate::sounding::{Dataset, WindowRef};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Cosine decay from the Adam learning rate to `final_fraction` of it.
    Cosine { final_fraction: f64 },
}

impl LrSchedule {
    pub fn lr(&self, base: f64, step: usize, total: usize) -> f64 {
        match *self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine { final_fraction } => {
                let t = if total > 1 { step as f64 / (total - 1) as f64 } else { 1.0 };
                let c = 0.5 * (1.0 + libm::cos(core::f64::consts::PI * t));
                base * (final_fraction + (1.0 - final_fraction) * c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    /// Measurement points per step; a step at window length `n_p` uses
    /// `max(1, batch_size / n_p)` windows.
    pub batch_size: usize,
    /// Window lengths cycled step by step.
    pub train_n_p: Vec<usize>,
    pub adam: AdamConfig,
    pub schedule: LrSchedule,
    /// Steps between validation passes; 0 validates only at the end.
    pub eval_every: usize,
    pub val_n_p: Vec<usize>,
    /// Cap on validation windows per window length.
    pub val_max_windows: usize,
    /// Validation passes without improvement before stopping; 0 disables.
    pub patience: usize,
    pub split: SplitConfig,
    pub seeds: Vec<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 3000,
            batch_size: 64,
            train_n_p: alloc::vec![1, 2, 4, 8, 16, 32],
            adam: AdamConfig::default(),
            schedule: LrSchedule::Constant,
            eval_every: 250,
            val_n_p: alloc::vec![1, 4, 16],
            val_max_windows: 256,
            patience: 0,
            split: SplitConfig::default(),
            seeds: alloc::vec![0, 1, 2],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.train_n_p.is_empty() || self.train_n_p.contains(&0) || self.val_n_p.contains(&0) {
            return Err(Error::Config("window lengths must be >= 1".into()));
        }
        if !(self.adam.lr >= 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        self.split.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub loss: f64,
    pub recon: f64,
    /// Zero for the baseline.
    pub latent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValPoint {
    pub step: usize,
    pub mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: C2sCheckpoint,
    pub curve: Vec<CurvePoint>,
    pub val_curve: Vec<ValPoint>,
    pub fingerprint: u64,
}

/// FNV-1a, 64 bit.
#[derive(Debug, Clone, Copy)]
pub struct Fingerprint(u64);

impl Default for Fingerprint {
    fn default() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
}

impl Fingerprint {
    pub fn bytes(&mut self, b: &[u8]) {
        for &x in b {
            self.0 ^= x as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

/// Trains one model kind on the training windows of `split`.
///
/// The model is initialized from `seed`, and the batch order is drawn from
/// a generator seeded by `seed` alone, so both model kinds see identical
/// batches for the same seed and configuration. The returned checkpoint
/// holds the parameters with the lowest validation MSE of `decode(true CSI)`.
pub fn train(
    kind: ModelKind,
    dataset: &Dataset,
    split: &Split,
    model: &ModelConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let data = NormalizedData::new(dataset, &split.norm);
    train_normalized(kind, &data, split, model, cfg, seed)
}

/// [`train`] on data already normalized with `split.norm`.
pub fn train_normalized(
    kind: ModelKind,
    data: &NormalizedData,
    split: &Split,
    model: &ModelConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut model = *model;
    model.seed = seed;
    model.validate()?;
    if model.n_bins != data.n_bins {
        return Err(Error::Config(alloc::format!(
            "model expects {} bins, dataset has {}",
            model.n_bins,
            data.n_bins
        )));
    }
    match model.precision {
        Precision::F32 => run::<f32>(kind, data, split, model, cfg, seed),
        Precision::F64 => run::<f64>(kind, data, split, model, cfg, seed),
    }
}

fn run<T: Real>(
    kind: ModelKind,
    data: &NormalizedData,
    split: &Split,
    model: ModelConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let mut params = C2sParameters::<T>::init(model)?;
    let mut pools: Vec<Vec<WindowRef>> = Vec::with_capacity(cfg.train_n_p.len());
    for &n_p in &cfg.train_n_p {
        let w = split.windows_for(n_p).train;
        if w.is_empty() {
            return Err(Error::TooFewPositions(alloc::format!("no training windows at N_p = {n_p}")));
        }
        pools.push(w);
    }
    let val: Vec<(usize, Vec<WindowRef>)> = cfg
        .val_n_p
        .iter()
        .map(|&n_p| {
            let mut w = split.windows_for(n_p).val;
            thin(&mut w, cfg.val_max_windows);
            (n_p, w)
        })
        .filter(|(_, w)| !w.is_empty())
        .collect();

    let mut fp = Fingerprint::default();
    fp.u64(seed);
    fp.u64(cfg.steps as u64);
    fp.u64(cfg.batch_size as u64);
    for v in [cfg.adam.lr, cfg.adam.beta1, cfg.adam.beta2, cfg.adam.eps] {
        fp.f64(v);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_DA7A);
    let mut adam = Adam::new(cfg.adam, params.tensors());
    let mut curve = Vec::with_capacity(cfg.steps);
    let mut val_curve = Vec::new();
    let mut best: Option<(f64, usize, Vec<Tensor<T>>)> = None;
    let mut stale = 0usize;
    let mut last_loss = f64::NAN;
    let mut steps_done = 0;

    let validate = |params: &C2sParameters<T>| -> Result<Option<f64>> {
        if val.is_empty() {
            return Ok(None);
        }
        let mut acc = 0.0;
        for (n_p, w) in &val {
            acc += decode_mse(params, data, w, *n_p)?;
        }
        Ok(Some(acc / val.len() as f64))
    };

    for step in 0..cfg.steps {
        let which = step % cfg.train_n_p.len();
        let n_p = cfg.train_n_p[which];
        let k = (cfg.batch_size / n_p).max(1);
        let batch = sample_windows(&pools[which], k, &mut rng);
        fp.u64(n_p as u64);
        for w in &batch {
            fp.u64(((w.seq as u64) << 32) | w.start as u64);
        }
        let (p, c) = data.gather::<T>(&batch, n_p)?;

        let mut g = Graph::new();
        let vars = params.bind(&mut g);
        let pv = g.constant(p);
        let cv = g.constant(c);
        let point = match kind {
            ModelKind::C2sAe => {
                let l = joint_loss_graph(&mut g, &vars, params.layout(), &model, pv, cv, n_p)?;
                let pt = CurvePoint {
                    step,
                    loss: g.scalar(l.total).as_f64(),
                    recon: g.scalar(l.recon).as_f64(),
                    latent: g.scalar(l.latent).as_f64(),
                };
                check(step, pt.loss)?;
                g.backward(l.total)?;
                pt
            }
            ModelKind::Baseline => {
                let l = baseline_loss_graph(&mut g, &vars, params.layout(), &model, pv, cv, n_p)?;
                let v = g.scalar(l).as_f64();
                check(step, v)?;
                g.backward(l)?;
                CurvePoint {
                    step,
                    loss: v,
                    recon: v,
                    latent: 0.0,
                }
            }
        };
        last_loss = point.loss;
        curve.push(point);
        let grads: Vec<Tensor<T>> = vars.iter().map(|&v| g.grad_tensor(v)).collect();
        drop(g);
        adam.config.lr = cfg.schedule.lr(cfg.adam.lr, step, cfg.steps);
        adam.step(params.tensors_mut(), &grads)?;
        steps_done = step + 1;

        let due = cfg.eval_every > 0 && steps_done % cfg.eval_every == 0 && steps_done < cfg.steps;
        if due {
            if let Some(m) = validate(&params)? {
                val_curve.push(ValPoint { step: steps_done, mse: m });
                if best.as_ref().is_none_or(|b| m < b.0) {
                    best = Some((m, steps_done, params.tensors().to_vec()));
                    stale = 0;
                } else {
                    stale += 1;
                    if cfg.patience > 0 && stale >= cfg.patience {
                        break;
                    }
                }
            }
        }
    }
    if let Some(m) = validate(&params)? {
        val_curve.push(ValPoint { step: steps_done, mse: m });
        if best.as_ref().is_none_or(|b| m < b.0) {
            best = Some((m, steps_done, params.tensors().to_vec()));
        }
    }
    let (best_val_mse, best_step) = match best {
        Some((m, s, tensors)) => {
            params.tensors_mut().clone_from_slice(&tensors);
            (m, s)
        }
        None => (f64::NAN, steps_done),
    };
    let meta = TrainingMeta {
        kind,
        steps: steps_done,
        best_step,
        final_loss: last_loss,
        best_val_mse,
        seed,
        fingerprint: fp.finish(),
    };
    let checkpoint = C2sCheckpoint::new(params.cast(), split.norm, meta)?;
    Ok(TrainOutcome {
        checkpoint,
        curve,
        val_curve,
        fingerprint: meta.fingerprint,
    })
}

fn check(step: usize, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { step, loss })
    }
}

/// Keeps at most `max` evenly spaced entries; 0 keeps everything.
fn thin(w: &mut Vec<WindowRef>, max: usize) {
    if max == 0 || w.len() <= max {
        return;
    }
    let n = w.len();
    *w = (0..max).map(|i| w[i * n / max]).collect();
}
