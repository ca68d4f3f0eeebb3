use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sounding::{held_out_rows, Dataset, NormStats, WindowRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitPolicy {
    /// The trailing positions of every sequence are the test region.
    #[default]
    SpatialExtrapolation,
    /// Windows are assigned to train/val/test at random.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub policy: SplitPolicy,
    pub test_fraction: f64,
    /// Fraction of sequences (spatial) or windows (random) used for
    /// validation.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            policy: SplitPolicy::SpatialExtrapolation,
            test_fraction: 0.3,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must be in (0, 1)".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) || self.val_fraction + self.test_fraction >= 1.0 {
            return Err(Error::Config("val_fraction must be in (0, 1) and leave room for training".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Train,
    Val,
    Test,
}

/// Window lists of one split at one window length.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitWindows {
    pub train: Vec<WindowRef>,
    pub val: Vec<WindowRef>,
    pub test: Vec<WindowRef>,
}

/// Train/validation/test assignment over a dataset, with normalization
/// statistics fit on the training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub config: SplitConfig,
    /// Per sequence: rows before this index are outside the test region.
    front: Vec<usize>,
    /// Per sequence: validation sequence (spatial policy).
    val_seq: Vec<bool>,
    lengths: Vec<usize>,
    pub norm: NormStats,
}

impl Split {
    pub fn windows_for(&self, n_p: usize) -> SplitWindows {
        let mut out = SplitWindows::default();
        if n_p == 0 {
            return out;
        }
        match self.config.policy {
            SplitPolicy::SpatialExtrapolation => {
                for (si, (&len, &front)) in self.lengths.iter().zip(&self.front).enumerate() {
                    for start in 0..len.saturating_sub(n_p - 1) {
                        let w = WindowRef {
                            seq: si as u32,
                            start: start as u32,
                        };
                        if start >= front {
                            out.test.push(w);
                        } else if start + n_p <= front {
                            if self.val_seq[si] {
                                out.val.push(w);
                            } else {
                                out.train.push(w);
                            }
                        }
                    }
                }
            }
            SplitPolicy::Random => {
                let mut all = Vec::new();
                for (si, &len) in self.lengths.iter().enumerate() {
                    for start in 0..len.saturating_sub(n_p - 1) {
                        all.push(WindowRef {
                            seq: si as u32,
                            start: start as u32,
                        });
                    }
                }
                for (w, role) in all.iter().zip(random_roles(&self.config, all.len(), n_p)) {
                    match role {
                        Role::Train => out.train.push(*w),
                        Role::Val => out.val.push(*w),
                        Role::Test => out.test.push(*w),
                    }
                }
            }
        }
        out
    }

    /// Whether row `row` of sequence `seq` lies in the held-out test region
    /// (spatial policy; always false for the random policy).
    pub fn is_test_row(&self, seq: usize, row: usize) -> bool {
        self.config.policy == SplitPolicy::SpatialExtrapolation && row >= self.front[seq]
    }

    pub fn is_val_sequence(&self, seq: usize) -> bool {
        self.val_seq[seq]
    }
}

fn random_roles(cfg: &SplitConfig, n: usize, n_p: usize) -> Vec<Role> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (n_p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n_test = libm::round(n as f64 * cfg.test_fraction) as usize;
    let n_val = libm::round(n as f64 * cfg.val_fraction) as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut roles = alloc::vec![Role::Train; n];
    for (k, &i) in idx.iter().enumerate() {
        if k < n_test {
            roles[i] = Role::Test;
        } else if k < n_test + n_val {
            roles[i] = Role::Val;
        }
    }
    roles
}

/// Splits `dataset` according to `cfg` and refits normalization statistics
/// on the training rows.
///
/// Under the spatial policy the last `round(test_fraction · len)` positions
/// of every sequence form the test region and test windows lie entirely
/// inside it. A random `val_fraction` of the sequences provides validation
/// windows from the remaining positions; the rest are training windows.
pub fn split_dataset(dataset: &Dataset, cfg: &SplitConfig) -> Result<Split> {
    cfg.validate()?;
    let lengths: Vec<usize> = dataset.sequences().iter().map(|s| s.len()).collect();
    let n_seq = lengths.len();
    let n_p = dataset.n_p;
    match cfg.policy {
        SplitPolicy::SpatialExtrapolation => {
            if n_seq < 2 {
                return Err(Error::TooFewPositions(format!(
                    "spatial split needs at least 2 sequences for validation, found {n_seq}"
                )));
            }
            let mut front = Vec::with_capacity(n_seq);
            for &len in &lengths {
                let held = held_out_rows(len, cfg.test_fraction);
                if held < n_p || len - held < n_p {
                    return Err(Error::TooFewPositions(format!(
                        "{len} positions cannot hold {n_p}-point train and test windows at test fraction {}",
                        cfg.test_fraction
                    )));
                }
                front.push(len - held);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let n_val = (libm::round(n_seq as f64 * cfg.val_fraction) as usize).clamp(1, n_seq - 1);
            let mut order: Vec<usize> = (0..n_seq).collect();
            order.shuffle(&mut rng);
            let mut val_seq = alloc::vec![false; n_seq];
            for &i in &order[..n_val] {
                val_seq[i] = true;
            }
            let norm = dataset.fit_norm(dataset.norm.floor_db, |si, r| !val_seq[si] && r < front[si])?;
            Ok(Split {
                config: *cfg,
                front,
                val_seq,
                lengths,
                norm,
            })
        }
        SplitPolicy::Random => {
            let total = dataset.window_count(n_p);
            if total < 3 {
                return Err(Error::TooFewPositions(format!(
                    "random split needs at least 3 windows, found {total}"
                )));
            }
            let mut split = Split {
                config: *cfg,
                front: lengths.clone(),
                val_seq: alloc::vec![false; n_seq],
                lengths,
                norm: dataset.norm,
            };
            let train = split.windows_for(n_p).train;
            let mut covered: Vec<Vec<bool>> = split.lengths.iter().map(|&l| alloc::vec![false; l]).collect();
            for w in &train {
                for r in 0..n_p {
                    covered[w.seq as usize][w.start as usize + r] = true;
                }
            }
            split.norm = dataset.fit_norm(dataset.norm.floor_db, |si, r| covered[si][r])?;
            Ok(split)
        }
    }
}

/// Uniform sample of `k` windows with replacement.
pub(crate) fn sample_windows<R: Rng + ?Sized>(pool: &[WindowRef], k: usize, rng: &mut R) -> Vec<WindowRef> {
    (0..k).map(|_| pool[rng.gen_range(0..pool.len())]).collect()
}
