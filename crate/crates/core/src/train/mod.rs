//! Training, evaluation and ranging.
//!
//! Training is single-threaded and deterministic per seed. Evaluation runs
//! both models through `decode(true CSI)` so the comparison isolates how the
//! decoder was trained.

mod batch;
mod eval;
mod ranging;
mod split;
mod trainer;

pub use batch::NormalizedData;
pub use eval::{
    decode_mse, evaluate_mse, improvement_pct, mean_std, summarize, EvalPredictions, EvalReport, EvalRow, SeedSummary,
};
pub use ranging::{extract_paths, ranging_error, PathEstimate, PathMatch, PeakConfig, RangingReport};
pub use split::{split_dataset, Split, SplitConfig, SplitPolicy, SplitWindows};
pub use trainer::{train, train_normalized, CurvePoint, Fingerprint, LrSchedule, TrainConfig, TrainOutcome, ValPoint};
