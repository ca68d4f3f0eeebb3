//! The `c2s` command-line tool.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use c2s_core::model::ModelKind;
use c2s_core::sounding::CsiSample;
use c2s_core::train::{evaluate_mse, extract_paths, split_dataset, train, PeakConfig};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bench::{benchmark_inference, DEFAULT_REPEATS};
use crate::config::{self, SimulateConfig, TrainSettings};
use crate::error::{LabError, Result};
use crate::format::{read_checkpoint, read_dataset, write_checkpoint, write_dataset, StoredCheckpoint};
use crate::manifest::RunManifest;
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "c2s", version, about = "Extrapolate delay power spectra from CSI with a supervised autoencoder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic paired DPS/CSI dataset.
    Simulate {
        /// Dataset file to write.
        #[arg(long)]
        out: PathBuf,
        /// Positions per trajectory.
        #[arg(long)]
        n_positions: Option<usize>,
        /// Window length recorded in the dataset header.
        #[arg(long)]
        n_p: Option<usize>,
        /// Antenna pairs per trajectory.
        #[arg(long)]
        n_pairs: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the autoencoder or the decoder-only baseline.
    Train {
        /// Dataset written by `simulate`.
        #[arg(long)]
        dataset: PathBuf,
        /// c2s-ae or baseline.
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
        /// Checkpoint file to write.
        #[arg(long)]
        out: PathBuf,
        /// Optimizer steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Adam learning rate.
        #[arg(long)]
        lr: Option<f64>,
        /// Measurement points per step.
        #[arg(long)]
        batch_size: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the two models on the held-out windows.
    Eval {
        /// Autoencoder checkpoint.
        #[arg(long)]
        ae: PathBuf,
        /// Baseline checkpoint.
        #[arg(long)]
        baseline: PathBuf,
        /// Dataset both checkpoints were trained on.
        #[arg(long)]
        dataset: PathBuf,
        /// Window lengths to evaluate.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        n_p: Vec<usize>,
        /// Also time both decoders with this many repetitions per N_p.
        #[arg(long, default_value_t = 0)]
        latency_repeats: usize,
        /// Report CSV to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Predict DPS from a CSV of (magnitude, phase) rows and extract paths.
    Infer {
        /// Checkpoint of either kind.
        #[arg(long)]
        ckpt: PathBuf,
        /// CSV with `magnitude,phase` rows, one per measurement point.
        #[arg(long)]
        csi: PathBuf,
        /// Predicted DPS CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.paths.csv`.
        #[arg(long)]
        paths_out: Option<PathBuf>,
        /// Peak threshold relative to the strongest bin, dB.
        #[arg(long, default_value_t = PeakConfig::default().threshold_db, allow_negative_numbers = true)]
        threshold_db: f64,
        /// Minimum spacing between extracted peaks, bins.
        #[arg(long, default_value_t = PeakConfig::default().min_separation_bins)]
        min_separation: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Time decoder inference at batch size 1.
    Bench {
        /// Checkpoint of either kind.
        #[arg(long)]
        ckpt: PathBuf,
        /// Window lengths to time.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        n_p: Vec<usize>,
        /// Timed repetitions per window length.
        #[arg(long, default_value_t = DEFAULT_REPEATS, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
        repeats: usize,
        /// Latency CSV to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Convert a DPS or report file into plot-ready delimited text.
    Export {
        /// DPS or report CSV.
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Apply 10·log10 to power and MSE columns.
        #[arg(long)]
        db: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| format!("unknown model kind {s:?}; expected c2s-ae or baseline"))
}

/// Parses arguments, runs one subcommand and maps the outcome to the exit
/// code contract (0 ok, 1 runtime failure, 2 usage or configuration).
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cmd = Cli::command()
        .mut_subcommand("simulate", |c| {
            c.after_long_help(format!("Defaults:\n\n{}", config::to_toml(&SimulateConfig::default())))
        })
        .mut_subcommand("train", |c| {
            c.after_long_help(format!("Defaults:\n\n{}", config::to_toml(&TrainSettings::default())))
        });
    let cli = match cmd.try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

macro_rules! say {
    ($quiet:expr, $($t:tt)*) => {
        if !$quiet {
            eprintln!($($t)*);
        }
    };
}

pub fn run(cmd: Command) -> Result<()> {
    let t0 = Instant::now();
    match cmd {
        Command::Simulate {
            out,
            n_positions,
            n_p,
            n_pairs,
            common,
        } => {
            let mut cfg: SimulateConfig = config::load(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(v) = n_positions {
                cfg.n_positions = v;
            }
            if let Some(v) = n_p {
                cfg.dataset.n_p = v;
            }
            if let Some(v) = n_pairs {
                cfg.dataset.n_pairs = v;
            }
            let ds = cfg.build()?;
            write_dataset(&ds, &out)?;
            say!(
                common.quiet,
                "{} records, {} windows at N_p={} -> {}",
                ds.n_records(),
                ds.window_count(ds.n_p),
                ds.n_p,
                out.display()
            );
            let mut m = RunManifest::new("simulate", &cfg);
            m.seed = Some(cfg.seed);
            m.inputs.extend(common.config);
            m.outputs.push(out.clone());
            m.write_beside(&out, t0.elapsed())?;
        }
        Command::Train {
            dataset,
            model,
            out,
            steps,
            lr,
            batch_size,
            common,
        } => {
            let mut s: TrainSettings = config::load(common.config.as_deref())?;
            if let Some(v) = steps {
                s.train.steps = v;
            }
            if let Some(v) = lr {
                s.train.adam.lr = v;
            }
            if let Some(v) = batch_size {
                s.train.batch_size = v;
            }
            let seed = common.seed.or_else(|| s.train.seeds.first().copied()).unwrap_or(0);
            let ds = read_dataset(&dataset)?;
            s.model.n_bins = ds.n_bins;
            s.train.validate()?;
            let split = split_dataset(&ds, &s.train.split)?;
            say!(common.quiet, "training {} for {} steps (seed {seed})", model.as_str(), s.train.steps);
            let outcome = train(model, &ds, &split, &s.model, &s.train, seed)?;
            let stored = StoredCheckpoint {
                checkpoint: outcome.checkpoint,
                delay_step_s: ds.delay_step,
                split: s.train.split,
            };
            write_checkpoint(&stored, &out)?;
            let curve = sibling(&out, "curve.csv");
            let val = sibling(&out, "val.csv");
            report::write_records(&curve, &["step", "loss", "recon", "latent"], &outcome.curve)?;
            report::write_records(&val, &["step", "mse"], &outcome.val_curve)?;
            let meta = stored.checkpoint.meta;
            say!(
                common.quiet,
                "best validation MSE {:.5} at step {} -> {}",
                meta.best_val_mse,
                meta.best_step,
                out.display()
            );
            let mut m = RunManifest::new("train", &s);
            m.seed = Some(seed);
            m.inputs.push(dataset);
            m.inputs.extend(common.config);
            m.outputs.extend([out.clone(), curve, val]);
            m.write_beside(&out, t0.elapsed())?;
        }
        Command::Eval {
            ae,
            baseline,
            dataset,
            n_p,
            latency_repeats,
            out,
            common,
        } => {
            let a = read_checkpoint(&ae)?;
            let b = read_checkpoint(&baseline)?;
            if a.split != b.split {
                return Err(c2s_core::Error::Config("checkpoints were trained on different splits".into()).into());
            }
            let ds = read_dataset(&dataset)?;
            let split = split_dataset(&ds, &a.split)?;
            let mut rep = evaluate_mse(&a.checkpoint, &b.checkpoint, &ds, &split, &n_p, false)?;
            if latency_repeats > 0 {
                let seed = common.seed.unwrap_or(0);
                let lat = benchmark_inference(&a.checkpoint, &n_p, latency_repeats, seed)?;
                for (row, l) in rep.rows.iter_mut().zip(lat) {
                    row.latency_ms_mean = Some(l.latency_ms_mean);
                    row.latency_ms_std = Some(l.latency_ms_std);
                }
            }
            report::write_report(&out, &rep.rows)?;
            let summary = sibling(&out, "summary.txt");
            let text = report::summary_text(&rep.rows, &[]);
            std::fs::write(&summary, &text).map_err(|e| LabError::io(&summary, e))?;
            say!(common.quiet, "{text}");
            let mut m = RunManifest::new("eval", &EvalArgs { n_p, latency_repeats });
            m.seed = common.seed;
            m.inputs.extend([ae, baseline, dataset]);
            m.outputs.extend([out.clone(), summary]);
            m.write_beside(&out, t0.elapsed())?;
        }
        Command::Infer {
            ckpt,
            csi,
            out,
            paths_out,
            threshold_db,
            min_separation,
            common,
        } => {
            let c = read_checkpoint(&ckpt)?;
            let rows: Vec<CsiRecord> = report::read_records(&csi)?;
            if rows.is_empty() {
                return Err(LabError::Usage(format!("{}: no CSI rows", csi.display())));
            }
            let samples: Vec<CsiSample> = rows
                .iter()
                .map(|r| CsiSample {
                    magnitude: r.magnitude,
                    phase: r.phase,
                })
                .collect();
            let dps = c.checkpoint.predict_dps(&samples, c.delay_step_s)?;
            let paths = dps
                .iter()
                .map(|d| extract_paths(d, threshold_db, min_separation))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            report::write_dps(&out, &dps)?;
            let paths_out = paths_out.unwrap_or_else(|| sibling(&out, "paths.csv"));
            report::write_paths(&paths_out, &paths)?;
            say!(
                common.quiet,
                "{} DPS rows, {} paths -> {}",
                dps.len(),
                paths.iter().map(Vec::len).sum::<usize>(),
                out.display()
            );
            let mut m = RunManifest::new(
                "infer",
                &PeakConfig {
                    threshold_db,
                    min_separation_bins: min_separation,
                },
            );
            m.inputs.extend([ckpt, csi]);
            m.outputs.extend([out.clone(), paths_out]);
            m.write_beside(&out, t0.elapsed())?;
        }
        Command::Bench {
            ckpt,
            n_p,
            repeats,
            out,
            common,
        } => {
            let c = read_checkpoint(&ckpt)?;
            let seed = common.seed.unwrap_or(0);
            let rows = benchmark_inference(&c.checkpoint, &n_p, repeats, seed)?;
            report::write_latency(&out, &rows)?;
            for r in &rows {
                say!(
                    common.quiet,
                    "N_p={:>2}  {:.4} ± {:.4} ms",
                    r.n_p,
                    r.latency_ms_mean,
                    r.latency_ms_std
                );
            }
            let mut m = RunManifest::new("bench", &BenchArgs { n_p, repeats });
            m.seed = Some(seed);
            m.inputs.push(ckpt);
            m.outputs.push(out.clone());
            m.write_beside(&out, t0.elapsed())?;
        }
        Command::Export { input, out, db, .. } => {
            let kind = report::detect_kind(&input)?.unwrap_or(report::ExportKind::Dps);
            let mut buf = Vec::new();
            let res = match kind {
                report::ExportKind::Dps => report::export_dps(&report::read_dps(&input)?, db, &mut buf),
                report::ExportKind::Report => {
                    report::export_report(&report::read_records(&input)?, db, &mut buf)
                }
            };
            res.map_err(|e| LabError::Parse {
                path: input.clone(),
                msg: e.to_string(),
            })?;
            match out {
                Some(p) => std::fs::write(&p, &buf).map_err(|e| LabError::io(&p, e))?,
                None => {
                    use std::io::Write;
                    std::io::stdout()
                        .write_all(&buf)
                        .map_err(|e| LabError::io("<stdout>", e))?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CsiRecord {
    magnitude: f64,
    phase: f64,
}

#[derive(Serialize)]
struct EvalArgs {
    n_p: Vec<usize>,
    latency_repeats: usize,
}

#[derive(Serialize)]
struct BenchArgs {
    n_p: Vec<usize>,
    repeats: usize,
}

/// `<path>.<suffix>`, next to the main output.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
