//! Delimited-text outputs: evaluation reports, latency tables, predicted
//! DPS, extracted paths and plot exports.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use c2s_core::sounding::DelayPowerSpectrum;
use c2s_core::train::{EvalRow, PathEstimate, SeedSummary};
use serde::{Deserialize, Serialize};

use crate::bench::LatencyRow;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub n_p: usize,
    pub mse_baseline: f64,
    pub mse_ae: f64,
    pub improvement_pct: f64,
    pub latency_ms_mean: Option<f64>,
    pub latency_ms_std: Option<f64>,
}

impl From<&EvalRow> for ReportRecord {
    fn from(r: &EvalRow) -> Self {
        Self {
            n_p: r.n_p,
            mse_baseline: r.mse_baseline,
            mse_ae: r.mse_ae,
            improvement_pct: r.improvement_pct(),
            latency_ms_mean: r.latency_ms_mean,
            latency_ms_std: r.latency_ms_std,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub row: usize,
    pub delay_s: f64,
    pub range_m: f64,
    pub power: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> LabError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::io(path, io),
        other => LabError::Parse {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

pub fn write_records<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|x| x.map_err(|e| csv_err(path, e))).collect()
}

pub const REPORT_HEADER: [&str; 6] = [
    "n_p",
    "mse_baseline",
    "mse_ae",
    "improvement_pct",
    "latency_ms_mean",
    "latency_ms_std",
];
pub const LATENCY_HEADER: [&str; 4] = ["n_p", "repeats", "latency_ms_mean", "latency_ms_std"];
pub const PATHS_HEADER: [&str; 4] = ["row", "delay_s", "range_m", "power"];

pub fn write_report(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let recs: Vec<ReportRecord> = rows.iter().map(ReportRecord::from).collect();
    write_records(path, &REPORT_HEADER, &recs)
}

pub fn write_latency(path: &Path, rows: &[LatencyRow]) -> Result<()> {
    write_records(path, &LATENCY_HEADER, rows)
}

pub fn write_paths(path: &Path, paths: &[Vec<PathEstimate>]) -> Result<()> {
    let recs: Vec<PathRecord> = paths
        .iter()
        .enumerate()
        .flat_map(|(row, ps)| {
            ps.iter().map(move |p| PathRecord {
                row,
                delay_s: p.delay_s,
                range_m: p.range_m,
                power: p.power,
            })
        })
        .collect();
    write_records(path, &PATHS_HEADER, &recs)
}

/// Human-readable table of per-seed means, or of single-run rows.
pub fn summary_text(rows: &[EvalRow], seeds: &[SeedSummary]) -> String {
    let mut s = String::new();
    if seeds.is_empty() {
        let _ = writeln!(s, "{:>5} {:>12} {:>12} {:>10} {:>12}", "N_p", "baseline", "c2s-ae", "impr %", "roundtrip");
        for r in rows {
            let _ = writeln!(
                s,
                "{:>5} {:>12.5} {:>12.5} {:>10.2} {:>12.5}",
                r.n_p,
                r.mse_baseline,
                r.mse_ae,
                r.improvement_pct(),
                r.ae_roundtrip_mse
            );
        }
    } else {
        let _ = writeln!(s, "{:>5} {:>20} {:>20} {:>10}", "N_p", "baseline", "c2s-ae", "impr %");
        for r in seeds {
            let _ = writeln!(
                s,
                "{:>5} {:>11.5} ± {:<7.5} {:>11.5} ± {:<7.5} {:>10.2}",
                r.n_p,
                r.mse_baseline_mean,
                r.mse_baseline_std,
                r.mse_ae_mean,
                r.mse_ae_std,
                r.improvement_pct()
            );
        }
    }
    s
}

/// Wide DPS table: one line per measurement point, columns `p0..`.
pub fn write_dps(path: &Path, rows: &[DelayPowerSpectrum]) -> Result<()> {
    let n_bins = rows.first().map_or(0, DelayPowerSpectrum::n_bins);
    let mut header = vec!["row".to_string(), "delay_step_s".to_string()];
    header.extend((0..n_bins).map(|k| format!("p{k}")));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (i, d) in rows.iter().enumerate() {
        let mut rec = vec![i.to_string(), d.delay_step.to_string()];
        rec.extend(d.power.iter().map(f64::to_string));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn read_dps(path: &Path) -> Result<Vec<DelayPowerSpectrum>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let bad = |msg: String| LabError::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let vals: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|e| bad(format!("{v:?}: {e}"))))
            .collect::<Result<_>>()?;
        let (step, power) = vals.split_first().ok_or_else(|| bad("empty DPS row".into()))?;
        out.push(DelayPowerSpectrum::new(power.to_vec(), *step)?);
    }
    Ok(out)
}

/// What an export input file contains, detected from its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Dps,
    Report,
}

pub fn detect_kind(path: &Path) -> Result<Option<ExportKind>> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let first = text.lines().next().unwrap_or("");
    Ok(match first.split(',').next() {
        Some("row") => Some(ExportKind::Dps),
        Some("n_p") => Some(ExportKind::Report),
        _ if first.trim().is_empty() => None,
        _ => {
            return Err(LabError::Parse {
                path: path.to_path_buf(),
                msg: "unrecognized header; expected a DPS or report file".into(),
            })
        }
    })
}

/// Long-format plot series: `row,bin,delay_s,power` (or `power_db`).
pub fn export_dps<W: io::Write>(rows: &[DelayPowerSpectrum], db: bool, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["row", "bin", "delay_s", if db { "power_db" } else { "power" }])?;
    for (i, d) in rows.iter().enumerate() {
        for (k, &p) in d.power.iter().enumerate() {
            let v = if db { 10.0 * p.log10() } else { p };
            w.write_record(&[i.to_string(), k.to_string(), (k as f64 * d.delay_step).to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// MSE versus `N_p` series.
pub fn export_report<W: io::Write>(rows: &[ReportRecord], db: bool, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let (b, a) = if db {
        ("mse_baseline_db", "mse_ae_db")
    } else {
        ("mse_baseline", "mse_ae")
    };
    w.write_record(["n_p", b, a, "improvement_pct"])?;
    let conv = |x: f64| if db { 10.0 * x.log10() } else { x };
    for r in rows {
        w.write_record(&[
            r.n_p.to_string(),
            conv(r.mse_baseline).to_string(),
            conv(r.mse_ae).to_string(),
            r.improvement_pct.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
