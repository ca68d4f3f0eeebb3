use std::path::Path;

use c2s_core::sounding::{Dataset, NormStats, Provenance, Sequence};
use serde::{Deserialize, Serialize};

use super::{frame, read_bytes, unframe, write_bytes};
use crate::error::{LabError, Result};

pub const DATASET_MAGIC: &[u8; 8] = b"C2SDSET1";
pub const DATASET_VERSION: u32 = 1;

/// Per-record label columns: pair, position, LoS flag.
const LABEL_COLS: usize = 3;

#[derive(Debug, Serialize, Deserialize)]
struct SequenceHeader {
    pair: u32,
    is_los: bool,
    first_position: u32,
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    format_version: u32,
    n_bins: usize,
    n_p: usize,
    delay_step_s: f64,
    n_records: usize,
    window_count: usize,
    los_window_count: usize,
    dps_values: usize,
    csi_values: usize,
    label_values: usize,
    sequences: Vec<SequenceHeader>,
    norm: NormStats,
    provenance: Provenance,
}

pub fn encode_dataset(d: &Dataset) -> Vec<u8> {
    let n = d.n_records();
    let seqs = d.sequences();
    let header = DatasetHeader {
        format_version: DATASET_VERSION,
        n_bins: d.n_bins,
        n_p: d.n_p,
        delay_step_s: d.delay_step,
        n_records: n,
        window_count: d.window_count(d.n_p),
        los_window_count: d.los_window_count(d.n_p),
        dps_values: n * d.n_bins,
        csi_values: n * 2,
        label_values: n * LABEL_COLS,
        sequences: seqs
            .iter()
            .map(|s| SequenceHeader {
                pair: s.pair,
                is_los: s.is_los,
                first_position: s.first_position,
                len: s.len(),
            })
            .collect(),
        norm: d.norm,
        provenance: d.provenance.clone(),
    };
    let mut payload = Vec::with_capacity(n * (d.n_bins + 2 + LABEL_COLS));
    for s in seqs {
        payload.extend_from_slice(s.dps());
    }
    for s in seqs {
        payload.extend_from_slice(s.csi());
    }
    for s in seqs {
        for r in 0..s.len() {
            payload.push(s.pair as f32);
            payload.push((s.first_position as usize + r) as f32);
            payload.push(if s.is_los { 1.0 } else { 0.0 });
        }
    }
    frame(DATASET_MAGIC, &header, &payload)
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let (h, payload) = unframe::<DatasetHeader>(bytes, DATASET_MAGIC, DATASET_VERSION, |h| {
        h.dps_values + h.csi_values + h.label_values
    })?;
    let n = h.n_records;
    if h.sequences.iter().map(|s| s.len).sum::<usize>() != n
        || h.dps_values != n * h.n_bins
        || h.csi_values != 2 * n
        || h.label_values != LABEL_COLS * n
    {
        return Err(LabError::Header("block sizes disagree with the record count".into()));
    }
    let (dps, rest) = payload.split_at(h.dps_values);
    let (csi, labels) = rest.split_at(h.csi_values);
    let mut sequences = Vec::with_capacity(h.sequences.len());
    let mut row = 0;
    for s in &h.sequences {
        for r in 0..s.len {
            let l = &labels[(row + r) * LABEL_COLS..(row + r + 1) * LABEL_COLS];
            let want = [s.pair as f32, (s.first_position as usize + r) as f32, f32::from(u8::from(s.is_los))];
            if l != want {
                return Err(LabError::Header(format!("label block disagrees at record {}", row + r)));
            }
        }
        sequences.push(Sequence::new(
            s.pair,
            s.is_los,
            s.first_position,
            h.n_bins,
            dps[row * h.n_bins..(row + s.len) * h.n_bins].to_vec(),
            csi[row * 2..(row + s.len) * 2].to_vec(),
        )?);
        row += s.len;
    }
    let d = Dataset::new(h.n_bins, h.n_p, h.delay_step_s, sequences, h.norm, h.provenance)?;
    if d.window_count(d.n_p) != h.window_count || d.los_window_count(d.n_p) != h.los_window_count {
        return Err(LabError::Header("declared window counts disagree with the sequences".into()));
    }
    Ok(d)
}

pub fn write_dataset(d: &Dataset, path: &Path) -> Result<()> {
    write_bytes(path, &encode_dataset(d))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&read_bytes(path)?)
}
