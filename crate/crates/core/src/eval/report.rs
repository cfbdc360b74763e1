//! CSV and JSON renderings of evaluation results. CSV is the canonical
//! output; JSON carries the summary tables.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::experiment::{CavSweepRow, CompressionSweep, Evaluation, ThresholdAp};
use super::stats::{PointsPerBox, PolarHistogram};
use crate::error::{Error, Result};
use crate::perception::pipeline::Strategy;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Invariant(format!("csv encoding for {}: {other:?}", path.display())),
    }
}

/// Serializes `rows` as CSV with a header line.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| csv_err(Path::new("<memory>"), e))?;
    }
    w.into_inner()
        .map_err(|e| Error::Invariant(format!("csv flush: {e}")))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_bytes(path, &to_csv(rows)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn threshold_key(t: f64) -> String {
    format!("{t}")
}

fn ap_map(aps: &[ThresholdAp]) -> BTreeMap<String, f64> {
    aps.iter()
        .map(|a| (threshold_key(a.iou_threshold), a.ap))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApTableRow {
    pub strategy: Strategy,
    /// AP keyed by IoU threshold.
    pub ap: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommRow {
    pub strategy: Strategy,
    pub frames: usize,
    pub messages: usize,
    pub bytes: u64,
    pub transmit_time_s: f64,
    pub mean_message_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub ap_table: Vec<ApTableRow>,
    pub comm: Vec<CommRow>,
    pub details: Vec<super::experiment::StrategySummary>,
}

impl RunSummary {
    pub fn of(ev: &Evaluation) -> Self {
        Self {
            ap_table: ev
                .summary
                .iter()
                .map(|s| ApTableRow {
                    strategy: s.strategy,
                    ap: ap_map(&s.aps),
                })
                .collect(),
            comm: ev
                .summary
                .iter()
                .map(|s| CommRow {
                    strategy: s.strategy,
                    frames: s.frames,
                    messages: s.messages,
                    bytes: s.bytes,
                    transmit_time_s: s.transmit_time_s,
                    mean_message_bytes: s.mean_message_bytes,
                })
                .collect(),
            details: ev.summary.clone(),
        }
    }

    /// Fixed-width text table, strategies down and thresholds across.
    pub fn to_table(&self) -> String {
        let keys: Vec<&String> = self
            .ap_table
            .first()
            .map(|r| r.ap.keys().collect())
            .unwrap_or_default();
        let mut out = format!("{:<14}", "strategy");
        for k in &keys {
            out.push_str(&format!(" {:>9}", format!("AP@{k}")));
        }
        out.push_str(&format!(" {:>14} {:>12}\n", "bytes/frame", "ms/frame"));
        for (r, c) in self.ap_table.iter().zip(&self.comm) {
            out.push_str(&format!("{:<14}", r.strategy.name()));
            for k in &keys {
                out.push_str(&format!(" {:>9.4}", r.ap[*k]));
            }
            let per = |v: f64| {
                if c.frames == 0 {
                    0.0
                } else {
                    v / c.frames as f64
                }
            };
            out.push_str(&format!(
                " {:>14.0} {:>12.3}\n",
                per(c.bytes as f64),
                per(c.transmit_time_s) * 1e3
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavSweepRecord {
    pub n_cavs: usize,
    pub strategy: Strategy,
    pub iou_threshold: f64,
    pub ap: f64,
    pub true_positives: usize,
    pub detections: usize,
    pub ground_truth: usize,
    pub bytes: u64,
}

pub fn cav_sweep_records(rows: &[CavSweepRow]) -> Vec<CavSweepRecord> {
    rows.iter()
        .flat_map(|r| {
            r.aps.iter().map(move |a| CavSweepRecord {
                n_cavs: r.n_cavs,
                strategy: r.strategy,
                iou_threshold: a.iou_threshold,
                ap: a.ap,
                true_positives: a.true_positives,
                detections: a.detections,
                ground_truth: a.ground_truth,
                bytes: r.bytes,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionRecord {
    pub codec: String,
    pub nominal_rate: f64,
    pub rate: f64,
    pub iou_threshold: f64,
    pub ap: f64,
    pub messages: usize,
    pub bytes: u64,
    pub transmit_time_s: f64,
    pub mean_message_bytes: f64,
    pub mean_message_time_s: f64,
}

pub fn compression_records(sweep: &CompressionSweep) -> Vec<CompressionRecord> {
    sweep
        .rows
        .iter()
        .flat_map(|r| {
            r.aps.iter().map(move |a| CompressionRecord {
                codec: r.codec.clone(),
                nominal_rate: r.nominal_rate,
                rate: r.rate,
                iou_threshold: a.iou_threshold,
                ap: a.ap,
                messages: r.messages,
                bytes: r.bytes,
                transmit_time_s: r.transmit_time_s,
                mean_message_bytes: r.mean_message_bytes,
                mean_message_time_s: r.mean_message_time_s,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarRecord {
    pub angle_lo: f64,
    pub angle_hi: f64,
    pub radius_lo: f64,
    pub radius_hi: f64,
    pub count: u64,
    pub log_count: f64,
}

pub fn polar_records(h: &PolarHistogram) -> Vec<PolarRecord> {
    let mut out = Vec::new();
    for (a, row) in h.counts.iter().enumerate() {
        for (r, c) in row.iter().enumerate() {
            out.push(PolarRecord {
                angle_lo: h.angle_edges[a],
                angle_hi: h.angle_edges[a + 1],
                radius_lo: h.radius_edges[r],
                radius_hi: h.radius_edges[r + 1],
                count: *c,
                log_count: h.log_counts[a][r],
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialRecord {
    pub radius_lo: f64,
    pub radius_hi: f64,
    pub boxes: usize,
    pub ego_points: u64,
    pub all_points: u64,
    pub mean_ego_points: f64,
    pub mean_all_points: f64,
}

pub fn radial_records(p: &PointsPerBox) -> Vec<RadialRecord> {
    p.bins
        .iter()
        .map(|b| {
            let mean = |v: u64| {
                if b.boxes == 0 {
                    0.0
                } else {
                    v as f64 / b.boxes as f64
                }
            };
            RadialRecord {
                radius_lo: b.radius_lo,
                radius_hi: b.radius_hi,
                boxes: b.boxes,
                ego_points: b.ego_points,
                all_points: b.all_points,
                mean_ego_points: mean(b.ego_points),
                mean_all_points: mean(b.all_points),
            }
        })
        .collect()
}
