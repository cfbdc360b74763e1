//! On-disk dataset layout.
//!
//! ```text
//! <root>/manifest.json
//! <root>/scenario_<k>/meta.json
//! <root>/scenario_<k>/frames/<t>/<cav_id>.pcbin
//! ```
//!
//! `.pcbin` is little-endian: magic `CPCL`, u32 version, u64 point count, then
//! `x, y, z, intensity` as f32 per point, then a CRC-32 of everything before it.
//! Poses and boxes in `meta.json` are written with 9 significant digits, which
//! round-trips the f32-exact values the generator produces.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{sensor_frame_id, Frame, Scenario, ScenarioConfig, Vehicle};
use crate::error::{Error, Result};
use crate::geom::{OrientedBox, Point, PointCloud, Pose};

pub const DATASET_VERSION: u32 = 1;
pub const PCBIN_VERSION: u32 = 1;
const PCBIN_MAGIC: &[u8; 4] = b"CPCL";
const PCBIN_HEADER: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub seed: u64,
    pub road_type: super::RoadType,
    pub frames: u32,
    pub n_cavs: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub scenarios: Vec<ManifestEntry>,
}

fn sig9(v: f64) -> f64 {
    format!("{v:.8e}").parse().expect("formatted float parses")
}

fn from_sig9(v: f64) -> f64 {
    v as f32 as f64
}

#[derive(Serialize, Deserialize)]
struct VehicleRecord {
    id: u32,
    /// x, y, z, length, width, height, yaw
    bbox: [f64; 7],
    velocity: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    index: u32,
    timestamp_s: f64,
    cav_ids: Vec<u32>,
    vehicles: Vec<VehicleRecord>,
    /// id -> x, y, z, yaw, pitch, roll
    true_poses: BTreeMap<u32, [f64; 6]>,
    noisy_poses: BTreeMap<u32, [f64; 6]>,
}

#[derive(Serialize, Deserialize)]
struct MetaRecord {
    version: u32,
    config: ScenarioConfig,
    ego_id: u32,
    frames: Vec<FrameRecord>,
}

fn pose_record(p: &Pose) -> [f64; 6] {
    let [x, y, z] = p.translation();
    [x, y, z, p.yaw(), p.pitch(), p.roll()].map(sig9)
}

fn pose_from_record(r: &[f64; 6]) -> Pose {
    let r = r.map(from_sig9);
    Pose::new([r[0], r[1], r[2]], r[3], r[4], r[5])
}

fn frame_record(f: &Frame) -> FrameRecord {
    FrameRecord {
        index: f.index,
        timestamp_s: sig9(f.timestamp_s),
        cav_ids: f.cav_ids.clone(),
        vehicles: f
            .vehicles
            .iter()
            .map(|v| {
                let b = &v.bbox;
                VehicleRecord {
                    id: v.id,
                    bbox: [
                        b.center[0],
                        b.center[1],
                        b.center[2],
                        b.length,
                        b.width,
                        b.height,
                        b.yaw,
                    ]
                    .map(sig9),
                    velocity: v.velocity.map(sig9),
                }
            })
            .collect(),
        true_poses: f
            .true_poses
            .iter()
            .map(|(k, p)| (*k, pose_record(p)))
            .collect(),
        noisy_poses: f
            .noisy_poses
            .iter()
            .map(|(k, p)| (*k, pose_record(p)))
            .collect(),
    }
}

pub fn encode_pcbin(cloud: &PointCloud) -> Vec<u8> {
    let mut buf = Vec::with_capacity(PCBIN_HEADER + cloud.len() * 16 + 4);
    buf.extend_from_slice(PCBIN_MAGIC);
    buf.extend_from_slice(&PCBIN_VERSION.to_le_bytes());
    buf.extend_from_slice(&(cloud.len() as u64).to_le_bytes());
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.intensity] {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn decode_pcbin(bytes: &[u8], path: &Path, frame_id: &str) -> Result<PointCloud> {
    if bytes.len() < PCBIN_HEADER + 4 {
        return Err(Error::Truncated(path.to_path_buf()));
    }
    if &bytes[..4] != PCBIN_MAGIC {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            reason: "bad magic".into(),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != PCBIN_VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: version,
            expected: PCBIN_VERSION,
        });
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let expected_len = (count as u128) * 16 + PCBIN_HEADER as u128 + 4;
    if (bytes.len() as u128) < expected_len {
        return Err(Error::Truncated(path.to_path_buf()));
    }
    if (bytes.len() as u128) > expected_len {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            reason: "trailing bytes".into(),
        });
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(Error::Checksum(path.to_path_buf()));
    }
    let points = body[PCBIN_HEADER..]
        .chunks_exact(16)
        .map(|c| {
            let f = |i: usize| {
                f32::from_le_bytes(c[i * 4..i * 4 + 4].try_into().expect("4 bytes")) as f64
            };
            Point {
                x: f(0),
                y: f(1),
                z: f(2),
                intensity: f(3),
            }
        })
        .collect();
    Ok(PointCloud::new(frame_id, points))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T, path: &Path) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    out.push(b'\n');
    Ok(out)
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn scenario_dir(root: &Path, k: usize) -> PathBuf {
    root.join(format!("scenario_{k}"))
}

fn write_scenario(dir: &Path, s: &Scenario) -> Result<()> {
    let meta = MetaRecord {
        version: DATASET_VERSION,
        config: s.config.clone(),
        ego_id: s.ego_id,
        frames: s.frames.iter().map(frame_record).collect(),
    };
    let meta_path = dir.join("meta.json");
    write_file(&meta_path, &to_json(&meta, &meta_path)?)?;
    for f in &s.frames {
        for (cav, cloud) in &f.clouds {
            let path = dir
                .join("frames")
                .join(f.index.to_string())
                .join(format!("{cav}.pcbin"));
            write_file(&path, &encode_pcbin(cloud))?;
        }
    }
    Ok(())
}

/// Writes `scenarios` under `root` and returns the manifest.
pub fn write_dataset(scenarios: &[Scenario], root: &Path) -> Result<Manifest> {
    let manifest = Manifest {
        version: DATASET_VERSION,
        scenarios: scenarios
            .iter()
            .enumerate()
            .map(|(k, s)| ManifestEntry {
                name: format!("scenario_{k}"),
                seed: s.config.seed,
                road_type: s.config.road_type,
                frames: s.frames.len() as u32,
                n_cavs: s.config.n_cavs,
            })
            .collect(),
    };
    for (k, s) in scenarios.iter().enumerate() {
        write_scenario(&scenario_dir(root, k), s)?;
    }
    let path = root.join("manifest.json");
    write_file(&path, &to_json(&manifest, &path)?)?;
    Ok(manifest)
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join("manifest.json");
    if !path.is_file() {
        return Err(Error::MissingManifest(root.to_path_buf()));
    }
    let manifest: Manifest = from_json(&path)?;
    if manifest.version != DATASET_VERSION {
        return Err(Error::VersionMismatch {
            path,
            found: manifest.version,
            expected: DATASET_VERSION,
        });
    }
    Ok(manifest)
}

pub fn read_scenario(dir: &Path) -> Result<Scenario> {
    let meta_path = dir.join("meta.json");
    let meta: MetaRecord = from_json(&meta_path)?;
    if meta.version != DATASET_VERSION {
        return Err(Error::VersionMismatch {
            path: meta_path,
            found: meta.version,
            expected: DATASET_VERSION,
        });
    }
    let mut frames = Vec::with_capacity(meta.frames.len());
    for r in meta.frames {
        let vehicles = r
            .vehicles
            .iter()
            .map(|v| {
                let b = v.bbox.map(from_sig9);
                Vehicle {
                    id: v.id,
                    bbox: OrientedBox {
                        center: [b[0], b[1], b[2]],
                        length: b[3],
                        width: b[4],
                        height: b[5],
                        yaw: b[6],
                    },
                    velocity: v.velocity.map(from_sig9),
                }
            })
            .collect();
        let mut clouds = BTreeMap::new();
        for cav in &r.cav_ids {
            let path = dir
                .join("frames")
                .join(r.index.to_string())
                .join(format!("{cav}.pcbin"));
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            clouds.insert(*cav, decode_pcbin(&bytes, &path, &sensor_frame_id(*cav))?);
        }
        frames.push(Frame {
            index: r.index,
            timestamp_s: from_sig9(r.timestamp_s),
            vehicles,
            cav_ids: r.cav_ids,
            true_poses: r
                .true_poses
                .iter()
                .map(|(k, p)| (*k, pose_from_record(p)))
                .collect(),
            noisy_poses: r
                .noisy_poses
                .iter()
                .map(|(k, p)| (*k, pose_from_record(p)))
                .collect(),
            clouds,
        });
    }
    Ok(Scenario {
        config: meta.config,
        ego_id: meta.ego_id,
        frames,
    })
}

pub fn read_dataset(root: &Path) -> Result<Vec<Scenario>> {
    let manifest = read_manifest(root)?;
    manifest
        .scenarios
        .iter()
        .map(|e| read_scenario(&root.join(&e.name)))
        .collect()
}
