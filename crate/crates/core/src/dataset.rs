//! Dataset persistence, splitting, and normalization.
//!
//! A dataset directory holds two files: `data.bin` with the raw samples
//! (little-endian f64, `[instance][channel][sample]`) and `manifest.jsonl`
//! with one JSON record per instance plus a header record carrying the meta
//! and a content hash. The hash folds over the binary payload and every
//! manifest record, so corruption of either file is caught at load time.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmark::{AnomalySpec, GenError, InstanceParams, SignalInstance};
use crate::rng::SeededRng;

pub const DATA_FILE: &str = "data.bin";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
const DATA_MAGIC: &[u8; 8] = b"ISHMDAT1";
const FORMAT_VERSION: u32 = 1;
const SPLIT_STREAM: u64 = 0x53504C4954; // "SPLIT"

/// Added to per-channel std before dividing, guarding constant channels.
pub const NORM_EPS: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("content hash mismatch: manifest has {expected:#018x}, files give {actual:#018x}")]
    HashMismatch { expected: u64, actual: u64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("corrupt dataset: {0}")]
    Corrupt(String),
    #[error("split fraction {0} outside (0, 1)")]
    InvalidSplit(f64),
    #[error("empty training set")]
    EmptyTrain,
    #[error(transparent)]
    Gen(#[from] GenError),
}

impl DataError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.to_path_buf(), source }
    }
}

/// Dataset-level metadata, echoed in the manifest header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub stage: u8,
    pub seed: u64,
    pub n: usize,
    pub version: String,
}

/// An ordered collection of labeled instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub instances: Vec<SignalInstance>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn n_channels(&self) -> usize {
        self.instances.first().map_or(0, SignalInstance::n_channels)
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.meta.n != self.instances.len() {
            return Err(DataError::Corrupt(format!(
                "meta.n = {} but {} instances",
                self.meta.n,
                self.instances.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for inst in &self.instances {
            inst.validate()?;
            if !seen.insert(inst.instance_id) {
                return Err(DataError::Corrupt(format!("duplicate id {}", inst.instance_id)));
            }
        }
        Ok(())
    }
}

fn fnv1a64(hash: u64, bytes: &[u8]) -> u64 {
    let mut h = hash;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

#[derive(Debug, Serialize, Deserialize)]
struct ManifestHeader {
    #[serde(rename = "type")]
    kind: String,
    stage: u8,
    seed: u64,
    n: usize,
    version: String,
    n_channels: usize,
    n_samples: usize,
    content_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRecord {
    id: u64,
    stage: u8,
    label: bool,
    anomaly: Option<AnomalySpec>,
    params: InstanceParams,
}

fn encode_data_file(ds: &Dataset) -> Vec<u8> {
    let channels = ds.n_channels();
    let samples = ds.instances.first().map_or(0, SignalInstance::n_samples);
    let mut buf = Vec::with_capacity(32 + ds.len() * channels * samples * 8);
    buf.extend_from_slice(DATA_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(ds.meta.stage as u32).to_le_bytes());
    buf.extend_from_slice(&(ds.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(channels as u32).to_le_bytes());
    buf.extend_from_slice(&(samples as u32).to_le_bytes());
    for inst in &ds.instances {
        for channel in &inst.data {
            for &v in channel {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    buf
}

/// Persist the dataset; returns the manifest path.
pub fn save(ds: &Dataset, dir: &Path) -> Result<PathBuf, DataError> {
    ds.validate()?;
    fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;

    let data_path = dir.join(DATA_FILE);
    let data_bytes = encode_data_file(ds);
    fs::write(&data_path, &data_bytes).map_err(|e| DataError::io(&data_path, e))?;

    let records: Vec<String> = ds
        .instances
        .iter()
        .map(|inst| {
            serde_json::to_string(&ManifestRecord {
                id: inst.instance_id,
                stage: inst.stage,
                label: inst.label,
                anomaly: inst.anomaly,
                params: inst.params.clone(),
            })
        })
        .collect::<Result<_, _>>()
        .map_err(|e| DataError::Json { path: dir.join(MANIFEST_FILE), source: e })?;

    let mut hash = fnv1a64(FNV_OFFSET, &data_bytes);
    for line in &records {
        hash = fnv1a64(hash, line.as_bytes());
    }

    let header = ManifestHeader {
        kind: "header".into(),
        stage: ds.meta.stage,
        seed: ds.meta.seed,
        n: ds.meta.n,
        version: ds.meta.version.clone(),
        n_channels: ds.n_channels(),
        n_samples: ds.instances.first().map_or(0, SignalInstance::n_samples),
        content_hash: format!("{hash:#018x}"),
    };

    let manifest_path = dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest_path).map_err(|e| DataError::io(&manifest_path, e))?;
    let mut w = BufWriter::new(file);
    let header_line = serde_json::to_string(&header)
        .map_err(|e| DataError::Json { path: manifest_path.clone(), source: e })?;
    writeln!(w, "{header_line}").map_err(|e| DataError::io(&manifest_path, e))?;
    for line in &records {
        writeln!(w, "{line}").map_err(|e| DataError::io(&manifest_path, e))?;
    }
    w.flush().map_err(|e| DataError::io(&manifest_path, e))?;
    Ok(manifest_path)
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32, DataError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| DataError::io(path, e))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64, DataError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| DataError::io(path, e))?;
    Ok(u64::from_le_bytes(b))
}

/// Load and verify a dataset saved by [`save`].
pub fn load(dir: &Path) -> Result<Dataset, DataError> {
    let data_path = dir.join(DATA_FILE);
    let data_bytes = fs::read(&data_path).map_err(|e| DataError::io(&data_path, e))?;

    let manifest_path = dir.join(MANIFEST_FILE);
    let file = fs::File::open(&manifest_path).map_err(|e| DataError::io(&manifest_path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| DataError::Corrupt("manifest is empty".into()))?
        .map_err(|e| DataError::io(&manifest_path, e))?;
    let header: ManifestHeader = serde_json::from_str(&header_line)
        .map_err(|e| DataError::Json { path: manifest_path.clone(), source: e })?;
    if header.kind != "header" {
        return Err(DataError::Corrupt("first manifest line is not a header record".into()));
    }

    let mut record_lines = Vec::with_capacity(header.n);
    for line in lines {
        let line = line.map_err(|e| DataError::io(&manifest_path, e))?;
        if !line.trim().is_empty() {
            record_lines.push(line);
        }
    }
    if record_lines.len() != header.n {
        return Err(DataError::Corrupt(format!(
            "manifest has {} records, header says {}",
            record_lines.len(),
            header.n
        )));
    }

    let mut hash = fnv1a64(FNV_OFFSET, &data_bytes);
    for line in &record_lines {
        hash = fnv1a64(hash, line.as_bytes());
    }
    let expected = u64::from_str_radix(header.content_hash.trim_start_matches("0x"), 16)
        .map_err(|_| DataError::Corrupt(format!("bad content hash '{}'", header.content_hash)))?;
    if hash != expected {
        return Err(DataError::HashMismatch { expected, actual: hash });
    }

    // decode the binary payload
    let mut cursor = &data_bytes[..];
    let mut magic = [0u8; 8];
    cursor.read_exact(&mut magic).map_err(|e| DataError::io(&data_path, e))?;
    if &magic != DATA_MAGIC {
        return Err(DataError::Corrupt("bad data file magic".into()));
    }
    let version = read_u32(&mut cursor, &data_path)?;
    if version != FORMAT_VERSION {
        return Err(DataError::Corrupt(format!("unsupported data format version {version}")));
    }
    let stage = read_u32(&mut cursor, &data_path)? as u8;
    let n = read_u64(&mut cursor, &data_path)? as usize;
    let channels = read_u32(&mut cursor, &data_path)? as usize;
    let samples = read_u32(&mut cursor, &data_path)? as usize;
    if n != header.n || channels != header.n_channels || samples != header.n_samples {
        return Err(DataError::ShapeMismatch(format!(
            "binary header ({n} x {channels} x {samples}) disagrees with manifest \
             ({} x {} x {})",
            header.n, header.n_channels, header.n_samples
        )));
    }
    let expected_len = n * channels * samples * 8;
    if cursor.len() != expected_len {
        return Err(DataError::ShapeMismatch(format!(
            "payload is {} bytes, expected {expected_len}",
            cursor.len()
        )));
    }

    let mut instances = Vec::with_capacity(n);
    for (i, line) in record_lines.iter().enumerate() {
        let rec: ManifestRecord = serde_json::from_str(line)
            .map_err(|e| DataError::Json { path: manifest_path.clone(), source: e })?;
        if rec.id != i as u64 {
            return Err(DataError::Corrupt(format!(
                "record {i} carries id {}, expected records in id order",
                rec.id
            )));
        }
        let mut data = Vec::with_capacity(channels);
        for _ in 0..channels {
            let mut ch = Vec::with_capacity(samples);
            for _ in 0..samples {
                let mut b = [0u8; 8];
                cursor.read_exact(&mut b).map_err(|e| DataError::io(&data_path, e))?;
                ch.push(f64::from_le_bytes(b));
            }
            data.push(ch);
        }
        instances.push(SignalInstance {
            data,
            label: rec.label,
            anomaly: rec.anomaly,
            params: rec.params,
            stage: rec.stage,
            instance_id: rec.id,
        });
    }

    let ds = Dataset {
        meta: DatasetMeta { stage, seed: header.seed, n, version: header.version },
        instances,
    };
    ds.validate()?;
    Ok(ds)
}

/// Deterministic shuffle split. Instances keep their original ids; the two
/// halves are disjoint and exhaustive.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidSplit(train_fraction));
    }
    let n = ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SeededRng::new(seed, SPLIT_STREAM);
    for i in (1..n).rev() {
        let j = rng.next_index(i + 1);
        order.swap(i, j);
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    let make = |idx: &[usize]| {
        let mut picked: Vec<usize> = idx.to_vec();
        picked.sort_unstable();
        let instances: Vec<SignalInstance> =
            picked.iter().map(|&i| ds.instances[i].clone()).collect();
        Dataset {
            meta: DatasetMeta {
                stage: ds.meta.stage,
                seed: ds.meta.seed,
                n: instances.len(),
                version: ds.meta.version.clone(),
            },
            instances,
        }
    };
    Ok((make(&order[..n_train]), make(&order[n_train..])))
}

/// Per-channel z-scoring statistics from a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Estimate per-channel mean and population std over every sample.
pub fn norm_stats(train: &[SignalInstance]) -> Result<NormStats, DataError> {
    let first = train.first().ok_or(DataError::EmptyTrain)?;
    let channels = first.n_channels();
    let mut mean = vec![0.0; channels];
    let mut count = vec![0usize; channels];
    for inst in train {
        for (c, ch) in inst.data.iter().enumerate() {
            mean[c] += ch.iter().sum::<f64>();
            count[c] += ch.len();
        }
    }
    for c in 0..channels {
        mean[c] /= count[c] as f64;
    }
    let mut var = vec![0.0; channels];
    for inst in train {
        for (c, ch) in inst.data.iter().enumerate() {
            var[c] += ch.iter().map(|x| (x - mean[c]) * (x - mean[c])).sum::<f64>();
        }
    }
    let std = var.iter().zip(&count).map(|(v, &n)| (v / n as f64).sqrt()).collect();
    Ok(NormStats { mean, std })
}

/// Z-score an instance's channels with the training statistics.
pub fn apply_norm(inst: &SignalInstance, stats: &NormStats) -> SignalInstance {
    let mut out = inst.clone();
    for (c, ch) in out.data.iter_mut().enumerate() {
        let m = stats.mean[c];
        let s = stats.std[c] + NORM_EPS;
        for v in ch.iter_mut() {
            *v = (*v - m) / s;
        }
    }
    out
}

/// Optional CSV export: one row per (instance, channel) with the raw samples.
pub fn export_csv(ds: &Dataset, path: &Path) -> Result<(), DataError> {
    let file = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let samples = ds.instances.first().map_or(0, SignalInstance::n_samples);
    let mut header = String::from("instance_id,channel,label");
    for i in 0..samples {
        header.push_str(&format!(",s{i}"));
    }
    writeln!(w, "{header}").map_err(|e| DataError::io(path, e))?;
    for inst in &ds.instances {
        for (c, ch) in inst.data.iter().enumerate() {
            let mut row = format!("{},{},{}", inst.instance_id, c, inst.label as u8);
            for v in ch {
                row.push_str(&format!(",{v}"));
            }
            writeln!(w, "{row}").map_err(|e| DataError::io(path, e))?;
        }
    }
    w.flush().map_err(|e| DataError::io(path, e))
}
