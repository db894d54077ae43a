//! Files written by a run: metrics CSV, weights binary and manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use dante_core::{DenseMatrix, MetricsRecord, CSV_HEADER};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::{CliError, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const WEIGHTS_FILE: &str = "weights.bin";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const WEIGHTS_MAGIC: &[u8; 4] = b"DNTW";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn write_metrics_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for r in records {
        w.serialize(r)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

/// Reads a metrics file, insisting on the exact header.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(bad(format!("expected header {}", CSV_HEADER.join(","))));
    }
    let records = r
        .deserialize()
        .collect::<std::result::Result<Vec<MetricsRecord>, _>>()
        .map_err(|e| bad(e.to_string()))?;
    if records.is_empty() {
        return Err(bad("no records".into()));
    }
    Ok(records)
}

/// `DNTW`, version, layer count, then per layer rows, cols and the
/// row-major entries. All integers are u32, all values little endian.
pub fn encode_weights(weights: &[DenseMatrix]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(weights.len() as u32).to_le_bytes());
    for w in weights {
        out.extend_from_slice(&(w.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(w.cols() as u32).to_le_bytes());
        for v in w.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_weights(mut bytes: &[u8]) -> Result<Vec<DenseMatrix>> {
    let bad = |msg: &str| CliError::Config(format!("weights file: {msg}"));
    let u32_at = |r: &mut &[u8]| -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(|_| bad("truncated"))?;
        Ok(u32::from_le_bytes(b))
    };
    let mut magic = [0u8; 4];
    bytes.read_exact(&mut magic).map_err(|_| bad("truncated"))?;
    if &magic != WEIGHTS_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32_at(&mut bytes)?;
    if version != WEIGHTS_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let layers = u32_at(&mut bytes)?;
    let mut out = Vec::with_capacity(layers as usize);
    for _ in 0..layers {
        let rows = u32_at(&mut bytes)? as usize;
        let cols = u32_at(&mut bytes)? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let mut b = [0u8; 8];
            bytes.read_exact(&mut b).map_err(|_| bad("truncated"))?;
            data.push(f64::from_le_bytes(b));
        }
        out.push(DenseMatrix::new(rows, cols, data)?);
    }
    if !bytes.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(out)
}

pub fn write_weights(path: &Path, weights: &[DenseMatrix]) -> Result<()> {
    fs::write(path, encode_weights(weights)).map_err(|e| CliError::io(path.display(), e))
}

pub fn read_weights(path: &Path) -> Result<Vec<DenseMatrix>> {
    decode_weights(&fs::read(path).map_err(|e| CliError::io(path.display(), e))?)
}

/// SHA-256 over `blob <len>\0<bytes>`, the way git names objects.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scheduler: String,
    pub optimizer: String,
    pub steps: u64,
    pub weights_updated: u64,
    pub am_iters: usize,
    pub skipped_steps: u64,
    pub budget_exhausted: bool,
    pub final_train_loss: f64,
    pub final_test_loss: f64,
    pub final_test_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub seed: u64,
    /// `ok` or `numeric_failure`.
    pub status: String,
    pub config: ExperimentConfig,
    /// Hash of the config echo; identical experiments share it.
    pub content_hash: String,
    /// Hashes of the files written next to the manifest.
    pub files: BTreeMap<String, String>,
    pub summary: RunSummary,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                CliError::Config(format!("{}: no manifest", dir.display()))
            } else {
                CliError::io(path.display(), e)
            }
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(path.display(), e))
    }
}

/// Creates `dir`, refusing to reuse a non-empty one unless `force`.
pub fn prepare_out_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).map_err(|e| CliError::io(dir.display(), e))?;
        if entries.next().is_some() && !force {
            return Err(CliError::Config(format!(
                "{} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

/// Refuses to replace an existing file unless `force`.
pub fn check_out_file(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(CliError::Config(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display(), e))?;
    }
    Ok(())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path.display(), e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path.display(), e))
}
