//! SPLX binary dumps and JSON run manifests.
//!
//! A dump is a fixed little-endian header followed by a row-major payload:
//!
//! | offset | size | field                             |
//! |--------|------|-----------------------------------|
//! | 0      | 4    | magic `SPLX`                      |
//! | 4      | 4    | version, `u32`, always 1          |
//! | 8      | 1    | kind: 1 activation, 2 gradient    |
//! | 9      | 1    | dtype: 1 `f32`, 2 `f64`           |
//! | 10     | 1    | ndim, always 2                    |
//! | 11     | 16   | dims, `ndim × u64` (rows, cols)   |
//! | 27     | ...  | `rows·cols` values                |

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::efficiency::RunRecord;
use crate::numkernel::DenseMatrix;
use crate::spectra::ScaleTier;

pub const MAGIC: [u8; 4] = *b"SPLX";
pub const VERSION: u32 = 1;
/// Header length in bytes for the only supported rank (2).
pub const HEADER_LEN: usize = 11 + 2 * 8;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: format error: {msg}")]
    Format { path: String, msg: String },

    #[error("{path}: truncated payload: expected {expected} bytes, found {found}")]
    Truncation { path: String, expected: u64, found: u64 },

    #[error("{path}: unsupported shape: ndim = {ndim}, only 2 is supported")]
    UnsupportedShape { path: String, ndim: u8 },

    #[error("{path}: expected a {expected} dump, found {found}")]
    KindMismatch {
        path: String,
        expected: DumpKind,
        found: DumpKind,
    },

    #[error("{path}: checkpoint order: {msg}")]
    Order { path: String, msg: String },

    #[error("{path}: schema error at `{field}`: {msg}")]
    Schema { path: String, field: String, msg: String },

    #[error("{path}: file not found")]
    NotFound { path: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    fn format(path: &str, msg: impl Into<String>) -> Self {
        IngestError::Format {
            path: path.to_string(),
            msg: msg.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        let path = path.display().to_string();
        if source.kind() == std::io::ErrorKind::NotFound {
            IngestError::NotFound { path }
        } else {
            IngestError::Io { path, source }
        }
    }
}

pub type IngestResult<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DumpKind {
    Activation = 1,
    Gradient = 2,
}

impl fmt::Display for DumpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DumpKind::Activation => "activation",
            DumpKind::Gradient => "gradient",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32 = 1,
    F64 = 2,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DumpHeader {
    pub version: u32,
    pub kind: DumpKind,
    pub dtype: Dtype,
    pub rows: u64,
    pub cols: u64,
}

impl DumpHeader {
    pub fn payload_len(&self) -> Option<u64> {
        self.rows.checked_mul(self.cols)?.checked_mul(self.dtype.size() as u64)
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&self.version.to_le_bytes());
        out[8] = self.kind as u8;
        out[9] = self.dtype as u8;
        out[10] = 2;
        out[11..19].copy_from_slice(&self.rows.to_le_bytes());
        out[19..27].copy_from_slice(&self.cols.to_le_bytes());
        out
    }

    fn decode(bytes: &[u8], path: &str) -> IngestResult<Self> {
        if bytes.len() < 11 {
            return Err(IngestError::format(
                path,
                format!("{} bytes is shorter than any header", bytes.len()),
            ));
        }
        if bytes[0..4] != MAGIC {
            return Err(IngestError::format(path, format!("bad magic {:02x?}", &bytes[0..4])));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(IngestError::format(path, format!("unsupported version {version}")));
        }
        let kind = match bytes[8] {
            1 => DumpKind::Activation,
            2 => DumpKind::Gradient,
            k => return Err(IngestError::format(path, format!("unknown kind byte {k}"))),
        };
        let dtype = match bytes[9] {
            1 => Dtype::F32,
            2 => Dtype::F64,
            d => return Err(IngestError::format(path, format!("unknown dtype byte {d}"))),
        };
        let ndim = bytes[10];
        if ndim != 2 {
            return Err(IngestError::UnsupportedShape {
                path: path.to_string(),
                ndim,
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(IngestError::Truncation {
                path: path.to_string(),
                expected: HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        Ok(DumpHeader {
            version,
            kind,
            dtype,
            rows: u64::from_le_bytes(bytes[11..19].try_into().unwrap()),
            cols: u64::from_le_bytes(bytes[19..27].try_into().unwrap()),
        })
    }
}

/// Serializes a matrix into SPLX bytes. Fails if a value does not fit the dtype.
pub fn encode(matrix: &DenseMatrix, kind: DumpKind, dtype: Dtype) -> IngestResult<Vec<u8>> {
    let header = DumpHeader {
        version: VERSION,
        kind,
        dtype,
        rows: matrix.rows() as u64,
        cols: matrix.cols() as u64,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + matrix.as_slice().len() * dtype.size());
    out.extend_from_slice(&header.encode());
    for &v in matrix.as_slice() {
        match dtype {
            Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
            Dtype::F32 => {
                let w = v as f32;
                if !w.is_finite() {
                    return Err(IngestError::format("<memory>", format!("{v} overflows float32")));
                }
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Parses SPLX bytes. `origin` only labels error messages.
pub fn decode(bytes: &[u8], origin: &str) -> IngestResult<(DumpHeader, DenseMatrix)> {
    let header = DumpHeader::decode(bytes, origin)?;
    let expected = header
        .payload_len()
        .ok_or_else(|| IngestError::format(origin, "dims overflow the address space"))?;
    let found = (bytes.len() - HEADER_LEN) as u64;
    if found < expected {
        return Err(IngestError::Truncation {
            path: origin.to_string(),
            expected,
            found,
        });
    }
    if found > expected {
        return Err(IngestError::format(
            origin,
            format!("{} trailing bytes after payload", found - expected),
        ));
    }
    let payload = &bytes[HEADER_LEN..];
    let values: Vec<f64> = match header.dtype {
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(IngestError::format(origin, format!("non-finite value at element {i}")));
    }
    let matrix = DenseMatrix::new(header.rows as usize, header.cols as usize, values)
        .map_err(|e| IngestError::format(origin, e.to_string()))?;
    Ok((header, matrix))
}

pub fn read_dump_full(path: impl AsRef<Path>) -> IngestResult<(DumpHeader, DenseMatrix)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| IngestError::io(path, e))?;
    decode(&bytes, &path.display().to_string())
}

pub fn read_dump(path: impl AsRef<Path>) -> IngestResult<DenseMatrix> {
    Ok(read_dump_full(path)?.1)
}

/// Reads a dump and checks that it carries the expected kind.
pub fn read_dump_of_kind(path: impl AsRef<Path>, kind: DumpKind) -> IngestResult<DenseMatrix> {
    let path = path.as_ref();
    let (header, m) = read_dump_full(path)?;
    if header.kind != kind {
        return Err(IngestError::KindMismatch {
            path: path.display().to_string(),
            expected: kind,
            found: header.kind,
        });
    }
    Ok(m)
}

pub fn write_dump(matrix: &DenseMatrix, kind: DumpKind, dtype: Dtype, path: impl AsRef<Path>) -> IngestResult<()> {
    let path = path.as_ref();
    let bytes = encode(matrix, kind, dtype).map_err(|e| match e {
        IngestError::Format { msg, .. } => IngestError::format(&path.display().to_string(), msg),
        other => other,
    })?;
    fs::write(path, bytes).map_err(|e| IngestError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub tokens: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation_dump: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_dump: Option<PathBuf>,
}

/// One training run. Dump paths are stored relative to the manifest file and
/// resolved against its directory on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub family: String,
    pub tier: u64,
    pub scale: ScaleTier,
    pub target_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<String>,
    pub checkpoints: Vec<Checkpoint>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

const MANIFEST_FIELDS: &[&str] = &[
    "family",
    "tier",
    "scale",
    "target_loss",
    "throughput",
    "layer",
    "checkpoints",
];
const CHECKPOINT_FIELDS: &[&str] = &["step", "tokens", "loss", "activation_dump", "gradient_dump"];

fn warn_unknown(value: &Value, origin: &str) {
    let known: BTreeSet<&str> = MANIFEST_FIELDS.iter().copied().collect();
    if let Some(obj) = value.as_object() {
        for key in obj.keys().filter(|k| !known.contains(k.as_str())) {
            log::warn!("{origin}: ignoring unknown field `{key}`");
        }
        let known: BTreeSet<&str> = CHECKPOINT_FIELDS.iter().copied().collect();
        if let Some(cps) = obj.get("checkpoints").and_then(Value::as_array) {
            for (i, cp) in cps.iter().enumerate() {
                for key in cp.as_object().into_iter().flat_map(|o| o.keys()) {
                    if !known.contains(key.as_str()) {
                        log::warn!("{origin}: ignoring unknown field `checkpoints[{i}].{key}`");
                    }
                }
            }
        }
    }
}

impl RunManifest {
    /// Parses and validates manifest JSON. `base_dir` anchors relative dump paths.
    pub fn from_json(text: &str, base_dir: &Path, origin: &str) -> IngestResult<Self> {
        let schema = |field: String, msg: String| IngestError::Schema {
            path: origin.to_string(),
            field,
            msg,
        };
        let value: Value = serde_json::from_str(text).map_err(|e| schema(".".into(), e.to_string()))?;
        warn_unknown(&value, origin);
        let mut manifest: RunManifest = serde_path_to_error::deserialize(value).map_err(|e| {
            let field = e.path().to_string();
            schema(field, e.into_inner().to_string())
        })?;
        manifest.base_dir = base_dir.to_path_buf();
        manifest.validate(origin)?;
        Ok(manifest)
    }

    fn validate(&self, origin: &str) -> IngestResult<()> {
        let schema = |field: &str, msg: String| IngestError::Schema {
            path: origin.to_string(),
            field: field.to_string(),
            msg,
        };
        if !self.target_loss.is_finite() {
            return Err(schema("target_loss", "must be finite".into()));
        }
        if self.tier == 0 {
            return Err(schema("tier", "must be positive".into()));
        }
        if let Some(q) = self.throughput {
            if !(q > 0.0 && q.is_finite()) {
                return Err(schema("throughput", format!("{q} must be positive")));
            }
        }
        for (i, cp) in self.checkpoints.iter().enumerate() {
            if let Some(l) = cp.loss {
                if !l.is_finite() {
                    return Err(schema(&format!("checkpoints[{i}].loss"), "must be finite".into()));
                }
            }
            if i > 0 {
                let prev = self.checkpoints[i - 1].tokens;
                if cp.tokens <= prev {
                    return Err(IngestError::Order {
                        path: origin.to_string(),
                        msg: format!(
                            "checkpoints[{i}].tokens = {} does not exceed the previous {prev}",
                            cp.tokens
                        ),
                    });
                }
            }
            for p in [&cp.activation_dump, &cp.gradient_dump].into_iter().flatten() {
                let full = self.base_dir.join(p);
                if !full.is_file() {
                    return Err(IngestError::NotFound {
                        path: full.display().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    /// Tokens at the first checkpoint whose loss is at or below the target.
    pub fn tokens_to_target(&self) -> Option<u64> {
        self.checkpoints
            .iter()
            .find(|c| c.loss.is_some_and(|l| l <= self.target_loss))
            .map(|c| c.tokens)
    }

    pub fn is_complete(&self) -> bool {
        self.tokens_to_target().is_some()
    }

    /// Latest checkpoint within the token budget that carries an activation dump.
    pub fn early_checkpoint(&self, budget: u64) -> Option<&Checkpoint> {
        self.checkpoints
            .iter()
            .rev()
            .find(|c| c.tokens <= budget && c.activation_dump.is_some())
    }

    pub fn final_checkpoint(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    /// The run as an efficiency record, without an early exponent.
    pub fn run_record(&self) -> RunRecord {
        RunRecord {
            family: self.family.clone(),
            tier: self.tier,
            tokens_to_target: self.tokens_to_target().map(|t| t as f64),
            throughput: self.throughput,
            early_alpha: None,
            layer: self.layer.clone().unwrap_or_default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> IngestResult<RunManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    RunManifest::from_json(&text, &base, &path.display().to_string())
}

pub fn write_manifest(manifest: &RunManifest, path: impl AsRef<Path>) -> IngestResult<()> {
    let path = path.as_ref();
    fs::write(path, manifest.to_json() + "\n").map_err(|e| IngestError::io(path, e))
}
