//! Segmented weight vectors and the WSV1 checkpoint store.
//!
//! A [`WeightVector`] is a flat `f64` buffer plus a segment table naming each
//! parameter tensor. Encoder segments come first and head segments are always
//! stored last, so removing the classification head is a truncation.
//!
//! WSV1 layout (all integers little-endian):
//!
//! ```text
//! "WSV1" | version u16 | segment count u32
//! per segment: name len u16 | name utf-8 | kind u8 | rank u8 | dims u32 * rank | offset u64 | length u64
//! payload: count u64 | f64 LE * count
//! sha-256 of every preceding byte (32 bytes)
//! ```
//!
//! The store directory holds `checkpoints/<id>.wsv` files and an
//! append-only `index.jsonl` with one [`CheckpointManifest`] per line.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const WSV1_MAGIC: &[u8; 4] = b"WSV1";
pub const WSV1_VERSION: u16 = 1;
const DIGEST_LEN: usize = 32;

/// Hyperparameter key under which the model config id travels in manifests.
pub const CONFIG_ID_KEY: &str = "model_config_id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    EncoderWeight,
    EncoderBias,
    HeadWeight,
    HeadBias,
}

impl SegmentKind {
    pub fn code(self) -> u8 {
        match self {
            SegmentKind::EncoderWeight => 0,
            SegmentKind::EncoderBias => 1,
            SegmentKind::HeadWeight => 2,
            SegmentKind::HeadBias => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SegmentKind::EncoderWeight),
            1 => Some(SegmentKind::EncoderBias),
            2 => Some(SegmentKind::HeadWeight),
            3 => Some(SegmentKind::HeadBias),
            _ => None,
        }
    }

    pub fn is_head(self) -> bool {
        matches!(self, SegmentKind::HeadWeight | SegmentKind::HeadBias)
    }

    pub fn is_bias(self) -> bool {
        matches!(self, SegmentKind::EncoderBias | SegmentKind::HeadBias)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSegment {
    pub name: String,
    pub offset: usize,
    pub length: usize,
    pub shape: Vec<usize>,
    pub kind: SegmentKind,
}

impl ParamSegment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.length
    }
}

/// Checks that `segments` partition `[0, total)` in order, that lengths match
/// shapes, and that head segments (if any) form one trailing group.
pub fn validate_segments(segments: &[ParamSegment], total: usize) -> Result<()> {
    let mut cursor = 0usize;
    let mut seen_head = false;
    for seg in segments {
        let product: usize = seg.shape.iter().product();
        if product != seg.length {
            return Err(Error::Segments(format!(
                "segment {} has length {} but shape {:?}",
                seg.name, seg.length, seg.shape
            )));
        }
        if seg.offset != cursor {
            return Err(Error::Segments(format!(
                "segment {} starts at {} but previous segment ends at {}",
                seg.name, seg.offset, cursor
            )));
        }
        if seg.kind.is_head() {
            seen_head = true;
        } else if seen_head {
            return Err(Error::Segments(format!(
                "encoder segment {} follows head segments",
                seg.name
            )));
        }
        cursor += seg.length;
    }
    if cursor != total {
        return Err(Error::Segments(format!(
            "segments cover {cursor} values but vector has {total}"
        )));
    }
    Ok(())
}

/// Flat parameter vector with a named segment table.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    segments: Vec<ParamSegment>,
    model_config_id: String,
}

impl WeightVector {
    pub fn new(
        values: Vec<f64>,
        segments: Vec<ParamSegment>,
        model_config_id: impl Into<String>,
    ) -> Result<Self> {
        validate_segments(&segments, values.len())?;
        check_finite(&values)?;
        Ok(WeightVector {
            values,
            segments,
            model_config_id: model_config_id.into(),
        })
    }

    /// Same layout and config as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Dimension(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(WeightVector {
            values,
            segments: self.segments.clone(),
            model_config_id: self.model_config_id.clone(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access for in-place optimizers. Callers must keep values
    /// finite; [`WeightVector::validate`] re-checks.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn segments(&self) -> &[ParamSegment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&ParamSegment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn model_config_id(&self) -> &str {
        &self.model_config_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_head(&self) -> bool {
        self.segments.iter().any(|s| s.kind.is_head())
    }

    /// Number of leading values that belong to encoder segments.
    pub fn encoder_len(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| !s.kind.is_head())
            .map(|s| s.length)
            .sum()
    }

    pub fn encoder_values(&self) -> &[f64] {
        &self.values[..self.encoder_len()]
    }

    pub fn validate(&self) -> Result<()> {
        validate_segments(&self.segments, self.values.len())?;
        check_finite(&self.values)
    }

    /// True when both vectors have identical segment tables.
    pub fn same_layout(&self, other: &WeightVector) -> bool {
        self.segments == other.segments
    }

    /// Encoder-only copy; the head segments are dropped from values and table.
    pub fn strip_head(&self) -> Result<WeightVector> {
        if !self.has_head() {
            return Err(Error::NoHead);
        }
        let enc = self.encoder_len();
        Ok(WeightVector {
            values: self.values[..enc].to_vec(),
            segments: self
                .segments
                .iter()
                .filter(|s| !s.kind.is_head())
                .cloned()
                .collect(),
            model_config_id: self.model_config_id.clone(),
        })
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Free-function form of [`WeightVector::strip_head`].
pub fn strip_head(w: &WeightVector) -> Result<WeightVector> {
    w.strip_head()
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointRole {
    Pretrained,
    Finetuned,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub checkpoint_id: String,
    pub role: CheckpointRole,
    pub source_dataset_id: Option<String>,
    pub family_id: Option<String>,
    pub seed: u64,
    pub parent_pretrained_id: Option<String>,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, String>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

impl CheckpointManifest {
    pub fn new(role: CheckpointRole, seed: u64) -> Self {
        CheckpointManifest {
            checkpoint_id: String::new(),
            role,
            source_dataset_id: None,
            family_id: None,
            seed,
            parent_pretrained_id: None,
            hyperparams: BTreeMap::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.role == CheckpointRole::Finetuned
            && (self.source_dataset_id.is_none() || self.parent_pretrained_id.is_none())
        {
            return Err(Error::Manifest(
                "finetuned checkpoints need source_dataset_id and parent_pretrained_id".into(),
            ));
        }
        if let Some((k, v)) = self.metrics.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Manifest(format!("metric {k} is not finite ({v})")));
        }
        Ok(())
    }
}

/// Serializes `w` into WSV1 bytes, trailing digest included.
pub fn encode_wsv1(w: &WeightVector) -> Result<Vec<u8>> {
    w.validate()?;
    let mut buf = Vec::with_capacity(64 + w.len() * 8);
    buf.extend_from_slice(WSV1_MAGIC);
    buf.extend_from_slice(&WSV1_VERSION.to_le_bytes());
    buf.extend_from_slice(&to_u32(w.segments.len(), "segment count")?.to_le_bytes());
    for seg in &w.segments {
        let name = seg.name.as_bytes();
        let name_len = u16::try_from(name.len())
            .map_err(|_| Error::Format(format!("segment name too long: {}", seg.name)))?;
        buf.extend_from_slice(&name_len.to_le_bytes());
        buf.extend_from_slice(name);
        buf.push(seg.kind.code());
        let rank = u8::try_from(seg.shape.len())
            .map_err(|_| Error::Format(format!("rank too large for {}", seg.name)))?;
        buf.push(rank);
        for &d in &seg.shape {
            buf.extend_from_slice(&to_u32(d, "shape dim")?.to_le_bytes());
        }
        buf.extend_from_slice(&(seg.offset as u64).to_le_bytes());
        buf.extend_from_slice(&(seg.length as u64).to_le_bytes());
    }
    buf.extend_from_slice(&(w.values.len() as u64).to_le_bytes());
    for v in &w.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    Ok(buf)
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} exceeds u32")))
}

/// Hex digest stored in the last 32 bytes of a WSV1 buffer.
pub fn wsv1_digest_hex(bytes: &[u8]) -> Result<String> {
    if bytes.len() < DIGEST_LEN {
        return Err(Error::Format("buffer shorter than digest".into()));
    }
    Ok(hex_string(&bytes[bytes.len() - DIGEST_LEN..]))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses WSV1 bytes after verifying the trailing digest.
///
/// The returned vector carries an empty config id; the store fills it from
/// the manifest.
pub fn decode_wsv1(bytes: &[u8]) -> Result<WeightVector> {
    if bytes.len() < WSV1_MAGIC.len() + DIGEST_LEN {
        return Err(Error::Format("buffer too short for WSV1".into()));
    }
    let (body, stored) = bytes.split_at(bytes.len() - DIGEST_LEN);
    let computed = Sha256::digest(body);
    if computed.as_slice() != stored {
        return Err(Error::Integrity {
            id: hex_string(stored),
            detail: format!("recomputed digest {}", hex_string(&computed)),
        });
    }

    let mut r = Reader {
        bytes: body,
        pos: 0,
    };
    if r.take(4)? != WSV1_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u16()?;
    if version != WSV1_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    let mut segments = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|e| Error::Format(format!("segment name: {e}")))?
            .to_owned();
        let code = r.u8()?;
        let kind = SegmentKind::from_code(code)
            .ok_or_else(|| Error::Format(format!("unknown segment kind {code}")))?;
        let rank = r.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let offset = r.u64()? as usize;
        let length = r.u64()? as usize;
        segments.push(ParamSegment {
            name,
            offset,
            length,
            shape,
            kind,
        });
    }
    let n = r.u64()? as usize;
    let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Format("payload size".into()))?)?;
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if r.pos != body.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes before digest",
            body.len() - r.pos
        )));
    }
    WeightVector::new(values, segments, String::new())
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    use std::fmt::Write as _;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Directory-backed checkpoint store with a JSON-lines index.
///
/// Single writer: concurrent `save` calls from several processes may
/// interleave index lines.
#[derive(Debug, Clone)]
pub struct CheckpointStore {
    root: PathBuf,
}

impl CheckpointStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let dir = root.join("checkpoints");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(CheckpointStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join("index.jsonl")
    }

    pub fn checkpoint_path(&self, id: &str) -> PathBuf {
        self.root.join("checkpoints").join(format!("{id}.wsv"))
    }

    /// Writes `w` and appends `manifest` (with its id filled in) to the index.
    pub fn save(&self, w: &WeightVector, mut manifest: CheckpointManifest) -> Result<String> {
        let bytes = encode_wsv1(w)?;
        let id = wsv1_digest_hex(&bytes)?;
        manifest.checkpoint_id = id.clone();
        manifest
            .hyperparams
            .insert(CONFIG_ID_KEY.into(), w.model_config_id().to_owned());
        manifest.validate()?;

        let path = self.checkpoint_path(&id);
        if !path.exists() {
            let tmp = path.with_extension("wsv.tmp");
            fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
            fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        }

        let mut line = serde_json::to_string(&manifest)?;
        line.push('\n');
        let index = self.index_path();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&index)
            .map_err(|e| Error::io(&index, e))?;
        f.write_all(line.as_bytes())
            .map_err(|e| Error::io(&index, e))?;
        Ok(id)
    }

    /// All manifests in index order.
    pub fn manifests(&self) -> Result<Vec<CheckpointManifest>> {
        let index = self.index_path();
        let text = match fs::read_to_string(&index) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&index, e)),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }

    pub fn manifest(&self, id: &str) -> Result<CheckpointManifest> {
        self.manifests()?
            .into_iter()
            .rev()
            .find(|m| m.checkpoint_id == id)
            .ok_or_else(|| Error::MissingCheckpoint(id.to_owned()))
    }

    /// Loads a checkpoint and verifies that its digest matches `id`.
    pub fn load(&self, id: &str) -> Result<(WeightVector, CheckpointManifest)> {
        let manifest = self.manifest(id)?;
        let path = self.checkpoint_path(id);
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingCheckpoint(id.to_owned()),
            _ => Error::io(&path, e),
        })?;
        let w = decode_wsv1(&bytes).map_err(|e| match e {
            Error::Integrity { detail, .. } => Error::Integrity {
                id: id.to_owned(),
                detail,
            },
            other => other,
        })?;
        let stored = wsv1_digest_hex(&bytes)?;
        if stored != id {
            return Err(Error::Integrity {
                id: id.to_owned(),
                detail: format!("file digest {stored} does not match id"),
            });
        }
        let config_id = manifest
            .hyperparams
            .get(CONFIG_ID_KEY)
            .cloned()
            .unwrap_or_default();
        let w = WeightVector {
            model_config_id: config_id,
            ..w
        };
        Ok((w, manifest))
    }
}

pub fn save_checkpoint(
    w: &WeightVector,
    manifest: CheckpointManifest,
    store_path: &Path,
) -> Result<String> {
    CheckpointStore::open(store_path)?.save(w, manifest)
}

pub fn load_checkpoint(
    checkpoint_id: &str,
    store_path: &Path,
) -> Result<(WeightVector, CheckpointManifest)> {
    CheckpointStore::open(store_path)?.load(checkpoint_id)
}
