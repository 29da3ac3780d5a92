//! Versioned binary containers for pipeline artifacts.
//!
//! Every file starts with the magic `SCIR`, a little-endian `u16` format
//! version, a record kind byte, and a JSON echo of the pipeline
//! configuration that produced it, followed by a kind-specific payload.
//! All integers are little-endian; floats are 64-bit IEEE 754.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::corpus::Split;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, PcaModel};
use crate::matcher::{Gallery, GalleryEntry};

const MAGIC: &[u8; 4] = b"SCIR";
const VERSION: u16 = 1;

const KIND_FEATURES: u8 = 1;
const KIND_MODEL: u8 = 2;
const KIND_GALLERY: u8 = 3;

/// One extracted descriptor together with its dataset bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub subject: String,
    pub split: Split,
    /// Image path as listed in the manifest.
    pub source: String,
    pub features: FeatureVector,
}

pub fn save_features(
    record: &FeatureRecord,
    config_json: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = Writer::new(KIND_FEATURES, config_json);
    w.string(&record.subject);
    w.u8(split_code(record.split));
    w.string(&record.source);
    w.u32(record.features.scatter_len() as u32);
    w.u32(record.features.texture_len() as u32);
    for &v in record.features.values() {
        w.f64(v);
    }
    w.write_to(path.as_ref())
}

pub fn load_features(path: impl AsRef<Path>) -> Result<(FeatureRecord, String)> {
    let path = path.as_ref();
    let mut r = Reader::open(path, KIND_FEATURES)?;
    let config = r.config.clone();
    let subject = r.string()?;
    let split = split_from_code(r.u8()?).ok_or_else(|| r.corrupt("bad split tag"))?;
    let source = r.string()?;
    let scatter_len = r.u32()? as usize;
    let texture_len = r.u32()? as usize;
    let mut values = Vec::with_capacity(scatter_len + texture_len);
    for _ in 0..scatter_len + texture_len {
        values.push(r.f64()?);
    }
    r.finish()?;
    let features = FeatureVector::new(values, scatter_len, texture_len)
        .map_err(|e| r.corrupt(&e.to_string()))?;
    Ok((
        FeatureRecord {
            subject,
            split,
            source,
            features,
        },
        config,
    ))
}

pub fn save_model(model: &PcaModel, config_json: &str, path: impl AsRef<Path>) -> Result<()> {
    let d = model.dim();
    let mut w = Writer::new(KIND_MODEL, config_json);
    w.u32(d as u32);
    w.u64(model.n_samples() as u64);
    w.u8(u8::from(model.scale().is_some()));
    for &v in model.mean() {
        w.f64(v);
    }
    if let Some(scale) = model.scale() {
        for &v in scale {
            w.f64(v);
        }
    }
    for &v in model.eigenvalues() {
        w.f64(v);
    }
    for &v in model.eigenvectors().iter() {
        w.f64(v); // column-major
    }
    w.bytes(&model.fingerprint());
    w.write_to(path.as_ref())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(PcaModel, String)> {
    let path = path.as_ref();
    let mut r = Reader::open(path, KIND_MODEL)?;
    let config = r.config.clone();
    let d = r.u32()? as usize;
    let n_samples = r.u64()? as usize;
    let has_scale = r.u8()? != 0;
    let mean = DVector::from_iterator(d, r.f64_iter(d)?);
    let scale = if has_scale {
        Some(DVector::from_iterator(d, r.f64_iter(d)?))
    } else {
        None
    };
    let eigenvalues: Vec<f64> = r.f64_iter(d)?;
    let eigenvectors = DMatrix::from_iterator(d, d, r.f64_iter(d * d)?);
    let stored_fingerprint: [u8; 16] = r.bytes(16)?.try_into().expect("sixteen bytes were read");
    r.finish()?;
    let model = PcaModel::from_parts(mean, scale, eigenvalues, eigenvectors, n_samples)
        .map_err(|e| r.corrupt(&e.to_string()))?;
    if model.fingerprint() != stored_fingerprint {
        return Err(r.corrupt("model fingerprint does not match contents"));
    }
    Ok((model, config))
}

pub fn save_gallery(gallery: &Gallery, config_json: &str, path: impl AsRef<Path>) -> Result<()> {
    let fingerprint = gallery.fingerprint().ok_or(Error::EmptyGallery)?;
    let dim = gallery.dim().unwrap_or(0);
    let mut w = Writer::new(KIND_GALLERY, config_json);
    w.bytes(&fingerprint);
    w.u32(dim as u32);
    w.u32(gallery.len() as u32);
    for entry in gallery.entries() {
        w.string(&entry.subject);
        for &v in &entry.template {
            w.f64(v);
        }
    }
    w.write_to(path.as_ref())
}

pub fn load_gallery(path: impl AsRef<Path>) -> Result<(Gallery, String)> {
    let path = path.as_ref();
    let mut r = Reader::open(path, KIND_GALLERY)?;
    let config = r.config.clone();
    let fingerprint: [u8; 16] = r.bytes(16)?.try_into().expect("sixteen bytes were read");
    let dim = r.u32()? as usize;
    let count = r.u32()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let subject = r.string()?;
        let template: Vec<f64> = r.f64_iter(dim)?;
        entries.push(GalleryEntry { subject, template });
    }
    r.finish()?;
    let gallery =
        Gallery::from_entries(fingerprint, entries).map_err(|e| r.corrupt(&e.to_string()))?;
    Ok((gallery, config))
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(kind: u8, config_json: &str) -> Self {
        let mut buf = Vec::with_capacity(64 + config_json.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(kind);
        buf.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
        buf.extend_from_slice(config_json.as_bytes());
        Self { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn write_to(self, path: &Path) -> Result<()> {
        fs::write(path, self.buf).map_err(|e| Error::io(path, e))
    }
}

struct Reader {
    data: Vec<u8>,
    pos: usize,
    path: std::path::PathBuf,
    config: String,
}

impl Reader {
    fn open(path: &Path, expected_kind: u8) -> Result<Self> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut r = Reader {
            data,
            pos: 0,
            path: path.to_path_buf(),
            config: String::new(),
        };
        if r.bytes(4)? != MAGIC {
            return Err(r.corrupt("bad magic"));
        }
        let version = u16::from_le_bytes(r.bytes(2)?.try_into().expect("two bytes"));
        if version != VERSION {
            return Err(r.corrupt(&format!("unsupported format version {version}")));
        }
        let kind = r.u8()?;
        if kind != expected_kind {
            return Err(r.corrupt(&format!("record kind {kind}, expected {expected_kind}")));
        }
        let config_len = r.u32()? as usize;
        let config_bytes = r.bytes(config_len)?.to_vec();
        r.config = String::from_utf8(config_bytes).map_err(|_| r.corrupt("non-UTF-8 config"))?;
        Ok(r)
    }

    fn corrupt(&self, reason: &str) -> Error {
        Error::CorruptArtifact {
            path: self.path.clone(),
            reason: reason.to_string(),
        }
    }

    fn bytes(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::CorruptArtifact {
                path: self.path.clone(),
                reason: "truncated file".into(),
            });
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.bytes(4)?.try_into().expect("four bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.bytes(8)?.try_into().expect("eight bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.bytes(8)?.try_into().expect("eight bytes"),
        ))
    }

    fn f64_iter(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.bytes(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect())
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.bytes(len)?.to_vec();
        String::from_utf8(raw).map_err(|_| self.corrupt("non-UTF-8 string"))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.corrupt("trailing bytes"));
        }
        Ok(())
    }
}

fn split_code(split: Split) -> u8 {
    match split {
        Split::Train => 0,
        Split::Test => 1,
        Split::Validation => 2,
    }
}

fn split_from_code(code: u8) -> Option<Split> {
    match code {
        0 => Some(Split::Train),
        1 => Some(Split::Test),
        2 => Some(Split::Validation),
        _ => None,
    }
}
