//! Dataset manifests, per-subject train/test splitting, and the synthetic
//! corpus generator.
//!
//! Manifest files are UTF-8 text, one `<relative-path>\t<subject>\t<split>`
//! record per line, `#` comment lines ignored. The synthetic corpus gives
//! every class a distinct oriented band-pass spectral signature so the full
//! pipeline can be validated end to end without licensed data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fft::{to_complex, Fft2d};
use crate::image::{save_pgm, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
    Validation,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Validation => "validation",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            "validation" => Some(Split::Validation),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Image path, relative to the manifest location.
    pub path: PathBuf,
    pub subject: String,
    pub split: Split,
}

/// Ordered list of dataset records. Paths are unique and every subject with
/// test images also has training images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = Self { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(&e.path) {
                return Err(manifest_error(format!(
                    "duplicate path {}",
                    e.path.display()
                )));
            }
        }
        let train: BTreeSet<&str> = self
            .entries
            .iter()
            .filter(|e| e.split == Split::Train)
            .map(|e| e.subject.as_str())
            .collect();
        for e in &self.entries {
            if e.split == Split::Test && !train.contains(e.subject.as_str()) {
                return Err(manifest_error(format!(
                    "subject {} appears in test but not in train",
                    e.subject
                )));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn of_split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn subjects(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.subject.as_str()).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split('\t');
            let entry = (|| -> Option<ManifestEntry> {
                let rel = fields.next()?;
                let subject = fields.next()?;
                let split = Split::parse(fields.next()?)?;
                if fields.next().is_some() || rel.is_empty() || subject.is_empty() {
                    return None;
                }
                Some(ManifestEntry {
                    path: PathBuf::from(rel),
                    subject: subject.to_string(),
                    split,
                })
            })()
            .ok_or_else(|| Error::ManifestError {
                path: path.to_path_buf(),
                line: line_no,
                reason: "expected `<path>\\t<subject>\\t<train|test|validation>`".into(),
            })?;
            entries.push(entry);
        }
        Self::new(entries).map_err(|e| match e {
            Error::ManifestError { line, reason, .. } => Error::ManifestError {
                path: path.to_path_buf(),
                line,
                reason,
            },
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("# <relative-path>\t<subject-id>\t<split>\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                e.path.display(),
                e.subject,
                e.split
            ));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn manifest_error(reason: String) -> Error {
    Error::ManifestError {
        path: PathBuf::from("<memory>"),
        line: 0,
        reason,
    }
}

/// Re-tags every record with a per-subject train/test split at the given
/// fraction (rounded half up, at least one training image per subject).
/// Deterministic for a fixed seed, independent of entry order.
pub fn split_dataset(
    manifest: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> Result<DatasetManifest> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::BadConfig(format!(
            "train fraction {train_fraction} outside [0, 1]"
        )));
    }
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, e) in manifest.entries().iter().enumerate() {
        by_subject.entry(e.subject.as_str()).or_default().push(idx);
    }
    let mut entries = manifest.entries().to_vec();
    for (subject, mut indices) in by_subject {
        let n = indices.len();
        if n < 2 {
            return Err(Error::TooFewImages {
                subject: subject.to_string(),
                count: n,
                required: 2,
            });
        }
        // round half up, clamped so every subject trains on something
        let n_train = ((n as f64 * train_fraction + 0.5).floor() as usize).clamp(1, n);
        let mut rng = rng_for(seed, &["split", subject]);
        indices.shuffle(&mut rng);
        for (rank, idx) in indices.into_iter().enumerate() {
            entries[idx].split = if rank < n_train {
                Split::Train
            } else {
                Split::Test
            };
        }
    }
    DatasetManifest::new(entries)
}

/// Oriented band-pass spectral signature of one synthetic class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSignature {
    /// Texture orientation in radians, `[0, pi)`.
    pub orientation: f64,
    /// Radial center frequency in radians per pixel.
    pub frequency: f64,
    /// Radial width of the pass band.
    pub bandwidth: f64,
}

/// Parameters of the synthetic corpus. Generation is bit-deterministic for
/// a fixed spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub images_per_class: usize,
    pub width: usize,
    pub height: usize,
    pub signatures: Vec<ClassSignature>,
    pub noise_level: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Spec with auto-derived signatures: orientations spread over `[0, pi)`
    /// on two frequency rings.
    pub fn new(
        classes: usize,
        images_per_class: usize,
        width: usize,
        height: usize,
        noise_level: f64,
        seed: u64,
    ) -> Result<Self> {
        let rings = [0.55, 1.35];
        let per_ring = classes.div_ceil(rings.len());
        let signatures = (0..classes)
            .map(|c| {
                let ring = c % rings.len();
                let slot = c / rings.len();
                let frequency: f64 = rings[ring];
                ClassSignature {
                    orientation: std::f64::consts::PI * slot as f64 / per_ring.max(1) as f64,
                    frequency,
                    bandwidth: 0.16 * frequency,
                }
            })
            .collect();
        let spec = Self {
            classes,
            images_per_class,
            width,
            height,
            signatures,
            noise_level,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::BadSyntheticSpec("need at least 2 classes".into()));
        }
        if self.images_per_class < 2 {
            return Err(Error::BadSyntheticSpec(
                "need at least 2 images per class".into(),
            ));
        }
        if self.width < 8 || self.height < 8 {
            return Err(Error::BadSyntheticSpec("image size below 8x8".into()));
        }
        if self.signatures.len() != self.classes {
            return Err(Error::BadSyntheticSpec(format!(
                "{} signatures for {} classes",
                self.signatures.len(),
                self.classes
            )));
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(Error::BadSyntheticSpec("noise level outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn subject_id(class: usize) -> String {
        format!("s{class:03}")
    }
}

/// Writes `classes * images_per_class` PGM files under `out_dir` and
/// returns the matching manifest (all records tagged `train`; apply
/// [`split_dataset`] afterwards).
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let fft = Fft2d::new(spec.width, spec.height);
    let mut entries = Vec::with_capacity(spec.classes * spec.images_per_class);
    for class in 0..spec.classes {
        let subject = SyntheticSpec::subject_id(class);
        for index in 0..spec.images_per_class {
            let img = synth_image(spec, &fft, class, index);
            let name = format!("{subject}_{index:02}.pgm");
            save_pgm(&img, out_dir.join(&name))?;
            entries.push(ManifestEntry {
                path: PathBuf::from(name),
                subject: subject.clone(),
                split: Split::Train,
            });
        }
    }
    DatasetManifest::new(entries)
}

/// One synthetic image.
///
/// The class identity is a frozen band-pass noise pattern (seeded by class
/// alone, the way a subject's iris pattern is fixed); per-image variation
/// comes from a random sub-pixel circular shift and fresh additive pixel
/// noise at `noise_level`.
pub fn synth_image(spec: &SyntheticSpec, fft: &Fft2d, class: usize, index: usize) -> GrayImage {
    let sig = spec.signatures[class];
    let (w, h) = (spec.width, spec.height);
    let mut scratch = fft.make_scratch();

    // frozen class pattern
    let mut class_rng = rng_for(spec.seed, &["class-pattern", &class.to_string()]);
    let noise: Vec<f64> = (0..w * h)
        .map(|_| class_rng.sample(StandardNormal))
        .collect();
    let mut spectrum = to_complex(&noise);
    fft.forward(&mut spectrum, &mut scratch);

    // per-image acquisition jitter
    let mut img_rng = rng_for(
        spec.seed,
        &["image", &class.to_string(), &index.to_string()],
    );
    let shift_x: f64 = img_rng.random::<f64>() * 2.0;
    let shift_y: f64 = img_rng.random::<f64>() * 2.0;

    let tau = 2.0 * std::f64::consts::PI;
    let sigma_theta = std::f64::consts::PI / 14.0;
    for n in 0..h {
        let wy = tau * signed_bin(n, h) / h as f64;
        for m in 0..w {
            let wx = tau * signed_bin(m, w) / w as f64;
            let idx = n * w + m;
            let radius = (wx * wx + wy * wy).sqrt();
            if radius == 0.0 {
                spectrum[idx] = num_complex::Complex64::new(0.0, 0.0);
                continue;
            }
            // orientation distance folded to [0, pi/2] so the gain is even
            let angle = wy.atan2(wx);
            let mut delta = (angle - sig.orientation).rem_euclid(std::f64::consts::PI);
            if delta > std::f64::consts::FRAC_PI_2 {
                delta = std::f64::consts::PI - delta;
            }
            let radial = ((radius - sig.frequency) / sig.bandwidth).powi(2);
            let angular = (delta / sigma_theta).powi(2);
            let gain = (-0.5 * (radial + angular)).exp();
            let phase = num_complex::Complex64::from_polar(1.0, -(wx * shift_x + wy * shift_y));
            spectrum[idx] *= gain * phase;
        }
    }
    fft.inverse(&mut spectrum, &mut scratch);
    let mut field: Vec<f64> = spectrum.iter().map(|c| c.re).collect();

    let energy = field.iter().map(|v| v * v).sum::<f64>() / field.len() as f64;
    let std = energy.sqrt();
    if std > 0.0 {
        for v in field.iter_mut() {
            *v /= std;
        }
    }
    let data: Vec<f64> = field
        .iter()
        .map(|&v| {
            let pixel_noise: f64 = img_rng.sample(StandardNormal);
            (0.5 + 0.16 * v + spec.noise_level * pixel_noise).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage::new(w, h, data).expect("synthetic pixels clamped to range")
}

fn signed_bin(index: usize, len: usize) -> f64 {
    if index <= len / 2 {
        index as f64
    } else {
        index as f64 - len as f64
    }
}

/// Derives an independent deterministic RNG stream from a seed and a label
/// path; insensitive to platform and iteration order.
fn rng_for(seed: u64, labels: &[&str]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"scatiris");
    hasher.update(seed.to_le_bytes());
    for label in labels {
        hasher.update([0u8]);
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
