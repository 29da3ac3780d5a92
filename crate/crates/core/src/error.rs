//! Error type shared by every module of the pipeline.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // image / corpus
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("bad image buffer: {width}x{height} with {len} samples")]
    BadImageBuffer {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("intensity out of [0,1] or non-finite")]
    IntensityOutOfRange,
    #[error("incompatible target size {width}x{height}: {reason}")]
    IncompatibleTarget {
        width: usize,
        height: usize,
        reason: String,
    },
    #[error("subject {subject} has {count} image(s); at least {required} required")]
    TooFewImages {
        subject: String,
        count: usize,
        required: usize,
    },
    #[error("manifest error at {path}:{line}: {reason}")]
    ManifestError {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid synthetic corpus spec: {0}")]
    BadSyntheticSpec(String),

    // scattering
    #[error("invalid scattering config: {0}")]
    BadScatteringConfig(String),
    #[error(
        "incompatible image size {width}x{height}: both dimensions must be divisible by {required}"
    )]
    IncompatibleSize {
        width: usize,
        height: usize,
        required: usize,
    },
    #[error("size mismatch: image is {img_width}x{img_height}, filter bank built for {bank_width}x{bank_height}")]
    SizeMismatch {
        img_width: usize,
        img_height: usize,
        bank_width: usize,
        bank_height: usize,
    },

    // texture
    #[error("invalid quantization level count {0}; need 2..=4096")]
    InvalidLevels(usize),
    #[error("offset ({dx},{dy}) too large for {width}x{height} image")]
    OffsetTooLarge {
        dx: i32,
        dy: i32,
        width: usize,
        height: usize,
    },
    #[error("co-occurrence matrix has no valid pixel pairs")]
    EmptyCooccurrence,
    #[error("grid {grid_x}x{grid_y} does not divide image {width}x{height}")]
    IncompatibleGrid {
        grid_x: usize,
        grid_y: usize,
        width: usize,
        height: usize,
    },

    // features
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too few samples: got {got}, need at least {required}")]
    TooFewSamples { got: usize, required: usize },
    #[error("bad component count {k}; valid range is 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("degenerate spectrum: all eigenvalues are zero")]
    DegenerateSpectrum,
    #[error("empty feature block: {0}")]
    EmptyFeatureBlock(String),

    // matcher
    #[error("model fingerprint mismatch")]
    FingerprintMismatch,
    #[error("gallery is empty")]
    EmptyGallery,
    #[error("probe set is empty")]
    EmptyProbeSet,

    // persistence / config
    #[error("corrupt artifact {path}: {reason}")]
    CorruptArtifact { path: PathBuf, reason: String },
    #[error("invalid pipeline config: {0}")]
    BadConfig(String),

    // internal invariant violations
    #[error("eigenvalues of Q have complex residue {residue:.3e} beyond 1e-8")]
    ComplexEigenvalues { residue: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code convention: 1 for input errors, 2 for internal
    /// invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ComplexEigenvalues { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_distinguish_input_from_internal_errors() {
        assert_eq!(Error::FileNotFound("x.pgm".into()).exit_code(), 1);
        assert_eq!(Error::EmptyGallery.exit_code(), 1);
        assert_eq!(Error::ComplexEigenvalues { residue: 1.0 }.exit_code(), 2);
    }

    #[test]
    fn not_found_io_errors_become_file_not_found() {
        let err = Error::io(
            "missing.pgm",
            std::io::Error::from(std::io::ErrorKind::NotFound),
        );
        assert!(matches!(err, Error::FileNotFound(_)));
        let err = Error::io(
            "locked.pgm",
            std::io::Error::from(std::io::ErrorKind::PermissionDenied),
        );
        assert!(matches!(err, Error::Io { .. }));
    }
}
