//! Grayscale images with intensities in `[0, 1]` and binary PGM/PPM I/O.
//!
//! Binary PGM (P5, 8-bit) is the bit-exact interchange format of the
//! pipeline. Color PPM (P6) input is either rejected or luma-converted,
//! controlled by [`ColorPolicy`].

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major grayscale image; every sample is finite and in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from row-major samples, validating the invariants.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::BadImageBuffer {
                width,
                height,
                len: data.len(),
            });
        }
        if !data
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
        {
            return Err(Error::IntensityOutOfRange);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("constant in range")
    }

    /// 8-bit samples scaled by 1/255.
    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| f64::from(b) / 255.0).collect();
        Self::new(width, height, data)
    }

    /// Quantizes back to 8-bit; exact inverse of [`from_bytes`](Self::from_bytes).
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v * 255.0).round() as u8)
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Bilinear resize with pixel-center alignment. Identity when the target
    /// equals the source size.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Result<GrayImage> {
        if width == 0 || height == 0 {
            return Err(Error::BadImageBuffer {
                width,
                height,
                len: 0,
            });
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                let top = self.get(x0, y0) * (1.0 - wx) + self.get(x1, y0) * wx;
                let bot = self.get(x0, y1) * (1.0 - wx) + self.get(x1, y1) * wx;
                data.push((top * (1.0 - wy) + bot * wy).clamp(0.0, 1.0));
            }
        }
        GrayImage::new(width, height, data)
    }

    /// Circular translation by whole pixels; content wraps around.
    pub fn shifted_circular(&self, dx: isize, dy: isize) -> GrayImage {
        let w = self.width as isize;
        let h = self.height as isize;
        let mut data = vec![0.0; self.data.len()];
        for y in 0..h {
            let sy = (y - dy).rem_euclid(h) as usize;
            for x in 0..w {
                let sx = (x - dx).rem_euclid(w) as usize;
                data[(y as usize) * self.width + x as usize] = self.get(sx, sy);
            }
        }
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// How to treat color (P6) input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorPolicy {
    /// Reject color files with `UnsupportedFormat`.
    #[default]
    Reject,
    /// Convert with Rec. 601 luma weights.
    Luma,
}

/// Loads a binary PGM (P5) file; P6 color input is handled per `colors`.
pub fn load_image(path: impl AsRef<Path>, colors: ColorPolicy) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes, colors).map_err(|e| match e {
        Error::CorruptImage(msg) => Error::CorruptImage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes 8-bit binary PGM (P5). Round-trips exactly with [`load_image`]
/// for images that came from 8-bit sources.
pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(32 + img.width() * img.height());
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height()).expect("in-memory write");
    out.extend_from_slice(&img.to_bytes());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn decode_pnm(bytes: &[u8], colors: ColorPolicy) -> Result<GrayImage> {
    if bytes.len() < 2 {
        return Err(Error::CorruptImage("truncated header".into()));
    }
    let magic = &bytes[..2];
    let channels = match magic {
        b"P5" => 1,
        b"P6" => match colors {
            ColorPolicy::Reject => {
                return Err(Error::UnsupportedFormat(
                    "color P6 input (pass a grayscale P5 file or enable luma conversion)".into(),
                ))
            }
            ColorPolicy::Luma => 3,
        },
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "magic {:?}; binary PGM (P5) required",
                String::from_utf8_lossy(magic)
            )))
        }
    };

    let mut pos = 2;
    let width = read_header_int(bytes, &mut pos)?;
    let height = read_header_int(bytes, &mut pos)?;
    let maxval = read_header_int(bytes, &mut pos)?;
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "maxval {maxval}; only 8-bit rasters supported"
        )));
    }
    if maxval == 0 {
        return Err(Error::CorruptImage("maxval is zero".into()));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::CorruptImage("missing raster separator".into()));
    }
    pos += 1;

    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::CorruptImage("image dimensions overflow".into()))?;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(Error::CorruptImage(format!(
            "raster has {} bytes, expected {expected}",
            raster.len()
        )));
    }
    let scale = f64::from(maxval as u8);
    let data: Vec<f64> = if channels == 1 {
        raster[..expected]
            .iter()
            .map(|&b| f64::from(b) / scale)
            .collect()
    } else {
        raster[..expected]
            .chunks_exact(3)
            .map(|px| {
                let luma =
                    0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
                (luma / scale).min(1.0)
            })
            .collect()
    };
    GrayImage::new(width, height, data).map_err(|e| match e {
        // samples above the declared maxval
        Error::IntensityOutOfRange => Error::CorruptImage("sample exceeds maxval".into()),
        other => other,
    })
}

fn read_header_int(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    // Skip whitespace and `#` comments that run to end of line.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(Error::CorruptImage("truncated header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::CorruptImage("bad header integer".into()))
}
