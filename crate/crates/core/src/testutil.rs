//! Deterministic data generators shared by unit tests.

use crate::image::GrayImage;

/// xorshift64* stream; tiny, seedable, dependency-free.
pub(crate) struct TestRng(u64);

impl TestRng {
    pub fn new(salt: u64) -> Self {
        Self(salt.wrapping_mul(0x9E3779B97F4A7C15) | 1)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Quasi-random texture image with values in `[0, 1)`.
pub(crate) fn test_texture(width: usize, height: usize, salt: u64) -> GrayImage {
    let mut rng = TestRng::new(salt);
    let data = (0..width * height).map(|_| rng.next_f64()).collect();
    GrayImage::new(width, height, data).unwrap()
}

/// Random sample rows in `[-1, 1)` for PCA tests.
pub(crate) fn random_rows(n: usize, dim: usize, salt: u64) -> Vec<Vec<f64>> {
    let mut rng = TestRng::new(salt);
    (0..n)
        .map(|_| (0..dim).map(|_| 2.0 * rng.next_f64() - 1.0).collect())
        .collect()
}
