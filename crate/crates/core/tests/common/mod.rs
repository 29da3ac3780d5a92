//! Independent oracles for the acceptance and invariant suites.
//!
//! Everything here is written directly from the defining formulas, without
//! reusing the library's computation paths: pair counting by explicit
//! double loop, Haralick features by literal summation, the second-largest
//! eigenvalue of `Q` through its symmetric similarity transform, and path
//! counting by exhaustive enumeration.

// index-based double loops are the point here: the oracle mirrors the
// defining formulas, not idiomatic iterator style
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use scatiris::texture::{CooccurrenceMatrix, QuantizedImage};

/// xorshift64* stream, independent of the library's RNG machinery.
pub struct OracleRng(u64);

impl OracleRng {
    pub fn new(salt: u64) -> Self {
        Self(salt.wrapping_mul(0x9E3779B97F4A7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}

/// Co-occurrence counts by brute force: every pixel, explicit bounds test.
pub fn glcm_counting_oracle(
    labels: &[u16],
    width: usize,
    height: usize,
    levels: usize,
    offset: (i32, i32),
) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; levels * levels];
    let mut total = 0u64;
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let nx = x + offset.0 as i64;
            let ny = y + offset.1 as i64;
            if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                continue;
            }
            let i = labels[(y as usize) * width + x as usize] as usize;
            let j = labels[(ny as usize) * width + nx as usize] as usize;
            counts[i * levels + j] += 1;
            total += 1;
        }
    }
    (counts, total)
}

/// The 14 Haralick features evaluated literally from their defining sums.
/// Natural logarithms, `0 log 0 = 0`, 0-based gray levels.
pub fn haralick_oracle(matrix: &CooccurrenceMatrix) -> [f64; 14] {
    let ng = matrix.levels();
    let r = matrix.total() as f64;
    assert!(r > 0.0, "oracle needs a populated matrix");
    let p = |i: usize, j: usize| matrix.count(i, j) as f64 / r;

    let mut p_x = vec![0.0; ng];
    let mut p_y = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            p_x[i] += p(i, j);
            p_y[j] += p(i, j);
        }
    }
    let mut p_sum = vec![0.0; 2 * ng - 1];
    let mut p_diff = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            p_sum[i + j] += p(i, j);
            p_diff[i.abs_diff(j)] += p(i, j);
        }
    }

    let xlogx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };

    // f1
    let mut f1 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            f1 += p(i, j) * p(i, j);
        }
    }
    // f2
    let mut f2 = 0.0;
    for (k, &v) in p_diff.iter().enumerate() {
        f2 += (k * k) as f64 * v;
    }
    // f3
    let mu_x: f64 = p_x.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
    let mu_y: f64 = p_y.iter().enumerate().map(|(j, &v)| j as f64 * v).sum();
    let sigma_x: f64 = p_x
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64 - mu_x).powi(2) * v)
        .sum::<f64>()
        .sqrt();
    let sigma_y: f64 = p_y
        .iter()
        .enumerate()
        .map(|(j, &v)| (j as f64 - mu_y).powi(2) * v)
        .sum::<f64>()
        .sqrt();
    let f3 = if sigma_x > 0.0 && sigma_y > 0.0 {
        let mut cross = 0.0;
        for i in 0..ng {
            for j in 0..ng {
                cross += (i * j) as f64 * p(i, j);
            }
        }
        (cross - mu_x * mu_y) / (sigma_x * sigma_y)
    } else {
        0.0
    };
    // f4 with mu = grand i-weighted mean of p(i,j)
    let mut mu = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            mu += i as f64 * p(i, j);
        }
    }
    let mut f4 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            f4 += (i as f64 - mu).powi(2) * p(i, j);
        }
    }
    // f5
    let mut f5 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            f5 += p(i, j) / (1.0 + ((i as f64) - (j as f64)).powi(2));
        }
    }
    // f6, f7, f8
    let f6: f64 = p_sum.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let f7: f64 = p_sum
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - f6).powi(2) * v)
        .sum();
    let f8: f64 = -p_sum.iter().map(|&v| xlogx(v)).sum::<f64>();
    // f9
    let mut f9 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            f9 -= xlogx(p(i, j));
        }
    }
    // f10, f11
    let mu_diff: f64 = p_diff.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let f10: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - mu_diff).powi(2) * v)
        .sum();
    let f11: f64 = -p_diff.iter().map(|&v| xlogx(v)).sum::<f64>();
    // f12, f13
    let hx: f64 = -p_x.iter().map(|&v| xlogx(v)).sum::<f64>();
    let hy: f64 = -p_y.iter().map(|&v| xlogx(v)).sum::<f64>();
    let hxy = f9;
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let prod = p_x[i] * p_y[j];
            if prod > 0.0 {
                hxy1 -= p(i, j) * prod.ln();
                hxy2 -= prod * prod.ln();
            }
        }
    }
    let denom = hx.max(hy);
    let f12 = if denom > 0.0 {
        (hxy - hxy1) / denom
    } else {
        0.0
    };
    let f13 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).clamp(0.0, 1.0).sqrt();
    // f14 through the symmetric similarity transform: on the support of
    // p_x/p_y, Q is similar to M M^T with M = Dx^{-1/2} P Dy^{-1/2}.
    let rows: Vec<usize> = (0..ng).filter(|&i| p_x[i] > 0.0).collect();
    let cols: Vec<usize> = (0..ng).filter(|&k| p_y[k] > 0.0).collect();
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &k) in cols.iter().enumerate() {
            m[(a, b)] = p(i, k) / (p_x[i].sqrt() * p_y[k].sqrt());
        }
    }
    let sym = &m * m.transpose();
    let mut eigs: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.resize(ng.max(eigs.len()), 0.0);
    eigs.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let f14 = eigs.get(1).copied().unwrap_or(0.0).max(0.0).sqrt();

    [f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14]
}

/// Exhaustive admissible-path count: tuples of `(scale, orientation)` pairs
/// with strictly decreasing scales, all layers `0..=max_layer`.
pub fn path_count_oracle(scales: u32, orientations: u32, max_layer: u32) -> usize {
    fn extend(bound: u32, remaining: u32, scales: u32, orientations: u32) -> usize {
        if remaining == 0 {
            return 1;
        }
        let mut total = 0;
        for j in 0..bound.min(scales) {
            for _o in 0..orientations {
                total += extend(j, remaining - 1, scales, orientations);
            }
        }
        total
    }
    (0..=max_layer)
        .map(|k| extend(scales, k, scales, orientations))
        .sum()
}

/// Random quantized image for oracle comparisons.
pub fn random_quantized(
    rng: &mut OracleRng,
    width: usize,
    height: usize,
    levels: usize,
) -> QuantizedImage {
    let labels: Vec<u16> = (0..width * height)
        .map(|_| rng.below(levels) as u16)
        .collect();
    QuantizedImage::new(width, height, levels, labels).expect("labels in range")
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
