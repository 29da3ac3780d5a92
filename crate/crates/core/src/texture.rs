//! Block-wise gray-level co-occurrence matrices and the 14 Haralick
//! textural features.
//!
//! The co-occurrence matrix is directional (single offset, no
//! symmetrization, no wraparound) and gray levels are 0-based throughout:
//! `p_{x+y}` is indexed `0..=2(Ng-1)` and `p_{x-y}` is indexed `0..Ng`.
//! Logarithms are natural with the `0 log 0 = 0` convention.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::image::GrayImage;

const MAX_LEVELS: usize = 4096;

/// Image of integer gray labels in `[0, levels)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    width: usize,
    height: usize,
    levels: usize,
    data: Vec<u16>,
}

impl QuantizedImage {
    pub fn new(width: usize, height: usize, levels: usize, data: Vec<u16>) -> Result<Self> {
        if !(2..=MAX_LEVELS).contains(&levels) {
            return Err(Error::InvalidLevels(levels));
        }
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::BadImageBuffer {
                width,
                height,
                len: data.len(),
            });
        }
        if data.iter().any(|&l| usize::from(l) >= levels) {
            return Err(Error::InvalidLevels(levels));
        }
        Ok(Self {
            width,
            height,
            levels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    pub fn labels(&self) -> &[u16] {
        &self.data
    }
}

/// Uniform quantization of `[0,1]` intensities into `levels` labels:
/// `label = min(floor(v * levels), levels - 1)`.
pub fn quantize(img: &GrayImage, levels: usize) -> Result<QuantizedImage> {
    if !(2..=MAX_LEVELS).contains(&levels) {
        return Err(Error::InvalidLevels(levels));
    }
    let data = img
        .data()
        .iter()
        .map(|&v| ((v * levels as f64).floor() as usize).min(levels - 1) as u16)
        .collect();
    QuantizedImage::new(img.width(), img.height(), levels, data)
}

/// Directional co-occurrence counts for a single pixel offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    levels: usize,
    counts: Vec<u64>,
    total: u64,
    offset: (i32, i32),
}

impl CooccurrenceMatrix {
    /// Builds a matrix from raw counts; the normalizer is their sum.
    pub fn from_counts(levels: usize, counts: Vec<u64>, offset: (i32, i32)) -> Result<Self> {
        if !(2..=MAX_LEVELS).contains(&levels) {
            return Err(Error::InvalidLevels(levels));
        }
        if counts.len() != levels * levels {
            return Err(Error::DimensionMismatch {
                expected: levels * levels,
                got: counts.len(),
            });
        }
        let total = counts.iter().sum();
        Ok(Self {
            levels,
            counts,
            total,
            offset,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.levels + j]
    }

    /// Total number of counted pairs, the normalizer `R`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn offset(&self) -> (i32, i32) {
        self.offset
    }

    /// Normalized matrix `p(i,j) = P(i,j) / R`.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::EmptyCooccurrence);
        }
        let r = self.total as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / r).collect())
    }
}

/// Counts ordered label pairs `(q(m,n), q(m+dx, n+dy))`; pairs whose second
/// pixel falls outside the image are skipped.
pub fn cooccurrence(q: &QuantizedImage, offset: (i32, i32)) -> Result<CooccurrenceMatrix> {
    let (dx, dy) = offset;
    if dx.unsigned_abs() as usize >= q.width || dy.unsigned_abs() as usize >= q.height {
        return Err(Error::OffsetTooLarge {
            dx,
            dy,
            width: q.width,
            height: q.height,
        });
    }
    let ng = q.levels;
    let mut counts = vec![0u64; ng * ng];
    // Valid source pixels form a rectangle once the offset is fixed.
    let x_range = if dx >= 0 {
        0..q.width - dx as usize
    } else {
        (-dx) as usize..q.width
    };
    let y_range = if dy >= 0 {
        0..q.height - dy as usize
    } else {
        (-dy) as usize..q.height
    };
    let mut total = 0u64;
    for y in y_range {
        let ny = (y as i64 + dy as i64) as usize;
        for x in x_range.clone() {
            let nx = (x as i64 + dx as i64) as usize;
            let i = q.label(x, y) as usize;
            let j = q.label(nx, ny) as usize;
            counts[i * ng + j] += 1;
            total += 1;
        }
    }
    Ok(CooccurrenceMatrix {
        levels: ng,
        counts,
        total,
        offset,
    })
}

/// Marginal and derived distributions of a normalized co-occurrence matrix.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub levels: usize,
    /// `p(i,j)`, row-major.
    pub p: Vec<f64>,
    pub p_x: Vec<f64>,
    pub p_y: Vec<f64>,
    /// `p_{x+y}(k)`, `k = 0..=2(Ng-1)`.
    pub p_sum: Vec<f64>,
    /// `p_{x-y}(k)`, `k = 0..Ng`.
    pub p_diff: Vec<f64>,
    pub hx: f64,
    pub hy: f64,
    pub hxy: f64,
    pub hxy1: f64,
    pub hxy2: f64,
    /// `Q(i,j) = sum_k p(i,k) p(j,k) / (p_x(i) p_y(k))`, with terms whose
    /// denominator vanishes dropped.
    pub q: DMatrix<f64>,
}

fn entropy(dist: &[f64]) -> f64 {
    -dist
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

pub fn marginals(matrix: &CooccurrenceMatrix) -> Result<Marginals> {
    let ng = matrix.levels;
    let p = matrix.normalized()?;
    let mut p_x = vec![0.0; ng];
    let mut p_y = vec![0.0; ng];
    let mut p_sum = vec![0.0; 2 * ng - 1];
    let mut p_diff = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            let v = p[i * ng + j];
            p_x[i] += v;
            p_y[j] += v;
            p_sum[i + j] += v;
            p_diff[i.abs_diff(j)] += v;
        }
    }

    let hx = entropy(&p_x);
    let hy = entropy(&p_y);
    let hxy = entropy(&p);
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let prod = p_x[i] * p_y[j];
            if prod > 0.0 {
                hxy1 -= p[i * ng + j] * prod.ln();
                hxy2 -= prod * prod.ln();
            }
        }
    }

    let mut q = DMatrix::zeros(ng, ng);
    for i in 0..ng {
        if p_x[i] == 0.0 {
            continue;
        }
        for j in 0..ng {
            let mut acc = 0.0;
            for k in 0..ng {
                if p_y[k] > 0.0 {
                    acc += p[i * ng + k] * p[j * ng + k] / (p_x[i] * p_y[k]);
                }
            }
            q[(i, j)] = acc;
        }
    }

    Ok(Marginals {
        levels: ng,
        p,
        p_x,
        p_y,
        p_sum,
        p_diff,
        hx,
        hy,
        hxy,
        hxy1,
        hxy2,
        q,
    })
}

/// The 14 Haralick features `f1..f14`, in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaralickVector(pub [f64; 14]);

impl HaralickVector {
    pub fn values(&self) -> &[f64; 14] {
        &self.0
    }
}

/// Computes `f1..f14` from one co-occurrence matrix.
///
/// Degenerate-denominator guards: `f3` and `f12` return 0 when their
/// denominators vanish; the `f13` argument is clamped to `[0,1]` before the
/// square root; `f14` clamps the second-largest eigenvalue of `Q` at 0.
pub fn haralick14(matrix: &CooccurrenceMatrix) -> Result<HaralickVector> {
    let m = marginals(matrix)?;
    let ng = m.levels;
    let at = |i: usize, j: usize| m.p[i * ng + j];

    // f1: angular second moment
    let f1 = m.p.iter().map(|v| v * v).sum::<f64>();

    // f2: contrast
    let f2 = m
        .p_diff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k * k) as f64 * v)
        .sum::<f64>();

    // marginal moments
    let mean_of =
        |dist: &[f64]| -> f64 { dist.iter().enumerate().map(|(i, &v)| i as f64 * v).sum() };
    let mu_x = mean_of(&m.p_x);
    let mu_y = mean_of(&m.p_y);
    let var_about = |dist: &[f64], mu: f64| -> f64 {
        dist.iter()
            .enumerate()
            .map(|(i, &v)| (i as f64 - mu) * (i as f64 - mu) * v)
            .sum()
    };
    let sigma_x = var_about(&m.p_x, mu_x).sqrt();
    let sigma_y = var_about(&m.p_y, mu_y).sqrt();

    // f3: correlation, 0 when a marginal is degenerate
    let f3 = if sigma_x > 0.0 && sigma_y > 0.0 {
        let mut cross = 0.0;
        for i in 0..ng {
            for j in 0..ng {
                cross += i as f64 * j as f64 * at(i, j);
            }
        }
        (cross - mu_x * mu_y) / (sigma_x * sigma_y)
    } else {
        0.0
    };

    // f4: variance about the i-weighted grand mean
    let mut f4 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            f4 += (i as f64 - mu_x) * (i as f64 - mu_x) * at(i, j);
        }
    }

    // f5: inverse difference moment
    let mut f5 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let d = i as f64 - j as f64;
            f5 += at(i, j) / (1.0 + d * d);
        }
    }

    // f6, f7, f8: sum statistics
    let f6 = mean_of(&m.p_sum);
    let f7 = var_about(&m.p_sum, f6);
    let f8 = entropy(&m.p_sum);

    // f9: entropy
    let f9 = m.hxy;

    // f10, f11: difference statistics
    let mu_diff = mean_of(&m.p_diff);
    let f10 = var_about(&m.p_diff, mu_diff);
    let f11 = entropy(&m.p_diff);

    // f12, f13: information measures of correlation
    let denom = m.hx.max(m.hy);
    let f12 = if denom > 0.0 {
        (m.hxy - m.hxy1) / denom
    } else {
        0.0
    };
    let f13 = (1.0 - (-2.0 * (m.hxy2 - m.hxy)).exp())
        .clamp(0.0, 1.0)
        .sqrt();

    // f14: sqrt of the second-largest eigenvalue of Q
    let f14 = second_largest_eigenvalue(&m.q)?.max(0.0).sqrt();

    Ok(HaralickVector([
        f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14,
    ]))
}

/// Eigenvalues of the literal (possibly non-symmetric) `Q`, ordered by real
/// part. `Q` is similar to a positive semidefinite matrix, so any imaginary
/// residue beyond 1e-8 signals a broken invariant.
fn second_largest_eigenvalue(q: &DMatrix<f64>) -> Result<f64> {
    let eigen = q.clone().complex_eigenvalues();
    let mut residue = 0.0f64;
    let mut reals: Vec<f64> = eigen
        .iter()
        .map(|c| {
            residue = residue.max(c.im.abs());
            c.re
        })
        .collect();
    if residue > 1e-8 {
        return Err(Error::ComplexEigenvalues { residue });
    }
    reals.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(reals.get(1).copied().unwrap_or(0.0))
}

/// Block partition of the image plane: `x` blocks across the width, `y`
/// blocks down the height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BlockGrid {
    pub x: usize,
    pub y: usize,
}

impl BlockGrid {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn block_count(&self) -> usize {
        self.x * self.y
    }
}

/// Concatenated per-block Haralick vectors, blocks in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureFeatures {
    values: Vec<f64>,
    blocks: Vec<HaralickVector>,
}

impl TextureFeatures {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn blocks(&self) -> &[HaralickVector] {
        &self.blocks
    }
}

/// Splits the image into a `grid.x x grid.y` partition of equal blocks and
/// concatenates `quantize -> cooccurrence -> haralick14` over the blocks.
pub fn block_texture_features(
    img: &GrayImage,
    grid: BlockGrid,
    levels: usize,
    offset: (i32, i32),
) -> Result<TextureFeatures> {
    if grid.x == 0
        || grid.y == 0
        || !img.width().is_multiple_of(grid.x)
        || !img.height().is_multiple_of(grid.y)
    {
        return Err(Error::IncompatibleGrid {
            grid_x: grid.x,
            grid_y: grid.y,
            width: img.width(),
            height: img.height(),
        });
    }
    let bw = img.width() / grid.x;
    let bh = img.height() / grid.y;
    let mut blocks = Vec::with_capacity(grid.block_count());
    let mut values = Vec::with_capacity(14 * grid.block_count());
    for by in 0..grid.y {
        for bx in 0..grid.x {
            let mut data = Vec::with_capacity(bw * bh);
            for y in 0..bh {
                for x in 0..bw {
                    data.push(img.get(bx * bw + x, by * bh + y));
                }
            }
            let block = GrayImage::new(bw, bh, data)?;
            let q = quantize(&block, levels)?;
            let matrix = cooccurrence(&q, offset)?;
            let h = haralick14(&matrix)?;
            values.extend_from_slice(h.values());
            blocks.push(h);
        }
    }
    Ok(TextureFeatures { values, blocks })
}

/// CSV dump of per-block Haralick vectors, for debugging and
/// cross-implementation diffing.
pub fn haralick_csv(blocks: &[HaralickVector]) -> String {
    let mut out = String::from("block,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13,f14\n");
    for (idx, block) in blocks.iter().enumerate() {
        out.push_str(&idx.to_string());
        for v in block.values() {
            out.push(',');
            out.push_str(&format!("{v:.17e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantized(width: usize, height: usize, levels: usize, labels: &[u16]) -> QuantizedImage {
        QuantizedImage::new(width, height, levels, labels.to_vec()).unwrap()
    }

    #[test]
    fn quantize_hits_spec_endpoints() {
        let img = GrayImage::new(3, 1, vec![0.0, 1.0, 0.5]).unwrap();
        let q8 = quantize(&img, 8).unwrap();
        assert_eq!(q8.labels()[0], 0);
        assert_eq!(q8.labels()[1], 7);
        let q2 = quantize(&img, 2).unwrap();
        assert_eq!(q2.labels()[2], 1); // floor(0.5 * 2) = 1
        assert!(matches!(quantize(&img, 1), Err(Error::InvalidLevels(1))));
    }

    #[test]
    fn quantize_ramp_is_uniform() {
        let data: Vec<f64> = (0..256).map(|i| i as f64 / 255.0).collect();
        let img = GrayImage::new(256, 1, data).unwrap();
        let q = quantize(&img, 8).unwrap();
        let mut hist = [0usize; 8];
        for &l in q.labels() {
            hist[l as usize] += 1;
        }
        assert_eq!(hist, [32; 8]);
    }

    #[test]
    fn cooccurrence_matches_hand_enumeration() {
        // rows [[0,0,1],[0,1,1],[2,2,2]], offset (1,0)
        let q = quantized(3, 3, 3, &[0, 0, 1, 0, 1, 1, 2, 2, 2]);
        let m = cooccurrence(&q, (1, 0)).unwrap();
        assert_eq!(m.total(), 6);
        assert_eq!(m.count(0, 0), 1);
        assert_eq!(m.count(0, 1), 2);
        assert_eq!(m.count(1, 1), 1);
        assert_eq!(m.count(2, 2), 2);
        let named = [(0, 0), (0, 1), (1, 1), (2, 2)];
        for i in 0..3 {
            for j in 0..3 {
                if !named.contains(&(i, j)) {
                    assert_eq!(m.count(i, j), 0, "unexpected count at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn cooccurrence_of_constant_image_is_a_point_mass() {
        let q = quantized(4, 3, 5, &[2; 12]);
        let m = cooccurrence(&q, (1, -1)).unwrap();
        assert_eq!(m.total(), 3 * 2);
        assert_eq!(m.count(2, 2), m.total());
    }

    #[test]
    fn count_conservation_for_nonnegative_offsets() {
        let q = quantized(
            5,
            4,
            2,
            &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1],
        );
        for (dx, dy) in [(1, 0), (0, 1), (2, 3), (4, 0)] {
            let m = cooccurrence(&q, (dx, dy)).unwrap();
            let expected = (5 - dx as u64) * (4 - dy as u64);
            assert_eq!(m.total(), expected);
            let summed: u64 = (0..2)
                .flat_map(|i| (0..2).map(|j| m.count(i, j)).collect::<Vec<_>>())
                .sum();
            assert_eq!(summed, expected);
        }
    }

    #[test]
    fn degenerate_image_yields_empty_cooccurrence_downstream() {
        let q = quantized(1, 1, 2, &[0]);
        assert!(matches!(
            cooccurrence(&q, (1, 0)),
            Err(Error::OffsetTooLarge { .. })
        ));
        // A zero-count matrix must surface EmptyCooccurrence downstream.
        let m = CooccurrenceMatrix::from_counts(2, vec![0; 4], (1, 0)).unwrap();
        assert_eq!(m.total(), 0);
        assert!(matches!(marginals(&m), Err(Error::EmptyCooccurrence)));
        assert!(matches!(haralick14(&m), Err(Error::EmptyCooccurrence)));
    }

    #[test]
    fn marginals_of_uniform_2x2_distribution() {
        // p uniform over 4 cells: build from a matrix with equal counts.
        let m = CooccurrenceMatrix::from_counts(2, vec![3, 3, 3, 3], (1, 0)).unwrap();
        let marg = marginals(&m).unwrap();
        assert!((marg.hxy - 4.0f64.ln()).abs() < 1e-12);
        assert!((marg.p_diff[0] - 0.5).abs() < 1e-12);
        assert!((marg.p_diff[1] - 0.5).abs() < 1e-12);
        for dist in [&marg.p_x, &marg.p_y, &marg.p_sum, &marg.p_diff] {
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_block_features_match_point_mass() {
        let img = GrayImage::constant(8, 8, 0.4);
        let q = quantize(&img, 8).unwrap();
        let m = cooccurrence(&q, (1, 0)).unwrap();
        let h = haralick14(&m).unwrap();
        let f = h.values();
        assert_eq!(f[0], 1.0); // f1
        assert_eq!(f[1], 0.0); // f2
        assert_eq!(f[7], 0.0); // f8
        assert_eq!(f[8], 0.0); // f9
        assert_eq!(f[10], 0.0); // f11
        assert_eq!(f[2], 0.0); // f3 guard
        assert_eq!(f[11], 0.0); // f12 guard
        assert_eq!(f[12], 0.0); // f13
        assert_eq!(f[13], 0.0); // f14: eigenvalues of Q are {1, 0, ...}
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn checkerboard_concentrates_on_off_diagonal() {
        // labels alternate 0/1 along every row; horizontal pairs are always
        // (0,1) or (1,0) in equal number.
        let mut labels = Vec::new();
        for y in 0..4 {
            for x in 0..4 {
                labels.push(((x + y) % 2) as u16);
            }
        }
        let q = quantized(4, 4, 2, &labels);
        let m = cooccurrence(&q, (1, 0)).unwrap();
        let h = haralick14(&m).unwrap();
        assert!((h.values()[0] - 0.5).abs() < 1e-12); // f1
        assert!((h.values()[1] - 1.0).abs() < 1e-12); // f2
    }

    #[test]
    fn permutation_invariant_features_survive_relabeling() {
        let base = quantized(4, 4, 4, &[0, 1, 2, 3, 3, 2, 1, 0, 0, 0, 1, 1, 2, 2, 3, 3]);
        // permutation pi: 0->2, 1->0, 2->3, 3->1
        let pi = [2u16, 0, 3, 1];
        let permuted_labels: Vec<u16> = base.labels().iter().map(|&l| pi[l as usize]).collect();
        let permuted = quantized(4, 4, 4, &permuted_labels);
        let ma = cooccurrence(&base, (1, 0)).unwrap();
        let mb = cooccurrence(&permuted, (1, 0)).unwrap();
        // P is permuted accordingly
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(ma.count(i, j), mb.count(pi[i] as usize, pi[j] as usize));
            }
        }
        // f1, f9, f11 are permutation-invariant
        let ha = haralick14(&ma).unwrap();
        let hb = haralick14(&mb).unwrap();
        for idx in [0, 8] {
            assert!((ha.values()[idx] - hb.values()[idx]).abs() < 1e-12);
        }
        // f11 depends on |i-j| which a permutation may change; the spec names
        // f1, f9, f11 -- entropy of p_diff is invariant only under
        // difference-preserving relabelings, so check with the shift pi+1 too.
        let shift: Vec<u16> = base.labels().iter().map(|&l| 3 - l).collect();
        let ms = cooccurrence(&quantized(4, 4, 4, &shift), (1, 0)).unwrap();
        let hs = haralick14(&ms).unwrap();
        assert!((ha.values()[10] - hs.values()[10]).abs() < 1e-12);
    }

    #[test]
    fn block_features_have_expected_layout() {
        let img = crate::testutil::test_texture(64, 48, 3);
        let t = block_texture_features(&img, BlockGrid::new(4, 3), 8, (1, 0)).unwrap();
        assert_eq!(t.len(), 168);
        assert_eq!(t.blocks().len(), 12);

        let single = block_texture_features(&img, BlockGrid::new(1, 1), 8, (1, 0)).unwrap();
        assert_eq!(single.len(), 14);

        assert!(matches!(
            block_texture_features(&img, BlockGrid::new(5, 3), 8, (1, 0)),
            Err(Error::IncompatibleGrid { .. })
        ));
    }

    #[test]
    fn constant_image_blocks_are_all_point_masses() {
        let img = GrayImage::constant(32, 32, 0.7);
        let t = block_texture_features(&img, BlockGrid::new(2, 2), 8, (1, 0)).unwrap();
        for block in t.blocks() {
            assert_eq!(block.values()[0], 1.0);
            assert_eq!(block.values()[1], 0.0);
        }
    }

    #[test]
    fn csv_dump_has_header_and_one_row_per_block() {
        let img = GrayImage::constant(8, 8, 0.2);
        let t = block_texture_features(&img, BlockGrid::new(2, 1), 4, (1, 0)).unwrap();
        let csv = haralick_csv(t.blocks());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("block,f1,"));
        assert!(lines[0].ends_with(",f14"));
        assert!(lines[1].starts_with("0,"));
        assert!(lines[2].starts_with("1,"));
    }

    #[test]
    fn single_level_blocks_keep_all_features_finite() {
        // exercises every degenerate guard at once
        let img = GrayImage::constant(4, 4, 0.0);
        let t = block_texture_features(&img, BlockGrid::new(1, 1), 8, (1, 0)).unwrap();
        assert!(t.values().iter().all(|v| v.is_finite()));
    }
}
