//! Feature concatenation and PCA dimensionality reduction.
//!
//! The covariance is the unnormalized `C = sum_i z_i z_i^T` of the centered
//! feature vectors; retained-variance ratios and eigenvectors are unaffected
//! by the missing `1/N`. When there are fewer samples than dimensions the
//! fit goes through the `N x N` Gram matrix and the eigenbasis is completed
//! orthonormally with zero eigenvalues.

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scattering::ScatterFeatures;
use crate::texture::TextureFeatures;

/// Concatenated per-image descriptor: scattering features first, then
/// textural features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    scatter_len: usize,
    texture_len: usize,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, scatter_len: usize, texture_len: usize) -> Result<Self> {
        if values.len() != scatter_len + texture_len || values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: scatter_len + texture_len,
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            scatter_len,
            texture_len,
        })
    }

    /// Descriptor for scattering-only runs (texture disabled).
    pub fn scatter_only(fs: &ScatterFeatures) -> Result<Self> {
        if fs.is_empty() {
            return Err(Error::EmptyFeatureBlock("scattering".into()));
        }
        Self::new(fs.values().to_vec(), fs.len(), 0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scatter_len(&self) -> usize {
        self.scatter_len
    }

    pub fn texture_len(&self) -> usize {
        self.texture_len
    }
}

/// `f = [f_s, f_t]`, scattering block first. Both blocks must be nonempty.
pub fn concat_features(fs: &ScatterFeatures, ft: &TextureFeatures) -> Result<FeatureVector> {
    if fs.is_empty() {
        return Err(Error::EmptyFeatureBlock("scattering".into()));
    }
    if ft.is_empty() {
        return Err(Error::EmptyFeatureBlock("texture".into()));
    }
    let mut values = Vec::with_capacity(fs.len() + ft.len());
    values.extend_from_slice(fs.values());
    values.extend_from_slice(ft.values());
    FeatureVector::new(values, fs.len(), ft.len())
}

/// Which factorization computes the eigenpairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitRoute {
    /// Gram route when `N < d`, covariance route otherwise.
    #[default]
    Auto,
    /// Eigendecomposition of the `d x d` covariance.
    Covariance,
    /// Eigendecomposition of the `N x N` Gram matrix, mapped back.
    Gram,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    pub route: FitRoute,
    /// Per-dimension z-scoring before PCA; off by default.
    pub standardize: bool,
}

/// Projection of one feature vector onto the leading principal directions,
/// bound to its model by a content fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedVector {
    values: Vec<f64>,
    fingerprint: [u8; 16],
}

impl ReducedVector {
    pub fn new(values: Vec<f64>, fingerprint: [u8; 16]) -> Self {
        Self {
            values,
            fingerprint,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn fingerprint(&self) -> [u8; 16] {
        self.fingerprint
    }

    /// Truncation to the leading `k` components; valid because principal
    /// components are nested.
    pub fn truncated(&self, k: usize) -> ReducedVector {
        ReducedVector {
            values: self.values[..k.min(self.values.len())].to_vec(),
            fingerprint: self.fingerprint,
        }
    }
}

/// Mean, optional per-dimension scale, and the full ordered eigensystem of
/// the training covariance.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: DVector<f64>,
    scale: Option<DVector<f64>>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    n_samples: usize,
    fingerprint: [u8; 16],
}

impl PcaModel {
    /// Fits the model on `N >= 2` feature vectors of equal dimension.
    pub fn fit(data: &[FeatureVector], options: FitOptions) -> Result<Self> {
        let rows: Vec<&[f64]> = data.iter().map(|f| f.values()).collect();
        Self::fit_rows(&rows, options)
    }

    /// Fits from raw rows; every row is one sample.
    pub fn fit_rows(rows: &[&[f64]], options: FitOptions) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::TooFewSamples {
                got: n,
                required: 2,
            });
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }

        let mut mean = DVector::zeros(dim);
        for row in rows {
            for (acc, &v) in mean.iter_mut().zip(*row) {
                *acc += v;
            }
        }
        mean /= n as f64;

        let scale = if options.standardize {
            let mut var: DVector<f64> = DVector::zeros(dim);
            for row in rows {
                for ((acc, &v), mu) in var.iter_mut().zip(*row).zip(mean.iter()) {
                    *acc += (v - mu) * (v - mu);
                }
            }
            Some(DVector::from_iterator(
                dim,
                var.iter().map(|&s| {
                    let sd = (s / n as f64).sqrt();
                    if sd > 0.0 {
                        sd
                    } else {
                        1.0
                    }
                }),
            ))
        } else {
            None
        };

        let mut centered = DMatrix::zeros(n, dim);
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                let z = (v - mean[c]) / scale.as_ref().map_or(1.0, |s| s[c]);
                centered[(r, c)] = z;
            }
        }

        let route = match options.route {
            FitRoute::Auto => {
                if n < dim {
                    FitRoute::Gram
                } else {
                    FitRoute::Covariance
                }
            }
            explicit => explicit,
        };
        let (eigenvalues, mut eigenvectors) = match route {
            FitRoute::Covariance => covariance_eigensystem(&centered),
            FitRoute::Gram => gram_eigensystem(&centered),
            FitRoute::Auto => unreachable!(),
        };

        fix_signs(&mut eigenvectors);
        let fingerprint = fingerprint_of(&mean, scale.as_ref(), &eigenvalues, &eigenvectors, n);
        Ok(PcaModel {
            mean,
            scale,
            eigenvalues,
            eigenvectors,
            n_samples: n,
            fingerprint,
        })
    }

    /// Reassembles a model from stored parts, recomputing the fingerprint.
    pub(crate) fn from_parts(
        mean: DVector<f64>,
        scale: Option<DVector<f64>>,
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
        n_samples: usize,
    ) -> Result<Self> {
        let d = mean.len();
        if eigenvalues.len() != d
            || eigenvectors.nrows() != d
            || eigenvectors.ncols() != d
            || scale.as_ref().is_some_and(|s| s.len() != d)
        {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: eigenvalues.len(),
            });
        }
        let fingerprint = fingerprint_of(
            &mean,
            scale.as_ref(),
            &eigenvalues,
            &eigenvectors,
            n_samples,
        );
        Ok(PcaModel {
            mean,
            scale,
            eigenvalues,
            eigenvectors,
            n_samples,
            fingerprint,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Eigenvalues in descending order, clamped at zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvector columns, one per eigenvalue.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn scale(&self) -> Option<&[f64]> {
        self.scale.as_ref().map(|s| s.as_slice())
    }

    /// Number of strictly positive eigenvalues.
    pub fn rank(&self) -> usize {
        let cutoff = self.eigenvalues.first().copied().unwrap_or(0.0) * 1e-12;
        self.eigenvalues.iter().filter(|&&l| l > cutoff).count()
    }

    pub fn fingerprint(&self) -> [u8; 16] {
        self.fingerprint
    }

    /// Coordinates of `f` in the leading `k` principal directions.
    pub fn project(&self, f: &FeatureVector, k: usize) -> Result<ReducedVector> {
        self.project_values(f.values(), k)
    }

    pub fn project_values(&self, values: &[f64], k: usize) -> Result<ReducedVector> {
        let d = self.dim();
        if k == 0 || k > d {
            return Err(Error::BadK { k, max: d });
        }
        if values.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: values.len(),
            });
        }
        let mut coords = Vec::with_capacity(k);
        for col in 0..k {
            let axis = self.eigenvectors.column(col);
            let mut acc = 0.0;
            for i in 0..d {
                let z = (values[i] - self.mean[i]) / self.scale.as_ref().map_or(1.0, |s| s[i]);
                acc += axis[i] * z;
            }
            coords.push(acc);
        }
        Ok(ReducedVector::new(coords, self.fingerprint))
    }

    /// Inverse of [`project_values`](Self::project_values) on the retained
    /// subspace: `mean + sum_k alpha_k nu_k`, un-scaled if standardized.
    pub fn reconstruct(&self, coords: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if coords.len() > d {
            return Err(Error::BadK {
                k: coords.len(),
                max: d,
            });
        }
        let mut out = vec![0.0; d];
        for (col, &alpha) in coords.iter().enumerate() {
            let axis = self.eigenvectors.column(col);
            for i in 0..d {
                out[i] += alpha * axis[i];
            }
        }
        for i in 0..d {
            out[i] = out[i] * self.scale.as_ref().map_or(1.0, |s| s[i]) + self.mean[i];
        }
        Ok(out)
    }

    /// Fraction of total spectral energy in the first `k` eigenvalues.
    pub fn retained_variance(&self, k: usize) -> Result<f64> {
        let d = self.dim();
        if k == 0 || k > d {
            return Err(Error::BadK { k, max: d });
        }
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        Ok(self.eigenvalues[..k].iter().sum::<f64>() / total)
    }

    /// Smallest `k` whose retained variance reaches `epsilon`.
    pub fn choose_k(&self, epsilon: f64) -> Result<usize> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::BadConfig(format!(
                "epsilon {epsilon} outside (0, 1]"
            )));
        }
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        let mut partial = 0.0;
        for (idx, &l) in self.eigenvalues.iter().enumerate() {
            partial += l;
            if partial / total >= epsilon {
                return Ok(idx + 1);
            }
        }
        Ok(self.dim())
    }
}

fn covariance_eigensystem(centered: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let cov = centered.transpose() * centered;
    let eigen = cov.symmetric_eigen();
    sorted_eigensystem(eigen.eigenvalues.as_slice(), &eigen.eigenvectors)
}

fn gram_eigensystem(centered: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = centered.ncols();
    let gram = centered * centered.transpose();
    let eigen = gram.symmetric_eigen();
    let (lambdas, vectors) = sorted_eigensystem(eigen.eigenvalues.as_slice(), &eigen.eigenvectors);

    let cutoff = lambdas.first().copied().unwrap_or(0.0).max(0.0) * 1e-12;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut eigenvalues = Vec::with_capacity(d);
    for (idx, &l) in lambdas.iter().enumerate() {
        if l <= cutoff || basis.len() == d {
            break;
        }
        let mut v = centered.transpose() * vectors.column(idx);
        // re-orthogonalize against accepted directions for stability
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
            basis.push(v);
            eigenvalues.push(l);
        }
    }
    complete_basis(&mut basis, d);
    eigenvalues.resize(d, 0.0);

    let mut out = DMatrix::zeros(d, d);
    for (col, v) in basis.iter().enumerate() {
        out.set_column(col, v);
    }
    (eigenvalues, out)
}

/// Extends an orthonormal set to a full basis using coordinate directions;
/// the added directions carry zero eigenvalue.
fn complete_basis(basis: &mut Vec<DVector<f64>>, dim: usize) {
    let mut candidate = 0;
    while basis.len() < dim && candidate < dim {
        let mut v: DVector<f64> = DVector::zeros(dim);
        v[candidate] = 1.0;
        candidate += 1;
        for _pass in 0..2 {
            for b in basis.iter() {
                let proj = b.dot(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            v /= norm;
            basis.push(v);
        }
    }
    assert_eq!(basis.len(), dim, "orthonormal completion failed");
}

fn sorted_eigensystem(values: &[f64], vectors: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("finite eigenvalues")
    });
    let lambdas: Vec<f64> = order.iter().map(|&i| values[i].max(0.0)).collect();
    let mut sorted = DMatrix::zeros(vectors.nrows(), values.len());
    for (col, &i) in order.iter().enumerate() {
        sorted.set_column(col, &vectors.column(i));
    }
    (lambdas, sorted)
}

/// Makes the largest-magnitude component of every column positive.
fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn fingerprint_of(
    mean: &DVector<f64>,
    scale: Option<&DVector<f64>>,
    eigenvalues: &[f64],
    eigenvectors: &DMatrix<f64>,
    n_samples: usize,
) -> [u8; 16] {
    let mut hasher = Sha256::new();
    hasher.update((mean.len() as u64).to_le_bytes());
    hasher.update((n_samples as u64).to_le_bytes());
    hasher.update([u8::from(scale.is_some())]);
    for v in mean.iter() {
        hasher.update(v.to_le_bytes());
    }
    if let Some(s) = scale {
        for v in s.iter() {
            hasher.update(v.to_le_bytes());
        }
    }
    for v in eigenvalues {
        hasher.update(v.to_le_bytes());
    }
    for v in eigenvectors.iter() {
        hasher.update(v.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut out = [0u8; 16];
    out.copy_from_slice(&digest[..16]);
    out
}
