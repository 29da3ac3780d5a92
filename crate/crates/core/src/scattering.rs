//! Directional Morlet filter bank and the windowed scattering transform.
//!
//! The cascade alternates wavelet filtering, complex modulus and Gaussian
//! low-pass averaging. All convolutions are circular and performed in the
//! frequency domain at full resolution; maps are never downsampled, so the
//! global mean/variance pooling is exactly shift-invariant for whole-pixel
//! circular translations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{to_complex, Fft2d, FftScratch};
use crate::image::GrayImage;

/// Gaussian width of the mother wavelet at scale 0.
const SIGMA0: f64 = 0.8;
/// Center frequency of the mother wavelet at scale 0.
const XI0: f64 = 3.0 * std::f64::consts::PI / 4.0;
/// Anisotropy of the Gaussian envelope perpendicular to the oscillation.
const SLANT: f64 = 0.5;
/// Periodization aliases summed on each side when sampling filters.
const ALIASES: i64 = 2;

/// Scattering cascade parameters. Defaults match the reference
/// configuration: 5 scales, 6 orientations, 2 layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScatteringConfig {
    /// Number of dyadic scales `J`; band-pass filters use scales `0..J`.
    pub scales: u32,
    /// Number of orientations `p`, equally spaced over `[0, pi)`.
    pub orientations: u32,
    /// Deepest layer `m` of the cascade; `0..=2` supported.
    pub max_layer: u32,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self {
            scales: 5,
            orientations: 6,
            max_layer: 2,
        }
    }
}

impl ScatteringConfig {
    pub fn new(scales: u32, orientations: u32, max_layer: u32) -> Result<Self> {
        let cfg = Self {
            scales,
            orientations,
            max_layer,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 {
            return Err(Error::BadScatteringConfig("scales must be >= 1".into()));
        }
        if self.orientations == 0 {
            return Err(Error::BadScatteringConfig(
                "orientations must be >= 1".into(),
            ));
        }
        if self.max_layer > 2 {
            return Err(Error::BadScatteringConfig(
                "layers beyond 2 are not supported".into(),
            ));
        }
        Ok(())
    }

    /// Coarsest wavelet dilation `2^(J-1)`; both image dimensions must be a
    /// multiple of it.
    pub fn dyadic_factor(&self) -> usize {
        1usize << (self.scales - 1)
    }

    pub fn check_size(&self, width: usize, height: usize) -> Result<()> {
        let required = self.dyadic_factor();
        if width == 0
            || height == 0
            || !width.is_multiple_of(required)
            || !height.is_multiple_of(required)
        {
            return Err(Error::IncompatibleSize {
                width,
                height,
                required,
            });
        }
        Ok(())
    }
}

/// One cascade path: the `(scale, orientation)` pair of every wavelet
/// applied along it. Empty for the layer-0 (pure averaging) map.
pub type ScatterPath = Vec<(u32, u32)>;

/// Total number of admissible paths through layer `m`:
/// `sum_{k=0}^{m} p^k * C(J, k)`.
pub fn scattering_path_count(config: &ScatteringConfig) -> usize {
    let j = u64::from(config.scales);
    let p = u64::from(config.orientations);
    let mut total = 0u64;
    for k in 0..=u64::from(config.max_layer) {
        total += p.pow(k as u32) * binomial(j, k);
    }
    total as usize
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Enumerates every admissible path in canonical order: layer-major, then
/// lexicographic in the `(j1, o1, j2, o2, ...)` tuple. Scale indices
/// strictly decrease along a path.
pub fn admissible_paths(config: &ScatteringConfig) -> Vec<ScatterPath> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<ScatterPath> = vec![Vec::new()];
    for _layer in 1..=config.max_layer {
        let mut next = Vec::new();
        for path in &frontier {
            let scale_bound = path.last().map_or(config.scales, |&(j, _)| j);
            for j in 0..scale_bound {
                for o in 0..config.orientations {
                    let mut p = path.clone();
                    p.push((j, o));
                    next.push(p);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Precomputed frequency-domain filters for one image size.
///
/// Band-pass filters are complex Morlets sampled in the Fourier domain
/// (real-valued there); the low-pass is an isotropic Gaussian with unit DC
/// gain. Immutable after construction and shareable across threads.
pub struct FilterBank {
    config: ScatteringConfig,
    width: usize,
    height: usize,
    /// Indexed `j * orientations + o`.
    psi: Vec<Vec<f64>>,
    phi: Vec<f64>,
    fft: Fft2d,
}

impl FilterBank {
    pub fn config(&self) -> &ScatteringConfig {
        &self.config
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band_pass_count(&self) -> usize {
        self.psi.len()
    }

    pub fn psi(&self, scale: u32, orientation: u32) -> &[f64] {
        &self.psi[(scale * self.config.orientations + orientation) as usize]
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
}

/// Frequency response of the directional Morlet at dyadic scale `2^j` and
/// wave-vector angle `theta`, periodized onto a `width x height` DFT grid.
/// The DC bin is cancelled exactly, making the spatial filter zero-mean.
pub fn morlet_kernel(width: usize, height: usize, scale: u32, theta: f64) -> Vec<f64> {
    let dilation = f64::powi(2.0, scale as i32);
    let sigma = SIGMA0 * dilation;
    let xi = XI0 / dilation;
    let carrier = sampled_gaussian(width, height, sigma, theta, SLANT, xi);
    let envelope = sampled_gaussian(width, height, sigma, theta, SLANT, 0.0);
    let beta = carrier[0] / envelope[0];
    carrier
        .iter()
        .zip(&envelope)
        .map(|(c, e)| c - beta * e)
        .collect()
}

/// Frequency response of the Gaussian low-pass paired with `J` scales,
/// normalized to unit DC gain. Nonnegative everywhere by construction.
pub fn lowpass_kernel(width: usize, height: usize, scales: u32) -> Vec<f64> {
    let sigma = SIGMA0 * f64::powi(2.0, scales as i32 - 1);
    let mut phi = sampled_gaussian(width, height, sigma, 0.0, 1.0, 0.0);
    let dc = phi[0];
    for v in phi.iter_mut() {
        *v /= dc;
    }
    phi
}

/// Samples `exp(-sigma^2 (w_par^2 + w_perp^2 / slant^2) / 2)` centered at
/// frequency `xi * (cos theta, sin theta)`, summed over `ALIASES` periods.
fn sampled_gaussian(
    width: usize,
    height: usize,
    sigma: f64,
    theta: f64,
    slant: f64,
    xi: f64,
) -> Vec<f64> {
    let (dir_x, dir_y) = (theta.cos(), theta.sin());
    let (cx, cy) = (xi * dir_x, xi * dir_y);
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(width * height);
    for n in 0..height {
        let wy0 = tau * signed_frequency(n, height) / height as f64;
        for m in 0..width {
            let wx0 = tau * signed_frequency(m, width) / width as f64;
            let mut acc = 0.0;
            for ky in -ALIASES..=ALIASES {
                for kx in -ALIASES..=ALIASES {
                    let wx = wx0 + tau * kx as f64 - cx;
                    let wy = wy0 + tau * ky as f64 - cy;
                    let along = wx * dir_x + wy * dir_y;
                    let perp = -wx * dir_y + wy * dir_x;
                    let quad = sigma * sigma * (along * along + perp * perp / (slant * slant));
                    acc += (-0.5 * quad).exp();
                }
            }
            out.push(acc);
        }
    }
    out
}

fn signed_frequency(index: usize, len: usize) -> f64 {
    if index <= len / 2 {
        index as f64
    } else {
        index as f64 - len as f64
    }
}

/// Builds the Morlet filter bank for one image size: `J * p` band-pass
/// filters at orientations `o * pi / p` plus the Gaussian low-pass.
pub fn build_filter_bank(
    config: &ScatteringConfig,
    width: usize,
    height: usize,
) -> Result<FilterBank> {
    config.validate()?;
    config.check_size(width, height)?;
    let p = config.orientations;
    let mut psi = Vec::with_capacity((config.scales * p) as usize);
    for j in 0..config.scales {
        for o in 0..p {
            let theta = std::f64::consts::PI * f64::from(o) / f64::from(p);
            psi.push(morlet_kernel(width, height, j, theta));
        }
    }
    Ok(FilterBank {
        config: *config,
        width,
        height,
        psi,
        phi: lowpass_kernel(width, height, config.scales),
        fft: Fft2d::new(width, height),
    })
}

/// One low-pass-smoothed map of the cascade, kept at input resolution.
#[derive(Debug, Clone)]
pub struct ScatterMap {
    pub path: ScatterPath,
    pub pixels: Vec<f64>,
}

impl ScatterMap {
    pub fn layer(&self) -> usize {
        self.path.len()
    }
}

/// All maps of one transform in canonical path order.
#[derive(Debug, Clone)]
pub struct ScatteringMaps {
    pub width: usize,
    pub height: usize,
    pub maps: Vec<ScatterMap>,
}

impl ScatteringMaps {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// Pooled scattering descriptor: per map, population mean then population
/// variance, concatenated in canonical path order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterFeatures {
    values: Vec<f64>,
}

impl ScatterFeatures {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Runs the scattering cascade on one image.
///
/// Layer 0 is `f * phi`; layer 1 is `|f * psi_(j1,o1)| * phi`; layer 2 is
/// `||f * psi_(j1,o1)| * psi_(j2,o2)| * phi` restricted to `j2 < j1`.
pub fn scatter(img: &GrayImage, bank: &FilterBank) -> Result<ScatteringMaps> {
    if img.width() != bank.width || img.height() != bank.height {
        return Err(Error::SizeMismatch {
            img_width: img.width(),
            img_height: img.height(),
            bank_width: bank.width,
            bank_height: bank.height,
        });
    }
    let config = bank.config;
    let fft = &bank.fft;
    let mut scratch = fft.make_scratch();
    let mut maps = Vec::with_capacity(scattering_path_count(&config));

    let mut spectrum = to_complex(img.data());
    fft.forward(&mut spectrum, &mut scratch);

    maps.push(ScatterMap {
        path: Vec::new(),
        pixels: smooth(fft, &mut scratch, &spectrum, &bank.phi),
    });

    if config.max_layer >= 1 {
        // First pass keeps the spectra of the layer-1 moduli so each one is
        // transformed exactly once regardless of how many layer-2 paths
        // extend it.
        let mut envelope_spectra: Vec<Vec<Complex64>> = Vec::new();
        for j1 in 0..config.scales {
            for o1 in 0..config.orientations {
                let mut buf = apply_filter(&spectrum, bank.psi(j1, o1));
                fft.inverse(&mut buf, &mut scratch);
                let mut env: Vec<Complex64> =
                    buf.iter().map(|c| Complex64::new(c.norm(), 0.0)).collect();
                fft.forward(&mut env, &mut scratch);
                maps.push(ScatterMap {
                    path: vec![(j1, o1)],
                    pixels: smooth(fft, &mut scratch, &env, &bank.phi),
                });
                if config.max_layer >= 2 {
                    envelope_spectra.push(env);
                }
            }
        }

        if config.max_layer >= 2 {
            for j1 in 0..config.scales {
                for o1 in 0..config.orientations {
                    let env = &envelope_spectra[(j1 * config.orientations + o1) as usize];
                    for j2 in 0..j1 {
                        for o2 in 0..config.orientations {
                            let mut buf = apply_filter(env, bank.psi(j2, o2));
                            fft.inverse(&mut buf, &mut scratch);
                            let mut env2: Vec<Complex64> =
                                buf.iter().map(|c| Complex64::new(c.norm(), 0.0)).collect();
                            fft.forward(&mut env2, &mut scratch);
                            maps.push(ScatterMap {
                                path: vec![(j1, o1), (j2, o2)],
                                pixels: smooth(fft, &mut scratch, &env2, &bank.phi),
                            });
                        }
                    }
                }
            }
        }
    }

    Ok(ScatteringMaps {
        width: bank.width,
        height: bank.height,
        maps,
    })
}

fn apply_filter(spectrum: &[Complex64], filter: &[f64]) -> Vec<Complex64> {
    spectrum.iter().zip(filter).map(|(s, &f)| s * f).collect()
}

fn smooth(fft: &Fft2d, scratch: &mut FftScratch, spectrum: &[Complex64], phi: &[f64]) -> Vec<f64> {
    let mut buf = apply_filter(spectrum, phi);
    fft.inverse(&mut buf, scratch);
    buf.iter().map(|c| c.re).collect()
}

/// Population mean and variance of every map, in canonical path order.
pub fn pool_scattering(maps: &ScatteringMaps) -> ScatterFeatures {
    let mut values = Vec::with_capacity(2 * maps.maps.len());
    for map in &maps.maps {
        let n = map.pixels.len() as f64;
        let mean = map.pixels.iter().sum::<f64>() / n;
        let var = map
            .pixels
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        values.push(mean);
        values.push(var);
    }
    ScatterFeatures { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::test_texture;

    fn default_config() -> ScatteringConfig {
        ScatteringConfig::default()
    }

    /// Brute-force oracle: count tuples `((j1,o1),...,(jk,ok))` with
    /// strictly decreasing scale indices, for all layers `0..=m`.
    fn count_paths_brute_force(scales: u32, orientations: u32, max_layer: u32) -> usize {
        fn extend(prefix_min: u32, remaining: u32, scales: u32, orientations: u32) -> usize {
            if remaining == 0 {
                return 1;
            }
            let mut total = 0;
            for j in 0..prefix_min.min(scales) {
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

    #[test]
    fn path_count_matches_reference_values() {
        assert_eq!(scattering_path_count(&default_config()), 391);
        let layer0 = ScatteringConfig::new(5, 6, 0).unwrap();
        assert_eq!(scattering_path_count(&layer0), 1);
        let small = ScatteringConfig::new(3, 4, 2).unwrap();
        assert_eq!(scattering_path_count(&small), 61); // 1 + 12 + 48
        assert_eq!(count_paths_brute_force(3, 4, 2), 61);
    }

    #[test]
    fn path_count_matches_enumeration_everywhere() {
        for scales in 1..=6 {
            for orientations in 1..=8 {
                for max_layer in 0..=2 {
                    let cfg = ScatteringConfig::new(scales, orientations, max_layer).unwrap();
                    let formula = scattering_path_count(&cfg);
                    assert_eq!(formula, admissible_paths(&cfg).len());
                    assert_eq!(
                        formula,
                        count_paths_brute_force(scales, orientations, max_layer)
                    );
                }
            }
        }
    }

    #[test]
    fn canonical_path_order_is_lexicographic() {
        let cfg = ScatteringConfig::new(3, 2, 2).unwrap();
        let paths = admissible_paths(&cfg);
        assert_eq!(paths[0], Vec::<(u32, u32)>::new());
        assert_eq!(paths[1], vec![(0, 0)]);
        assert_eq!(paths[2], vec![(0, 1)]);
        // first layer-2 path extends the smallest admissible first scale
        let first_layer2 = paths.iter().find(|p| p.len() == 2).unwrap();
        assert_eq!(*first_layer2, vec![(1, 0), (0, 0)]);
        // admissibility: scale strictly decreases along every path
        for p in &paths {
            for pair in p.windows(2) {
                assert!(pair[1].0 < pair[0].0);
            }
        }
    }

    #[test]
    fn bank_has_expected_filter_counts() {
        let bank = build_filter_bank(&default_config(), 64, 48).unwrap();
        assert_eq!(bank.band_pass_count(), 30);
        assert_eq!(bank.phi().len(), 64 * 48);
    }

    #[test]
    fn rejects_size_not_divisible_by_coarsest_dilation() {
        match build_filter_bank(&default_config(), 65, 48) {
            Err(Error::IncompatibleSize { required, .. }) => assert_eq!(required, 16),
            Err(other) => panic!("expected IncompatibleSize, got {other:?}"),
            Ok(_) => panic!("expected IncompatibleSize, got a bank"),
        }
        assert!(build_filter_bank(&default_config(), 64, 48).is_ok());
    }

    #[test]
    fn band_pass_filters_are_dc_free() {
        let bank = build_filter_bank(&default_config(), 64, 48).unwrap();
        for j in 0..5 {
            for o in 0..6 {
                let f = bank.psi(j, o);
                let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(f[0].abs() <= 1e-6 * peak, "psi({j},{o}) DC leak");
            }
        }
    }

    #[test]
    fn lowpass_is_nonnegative_with_unit_dc_gain() {
        let phi = lowpass_kernel(64, 48, 5);
        assert_eq!(phi[0], 1.0);
        assert!(phi.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn opposite_orientations_are_point_reflections_in_frequency() {
        // The wave vector at theta + pi is the negation of the one at theta,
        // so the two frequency responses are exact point reflections of each
        // other on the DFT grid.
        let (w, h) = (32, 32);
        for &theta in &[0.0, 0.7, std::f64::consts::PI / 3.0] {
            let a = morlet_kernel(w, h, 1, theta);
            let b = morlet_kernel(w, h, 1, theta + std::f64::consts::PI);
            for n in 0..h {
                for m in 0..w {
                    let rn = (h - n) % h;
                    let rm = (w - m) % w;
                    let diff = (a[n * w + m] - b[rn * w + rm]).abs();
                    assert!(diff < 1e-10, "reflection mismatch at ({m},{n}): {diff}");
                }
            }
        }
    }

    #[test]
    fn constant_image_has_zero_response_above_layer_zero() {
        let bank = build_filter_bank(&ScatteringConfig::new(3, 4, 2).unwrap(), 32, 32).unwrap();
        let img = GrayImage::constant(32, 32, 0.5);
        let maps = scatter(&img, &bank).unwrap();
        for map in &maps.maps {
            if map.layer() == 0 {
                for &v in &map.pixels {
                    assert!((v - 0.5).abs() < 1e-8);
                }
            } else {
                for &v in &map.pixels {
                    assert!(v.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn map_count_equals_path_count() {
        let cfg = ScatteringConfig::new(4, 3, 2).unwrap();
        let bank = build_filter_bank(&cfg, 32, 32).unwrap();
        let img = test_texture(32, 32, 3);
        let maps = scatter(&img, &bank).unwrap();
        assert_eq!(maps.len(), scattering_path_count(&cfg));
        let expected: Vec<_> = admissible_paths(&cfg);
        let actual: Vec<_> = maps.maps.iter().map(|m| m.path.clone()).collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn maps_above_layer_zero_are_nonnegative() {
        let cfg = ScatteringConfig::new(3, 2, 2).unwrap();
        let bank = build_filter_bank(&cfg, 32, 32).unwrap();
        let maps = scatter(&test_texture(32, 32, 9), &bank).unwrap();
        for map in maps.maps.iter().filter(|m| m.layer() >= 1) {
            let min = map.pixels.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-9, "layer {} map has min {min}", map.layer());
        }
    }

    #[test]
    fn layer_zero_is_linear_in_the_input() {
        let cfg = ScatteringConfig::new(3, 2, 0).unwrap();
        let bank = build_filter_bank(&cfg, 32, 32).unwrap();
        let img = test_texture(32, 32, 5);
        let half = GrayImage::new(32, 32, img.data().iter().map(|v| v * 0.5).collect()).unwrap();
        let full = scatter(&img, &bank).unwrap();
        let scaled = scatter(&half, &bank).unwrap();
        for (a, b) in full.maps[0].pixels.iter().zip(&scaled.maps[0].pixels) {
            assert!((a * 0.5 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_shift_leaves_pooled_features_nearly_unchanged() {
        let cfg = ScatteringConfig::new(4, 4, 2).unwrap();
        let bank = build_filter_bank(&cfg, 32, 32).unwrap();
        let img = test_texture(32, 32, 11);
        let base = pool_scattering(&scatter(&img, &bank).unwrap());
        let shifted = pool_scattering(&scatter(&img.shifted_circular(2, 2), &bank).unwrap());
        let num: f64 = base
            .values()
            .iter()
            .zip(shifted.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = base.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den <= 0.05, "relative change {}", num / den);
    }

    #[test]
    fn pooling_of_bernoulli_map_gives_expected_moments() {
        let mut pixels = vec![0.0; 8];
        pixels.extend(vec![1.0; 8]);
        let maps = ScatteringMaps {
            width: 4,
            height: 4,
            maps: vec![ScatterMap {
                path: Vec::new(),
                pixels,
            }],
        };
        let f = pool_scattering(&maps);
        assert_eq!(f.values(), &[0.5, 0.25]);
    }

    #[test]
    fn pooling_of_constant_map_gives_zero_variance() {
        let maps = ScatteringMaps {
            width: 2,
            height: 2,
            maps: vec![ScatterMap {
                path: Vec::new(),
                pixels: vec![0.3; 4],
            }],
        };
        assert_eq!(pool_scattering(&maps).values(), &[0.3, 0.0]);
    }
}
