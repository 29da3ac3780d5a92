//! Pipeline configuration and the per-image feature extractor.
//!
//! The default configuration is the reference one: 64x48 working
//! resolution, 5 scales, 6 orientations, 2 layers (391 maps, 782 pooled
//! values), a 4x3 block grid with 8 gray levels and offset (1,0) (168
//! textural values), 950 features total, PCA at 99% retained variance.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{concat_features, FeatureVector};
use crate::image::GrayImage;
use crate::scattering::{
    build_filter_bank, pool_scattering, scatter, FilterBank, ScatterFeatures, ScatteringConfig,
};
use crate::texture::{block_texture_features, BlockGrid, TextureFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextureConfig {
    pub enabled: bool,
    pub grid: BlockGrid,
    pub levels: usize,
    pub offset: (i32, i32),
}

impl Default for TextureConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            grid: BlockGrid::new(4, 3),
            levels: 8,
            offset: (1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcaConfig {
    /// Retained-variance target used when `components` is unset.
    pub epsilon: f64,
    /// Explicit component count; overrides `epsilon`.
    pub components: Option<usize>,
    pub standardize: bool,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.99,
            components: None,
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub width: usize,
    pub height: usize,
    /// Convert color (P6) input with Rec. 601 luma instead of rejecting it.
    pub luma_conversion: bool,
    pub scattering: ScatteringConfig,
    pub texture: TextureConfig,
    pub pca: PcaConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 48,
            luma_conversion: false,
            scattering: ScatteringConfig::default(),
            texture: TextureConfig::default(),
            pca: PcaConfig::default(),
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.scattering.validate()?;
        self.scattering.check_size(self.width, self.height)?;
        if self.texture.enabled {
            let g = self.texture.grid;
            if g.x == 0
                || g.y == 0
                || !self.width.is_multiple_of(g.x)
                || !self.height.is_multiple_of(g.y)
            {
                return Err(Error::IncompatibleGrid {
                    grid_x: g.x,
                    grid_y: g.y,
                    width: self.width,
                    height: self.height,
                });
            }
            if self.texture.levels < 2 {
                return Err(Error::InvalidLevels(self.texture.levels));
            }
            let (bw, bh) = (self.width / g.x, self.height / g.y);
            let (dx, dy) = self.texture.offset;
            if dx.unsigned_abs() as usize >= bw || dy.unsigned_abs() as usize >= bh {
                return Err(Error::OffsetTooLarge {
                    dx,
                    dy,
                    width: bw,
                    height: bh,
                });
            }
        }
        if !(self.pca.epsilon > 0.0 && self.pca.epsilon <= 1.0) {
            return Err(Error::BadConfig(format!(
                "pca.epsilon {} outside (0, 1]",
                self.pca.epsilon
            )));
        }
        if self.pca.components == Some(0) {
            return Err(Error::BadConfig("pca.components must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Canonical JSON echo embedded in every output artifact.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))
    }

    /// Loading policy for color input, per the `luma_conversion` flag.
    pub fn color_policy(&self) -> crate::image::ColorPolicy {
        if self.luma_conversion {
            crate::image::ColorPolicy::Luma
        } else {
            crate::image::ColorPolicy::Reject
        }
    }

    /// Expected feature dimensionality under this configuration.
    pub fn feature_len(&self) -> usize {
        let scatter = 2 * crate::scattering::scattering_path_count(&self.scattering);
        let texture = if self.texture.enabled {
            14 * self.texture.grid.block_count()
        } else {
            0
        };
        scatter + texture
    }
}

/// Resizes to the target resolution after checking the divisibility
/// preconditions of the scattering and texture stages.
pub fn preprocess(
    img: &GrayImage,
    target: (usize, usize),
    scattering: &ScatteringConfig,
    grid: Option<BlockGrid>,
) -> Result<GrayImage> {
    let (width, height) = target;
    let dyadic = scattering.dyadic_factor();
    if width == 0 || height == 0 || width % dyadic != 0 || height % dyadic != 0 {
        return Err(Error::IncompatibleTarget {
            width,
            height,
            reason: format!("dimensions must be divisible by {dyadic}"),
        });
    }
    if let Some(g) = grid {
        if g.x == 0 || g.y == 0 || width % g.x != 0 || height % g.y != 0 {
            return Err(Error::IncompatibleTarget {
                width,
                height,
                reason: format!(
                    "dimensions must be divisible by the {}x{} block grid",
                    g.x, g.y
                ),
            });
        }
    }
    img.resize_bilinear(width, height)
}

/// Reusable per-configuration extractor; the filter bank is built once and
/// shared across images and threads.
pub struct FeatureExtractor {
    config: PipelineConfig,
    bank: FilterBank,
}

impl FeatureExtractor {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let bank = build_filter_bank(&config.scattering, config.width, config.height)?;
        Ok(Self { config, bank })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    /// Scattering and (optionally) texture blocks for one image; the input
    /// is resized to the working resolution first.
    pub fn extract_parts(
        &self,
        img: &GrayImage,
    ) -> Result<(ScatterFeatures, Option<TextureFeatures>)> {
        let grid = self
            .config
            .texture
            .enabled
            .then_some(self.config.texture.grid);
        let working = preprocess(
            img,
            (self.config.width, self.config.height),
            &self.config.scattering,
            grid,
        )?;
        let maps = scatter(&working, &self.bank)?;
        let fs = pool_scattering(&maps);
        let ft = if self.config.texture.enabled {
            Some(block_texture_features(
                &working,
                self.config.texture.grid,
                self.config.texture.levels,
                self.config.texture.offset,
            )?)
        } else {
            None
        };
        Ok((fs, ft))
    }

    /// Full concatenated feature vector for one image.
    pub fn extract(&self, img: &GrayImage) -> Result<FeatureVector> {
        let (fs, ft) = self.extract_parts(img)?;
        match ft {
            Some(ft) => concat_features(&fs, &ft),
            None => FeatureVector::scatter_only(&fs),
        }
    }
}
