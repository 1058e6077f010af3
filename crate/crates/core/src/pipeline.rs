//! Batch (whole-image) extraction over the pyramid.

use rayon::prelude::*;

use crate::descriptor::{
    compute_descriptor, gaussian_smooth, generate_pattern, Descriptor, PatternPair, DEFAULT_PAIRS,
    DEFAULT_PATTERN_SEED,
};
use crate::error::Result;
use crate::fast::{detect_features, Coordinate, DEFAULT_THRESHOLD};
use crate::image::Pyramid;
use crate::orientation::{circular_mask, compute_moments, CircularMask, Moments, Orientation, WordLength, PATCH_RADIUS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractorParams {
    pub threshold: u8,
    pub word_length: WordLength,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for ExtractorParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            word_length: WordLength::default(),
            pairs: DEFAULT_PAIRS,
            seed: DEFAULT_PATTERN_SEED,
        }
    }
}

impl ExtractorParams {
    /// Mask and sampling pattern shared by both execution paths.
    pub(crate) fn tables(&self) -> Result<(CircularMask, Vec<PatternPair>)> {
        Ok((circular_mask(PATCH_RADIUS)?, generate_pattern(self.pairs, self.seed)?))
    }
}

/// Detected corner with its moments and (possibly truncated) orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturePoint {
    pub coord: Coordinate,
    pub moments: Moments,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub features: Vec<(FeaturePoint, Descriptor)>,
    pub level_counts: [usize; 2],
}

impl Extraction {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub(crate) fn push_level(&mut self, level: usize, mut items: Vec<(FeaturePoint, Descriptor)>) {
        self.level_counts[level] += items.len();
        self.features.append(&mut items);
    }
}

/// Detects, orients and describes features on both pyramid levels.
///
/// Output is ordered by (level, y, x).
pub fn extract_batch(pyramid: &Pyramid, params: &ExtractorParams) -> Result<Extraction> {
    let (mask, pattern) = params.tables()?;
    let mut out = Extraction::default();
    for (level, img) in pyramid.levels().iter().enumerate() {
        let coords = detect_features(img, params.threshold, level as u8);
        if coords.is_empty() {
            continue;
        }
        let smoothed = gaussian_smooth(img);
        let items = coords
            .par_iter()
            .map(|&coord| {
                let moments = compute_moments(img, coord, &mask)?;
                let orientation = params.word_length.orientation(moments)?;
                let desc = compute_descriptor(&smoothed, coord, orientation, &pattern)?;
                Ok((FeaturePoint { coord, moments, orientation }, desc))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push_level(level, items);
    }
    Ok(out)
}
