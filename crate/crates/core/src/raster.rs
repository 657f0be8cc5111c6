//! In-memory rasters: 8-bit images, masked disparity maps, and masked
//! real-valued maps (unreliability, confidence).

use crate::error::{Error, Result};

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidConfig(format!(
                "images carry 1 or 3 channels, got {channels}"
            )));
        }
        let expected = checked_area(width, height)?
            .checked_mul(channels)
            .ok_or_else(|| Error::DimensionOverflow(format!("{width}x{height}x{channels}")))?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{channels} image needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            data,
        })
    }

    /// Single-channel image from row-major samples.
    pub fn gray(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn same_dims(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Integer luma, `(299 R + 587 G + 114 B) / 1000`; gray images pass through.
    pub fn to_luma(&self) -> Vec<u8> {
        if self.channels == 1 {
            return self.data.clone();
        }
        self.data
            .chunks_exact(3)
            .map(|px| {
                let sum = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
                (sum / 1000) as u8
            })
            .collect()
    }
}

pub(crate) fn checked_area(width: usize, height: usize) -> Result<usize> {
    width
        .checked_mul(height)
        .ok_or_else(|| Error::DimensionOverflow(format!("{width}x{height}")))
}

/// Read access shared by every masked map, used by the writers.
pub trait MaskedGrid {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    /// Value of the `index`-th pixel in raster order, `None` when masked out.
    fn sample(&self, index: usize) -> Option<f64>;
}

/// Per-pixel disparity in pixels with a validity mask.
///
/// Valid entries are always finite; masked entries are never exposed through
/// [`DisparityMap::get`] or [`MaskedGrid::sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let area = checked_area(width, height)?;
        if values.len() != area || valid.len() != area {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} disparity map needs {area} values and mask entries, got {} and {}",
                values.len(),
                valid.len()
            )));
        }
        if let Some(i) = (0..area).find(|&i| valid[i] && !values[i].is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "valid disparity at index {i} is not finite"
            )));
        }
        Ok(DisparityMap {
            width,
            height,
            values,
            valid,
        })
    }

    /// Builds a map where every finite value is valid and everything else is
    /// masked out.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Self::new(width, height, values, valid)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        let area = width * height;
        DisparityMap {
            width,
            height,
            values: vec![value; area],
            valid: vec![value.is_finite(); area],
        }
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        let area = width * height;
        DisparityMap {
            width,
            height,
            values: vec![0.0; area],
            valid: vec![false; area],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw values, including whatever sits under masked pixels.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.valid[index].then(|| self.values[index])
    }

    pub fn at(&self, x: usize, y: usize) -> Option<f64> {
        self.get(y * self.width + x)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn same_dims<G: MaskedGrid>(&self, other: &G) -> bool {
        self.width == other.width() && self.height == other.height()
    }

    /// Masks out every pixel whose disparity exceeds `d_max`.
    pub fn mask_above(mut self, d_max: f64) -> Self {
        for (v, ok) in self.values.iter().zip(self.valid.iter_mut()) {
            if *ok && *v > d_max {
                *ok = false;
            }
        }
        self
    }

    /// Bit-level equality of valid pixels plus exact mask equality.
    pub fn bit_eq(&self, other: &DisparityMap) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.valid == other.valid
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.valid)
                .all(|((a, b), ok)| !ok || a.to_bits() == b.to_bits())
    }
}

impl MaskedGrid for DisparityMap {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn sample(&self, index: usize) -> Option<f64> {
        self.get(index)
    }
}

/// Masked map of non-negative reals; carries the unreliability raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl ScalarMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let area = checked_area(width, height)?;
        if values.len() != area || valid.len() != area {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} map needs {area} values and mask entries"
            )));
        }
        Ok(ScalarMap {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.valid[index].then(|| self.values[index])
    }
}

impl MaskedGrid for ScalarMap {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn sample(&self, index: usize) -> Option<f64> {
        self.get(index)
    }
}

/// Masked per-pixel confidence; every valid value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl ConfidenceMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let area = checked_area(width, height)?;
        if values.len() != area || valid.len() != area {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} confidence map needs {area} values and mask entries"
            )));
        }
        if let Some(i) = (0..area).find(|&i| valid[i] && !(0.0..=1.0).contains(&values[i])) {
            return Err(Error::OutOfRange(format!(
                "confidence {} at index {i} is outside [0, 1]",
                values[i]
            )));
        }
        Ok(ConfidenceMap {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.valid[index].then(|| self.values[index])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Same map, valid only where `mask` is also true.
    pub fn restricted_to(&self, mask: &[bool]) -> Result<ConfidenceMap> {
        if mask.len() != self.valid.len() {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries, map has {}",
                mask.len(),
                self.valid.len()
            )));
        }
        let valid = self.valid.iter().zip(mask).map(|(a, b)| *a && *b).collect();
        Ok(ConfidenceMap {
            valid,
            ..self.clone()
        })
    }

    /// `(min, mean, max)` over valid pixels, `None` when nothing is valid.
    pub fn summary(&self) -> Option<(f64, f64, f64)> {
        let mut n = 0usize;
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in (0..self.values.len()).filter_map(|i| self.get(i)) {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
            n += 1;
        }
        (n > 0).then(|| (lo, sum / n as f64, hi))
    }
}

impl MaskedGrid for ConfidenceMap {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn sample(&self, index: usize) -> Option<f64> {
        self.get(index)
    }
}
