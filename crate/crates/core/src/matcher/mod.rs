//! Stereo matchers: a function from a rectified pair to a disparity map.
//!
//! The confidence pipeline only ever sees a matcher through
//! [`StereoMatcher`]; it never reaches into costs or intermediate state.
//! [`StereoMatcher::compute_with_costs`] exists solely for the minimum-cost
//! baseline in the evaluation module.

mod external;
mod sgm;

pub use external::{ExternalMatcher, ExternalMatcherSpec};
pub use sgm::{census_transform, CensusMatcher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{DisparityMap, RasterImage};

pub const DEFAULT_D_MAX: u32 = 192;
pub const MAX_D_MAX: u32 = 1024;
/// Largest `p2` for which summed 8-path costs still fit in 16 bits.
pub const MAX_P2: u32 = 4096;
/// Left-right consistency threshold in pixels.
pub const LR_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherConfig {
    pub d_max: u32,
    /// Census window as (width, height); both odd and at least 3.
    pub census_window: (usize, usize),
    pub p1: u32,
    pub p2: u32,
    /// Aggregation directions, 4 or 8.
    pub paths: u8,
    pub subpixel: bool,
    pub lr_check: bool,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            d_max: DEFAULT_D_MAX,
            census_window: (9, 7),
            p1: 10,
            p2: 120,
            paths: 8,
            subpixel: true,
            lr_check: true,
        }
    }
}

impl MatcherConfig {
    pub fn with_d_max(d_max: u32) -> Self {
        MatcherConfig {
            d_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_max == 0 || self.d_max > MAX_D_MAX {
            return Err(Error::InvalidConfig(format!(
                "d_max must be in 1..={MAX_D_MAX}, got {}",
                self.d_max
            )));
        }
        if self.p2 < self.p1 || self.p2 > MAX_P2 {
            return Err(Error::InvalidConfig(format!(
                "penalties need p1 <= p2 <= {MAX_P2}, got p1={} p2={}",
                self.p1, self.p2
            )));
        }
        let (w, h) = self.census_window;
        if w < 3 || h < 3 || w % 2 == 0 || h % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "census window dimensions must be odd and >= 3, got {w}x{h}"
            )));
        }
        if w * h - 1 > 64 {
            return Err(Error::InvalidConfig(format!(
                "census window {w}x{h} needs more than 64 bits"
            )));
        }
        if self.paths != 4 && self.paths != 8 {
            return Err(Error::InvalidConfig(format!(
                "paths must be 4 or 8, got {}",
                self.paths
            )));
        }
        Ok(())
    }
}

/// Disparity plus the aggregated cost of the winning disparity per pixel.
#[derive(Debug, Clone)]
pub struct MatchOutput {
    pub disparity: DisparityMap,
    /// Row-major winner cost for every pixel, including those the
    /// consistency check masked out.
    pub winner_cost: Vec<u32>,
}

/// A black-box stereo function `(left, right) -> disparity`.
pub trait StereoMatcher: Sync {
    fn compute(&self, left: &RasterImage, right: &RasterImage) -> Result<DisparityMap>;

    /// Internal costs, when the matcher exposes them.
    fn compute_with_costs(&self, _left: &RasterImage, _right: &RasterImage) -> Result<MatchOutput> {
        Err(Error::CostsUnavailable)
    }

    /// Largest disparity the matcher can emit.
    fn d_max(&self) -> u32;
}

pub(crate) fn check_pair(left: &RasterImage, right: &RasterImage) -> Result<()> {
    if !left.same_dims(right) {
        return Err(Error::DimensionMismatch(format!(
            "left is {}x{}, right is {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        MatcherConfig::default().validate().unwrap();
    }

    #[test]
    fn config_invariants() {
        let bad = [
            MatcherConfig::with_d_max(0),
            MatcherConfig::with_d_max(1025),
            MatcherConfig {
                p1: 20,
                p2: 10,
                ..Default::default()
            },
            MatcherConfig {
                census_window: (8, 7),
                ..Default::default()
            },
            MatcherConfig {
                census_window: (1, 1),
                ..Default::default()
            },
            MatcherConfig {
                census_window: (11, 7),
                ..Default::default()
            },
            MatcherConfig {
                paths: 6,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?} should be rejected");
        }
        MatcherConfig::with_d_max(1024).validate().unwrap();
        MatcherConfig {
            p1: 0,
            p2: 0,
            ..Default::default()
        }
        .validate()
        .unwrap();
    }
}
