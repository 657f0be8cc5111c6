//! Unreliability and confidence from predicted vs. target disparity volumes.
//!
//! For each pixel the unreliability is the summed absolute deviation of the
//! predicted disparity profile from the anchored ramp, divided by `N - 1`
//! (the anchor slice always contributes zero). Confidence maps it through
//! `exp(-sigma * U / d_max)`; the default `sigma = d_max * ln 2` puts
//! `C = 0.5` at `U = 1` regardless of `d_max`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::StereoMatcher;
use crate::raster::{ConfidenceMap, DisparityMap, RasterImage, ScalarMap};
use crate::sweep::{build_target_volume, run_sweep_with, DisparityVolume, SweepOptions, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceParams {
    pub d_max: f64,
    pub sigma: f64,
}

impl ConfidenceParams {
    /// Parameters with the calibrated default `sigma = d_max * ln 2`.
    pub fn new(d_max: f64) -> Self {
        ConfidenceParams {
            d_max,
            sigma: d_max * LN_2,
        }
    }

    pub fn with_sigma(d_max: f64, sigma: f64) -> Result<Self> {
        let p = ConfidenceParams { d_max, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "d_max must be positive, got {}",
                self.d_max
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn confidence(&self, unreliability: f64) -> f64 {
        (-self.sigma * unreliability / self.d_max).exp()
    }
}

/// Per-pixel `U = sum_i |tgt_i - pred_i| / (N - 1)`, valid where every slice
/// of both volumes is valid.
///
/// Slices are summed in ascending shift order, so reordering the shift
/// list (together with its slices) leaves every value bit-identical.
pub fn unreliability(pred: &DisparityVolume, tgt: &DisparityVolume) -> Result<ScalarMap> {
    if pred.shifts() != tgt.shifts() {
        return Err(Error::DimensionMismatch(format!(
            "predicted shifts {:?} differ from target shifts {:?}",
            pred.shifts(),
            tgt.shifts()
        )));
    }
    if pred.width() != tgt.width() || pred.height() != tgt.height() {
        return Err(Error::DimensionMismatch(format!(
            "predicted volume is {}x{}, target volume is {}x{}",
            pred.width(),
            pred.height(),
            tgt.width(),
            tgt.height()
        )));
    }
    let n = pred.len();
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "unreliability needs at least 2 shifts, got {n}"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| pred.shifts()[i]);
    let divisor = (n - 1) as f64;

    let area = pred.width() * pred.height();
    let mut values = vec![0.0; area];
    let valid: Vec<bool> = pred
        .joint_valid()
        .iter()
        .zip(tgt.joint_valid())
        .map(|(a, b)| *a && *b)
        .collect();
    for p in (0..area).filter(|&p| valid[p]) {
        let sum: f64 = order
            .iter()
            .map(|&i| (tgt.slices()[i].values()[p] - pred.slices()[i].values()[p]).abs())
            .sum();
        values[p] = sum / divisor;
    }
    ScalarMap::new(pred.width(), pred.height(), values, valid)
}

pub fn confidence_from_unreliability(u: &ScalarMap, params: &ConfidenceParams) -> ConfidenceMap {
    let values = u
        .values()
        .iter()
        .zip(u.valid_mask())
        .map(|(&v, &ok)| if ok { params.confidence(v) } else { 0.0 })
        .collect();
    ConfidenceMap::new(u.width(), u.height(), values, u.valid_mask().to_vec())
        .expect("exp of a non-positive number lies in [0, 1]")
}

/// Everything the sweep pipeline produces for one stereo pair.
#[derive(Debug, Clone)]
pub struct SweepConfidence {
    /// Zero-shift disparity: the disparity map the confidence describes.
    pub anchor: DisparityMap,
    pub unreliability: ScalarMap,
    pub confidence: ConfidenceMap,
    pub predicted: DisparityVolume,
}

/// Sweep, anchor, compare: the full confidence pipeline for one pair.
pub fn sweep_confidence<M: StereoMatcher + ?Sized>(
    left: &RasterImage,
    right: &RasterImage,
    spec: &SweepSpec,
    matcher: &M,
    params: &ConfidenceParams,
    options: &SweepOptions,
) -> Result<SweepConfidence> {
    if spec.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "confidence needs N >= 2 shifts, got {:?}",
            spec.shifts()
        )));
    }
    params.validate()?;
    let predicted = run_sweep_with(left, right, spec, matcher, options)?;
    let anchor = predicted.slices()[spec.anchor_index()].clone();
    let target = build_target_volume(&anchor, spec);
    let u = unreliability(&predicted, &target)?;
    let confidence = confidence_from_unreliability(&u, params);
    Ok(SweepConfidence {
        anchor,
        unreliability: u,
        confidence,
        predicted,
    })
}
