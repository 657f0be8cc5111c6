//! Disparity plane sweep.
//!
//! The right image is shifted horizontally by each offset `k` and matched
//! against the unshifted left image. With the convention that a left pixel
//! at `x` corresponds to the right pixel at `x - d`, sampling the right
//! image at `x + k` raises every ideal disparity by exactly `k`. Stacking
//! the matcher outputs gives the predicted volume; adding each `k` to the
//! zero-shift map gives the target volume, the ramp an ideal matcher would
//! produce.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imagery::{save_disparity, save_image, DisparityFormat};
use crate::matcher::StereoMatcher;
use crate::parallel::map_indexed;
use crate::raster::{DisparityMap, RasterImage};

/// Ordered integer shifts containing `0` exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    shifts: Vec<i32>,
    anchor_index: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec::symmetric(2)
    }
}

impl SweepSpec {
    /// Shifts must be strictly increasing and include 0. A single `[0]`
    /// shift is accepted here (a plain match); computing confidence needs at
    /// least two.
    pub fn new(shifts: Vec<i32>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::InvalidConfig("shift list is empty".into()));
        }
        if shifts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "shifts must be strictly increasing, got {shifts:?}"
            )));
        }
        let anchor_index = shifts
            .iter()
            .position(|&k| k == 0)
            .ok_or_else(|| Error::InvalidConfig(format!("shifts {shifts:?} do not include 0")))?;
        Ok(SweepSpec {
            shifts,
            anchor_index,
        })
    }

    /// `[-k, ..., k]` in unit steps.
    pub fn symmetric(k: u32) -> Self {
        let k = k as i32;
        SweepSpec {
            shifts: (-k..=k).collect(),
            anchor_index: k as usize,
        }
    }

    /// `n`/`k` shorthand; requires `n = 2k + 1`.
    pub fn from_n_k(n: u32, k: u32) -> Result<Self> {
        if n != 2 * k + 1 {
            return Err(Error::InvalidConfig(format!(
                "N={n} and K={k} disagree: the shorthand needs N = 2K + 1"
            )));
        }
        Ok(Self::symmetric(k))
    }

    /// Unit-step sweep with `n` shifts: symmetric for odd `n`, one extra
    /// positive shift for even `n` (so `n = 2` gives `[0, 1]`).
    pub fn with_count(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 shifts, got {n}")));
        }
        let n = n as i32;
        let lo = -((n - 1) / 2);
        Self::new((lo..lo + n).collect())
    }

    /// Three-shift sweep `[-step, 0, step]`.
    pub fn three_point(step: u32) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidConfig("step size must be positive".into()));
        }
        let s = step as i32;
        Self::new(vec![-s, 0, s])
    }

    pub fn shifts(&self) -> &[i32] {
        &self.shifts
    }

    pub fn anchor_index(&self) -> usize {
        self.anchor_index
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }
}

/// Stack of equally sized disparity maps, one per shift.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityVolume {
    shifts: Vec<i32>,
    slices: Vec<DisparityMap>,
    joint_valid: Vec<bool>,
}

impl DisparityVolume {
    /// Shifts need not be sorted here, only paired one-to-one with slices.
    pub fn new(shifts: Vec<i32>, slices: Vec<DisparityMap>) -> Result<Self> {
        if shifts.is_empty() || shifts.len() != slices.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} shifts for {} slices",
                shifts.len(),
                slices.len()
            )));
        }
        let (w, h) = (slices[0].width(), slices[0].height());
        if slices.iter().any(|s| s.width() != w || s.height() != h) {
            return Err(Error::DimensionMismatch(
                "volume slices differ in size".into(),
            ));
        }
        let mut joint_valid = slices[0].valid_mask().to_vec();
        for s in &slices[1..] {
            for (j, ok) in joint_valid.iter_mut().zip(s.valid_mask()) {
                *j &= *ok;
            }
        }
        Ok(DisparityVolume {
            shifts,
            slices,
            joint_valid,
        })
    }

    pub fn shifts(&self) -> &[i32] {
        &self.shifts
    }

    pub fn slices(&self) -> &[DisparityMap] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<DisparityMap> {
        self.slices
    }

    pub fn slice_for(&self, shift: i32) -> Option<&DisparityMap> {
        self.shifts
            .iter()
            .position(|&k| k == shift)
            .map(|i| &self.slices[i])
    }

    pub fn joint_valid(&self) -> &[bool] {
        &self.joint_valid
    }

    pub fn width(&self) -> usize {
        self.slices[0].width()
    }

    pub fn height(&self) -> usize {
        self.slices[0].height()
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

/// `out(x, y) = right(x + k, y)`, replicating the edge column where the
/// source falls outside the image.
pub fn shift_right_image(right: &RasterImage, k: i32) -> Result<RasterImage> {
    let (w, h, ch) = (right.width(), right.height(), right.channels());
    if k.unsigned_abs() as usize >= w {
        return Err(Error::InvalidConfig(format!(
            "shift {k} is not smaller than the image width {w}"
        )));
    }
    if k == 0 {
        return Ok(right.clone());
    }
    let src = right.data();
    let mut out = vec![0u8; src.len()];
    for y in 0..h {
        let row = y * w * ch;
        for x in 0..w {
            let sx = (x as i64 + k as i64).clamp(0, w as i64 - 1) as usize;
            out[row + x * ch..row + (x + 1) * ch]
                .copy_from_slice(&src[row + sx * ch..row + (sx + 1) * ch]);
        }
    }
    RasterImage::new(w, h, ch, out)
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Maximum concurrent matcher calls; 0 means one per shift.
    pub parallelism: usize,
    /// When set, every shifted right image and slice is written here as
    /// `shift_{k}.png` and `disp_{k}.pfm`.
    pub dump_dir: Option<PathBuf>,
}

impl SweepOptions {
    pub fn with_parallelism(parallelism: usize) -> Self {
        SweepOptions {
            parallelism,
            dump_dir: None,
        }
    }
}

/// Runs the matcher once per shift, all shifts allowed in parallel.
pub fn run_sweep<M: StereoMatcher + ?Sized>(
    left: &RasterImage,
    right: &RasterImage,
    spec: &SweepSpec,
    matcher: &M,
) -> Result<DisparityVolume> {
    run_sweep_with(left, right, spec, matcher, &SweepOptions::default())
}

pub fn run_sweep_with<M: StereoMatcher + ?Sized>(
    left: &RasterImage,
    right: &RasterImage,
    spec: &SweepSpec,
    matcher: &M,
    options: &SweepOptions,
) -> Result<DisparityVolume> {
    if !left.same_dims(right) {
        return Err(Error::DimensionMismatch(format!(
            "left is {}x{}, right is {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        )));
    }
    let limit = if options.parallelism == 0 {
        spec.len()
    } else {
        options.parallelism
    };
    let results = map_indexed(spec.len(), limit, |i| {
        let k = spec.shifts()[i];
        let annotate = |e: Error| Error::AtShift {
            shift: k,
            source: Box::new(e),
        };
        let shifted = shift_right_image(right, k).map_err(annotate)?;
        let disp = matcher.compute(left, &shifted).map_err(annotate)?;
        if let Some(dir) = &options.dump_dir {
            dump_slice(dir, k, &shifted, &disp)?;
        }
        Ok(disp)
    });
    // First failure in shift order, independent of completion order.
    let slices = results.into_iter().collect::<Result<Vec<_>>>()?;
    DisparityVolume::new(spec.shifts().to_vec(), slices)
}

fn dump_slice(dir: &Path, k: i32, shifted: &RasterImage, disp: &DisparityMap) -> Result<()> {
    save_image(shifted, dir.join(format!("shift_{k}.png")))?;
    save_disparity(disp, dir.join(format!("disp_{k}.pfm")), DisparityFormat::Pfm)
}

/// Target volume: slice `i` is `anchor + shifts[i]` wherever the anchor is
/// valid. Targets are deliberately not clamped to the matcher's range.
pub fn build_target_volume(anchor: &DisparityMap, spec: &SweepSpec) -> DisparityVolume {
    let slices = spec
        .shifts()
        .iter()
        .map(|&k| {
            let values = anchor
                .values()
                .iter()
                .zip(anchor.valid_mask())
                .map(|(&v, &ok)| if ok { v + f64::from(k) } else { 0.0 })
                .collect();
            DisparityMap::new(
                anchor.width(),
                anchor.height(),
                values,
                anchor.valid_mask().to_vec(),
            )
            .expect("same shape as the anchor")
        })
        .collect();
    DisparityVolume::new(spec.shifts().to_vec(), slices).expect("one slice per shift")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert_eq!(SweepSpec::default().shifts(), &[-2, -1, 0, 1, 2]);
        assert_eq!(SweepSpec::default().anchor_index(), 2);
        assert!(SweepSpec::new(vec![]).is_err());
        assert!(SweepSpec::new(vec![-1, 1]).is_err());
        assert!(SweepSpec::new(vec![0, 0, 1]).is_err());
        assert!(SweepSpec::new(vec![1, 0]).is_err());
        let s = SweepSpec::new(vec![0, 1]).unwrap();
        assert_eq!(s.anchor_index(), 0);
        assert_eq!(SweepSpec::new(vec![0]).unwrap().len(), 1);
    }

    #[test]
    fn shorthands() {
        assert_eq!(SweepSpec::from_n_k(5, 2).unwrap(), SweepSpec::default());
        assert!(SweepSpec::from_n_k(4, 2).is_err());
        assert_eq!(SweepSpec::with_count(2).unwrap().shifts(), &[0, 1]);
        assert_eq!(SweepSpec::with_count(3).unwrap().shifts(), &[-1, 0, 1]);
        assert_eq!(SweepSpec::with_count(4).unwrap().shifts(), &[-1, 0, 1, 2]);
        assert_eq!(SweepSpec::with_count(7).unwrap().shifts(), &[-3, -2, -1, 0, 1, 2, 3]);
        assert!(SweepSpec::with_count(1).is_err());
        assert_eq!(SweepSpec::three_point(4).unwrap().shifts(), &[-4, 0, 4]);
        assert!(SweepSpec::three_point(0).is_err());
    }

    fn row(values: &[u8]) -> RasterImage {
        RasterImage::gray(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn shift_samples_from_x_plus_k() {
        let r = row(&[1, 2, 3, 4, 5]);
        assert_eq!(shift_right_image(&r, 0).unwrap(), r);
        assert_eq!(shift_right_image(&r, 2).unwrap().data(), &[3, 4, 5, 5, 5]);
        assert_eq!(shift_right_image(&r, -1).unwrap().data(), &[1, 1, 2, 3, 4]);
        assert!(shift_right_image(&r, 5).is_err());
        assert!(shift_right_image(&r, -5).is_err());
    }

    #[test]
    fn shift_moves_whole_rgb_pixels() {
        let r = RasterImage::new(3, 1, 3, vec![1, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap();
        let s = shift_right_image(&r, 1).unwrap();
        assert_eq!(s.data(), &[4, 5, 6, 7, 8, 9, 7, 8, 9]);
    }

    #[test]
    fn target_volume_is_anchor_plus_shift() {
        let anchor = DisparityMap::filled(2, 1, 10.0);
        let tgt = build_target_volume(&anchor, &SweepSpec::default());
        let firsts: Vec<f64> = tgt.slices().iter().map(|s| s.get(0).unwrap()).collect();
        assert_eq!(firsts, vec![8.0, 9.0, 10.0, 11.0, 12.0]);

        let anchor = DisparityMap::new(2, 1, vec![1.0, 5.0], vec![true, false]).unwrap();
        let tgt = build_target_volume(&anchor, &SweepSpec::default());
        assert_eq!(tgt.slice_for(-2).unwrap().get(0), Some(-1.0));
        assert!(tgt.slices().iter().all(|s| s.get(1).is_none()));
        assert_eq!(tgt.joint_valid(), &[true, false]);
    }

    #[test]
    fn volume_checks_shapes() {
        let a = DisparityMap::filled(2, 2, 1.0);
        let b = DisparityMap::filled(2, 1, 1.0);
        assert!(DisparityVolume::new(vec![0, 1], vec![a.clone(), b]).is_err());
        assert!(DisparityVolume::new(vec![0], vec![a.clone(), a.clone()]).is_err());
        let mut c = a.clone();
        c = DisparityMap::new(2, 2, c.values().to_vec(), vec![true, false, true, true]).unwrap();
        let v = DisparityVolume::new(vec![0, 1], vec![a, c]).unwrap();
        assert_eq!(v.joint_valid(), &[true, false, true, true]);
    }
}
