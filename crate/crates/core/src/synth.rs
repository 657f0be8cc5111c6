//! Synthetic rectified stereo scenes with known disparity.
//!
//! A scene is a fronto-parallel plane at integer disparity `d` painted
//! with a texture "canvas" `d` columns wider than the image. The left view
//! shows canvas columns `[0, w)` and the right view `[d, w + d)`, so the
//! left pixel at `x` corresponds to the right pixel at `x - d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{DisparityMap, RasterImage};

/// Texture class of a scene region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// i.i.d. uniform noise.
    Textured,
    /// Constant intensity.
    Textureless,
    /// Vertical bars repeating every `period` canvas columns.
    Stripes,
}

#[derive(Debug, Clone)]
pub struct StereoScene {
    pub left: RasterImage,
    pub right: RasterImage,
    pub gt: DisparityMap,
    /// Region class of every left-image pixel, row-major.
    pub regions: Vec<Region>,
}

impl StereoScene {
    pub fn width(&self) -> usize {
        self.left.width()
    }

    pub fn height(&self) -> usize {
        self.left.height()
    }

    /// Indices of left pixels in `region` at least `margin` pixels from
    /// every border and not within `d + margin` of the left edge, where the
    /// true match leaves the right view.
    pub fn interior(&self, region: Option<Region>, margin: usize) -> Vec<usize> {
        let (w, h) = (self.width(), self.height());
        let d = self.gt.values().first().copied().unwrap_or(0.0).max(0.0) as usize;
        let mut out = Vec::new();
        for y in margin..h.saturating_sub(margin) {
            for x in (d + margin)..w.saturating_sub(margin) {
                let i = y * w + x;
                if region.is_none_or(|r| self.regions[i] == r) {
                    out.push(i);
                }
            }
        }
        out
    }
}

fn render(canvas: &[u8], canvas_w: usize, w: usize, h: usize, d: usize) -> (RasterImage, RasterImage) {
    let mut left = Vec::with_capacity(w * h);
    let mut right = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &canvas[y * canvas_w..(y + 1) * canvas_w];
        left.extend_from_slice(&row[..w]);
        right.extend_from_slice(&row[d..d + w]);
    }
    (
        RasterImage::gray(w, h, left).expect("sized above"),
        RasterImage::gray(w, h, right).expect("sized above"),
    )
}

/// Plane at disparity `d` covered in i.i.d. noise.
pub fn noise_scene(width: usize, height: usize, d: usize, seed: u64) -> StereoScene {
    banded_scene(width, height, d, &[(Region::Textured, height)], 8, seed)
}

/// Plane at disparity `d` whose rows are split into horizontal bands of the
/// given classes and heights (heights must sum to `height`).
pub fn banded_scene(
    width: usize,
    height: usize,
    d: usize,
    bands: &[(Region, usize)],
    stripe_period: usize,
    seed: u64,
) -> StereoScene {
    assert_eq!(bands.iter().map(|b| b.1).sum::<usize>(), height);
    let row_class: Vec<Region> = bands
        .iter()
        .flat_map(|&(r, n)| std::iter::repeat_n(r, n))
        .collect();
    layout_scene(width, height, d, stripe_period, seed, |_, y| row_class[y])
}

/// Plane at disparity `d` with an arbitrary region layout, given as a
/// function of canvas coordinates `(X, y)`.
pub fn layout_scene<F>(
    width: usize,
    height: usize,
    d: usize,
    stripe_period: usize,
    seed: u64,
    region_at: F,
) -> StereoScene
where
    F: Fn(usize, usize) -> Region,
{
    assert!(d < width && stripe_period >= 2);
    let canvas_w = width + d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut canvas = vec![0u8; canvas_w * height];
    for y in 0..height {
        for x in 0..canvas_w {
            let noise: u8 = rng.gen();
            canvas[y * canvas_w + x] = match region_at(x, y) {
                Region::Textured => noise,
                Region::Textureless => 128,
                Region::Stripes => {
                    if (x % stripe_period) < stripe_period / 2 {
                        64
                    } else {
                        192
                    }
                }
            };
        }
    }
    let (left, right) = render(&canvas, canvas_w, width, height, d);
    let regions = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| region_at(x, y))
        .collect();
    StereoScene {
        left,
        right,
        gt: DisparityMap::filled(width, height, d as f64),
        regions,
    }
}

/// Column layout with a textureless band along the left edge, textured
/// middle and vertical stripes (period 8) on the right, in thirds of the
/// canvas width `width + d`.
pub fn composite_scene(width: usize, height: usize, d: usize, seed: u64) -> StereoScene {
    let third = (width + d) / 3;
    layout_scene(width, height, d, 8, seed, |x, _| {
        if x < third {
            Region::Textureless
        } else if x < 2 * third {
            Region::Textured
        } else {
            Region::Stripes
        }
    })
}
