//! Census transform, Hamming matching costs, and semi-global aggregation.

use crate::error::{Error, Result};
use crate::raster::{DisparityMap, RasterImage};

use super::{check_pair, MatchOutput, MatcherConfig, StereoMatcher, LR_THRESHOLD};

/// Scanline directions as (dx, dy). The first four are used in 4-path mode.
const DIRECTIONS: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
];

/// Census descriptor per pixel: one bit per window neighbour (centre
/// excluded), set when the neighbour is darker than the centre. Neighbours
/// outside the image are sampled from the nearest edge pixel.
pub fn census_transform(luma: &[u8], width: usize, height: usize, window: (usize, usize)) -> Vec<u64> {
    let (ww, wh) = window;
    let (rx, ry) = ((ww / 2) as isize, (wh / 2) as isize);
    let clamp_x = |x: isize| x.clamp(0, width as isize - 1) as usize;
    let clamp_y = |y: isize| y.clamp(0, height as isize - 1) as usize;
    let mut out = vec![0u64; width * height];
    for y in 0..height {
        for x in 0..width {
            let centre = luma[y * width + x];
            let mut bits = 0u64;
            for dy in -ry..=ry {
                let row = clamp_y(y as isize + dy) * width;
                for dx in -rx..=rx {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let v = luma[row + clamp_x(x as isize + dx)];
                    bits = (bits << 1) | u64::from(v < centre);
                }
            }
            out[y * width + x] = bits;
        }
    }
    out
}

/// Deterministic census + semi-global matcher.
#[derive(Debug, Clone, Default)]
pub struct CensusMatcher {
    config: MatcherConfig,
}

impl CensusMatcher {
    pub fn new(config: MatcherConfig) -> Result<Self> {
        config.validate()?;
        Ok(CensusMatcher { config })
    }

    pub fn config(&self) -> &MatcherConfig {
        &self.config
    }

    fn run(&self, left: &RasterImage, right: &RasterImage) -> Result<MatchOutput> {
        check_pair(left, right)?;
        let cfg = &self.config;
        let (w, h) = (left.width(), left.height());
        let (ww, wh) = cfg.census_window;
        if w < ww || h < wh {
            return Err(Error::ImageTooSmall(format!(
                "{w}x{h} image cannot hold a {ww}x{wh} census window"
            )));
        }

        let levels = cfg.d_max as usize + 1;
        let cl = census_transform(&left.to_luma(), w, h, cfg.census_window);
        let cr = census_transform(&right.to_luma(), w, h, cfg.census_window);
        let costs = matching_costs(&cl, &cr, w, h, levels, (ww * wh - 1) as u8);
        let summed = aggregate(&costs, w, h, levels, cfg);

        let mut values = vec![0f64; w * h];
        let mut valid = vec![true; w * h];
        let mut winner_cost = vec![0u32; w * h];
        for p in 0..w * h {
            let curve = &summed[p * levels..(p + 1) * levels];
            let best = argmin(curve);
            winner_cost[p] = u32::from(curve[best]);
            values[p] = if cfg.subpixel {
                refine_subpixel(curve, best)
            } else {
                best as f64
            };
        }

        if cfg.lr_check {
            let right_disp = right_view_disparity(&summed, w, h, levels);
            for y in 0..h {
                for x in 0..w {
                    let p = y * w + x;
                    let xr = x as isize - values[p].round() as isize;
                    valid[p] = xr >= 0
                        && (values[p] - f64::from(right_disp[y * w + xr as usize])).abs()
                            <= LR_THRESHOLD;
                }
            }
        }

        let disparity = DisparityMap::new(w, h, values, valid)?;
        Ok(MatchOutput {
            disparity,
            winner_cost,
        })
    }
}

impl StereoMatcher for CensusMatcher {
    fn compute(&self, left: &RasterImage, right: &RasterImage) -> Result<DisparityMap> {
        self.run(left, right).map(|out| out.disparity)
    }

    fn compute_with_costs(&self, left: &RasterImage, right: &RasterImage) -> Result<MatchOutput> {
        self.run(left, right)
    }

    fn d_max(&self) -> u32 {
        self.config.d_max
    }
}

/// Hamming costs `C(x, y, d)` against the right pixel at `x - d`; pairs that
/// fall off the left edge get the full bit count.
fn matching_costs(cl: &[u64], cr: &[u64], w: usize, h: usize, levels: usize, max_cost: u8) -> Vec<u8> {
    let mut costs = vec![max_cost; w * h * levels];
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            let base = (row + x) * levels;
            let reach = levels.min(x + 1);
            let l = cl[row + x];
            for d in 0..reach {
                costs[base + d] = (l ^ cr[row + x - d]).count_ones() as u8;
            }
        }
    }
    costs
}

/// Sums the per-direction path costs `L_r` over the configured directions.
fn aggregate(costs: &[u8], w: usize, h: usize, levels: usize, cfg: &MatcherConfig) -> Vec<u16> {
    let mut summed = vec![0u16; w * h * levels];
    let mut prev_row = vec![0u16; w * levels];
    let mut cur_row = vec![0u16; w * levels];
    let mut pred = vec![0u16; levels];
    let (p1, p2) = (cfg.p1 as u16, cfg.p2 as u16);

    for &(dx, dy) in &DIRECTIONS[..cfg.paths as usize] {
        let rows: Vec<usize> = if dy < 0 { (0..h).rev().collect() } else { (0..h).collect() };
        let cols: Vec<usize> = if dx < 0 { (0..w).rev().collect() } else { (0..w).collect() };
        let mut first_row = true;
        for &y in &rows {
            for &x in &cols {
                let px = x as isize - dx;
                let has_pred = px >= 0
                    && (px as usize) < w
                    && (dy == 0 || !first_row);
                let c = &costs[(y * w + x) * levels..(y * w + x + 1) * levels];
                let out_base = x * levels;
                if !has_pred {
                    for d in 0..levels {
                        cur_row[out_base + d] = u16::from(c[d]);
                    }
                } else {
                    let src = if dy == 0 { &cur_row } else { &prev_row };
                    let pb = px as usize * levels;
                    pred.copy_from_slice(&src[pb..pb + levels]);
                    let min_prev = *pred.iter().min().expect("levels >= 2");
                    let jump = min_prev + p2;
                    for d in 0..levels {
                        let mut best = pred[d];
                        if d > 0 {
                            best = best.min(pred[d - 1] + p1);
                        }
                        if d + 1 < levels {
                            best = best.min(pred[d + 1] + p1);
                        }
                        best = best.min(jump);
                        cur_row[out_base + d] = u16::from(c[d]) + best - min_prev;
                    }
                }
                let s = &mut summed[(y * w + x) * levels..(y * w + x + 1) * levels];
                for (acc, l) in s.iter_mut().zip(&cur_row[out_base..out_base + levels]) {
                    *acc += *l;
                }
            }
            std::mem::swap(&mut prev_row, &mut cur_row);
            first_row = false;
        }
    }
    summed
}

/// First index of the minimum; ties go to the smallest disparity.
fn argmin(curve: &[u16]) -> usize {
    let mut best = 0;
    for (d, &c) in curve.iter().enumerate().skip(1) {
        if c < curve[best] {
            best = d;
        }
    }
    best
}

/// Parabola through `(d-1, d, d+1)`; endpoints of the range stay integral.
/// Results are rounded to `f32` so they survive a PFM round trip unchanged.
fn refine_subpixel(curve: &[u16], d: usize) -> f64 {
    if d == 0 || d + 1 >= curve.len() {
        return d as f64;
    }
    let (c0, c1, c2) = (
        f64::from(curve[d - 1]),
        f64::from(curve[d]),
        f64::from(curve[d + 1]),
    );
    let denom = c0 - 2.0 * c1 + c2;
    if denom <= 0.0 {
        return d as f64;
    }
    let offset = ((c0 - c2) / (2.0 * denom)).clamp(-0.5, 0.5);
    f64::from((d as f64 + offset) as f32)
}

/// Integer disparity of each right-image pixel, read off the left-referenced
/// aggregated volume along the diagonal `S(xr + d, d)`.
fn right_view_disparity(summed: &[u16], w: usize, h: usize, levels: usize) -> Vec<u16> {
    let mut out = vec![0u16; w * h];
    for y in 0..h {
        for xr in 0..w {
            let mut best = 0usize;
            let mut best_cost = u16::MAX;
            for d in 0..levels.min(w - xr) {
                let c = summed[(y * w + xr + d) * levels + d];
                if c < best_cost {
                    best_cost = c;
                    best = d;
                }
            }
            out[y * w + xr] = best as u16;
        }
    }
    out
}
