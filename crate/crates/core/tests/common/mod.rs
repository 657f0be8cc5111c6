#![allow(dead_code)]

use std::path::Path;

use dpsconf::imagery::{save_disparity, save_image, DisparityFormat};
use dpsconf::synth::{composite_scene, StereoScene};

/// Disparities and seeds of the three-image composite dataset.
pub const COMPOSITE: [(usize, u64); 3] = [(8, 0), (12, 1), (16, 2)];
/// Disparity range used for synthetic runs.
pub const SYNTH_D_MAX: u32 = 64;

pub fn composite_dataset() -> Vec<StereoScene> {
    COMPOSITE
        .iter()
        .map(|&(d, seed)| composite_scene(320, 240, d, seed))
        .collect()
}

/// Writes scenes as `<root>/{left,right}/img_<i>.png` and
/// `<root>/gt/img_<i>.pfm`.
pub fn write_dataset(root: &Path, scenes: &[StereoScene]) {
    for sub in ["left", "right", "gt"] {
        std::fs::create_dir_all(root.join(sub)).unwrap();
    }
    for (i, s) in scenes.iter().enumerate() {
        let name = format!("img_{i}");
        save_image(&s.left, root.join("left").join(format!("{name}.png"))).unwrap();
        save_image(&s.right, root.join("right").join(format!("{name}.png"))).unwrap();
        save_disparity(&s.gt, root.join("gt").join(format!("{name}.pfm")), DisparityFormat::Pfm).unwrap();
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    sum / n as f64
}
