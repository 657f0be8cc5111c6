//! Reading and writing stereo images, disparity maps, and visualizations.
//!
//! Disparity maps come in two encodings:
//!
//! * `kitti-png16`: 16-bit grayscale PNG, disparity = value / 256, value 0
//!   marks a pixel without disparity.
//! * `pfm`: single-channel portable float map. The sign of the header scale
//!   gives the byte order (negative = little endian) and rows are stored
//!   bottom to top. Non-finite or negative values mark invalid pixels.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, ImageBuffer, ImageError, ImageFormat, ImageReader, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{checked_area, DisparityMap, MaskedGrid, RasterImage};

/// Upper bound on decoded pixel count; anything larger is treated as a
/// corrupt or hostile header.
const MAX_PIXELS: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisparityFormat {
    #[serde(rename = "kitti-png16")]
    KittiPng16,
    #[serde(rename = "pfm")]
    Pfm,
}

impl DisparityFormat {
    /// Guess from the file extension: `.pfm` or `.png`.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pfm" => Some(DisparityFormat::Pfm),
            "png" => Some(DisparityFormat::KittiPng16),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DisparityFormat::KittiPng16 => "png",
            DisparityFormat::Pfm => "pfm",
        }
    }
}

impl fmt::Display for DisparityFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DisparityFormat::KittiPng16 => "kitti-png16",
            DisparityFormat::Pfm => "pfm",
        })
    }
}

impl FromStr for DisparityFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kitti-png16" | "kitti" | "png16" => Ok(DisparityFormat::KittiPng16),
            "pfm" => Ok(DisparityFormat::Pfm),
            other => Err(Error::InvalidConfig(format!(
                "unknown disparity format '{other}' (expected kitti-png16 or pfm)"
            ))),
        }
    }
}

fn decode_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(e) if e.kind() == io::ErrorKind::NotFound => {
            Error::MissingFile(path.to_path_buf())
        }
        ImageError::IoError(e) => Error::CorruptStream {
            path: path.to_path_buf(),
            detail: e.to_string(),
        },
        ImageError::Limits(e) => Error::DimensionOverflow(format!("{}: {e}", path.display())),
        ImageError::Unsupported(e) => Error::FormatMismatch {
            path: path.to_path_buf(),
            detail: e.to_string(),
        },
        other => Error::CorruptStream {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| decode_error(path, e))
}

/// Loads an 8-bit grayscale or RGB PNG/PGM/PPM. An alpha channel, if
/// present, is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => RasterImage::new(w, h, 1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => RasterImage::new(w, h, 3, buf.into_raw()),
        DynamicImage::ImageLumaA8(_) => RasterImage::new(w, h, 1, img.into_luma8().into_raw()),
        DynamicImage::ImageRgba8(_) => RasterImage::new(w, h, 3, img.into_rgb8().into_raw()),
        other => Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            detail: format!("{:?}, expected 8 bits per channel", other.color()),
        }),
    }
}

/// Writes an image as 8-bit PNG.
pub fn save_image(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let color = if image.channels() == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    image::save_buffer_with_format(
        path,
        image.data(),
        image.width() as u32,
        image.height() as u32,
        color,
        ImageFormat::Png,
    )
    .map_err(|e| encode_error(path, e))
}

fn encode_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(e) => Error::io(path, e),
        other => Error::io(path, io::Error::other(other.to_string())),
    }
}

pub fn load_disparity(path: impl AsRef<Path>, format: DisparityFormat) -> Result<DisparityMap> {
    let path = path.as_ref();
    match format {
        DisparityFormat::KittiPng16 => load_kitti_png16(path),
        DisparityFormat::Pfm => {
            if !path.exists() {
                return Err(Error::MissingFile(path.to_path_buf()));
            }
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_pfm(&bytes).map_err(|e| e.at(path))
        }
    }
}

/// Loads a ground-truth map and masks out disparities above `d_max`.
pub fn load_ground_truth(
    path: impl AsRef<Path>,
    format: DisparityFormat,
    d_max: f64,
) -> Result<DisparityMap> {
    Ok(load_disparity(path, format)?.mask_above(d_max))
}

fn load_kitti_png16(path: &Path) -> Result<DisparityMap> {
    let img = decode(path)?;
    let buf = match img {
        DynamicImage::ImageLuma16(buf) => buf,
        other => {
            return Err(Error::FormatMismatch {
                path: path.to_path_buf(),
                detail: format!("{:?}, expected 16-bit grayscale", other.color()),
            })
        }
    };
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    let raw = buf.into_raw();
    let valid = raw.iter().map(|&v| v != 0).collect();
    let values = raw.iter().map(|&v| f64::from(v) / 256.0).collect();
    DisparityMap::new(w, h, values, valid)
}

pub fn save_disparity(
    map: &DisparityMap,
    path: impl AsRef<Path>,
    format: DisparityFormat,
) -> Result<()> {
    let path = path.as_ref();
    match format {
        DisparityFormat::KittiPng16 => {
            let encoded = encode_kitti(map)?;
            let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
                ImageBuffer::from_raw(map.width() as u32, map.height() as u32, encoded)
                    .expect("buffer length matches dimensions");
            buf.save_with_format(path, ImageFormat::Png)
                .map_err(|e| encode_error(path, e))
        }
        DisparityFormat::Pfm => {
            if let Some(i) = (0..map.len()).find(|&i| map.get(i).is_some_and(|v| v < 0.0)) {
                return Err(Error::OutOfRange(format!(
                    "negative disparity {} at index {i} cannot be stored as valid in pfm",
                    map.values()[i]
                )));
            }
            let values: Vec<f32> = (0..map.len())
                .map(|i| map.get(i).map_or(f32::INFINITY, |v| v as f32))
                .collect();
            write_pfm_file(path, map.width(), map.height(), &values)
        }
    }
}

fn encode_kitti(map: &DisparityMap) -> Result<Vec<u16>> {
    (0..map.len())
        .map(|i| match map.get(i) {
            None => Ok(0),
            Some(d) if d > 0.0 && d < 256.0 => {
                // Tiny positive disparities still need a nonzero code to stay valid.
                Ok((d * 256.0).round().clamp(1.0, 65535.0) as u16)
            }
            Some(d) => Err(Error::OutOfRange(format!(
                "disparity {d} at index {i} is outside (0, 256) required by kitti-png16"
            ))),
        })
        .collect()
}

/// Writes any masked map as a single-channel little-endian PFM; masked
/// pixels become `+inf`.
pub fn save_pfm<G: MaskedGrid>(grid: &G, path: impl AsRef<Path>) -> Result<()> {
    let n = grid.width() * grid.height();
    let values: Vec<f32> = (0..n)
        .map(|i| grid.sample(i).map_or(f32::INFINITY, |v| v as f32))
        .collect();
    write_pfm_file(path.as_ref(), grid.width(), grid.height(), &values)
}

fn write_pfm_file(path: &Path, width: usize, height: usize, values: &[f32]) -> Result<()> {
    let bytes = encode_pfm(width, height, values);
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Encodes row-major (top row first) samples as little-endian `Pf`.
pub fn encode_pfm(width: usize, height: usize, values: &[f32]) -> Vec<u8> {
    assert_eq!(values.len(), width * height);
    let header = format!("Pf\n{width} {height}\n-1.0\n");
    let mut out = Vec::with_capacity(header.len() + values.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for row in values.chunks_exact(width).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parse failure without a path attached yet.
#[derive(Debug)]
pub enum PfmError {
    Mismatch(String),
    Corrupt(String),
    Overflow(String),
}

impl PfmError {
    fn at(self, path: &Path) -> Error {
        match self {
            PfmError::Mismatch(detail) => Error::FormatMismatch {
                path: path.to_path_buf(),
                detail,
            },
            PfmError::Corrupt(detail) => Error::CorruptStream {
                path: path.to_path_buf(),
                detail,
            },
            PfmError::Overflow(detail) => {
                Error::DimensionOverflow(format!("{}: {detail}", path.display()))
            }
        }
    }
}

/// Splits off the next whitespace-delimited header token.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> std::result::Result<&'a str, PfmError> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(PfmError::Corrupt("header ended early".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| PfmError::Corrupt("header is not ASCII".into()))
}

/// Decodes a single-channel PFM into a top-to-bottom disparity map.
pub fn decode_pfm(bytes: &[u8]) -> std::result::Result<DisparityMap, PfmError> {
    let mut pos = 0;
    match next_token(bytes, &mut pos)? {
        "Pf" => {}
        "PF" => {
            return Err(PfmError::Mismatch(
                "three-channel PFM is not a disparity map".into(),
            ))
        }
        other => return Err(PfmError::Mismatch(format!("bad PFM magic '{other}'"))),
    }
    let parse_dim = |tok: &str| {
        tok.parse::<usize>()
            .map_err(|_| PfmError::Corrupt(format!("bad dimension '{tok}'")))
    };
    let width = parse_dim(next_token(bytes, &mut pos)?)?;
    let height = parse_dim(next_token(bytes, &mut pos)?)?;
    let scale_tok = next_token(bytes, &mut pos)?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| PfmError::Corrupt(format!("bad scale '{scale_tok}'")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(PfmError::Corrupt(format!("bad scale '{scale_tok}'")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(PfmError::Corrupt("missing raster data".into()));
    }
    pos += 1;

    if width == 0 || height == 0 {
        return Err(PfmError::Corrupt(format!("empty raster {width}x{height}")));
    }
    let area = width
        .checked_mul(height)
        .filter(|&a| a <= MAX_PIXELS)
        .ok_or_else(|| PfmError::Overflow(format!("{width}x{height}")))?;
    let data = &bytes[pos..];
    if data.len() < area * 4 {
        return Err(PfmError::Corrupt(format!(
            "raster truncated: need {} bytes, found {}",
            area * 4,
            data.len()
        )));
    }

    let little = scale < 0.0;
    let mut values = vec![0f32; area];
    for (row_idx, row) in data[..area * 4].chunks_exact(width * 4).enumerate() {
        let dst = (height - 1 - row_idx) * width;
        for (x, word) in row.chunks_exact(4).enumerate() {
            let word = [word[0], word[1], word[2], word[3]];
            values[dst + x] = if little {
                f32::from_le_bytes(word)
            } else {
                f32::from_be_bytes(word)
            };
        }
    }
    let valid = values.iter().map(|v| v.is_finite() && *v >= 0.0).collect();
    let values = values.into_iter().map(f64::from).collect();
    Ok(DisparityMap::new(width, height, values, valid).expect("dimensions checked above"))
}

/// 8-bit grayscale rendering: `clamp(round(value * scale), 0, 255)`,
/// masked pixels drawn as 0.
pub fn render_gray<G: MaskedGrid>(grid: &G, scale: f64) -> Result<Vec<u8>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "visualization scale must be positive, got {scale}"
        )));
    }
    let n = checked_area(grid.width(), grid.height())?;
    Ok((0..n)
        .map(|i| match grid.sample(i) {
            Some(v) if !v.is_nan() => (v * scale).round().clamp(0.0, 255.0) as u8,
            _ => 0,
        })
        .collect())
}

pub fn save_gray_visualization<G: MaskedGrid>(
    grid: &G,
    path: impl AsRef<Path>,
    scale: f64,
) -> Result<()> {
    let pixels = render_gray(grid, scale)?;
    let img = RasterImage::gray(grid.width(), grid.height(), pixels)?;
    save_image(&img, path)
}
