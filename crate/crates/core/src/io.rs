//! Raster and flow file formats.
//!
//! * Frames: 8-bit RGB PNG or binary PPM. Samples map to `[0, 1]` by
//!   division by 255; writing clamps to `[0, 1]` and rounds to the nearest
//!   8-bit value.
//! * Flow: `NFLO` files. The 4-byte magic `NFLO`, little-endian `u32` width
//!   and height, then `width * height` little-endian `f32` x-components
//!   followed by as many y-components, both row-major.
//! * Masks: 1-bit grayscale PNG, sky (unset) white.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageError, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::raster::{Image, ScalarField};
use crate::segmentation::BinaryMask;

pub const NFLO_MAGIC: &[u8; 4] = b"NFLO";

fn image_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(source) => Error::io(path, source),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("ppm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::invalid(format!(
            "{}: unsupported image extension (expected .png or .ppm)",
            path.display()
        ))),
    }
}

/// Reads an 8-bit image as RGB in `[0, 1]`.
pub fn load_image(path: &Path) -> Result<Image> {
    let format = format_for(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load(BufReader::new(file), format).map_err(|e| image_error(path, e))?;
    rgb_to_image(&decoded.to_rgb8())
}

fn rgb_to_image(rgb: &RgbImage) -> Result<Image> {
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    Ok(Image::rgb_from_fn(w, h, |x, y| {
        let p = rgb.get_pixel(x as u32, y as u32).0;
        [
            p[0] as f64 / 255.0,
            p[1] as f64 / 255.0,
            p[2] as f64 / 255.0,
        ]
    }))
}

pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an image as 8-bit PNG or PPM, chosen by extension. Single-channel
/// images are written as gray replicated into RGB.
pub fn save_image(path: &Path, img: &Image) -> Result<()> {
    let format = format_for(path)?;
    let rgb = RgbImage::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        let px = |c: usize| to_u8(img.get(x, y, c.min(img.channels() - 1)));
        image::Rgb([px(0), px(1), px(2)])
    });
    write_dynamic(path, &DynamicImage::ImageRgb8(rgb), format)
}

fn write_dynamic(path: &Path, img: &DynamicImage, format: ImageFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    img.write_to(&mut out, format)
        .map_err(|e| image_error(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn encode_nflo(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dims();
    let mut out = Vec::with_capacity(12 + 8 * w * h);
    out.extend_from_slice(NFLO_MAGIC);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    for &a in flow.u().data().iter().chain(flow.v().data()) {
        out.extend_from_slice(&(a as f32).to_le_bytes());
    }
    out
}

pub fn decode_nflo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < 12 || &bytes[..4] != NFLO_MAGIC {
        return Err(Error::invalid("not an NFLO stream"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (w, h) = (word(4), word(8));
    let n = w
        .checked_mul(h)
        .ok_or_else(|| Error::invalid("NFLO dimensions overflow"))?;
    if bytes.len() != 12 + 8 * n {
        return Err(Error::invalid(format!(
            "NFLO {w}x{h} needs {} bytes, got {}",
            12 + 8 * n,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let (u, v) = values.split_at(n);
    FlowField::new(
        ScalarField::new(w, h, u.to_vec())?,
        ScalarField::new(w, h, v.to_vec())?,
    )
}

pub fn write_nflo(path: &Path, flow: &FlowField) -> Result<()> {
    std::fs::write(path, encode_nflo(flow)).map_err(|e| Error::io(path, e))
}

pub fn read_nflo(path: &Path) -> Result<FlowField> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_nflo(&bytes).map_err(|e| match e {
        Error::InvalidInput(reason) => Error::Decode {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

/// Piecewise-linear blue–cyan–yellow–red ramp.
const COLOR_STOPS: [[f64; 3]; 5] = [
    [0.0, 0.0, 0.6],
    [0.0, 0.5, 1.0],
    [0.2, 1.0, 0.8],
    [1.0, 0.9, 0.0],
    [0.7, 0.0, 0.0],
];

pub fn colormap(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (COLOR_STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(COLOR_STOPS.len() - 2);
    let f = t - i as f64;
    std::array::from_fn(|c| to_u8((1.0 - f) * COLOR_STOPS[i][c] + f * COLOR_STOPS[i + 1][c]))
}

/// Writes `field` as a false-colour PNG, mapping its minimum to the low end
/// of the colour ramp and its maximum to the high end. Returns `(min, max)`.
pub fn write_false_color(path: &Path, field: &ScalarField) -> Result<(f64, f64)> {
    let (lo, hi) = field.min_max();
    let span = hi - lo;
    let rgb = RgbImage::from_fn(field.width() as u32, field.height() as u32, |x, y| {
        let t = if span > 0.0 {
            (field.get(x as usize, y as usize) - lo) / span
        } else {
            0.5
        };
        image::Rgb(colormap(t))
    });
    write_dynamic(path, &DynamicImage::ImageRgb8(rgb), ImageFormat::Png)?;
    Ok((lo, hi))
}

/// Writes a 1-bit PNG with unset (sky) pixels white.
pub fn write_mask_png(path: &Path, mask: &BinaryMask) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        mask.width() as u32,
        mask.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::One);
    let encode_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(source) => Error::io(path, source),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    let stride = mask.width().div_ceil(8);
    let mut packed = vec![0u8; stride * mask.height()];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if !mask.get(x, y) {
                packed[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    writer.write_image_data(&packed).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}

/// Reads a grayscale raster as a mask; pixels darker than mid-gray are set.
/// Masks written by [`write_mask_png`] read back unchanged.
pub fn read_mask_png(path: &Path) -> Result<BinaryMask> {
    let gray = load_gray(path)?;
    Ok(BinaryMask::from_fn(
        gray.width() as usize,
        gray.height() as usize,
        |x, y| gray.get_pixel(x as u32, y as u32).0[0] < 128,
    ))
}

/// Reads a region-of-interest raster; pixels at or above mid-gray are
/// included.
pub fn read_roi_png(path: &Path) -> Result<BinaryMask> {
    Ok(read_mask_png(path)?.complement())
}

fn load_gray(path: &Path) -> Result<GrayImage> {
    let format = format_for(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(image::load(BufReader::new(file), format)
        .map_err(|e| image_error(path, e))?
        .to_luma8())
}
