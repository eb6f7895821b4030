//! Image and layer persistence.
//!
//! Integer PNGs are normalized to `[0, 1]` on load (`/255` or `/65535`);
//! PFM floats pass through untouched. PNG encoding clamps to `[0, 1]` and
//! rounds half away from zero.

pub mod color;
pub mod layers;
pub mod pfm;

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::plane::{Image, ImagePlane};

pub use layers::{load_decomposition, save_decomposition, LayerManifest, SourceRef, ValueEncoding};

/// What to do with an alpha channel found in a PNG.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AlphaPolicy {
    #[default]
    Reject,
    Drop,
}

/// On-disk sample encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Png8,
    Png16,
    Pfm,
}

impl Encoding {
    /// `.pfm` selects PFM, anything else 8-bit PNG.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pfm") => Encoding::Pfm,
            _ => Encoding::Png8,
        }
    }
}

pub fn load_image(path: impl AsRef<Path>, alpha: AlphaPolicy) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, alpha)
}

/// Decodes PNG or PFM bytes, sniffing the format from the magic number.
pub fn decode_image(bytes: &[u8], alpha: AlphaPolicy) -> Result<Image> {
    if pfm::is_pfm(bytes) {
        return pfm::decode(bytes);
    }
    if !bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        return Err(Error::Decode("unknown format (expected PNG or PFM)".into()));
    }
    let decoded = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::Decode(e.to_string()))?;
    png_to_image(decoded, alpha)
}

fn png_to_image(decoded: DynamicImage, alpha: AlphaPolicy) -> Result<Image> {
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let has_alpha = decoded.color().has_alpha();
    if has_alpha && alpha == AlphaPolicy::Reject {
        return Err(Error::Decode(
            "image has an alpha channel (drop it explicitly to continue)".into(),
        ));
    }
    let (channels, samples): (usize, Vec<f64>) = match decoded {
        DynamicImage::ImageLuma8(b) => (1, scale8(b.as_raw())),
        DynamicImage::ImageLumaA8(b) => (1, scale8(&strip_alpha(b.as_raw(), 1))),
        DynamicImage::ImageRgb8(b) => (3, scale8(b.as_raw())),
        DynamicImage::ImageRgba8(b) => (3, scale8(&strip_alpha(b.as_raw(), 3))),
        DynamicImage::ImageLuma16(b) => (1, scale16(b.as_raw())),
        DynamicImage::ImageLumaA16(b) => (1, scale16(&strip_alpha(b.as_raw(), 1))),
        DynamicImage::ImageRgb16(b) => (3, scale16(b.as_raw())),
        DynamicImage::ImageRgba16(b) => (3, scale16(&strip_alpha(b.as_raw(), 3))),
        other => {
            return Err(Error::Decode(format!(
                "unsupported PNG sample layout {:?}",
                other.color()
            )))
        }
    };
    deinterleave(w, h, channels, &samples)
}

fn strip_alpha<T: Copy>(raw: &[T], color_channels: usize) -> Vec<T> {
    raw.chunks_exact(color_channels + 1)
        .flat_map(|px| px[..color_channels].iter().copied())
        .collect()
}

fn scale8(raw: &[u8]) -> Vec<f64> {
    raw.iter().map(|&v| f64::from(v) / 255.0).collect()
}

fn scale16(raw: &[u16]) -> Vec<f64> {
    raw.iter().map(|&v| f64::from(v) / 65535.0).collect()
}

fn deinterleave(w: usize, h: usize, channels: usize, samples: &[f64]) -> Result<Image> {
    let planes = (0..channels)
        .map(|c| {
            ImagePlane::new(
                w,
                h,
                samples.iter().skip(c).step_by(channels).copied().collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Image::new(planes)
}

/// Clamps to `[0, 1]` and rounds half away from zero onto `0..=max`.
#[inline]
pub fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max).round()
}

fn interleaved<T>(image: &Image, f: impl Fn(f64) -> T) -> Vec<T> {
    let (w, h) = image.dimensions();
    let mut out = Vec::with_capacity(w * h * image.channels());
    for i in 0..w * h {
        for p in image.planes() {
            out.push(f(p.data()[i]));
        }
    }
    out
}

pub fn encode_image(image: &Image, encoding: Encoding) -> Result<Vec<u8>> {
    if encoding == Encoding::Pfm {
        return pfm::encode(image);
    }
    let (w, h) = (image.width() as u32, image.height() as u32);
    let dynamic = match (image.channels(), encoding) {
        (1, Encoding::Png8) => DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, interleaved(image, |v| quantize(v, 255.0) as u8))
                .expect("buffer sized from image"),
        ),
        (3, Encoding::Png8) => DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w, h, interleaved(image, |v| quantize(v, 255.0) as u8))
                .expect("buffer sized from image"),
        ),
        (1, Encoding::Png16) => DynamicImage::ImageLuma16(
            image::ImageBuffer::from_raw(w, h, interleaved(image, |v| quantize(v, 65535.0) as u16))
                .expect("buffer sized from image"),
        ),
        (3, Encoding::Png16) => DynamicImage::ImageRgb16(
            image::ImageBuffer::from_raw(w, h, interleaved(image, |v| quantize(v, 65535.0) as u16))
                .expect("buffer sized from image"),
        ),
        (n, _) => return Err(Error::invalid(format!("PNG holds 1 or 3 planes, got {n}"))),
    };
    let mut out = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::invalid(format!("PNG encode failed: {e}")))?;
    Ok(out.into_inner())
}

pub fn save_image(image: &Image, path: impl AsRef<Path>, encoding: Encoding) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(image, encoding)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
