//! Portable float map codec.
//!
//! Header: `PF` (RGB) or `Pf` (gray), then `width height`, then a scale whose
//! sign gives the byte order (negative = little-endian). Samples are `f32`,
//! scanlines stored bottom to top.

use crate::error::{Error, Result};
use crate::plane::{Image, ImagePlane};

pub fn is_pfm(bytes: &[u8]) -> bool {
    bytes.len() >= 3
        && (bytes.starts_with(b"PF") || bytes.starts_with(b"Pf"))
        && bytes[2].is_ascii_whitespace()
}

pub fn decode(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let mut token = || -> Result<&str> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Decode("truncated PFM header".into()));
        }
        std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| Error::Decode("non-ASCII PFM header".into()))
    };
    let channels = match token()? {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::Decode(format!("bad PFM magic {other:?}"))),
    };
    let parse_dim = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::Decode(format!("bad PFM dimension {s:?}")))
    };
    let width = parse_dim(token()?)?;
    let height = parse_dim(token()?)?;
    let scale_tok = token()?;
    let scale: f32 = scale_tok
        .parse()
        .ok()
        .filter(|s: &f32| s.is_finite() && *s != 0.0)
        .ok_or_else(|| Error::Decode(format!("bad PFM scale {scale_tok:?}")))?;
    let little_endian = scale < 0.0;
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;

    let samples = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Decode("PFM dimensions overflow".into()))?;
    let raster = bytes
        .get(pos..)
        .filter(|r| r.len() == samples * 4)
        .ok_or_else(|| {
            Error::Decode(format!(
                "PFM raster has {} bytes, expected {}",
                bytes.len().saturating_sub(pos),
                samples * 4
            ))
        })?;

    let mut planes = vec![vec![0.0f64; width * height]; channels];
    for (i, chunk) in raster.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let pixel = i / channels;
        let (x, file_row) = (pixel % width, pixel / width);
        let y = height - 1 - file_row;
        planes[i % channels][y * width + x] = f64::from(v);
    }
    let planes = planes
        .into_iter()
        .map(|data| ImagePlane::new(width, height, data).map_err(|e| Error::Decode(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Image::new(planes)
}

/// Encodes as little-endian `f32`; values are not clamped.
pub fn encode(image: &Image) -> Result<Vec<u8>> {
    let channels = image.channels();
    let magic = match channels {
        1 => "Pf",
        3 => "PF",
        n => return Err(Error::invalid(format!("PFM holds 1 or 3 planes, got {n}"))),
    };
    let (w, h) = image.dimensions();
    let mut out = format!("{magic}\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * channels * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            for p in image.planes() {
                out.extend_from_slice(&(p.get(x, y) as f32).to_le_bytes());
            }
        }
    }
    Ok(out)
}
