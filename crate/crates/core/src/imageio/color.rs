//! BT.709 luma split and merge.
//!
//! The split keeps per-pixel chroma offsets `(R - Y, G - Y, B - Y)` so that
//! any modified luma can be merged back by adding it to each offset.

use crate::error::{Error, Result};
use crate::plane::{Image, ImagePlane};

pub const LUMA_R: f64 = 0.2126;
pub const LUMA_G: f64 = 0.7152;
pub const LUMA_B: f64 = 0.0722;

/// Per-channel offsets from luma, in R, G, B order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChromaResidue {
    pub planes: [ImagePlane; 3],
}

pub fn rgb_to_luma(image: &Image) -> Result<(ImagePlane, ChromaResidue)> {
    let [r, g, b] = rgb_planes(image)?;
    let luma = r.zip_map(g, |r, g| LUMA_R * r + LUMA_G * g);
    let luma = luma.zip_map(b, |rg, b| rg + LUMA_B * b);
    let residue = |p: &ImagePlane| p.zip_map(&luma, |c, y| c - y);
    let chroma = ChromaResidue {
        planes: [residue(r), residue(g), residue(b)],
    };
    Ok((luma, chroma))
}

pub fn merge_luma(luma: &ImagePlane, chroma: &ChromaResidue) -> Result<Image> {
    if chroma.planes[0].dimensions() != luma.dimensions() {
        return Err(Error::invalid(format!(
            "luma is {}x{} but chroma is {}x{}",
            luma.width(),
            luma.height(),
            chroma.planes[0].width(),
            chroma.planes[0].height()
        )));
    }
    Image::new(
        chroma
            .planes
            .iter()
            .map(|c| c.zip_map(luma, |c, y| c + y))
            .collect(),
    )
}

fn rgb_planes(image: &Image) -> Result<[&ImagePlane; 3]> {
    match image.planes() {
        [r, g, b] => Ok([r, g, b]),
        other => Err(Error::invalid(format!(
            "luma conversion needs 3 planes, got {}",
            other.len()
        ))),
    }
}
