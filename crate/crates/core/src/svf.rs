//! The sub-window variance filter.
//!
//! Every pixel-centred `(2r + 1)^2` patch is blended toward its mean by a
//! preservation factor `A_k` in `[0, 1]`:
//!
//! ```text
//! A_k = min(1, max(var_W, var_A..var_D) / (min(var_A..var_D) + eps))
//! B_k = (1 - A_k) * mean_W
//! ```
//!
//! where `A..D` are the four overlapping `(r + 1)^2` corner sub-windows that
//! share the centre row and column. A patch with one flat quadrant and high
//! overall variance looks like an edge and is kept; a patch whose quadrants
//! are all as busy as the whole window is smoothed. Each output pixel then
//! averages the `A_k`, `B_k` of every in-bounds patch covering it:
//! `p' = mean(A) * p + mean(B)`.
//!
//! All windows are clipped to the image. A plane of height (or width) 1 is
//! treated as a 1-D signal, where the quadrants degenerate into left and
//! right halves.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::color::{merge_luma, rgb_to_luma};
use crate::integral::{box_mean, build_sat, clip_rect, Rect, SatPair};
use crate::plane::{ColorMode, Image, ImagePlane};

/// Filter support and edge threshold for one pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    radius: usize,
    epsilon: f64,
}

impl FilterParams {
    pub fn new(radius: usize, epsilon: f64) -> Result<Self> {
        if radius == 0 {
            return Err(Error::invalid("radius must be at least 1"));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be a positive finite number, got {epsilon}"
            )));
        }
        Ok(Self { radius, epsilon })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn window_size(&self) -> usize {
        2 * self.radius + 1
    }

    /// Checks that the window fits every image axis longer than one pixel.
    pub fn check_fits(&self, width: usize, height: usize) -> Result<()> {
        let size = self.window_size();
        let too_wide = width > 1 && size > width;
        let too_tall = height > 1 && size > height;
        if too_wide || too_tall || (width == 1 && height == 1) {
            return Err(Error::invalid(format!(
                "filter window {size}x{size} (radius {}) does not fit a {width}x{height} image",
                self.radius
            )));
        }
        Ok(())
    }
}

/// Variances of the whole patch and its four corner sub-windows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceSet {
    pub whole: f64,
    /// Top-left, top-right, bottom-left, bottom-right.
    pub quadrants: [f64; 4],
    pub mean: f64,
}

impl VarianceSet {
    pub fn min_quadrant(&self) -> f64 {
        self.quadrants.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_variance(&self) -> f64 {
        self.quadrants.iter().copied().fold(self.whole, f64::max)
    }
}

/// Clipped whole window and corner sub-windows of one patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubWindows {
    pub whole: Rect,
    /// Top-left, top-right, bottom-left, bottom-right.
    pub quadrants: [Rect; 4],
}

pub fn subwindow_rects(
    cx: usize,
    cy: usize,
    radius: usize,
    width: usize,
    height: usize,
) -> Result<SubWindows> {
    if cx >= width || cy >= height {
        return Err(Error::invalid(format!(
            "patch centre ({cx}, {cy}) is outside the {width}x{height} image"
        )));
    }
    let (cx, cy, r) = (cx as i64, cy as i64, radius as i64);
    let whole = clip_rect(
        Rect::new(cx - r, cy - r, cx + r + 1, cy + r + 1),
        width,
        height,
    )?;
    let quadrants = [
        Rect::new(cx - r, cy - r, cx + 1, cy + 1),
        Rect::new(cx, cy - r, cx + r + 1, cy + 1),
        Rect::new(cx - r, cy, cx + 1, cy + r + 1),
        Rect::new(cx, cy, cx + r + 1, cy + r + 1),
    ];
    let mut clipped = [whole; 4];
    for (out, q) in clipped.iter_mut().zip(quadrants) {
        *out = clip_rect(q, width, height)?;
    }
    Ok(SubWindows {
        whole,
        quadrants: clipped,
    })
}

/// `[x0, y0, x1, y1]` for the whole window followed by the four quadrants,
/// for a centre known to be inside the image.
#[inline]
fn window_bounds(cx: usize, cy: usize, r: usize, w: usize, h: usize) -> [[usize; 4]; 5] {
    let left = cx.saturating_sub(r);
    let top = cy.saturating_sub(r);
    let right = (cx + r + 1).min(w);
    let bottom = (cy + r + 1).min(h);
    [
        [left, top, right, bottom],
        [left, top, cx + 1, cy + 1],
        [cx, top, right, cy + 1],
        [left, cy, cx + 1, bottom],
        [cx, cy, right, bottom],
    ]
}

#[inline]
fn stats_at(sat: &SatPair, cx: usize, cy: usize, radius: usize) -> VarianceSet {
    let (w, h) = (sat.source_width(), sat.source_height());
    let b = window_bounds(cx, cy, radius, w, h);
    let (mean, whole) = sat.mean_variance_unchecked(b[0][0], b[0][1], b[0][2], b[0][3]);
    let mut quadrants = [0.0; 4];
    for (q, r) in quadrants.iter_mut().zip(&b[1..]) {
        *q = sat.mean_variance_unchecked(r[0], r[1], r[2], r[3]).1;
    }
    VarianceSet {
        whole,
        quadrants,
        mean,
    }
}

/// Per-patch preservation factor in `[0, 1]`.
pub fn preservation_factor(v: &VarianceSet, epsilon: f64) -> f64 {
    (v.max_variance() / (v.min_quadrant() + epsilon)).min(1.0)
}

/// Statistics of the patch centred at `(cx, cy)`.
pub fn patch_stats(sat: &SatPair, cx: usize, cy: usize, radius: usize) -> Result<VarianceSet> {
    // Validates the centre and the geometry; the fast path shares its bounds.
    subwindow_rects(cx, cy, radius, sat.source_width(), sat.source_height())?;
    Ok(stats_at(sat, cx, cy, radius))
}

/// Per-patch factors `A_k` and offsets `B_k`, indexed by patch centre.
#[derive(Clone, Debug, PartialEq)]
pub struct PreservationMaps {
    pub gain: ImagePlane,
    pub offset: ImagePlane,
}

pub fn preservation_maps(plane: &ImagePlane, params: FilterParams) -> Result<PreservationMaps> {
    let (w, h) = plane.dimensions();
    params.check_fits(w, h)?;
    let sat = build_sat(plane);
    let mut gain = vec![0.0; w * h];
    let mut offset = vec![0.0; w * h];
    gain.par_chunks_mut(w)
        .zip(offset.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (a_row, b_row))| {
            for x in 0..w {
                let v = stats_at(&sat, x, y, params.radius);
                let a = preservation_factor(&v, params.epsilon);
                a_row[x] = a;
                b_row[x] = (1.0 - a) * v.mean;
            }
        });
    Ok(PreservationMaps {
        gain: ImagePlane::from_parts(w, h, gain),
        offset: ImagePlane::from_parts(w, h, offset),
    })
}

/// Filtered plane together with the per-patch maps that produced it.
#[derive(Clone, Debug)]
pub struct Filtered {
    pub output: ImagePlane,
    pub maps: PreservationMaps,
}

pub fn filter_plane(plane: &ImagePlane, params: FilterParams) -> Result<Filtered> {
    let maps = preservation_maps(plane, params)?;
    let (gain_avg, offset_avg) = rayon::join(
        || box_mean(&maps.gain, params.radius),
        || box_mean(&maps.offset, params.radius),
    );
    let mut out = vec![0.0; plane.width() * plane.height()];
    out.par_iter_mut()
        .zip(plane.data().par_iter())
        .zip(gain_avg.data().par_iter().zip(offset_avg.data().par_iter()))
        .for_each(|((o, &p), (&a, &b))| *o = a * p + b);
    Ok(Filtered {
        output: ImagePlane::from_parts(plane.width(), plane.height(), out),
        maps,
    })
}

/// Filters a 1- or 3-plane image.
pub fn filter_image(image: &Image, params: FilterParams, mode: ColorMode) -> Result<Image> {
    match (image.channels(), mode) {
        (1, _) => Ok(Image::gray(filter_plane(image.plane(0), params)?.output)),
        (3, ColorMode::PerChannel) => {
            let planes = image
                .planes()
                .par_iter()
                .map(|p| filter_plane(p, params).map(|f| f.output))
                .collect::<Result<Vec<_>>>()?;
            Image::new(planes)
        }
        (3, ColorMode::Luma) => {
            let (luma, chroma) = rgb_to_luma(image)?;
            let filtered = filter_plane(&luma, params)?.output;
            merge_luma(&filtered, &chroma)
        }
        (n, _) => Err(Error::invalid(format!(
            "expected a 1- or 3-plane image, got {n} planes"
        ))),
    }
}
