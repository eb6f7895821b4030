//! Summed-area tables and O(1) windowed statistics.
//!
//! Rectangles are half-open: `[x0, x1) x [y0, y1)`. Queries never read
//! outside the source plane; windows that overhang a border must be passed
//! through [`clip_rect`] first, so statistics are taken over the pixels that
//! actually exist.
//!
//! Tables accumulate in `f64`. Before accumulation every sample is shifted by
//! the plane minimum, which keeps the `E[X^2] - E[X]^2` cancellation small and
//! makes constant planes produce exactly zero sums.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plane::ImagePlane;

/// Half-open pixel rectangle. Coordinates may be negative or past the image
/// edge before clipping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl Rect {
    pub const fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }

    pub fn area(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            ((self.x1 - self.x0) * (self.y1 - self.y0)) as u64
        }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    fn within(&self, width: usize, height: usize) -> bool {
        !self.is_empty()
            && self.x0 >= 0
            && self.y0 >= 0
            && self.x1 <= width as i64
            && self.y1 <= height as i64
    }
}

/// Intersects `r` with the `width x height` image.
pub fn clip_rect(r: Rect, width: usize, height: usize) -> Result<Rect> {
    let clipped = Rect {
        x0: r.x0.max(0),
        y0: r.y0.max(0),
        x1: r.x1.min(width as i64),
        y1: r.y1.min(height as i64),
    };
    if clipped.is_empty() {
        return Err(Error::DegenerateWindow {
            rect: r,
            width,
            height,
        });
    }
    Ok(clipped)
}

/// A single zero-padded summed-area table over `width x height` samples.
///
/// Entry `(x, y)` of the `(width + 1) x (height + 1)` table holds the sum of
/// all samples strictly above and to the left of it.
#[derive(Clone, Debug)]
pub struct SumTable {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl SumTable {
    /// Accumulates `sample(i)` for every row-major index `i`.
    ///
    /// Rows are prefix-summed first and then added onto the row above, so for
    /// non-negative samples the table is monotone along both axes even under
    /// rounding.
    pub fn build(width: usize, height: usize, sample: impl Fn(usize) -> f64) -> Self {
        let stride = width + 1;
        let mut data = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let (above, below) = data.split_at_mut((y + 1) * stride);
            let above = &above[y * stride..];
            let row = &mut below[..stride];
            let mut running = 0.0;
            for x in 0..width {
                running += sample(y * width + x);
                row[x + 1] = above[x + 1] + running;
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw table entry; `x <= width`, `y <= height`.
    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.data[y * (self.width + 1) + x]
    }

    /// Sum over `[x0, x1) x [y0, y1)` with no bounds validation beyond slice
    /// indexing.
    #[inline]
    pub(crate) fn sum_unchecked(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.width + 1;
        let d = &self.data;
        (d[y1 * s + x1] - d[y0 * s + x1]) - (d[y1 * s + x0] - d[y0 * s + x0])
    }

    pub fn window_sum(&self, r: Rect) -> Result<f64> {
        let (x0, y0, x1, y1) = checked_bounds(r, self.width, self.height)?;
        Ok(self.sum_unchecked(x0, y0, x1, y1))
    }
}

fn checked_bounds(r: Rect, width: usize, height: usize) -> Result<(usize, usize, usize, usize)> {
    if !r.within(width, height) {
        return Err(Error::invalid(format!(
            "rect {r:?} is empty or outside the {width}x{height} plane"
        )));
    }
    Ok((r.x0 as usize, r.y0 as usize, r.x1 as usize, r.y1 as usize))
}

/// Summed-area tables of values and squared values for one plane.
#[derive(Clone, Debug)]
pub struct SatPair {
    offset: f64,
    sum: SumTable,
    sum_sq: SumTable,
}

/// Builds the value and squared-value tables for `plane`.
pub fn build_sat(plane: &ImagePlane) -> SatPair {
    let offset = plane.min();
    let data = plane.data();
    let (w, h) = plane.dimensions();
    let (sum, sum_sq) = rayon::join(
        || SumTable::build(w, h, |i| data[i] - offset),
        || {
            SumTable::build(w, h, |i| {
                let v = data[i] - offset;
                v * v
            })
        },
    );
    SatPair {
        offset,
        sum,
        sum_sq,
    }
}

impl SatPair {
    pub fn source_width(&self) -> usize {
        self.sum.width
    }

    pub fn source_height(&self) -> usize {
        self.sum.height
    }

    /// Value subtracted from every sample before accumulation (the plane
    /// minimum).
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Table of shifted sample sums.
    pub fn sum_table(&self) -> &SumTable {
        &self.sum
    }

    /// Table of shifted squared-sample sums.
    pub fn sum_sq_table(&self) -> &SumTable {
        &self.sum_sq
    }

    pub fn window_sum(&self, r: Rect) -> Result<f64> {
        let (x0, y0, x1, y1) = checked_bounds(r, self.sum.width, self.sum.height)?;
        let area = ((x1 - x0) * (y1 - y0)) as f64;
        Ok(self.sum.sum_unchecked(x0, y0, x1, y1) + self.offset * area)
    }

    pub fn window_mean(&self, r: Rect) -> Result<f64> {
        let (x0, y0, x1, y1) = checked_bounds(r, self.sum.width, self.sum.height)?;
        Ok(self.mean_variance_unchecked(x0, y0, x1, y1).0)
    }

    pub fn window_variance(&self, r: Rect) -> Result<f64> {
        let (x0, y0, x1, y1) = checked_bounds(r, self.sum.width, self.sum.height)?;
        Ok(self.mean_variance_unchecked(x0, y0, x1, y1).1)
    }

    /// Mean and (population) variance over a window already known to be
    /// inside the plane.
    #[inline]
    pub(crate) fn mean_variance_unchecked(
        &self,
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
    ) -> (f64, f64) {
        let inv_area = 1.0 / ((x1 - x0) * (y1 - y0)) as f64;
        let shifted_mean = self.sum.sum_unchecked(x0, y0, x1, y1) * inv_area;
        let mean_sq = self.sum_sq.sum_unchecked(x0, y0, x1, y1) * inv_area;
        let variance = (mean_sq - shifted_mean * shifted_mean).max(0.0);
        (self.offset + shifted_mean, variance)
    }
}

/// Free-function form of [`SatPair::window_mean`].
pub fn window_mean(sat: &SatPair, r: Rect) -> Result<f64> {
    sat.window_mean(r)
}

/// Free-function form of [`SatPair::window_variance`]; clamped at zero.
pub fn window_variance(sat: &SatPair, r: Rect) -> Result<f64> {
    sat.window_variance(r)
}

/// Mean over the `(2 * radius + 1)^2` window centred at every pixel, with
/// the window clipped to the plane so border pixels average only the samples
/// that exist. Results are clamped to the plane's value range, which a mean
/// cannot leave except through rounding.
pub fn box_mean(plane: &ImagePlane, radius: usize) -> ImagePlane {
    let (w, h) = plane.dimensions();
    let offset = plane.min();
    let upper = plane.max();
    let data = plane.data();
    let table = SumTable::build(w, h, |i| data[i] - offset);
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius + 1).min(h);
        for (x, o) in row.iter_mut().enumerate() {
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius + 1).min(w);
            let area = ((x1 - x0) * (y1 - y0)) as f64;
            *o = (offset + table.sum_unchecked(x0, y0, x1, y1) / area).clamp(offset, upper);
        }
    });
    ImagePlane::from_parts(w, h, out)
}
