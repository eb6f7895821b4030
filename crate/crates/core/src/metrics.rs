//! SSIM, PSNR and max-abs-difference on normalized planes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integral::{build_sat, SumTable};
use crate::plane::{Image, ImagePlane};

/// Sliding-window SSIM settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    /// Side of the square moving window.
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 8,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::invalid("SSIM window must be at least 2"));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0 && self.dynamic_range > 0.0) {
            return Err(Error::invalid(
                "SSIM k1, k2 and dynamic range must be positive",
            ));
        }
        Ok(())
    }
}

fn same_dims(a: &ImagePlane, b: &ImagePlane) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Mean SSIM over every `window x window` position fully inside the plane,
/// using population (1/N) statistics.
pub fn ssim(a: &ImagePlane, b: &ImagePlane, p: &SsimParams) -> Result<f64> {
    same_dims(a, b)?;
    p.validate()?;
    let (w, h) = a.dimensions();
    let win = p.window;
    if win > w || win > h {
        return Err(Error::invalid(format!(
            "SSIM window {win} does not fit a {w}x{h} image"
        )));
    }
    let c1 = (p.k1 * p.dynamic_range).powi(2);
    let c2 = (p.k2 * p.dynamic_range).powi(2);

    let (sat_a, sat_b) = rayon::join(|| build_sat(a), || build_sat(b));
    let (off_a, off_b) = (sat_a.offset(), sat_b.offset());
    let (da, db) = (a.data(), b.data());
    let cross = SumTable::build(w, h, |i| (da[i] - off_a) * (db[i] - off_b));

    let inv_n = 1.0 / (win * win) as f64;
    let row_sums: Vec<f64> = (0..=h - win)
        .into_par_iter()
        .map(|y| {
            let mut acc = 0.0;
            for x in 0..=w - win {
                let (x1, y1) = (x + win, y + win);
                let sum = |t: &SumTable| t.sum_unchecked(x, y, x1, y1) * inv_n;
                let (ma, mb) = (sum(sat_a.sum_table()), sum(sat_b.sum_table()));
                let va = (sum(sat_a.sum_sq_table()) - ma * ma).max(0.0);
                let vb = (sum(sat_b.sum_sq_table()) - mb * mb).max(0.0);
                let cov = sum(&cross) - ma * mb;
                let (mu_a, mu_b) = (off_a + ma, off_b + mb);
                let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
                let den = (mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2);
                acc += num / den;
            }
            acc
        })
        .collect();
    let windows = ((w - win + 1) * (h - win + 1)) as f64;
    Ok(row_sums.iter().sum::<f64>() / windows)
}

/// Peak signal-to-noise ratio in dB for unit peak; identical inputs give
/// `f64::INFINITY`.
pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    same_dims(a, b)?;
    Ok(psnr_from_mse(mse(a.data(), b.data())))
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

pub fn max_abs_diff(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    same_dims(a, b)?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

fn same_shape(a: &Image, b: &Image) -> Result<()> {
    if a.channels() != b.channels() {
        return Err(Error::invalid(format!(
            "channel mismatch: {} vs {}",
            a.channels(),
            b.channels()
        )));
    }
    same_dims(a.plane(0), b.plane(0))
}

/// SSIM averaged over planes.
pub fn ssim_image(a: &Image, b: &Image, p: &SsimParams) -> Result<f64> {
    same_shape(a, b)?;
    let mut total = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        total += ssim(pa, pb, p)?;
    }
    Ok(total / a.channels() as f64)
}

/// PSNR over all samples of all planes.
pub fn psnr_image(a: &Image, b: &Image) -> Result<f64> {
    same_shape(a, b)?;
    let total: f64 = a
        .planes()
        .iter()
        .zip(b.planes())
        .map(|(pa, pb)| mse(pa.data(), pb.data()))
        .sum();
    Ok(psnr_from_mse(total / a.channels() as f64))
}

pub fn max_abs_diff_image(a: &Image, b: &Image) -> Result<f64> {
    same_shape(a, b)?;
    let mut worst: f64 = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        worst = worst.max(max_abs_diff(pa, pb)?);
    }
    Ok(worst)
}
