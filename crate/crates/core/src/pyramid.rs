//! Progressive base/detail decomposition and weighted recomposition.
//!
//! `B_0` is the input, `B_k = filter(B_{k-1})` with the level-`k` parameters
//! and `D_k = B_{k-1} - B_k`, so `B_N + sum(D_k)` telescopes back to the
//! input. Nothing is decimated; every layer has the input's dimensions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::color::{merge_luma, rgb_to_luma};
use crate::plane::{ColorMode, Image, ImagePlane};
use crate::svf::{filter_plane, FilterParams};

/// Ordered per-level filter parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    levels: Vec<FilterParams>,
}

/// Serialized form of one schedule level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub radius: usize,
    pub epsilon: f64,
}

impl Schedule {
    pub fn new(levels: Vec<FilterParams>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("schedule needs at least one level"));
        }
        Ok(Self { levels })
    }

    /// Pairs radii with epsilons; a single epsilon is broadcast to every
    /// level.
    pub fn from_lists(radii: &[usize], epsilons: &[f64]) -> Result<Self> {
        let epsilon_at = |i: usize| match epsilons.len() {
            1 => Ok(epsilons[0]),
            n if n == radii.len() => Ok(epsilons[i]),
            n => Err(Error::invalid(format!(
                "got {n} epsilons for {} levels (give one, or one per level)",
                radii.len()
            ))),
        };
        let levels = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| FilterParams::new(r, epsilon_at(i)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }

    pub fn levels(&self) -> &[FilterParams] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn to_specs(&self) -> Vec<LevelSpec> {
        self.levels
            .iter()
            .map(|p| LevelSpec {
                radius: p.radius(),
                epsilon: p.epsilon(),
            })
            .collect()
    }

    pub fn from_specs(specs: &[LevelSpec]) -> Result<Self> {
        Self::new(
            specs
                .iter()
                .map(|s| FilterParams::new(s.radius, s.epsilon))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    fn check_fits(&self, width: usize, height: usize) -> Result<()> {
        for (k, p) in self.levels.iter().enumerate() {
            p.check_fits(width, height).map_err(|e| {
                Error::invalid(format!("schedule level {}: {}", k + 1, strip_prefix(&e)))
            })?;
        }
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InvalidInput(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// Radius-doubling schedule with a constant epsilon.
pub fn default_schedule(levels: usize, base_radius: usize, epsilon: f64) -> Result<Schedule> {
    Schedule::new(
        (0..levels)
            .map(|k| FilterParams::new(base_radius << k, epsilon))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Final base layer and the detail layers that were peeled off it.
///
/// In luma mode the base is a full RGB image (filtered luma plus the
/// original chroma offsets) while each detail layer is a single luma plane
/// that applies equally to every channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    base: Image,
    details: Vec<Image>,
    schedule: Schedule,
    color_mode: ColorMode,
}

impl Decomposition {
    pub fn new(
        base: Image,
        details: Vec<Image>,
        schedule: Schedule,
        color_mode: ColorMode,
    ) -> Result<Self> {
        if details.len() != schedule.len() {
            return Err(Error::invalid(format!(
                "{} detail layers for a {}-level schedule",
                details.len(),
                schedule.len()
            )));
        }
        let expected_planes = match color_mode {
            ColorMode::Luma if base.channels() == 3 => 1,
            _ => base.channels(),
        };
        for (k, d) in details.iter().enumerate() {
            if d.dimensions() != base.dimensions() || d.channels() != expected_planes {
                return Err(Error::invalid(format!(
                    "detail layer {} is {}x{}x{}, expected {}x{}x{}",
                    k + 1,
                    d.width(),
                    d.height(),
                    d.channels(),
                    base.width(),
                    base.height(),
                    expected_planes
                )));
            }
        }
        Ok(Self {
            base,
            details,
            schedule,
            color_mode,
        })
    }

    pub fn base(&self) -> &Image {
        &self.base
    }

    pub fn details(&self) -> &[Image] {
        &self.details
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn color_mode(&self) -> ColorMode {
        self.color_mode
    }

    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// `B_N + sum(D_k)`.
    pub fn reconstruct(&self) -> Image {
        let mut out = self.base.clone();
        for d in &self.details {
            out.add_scaled(d, 1.0);
        }
        out
    }
}

/// Decomposes `image` following `schedule`.
pub fn decompose(image: &Image, schedule: &Schedule, mode: ColorMode) -> Result<Decomposition> {
    let (w, h) = image.dimensions();
    schedule.check_fits(w, h)?;
    match (image.channels(), mode) {
        (1, _) | (3, ColorMode::PerChannel) => {
            let per_plane = image
                .planes()
                .par_iter()
                .map(|p| decompose_plane(p, schedule))
                .collect::<Result<Vec<_>>>()?;
            let mut bases = Vec::with_capacity(per_plane.len());
            let mut details: Vec<Vec<ImagePlane>> = vec![Vec::new(); schedule.len()];
            for (base, plane_details) in per_plane {
                bases.push(base);
                for (k, d) in plane_details.into_iter().enumerate() {
                    details[k].push(d);
                }
            }
            let details = details
                .into_iter()
                .map(Image::new)
                .collect::<Result<Vec<_>>>()?;
            Decomposition::new(Image::new(bases)?, details, schedule.clone(), mode)
        }
        (3, ColorMode::Luma) => {
            let (luma, chroma) = rgb_to_luma(image)?;
            let (base_luma, details) = decompose_plane(&luma, schedule)?;
            Decomposition::new(
                merge_luma(&base_luma, &chroma)?,
                details.into_iter().map(Image::gray).collect(),
                schedule.clone(),
                mode,
            )
        }
        (n, _) => Err(Error::invalid(format!(
            "expected a 1- or 3-plane image, got {n} planes"
        ))),
    }
}

fn decompose_plane(
    plane: &ImagePlane,
    schedule: &Schedule,
) -> Result<(ImagePlane, Vec<ImagePlane>)> {
    let mut base = plane.clone();
    let mut details = Vec::with_capacity(schedule.len());
    for &params in schedule.levels() {
        let next = filter_plane(&base, params)?.output;
        details.push(base.zip_map(&next, |prev, cur| prev - cur));
        base = next;
    }
    Ok((base, details))
}

/// Per-layer multipliers for recomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub details: Vec<f64>,
    pub base: f64,
}

impl Weights {
    pub fn new(details: Vec<f64>, base: f64) -> Self {
        Self { details, base }
    }

    /// All ones: recomposition reproduces the input.
    pub fn unit(levels: usize) -> Self {
        Self::new(vec![1.0; levels], 1.0)
    }
}

/// `base_weight * B_N + sum(w_k * D_k)`, unclamped.
pub fn recompose(d: &Decomposition, w: &Weights) -> Result<Image> {
    if w.details.len() != d.levels() {
        return Err(Error::invalid(format!(
            "{} detail weights for {} detail layers",
            w.details.len(),
            d.levels()
        )));
    }
    if let Some(bad) = w.details.iter().chain([&w.base]).find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("weight {bad} is not finite")));
    }
    let mut out = d.base.scaled(w.base);
    for (layer, &weight) in d.details.iter().zip(&w.details) {
        out.add_scaled(layer, weight);
    }
    Ok(out)
}
