//! Single-channel planes and multi-plane images.
//!
//! All filtering math works on [`ImagePlane`]s holding `f64` intensities,
//! nominally normalized to `[0, 1]`. An [`Image`] is one or more planes of
//! identical dimensions (1 for grayscale, 3 for RGB).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major grid of finite intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "plane must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "plane data has {} samples, expected {width}x{height} = {}",
                data.len(),
                width * height
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample {} at ({}, {})",
                data[i],
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Wraps data produced by in-crate arithmetic on already-valid planes.
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub(crate) fn zip_map(&self, other: &ImagePlane, f: impl Fn(f64, f64) -> f64) -> ImagePlane {
        debug_assert_eq!(self.dimensions(), other.dimensions());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        ImagePlane::from_parts(self.width, self.height, data)
    }

    /// `self += weight * other`, element-wise.
    pub(crate) fn add_scaled(&mut self, other: &ImagePlane, weight: f64) {
        debug_assert_eq!(self.dimensions(), other.dimensions());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += weight * b;
        }
    }

    pub(crate) fn scaled(&self, weight: f64) -> ImagePlane {
        let data = self.data.iter().map(|&v| weight * v).collect();
        ImagePlane::from_parts(self.width, self.height, data)
    }
}

/// How a filter treats the planes of a color image.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorMode {
    /// Every plane is filtered independently.
    #[default]
    PerChannel,
    /// Only the BT.709 luma is filtered; chroma offsets are carried through.
    Luma,
}

impl std::fmt::Display for ColorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ColorMode::PerChannel => "per-channel",
            ColorMode::Luma => "luma",
        })
    }
}

impl std::str::FromStr for ColorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-channel" => Ok(ColorMode::PerChannel),
            "luma" => Ok(ColorMode::Luma),
            other => Err(Error::invalid(format!(
                "unknown color mode {other:?} (expected per-channel or luma)"
            ))),
        }
    }
}

/// One or more planes sharing the same dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    planes: Vec<ImagePlane>,
}

impl Image {
    pub fn new(planes: Vec<ImagePlane>) -> Result<Self> {
        let Some(first) = planes.first() else {
            return Err(Error::invalid("image has no planes"));
        };
        let dims = first.dimensions();
        if let Some(p) = planes.iter().find(|p| p.dimensions() != dims) {
            return Err(Error::invalid(format!(
                "plane dimensions differ: {}x{} vs {}x{}",
                dims.0,
                dims.1,
                p.width(),
                p.height()
            )));
        }
        Ok(Self { planes })
    }

    pub fn gray(plane: ImagePlane) -> Self {
        Self {
            planes: vec![plane],
        }
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.planes[0].dimensions()
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn planes(&self) -> &[ImagePlane] {
        &self.planes
    }

    pub fn plane(&self, index: usize) -> &ImagePlane {
        &self.planes[index]
    }

    pub fn into_planes(self) -> Vec<ImagePlane> {
        self.planes
    }

    pub fn min(&self) -> f64 {
        self.planes
            .iter()
            .map(ImagePlane::min)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.planes
            .iter()
            .map(ImagePlane::max)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.planes.iter().map(ImagePlane::mean).sum::<f64>() / self.planes.len() as f64
    }

    /// `self += weight * other`. A single-plane `other` is broadcast across
    /// every plane of `self`.
    pub(crate) fn add_scaled(&mut self, other: &Image, weight: f64) {
        debug_assert!(other.channels() == 1 || other.channels() == self.channels());
        for (i, plane) in self.planes.iter_mut().enumerate() {
            let src = if other.channels() == 1 {
                &other.planes[0]
            } else {
                &other.planes[i]
            };
            plane.add_scaled(src, weight);
        }
    }

    pub(crate) fn scaled(&self, weight: f64) -> Image {
        Image {
            planes: self.planes.iter().map(|p| p.scaled(weight)).collect(),
        }
    }

    /// Element-wise map producing a new image, used for offset previews.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Image> {
        let planes = self
            .planes
            .iter()
            .map(|p| {
                ImagePlane::new(
                    p.width(),
                    p.height(),
                    p.data().iter().map(|&v| f(v)).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Image::new(planes)
    }
}

impl From<ImagePlane> for Image {
    fn from(plane: ImagePlane) -> Self {
        Image::gray(plane)
    }
}
