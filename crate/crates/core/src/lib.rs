//! Edge-preserving smoothing with the sub-window variance filter, and
//! progressive base/detail decomposition built on it.
//!
//! ```
//! use svf_core::{decompose, default_schedule, recompose, ColorMode, Image, ImagePlane, Weights};
//!
//! let plane = ImagePlane::from_fn(32, 32, |x, y| ((x ^ y) & 1) as f64 * 0.1 + 0.4).unwrap();
//! let image = Image::gray(plane);
//! let schedule = default_schedule(2, 2, 0.015).unwrap();
//! let layers = decompose(&image, &schedule, ColorMode::PerChannel).unwrap();
//! let boosted = recompose(&layers, &Weights::new(vec![2.0, 1.0], 1.0)).unwrap();
//! assert_eq!(boosted.dimensions(), (32, 32));
//! ```

pub mod error;
pub mod imageio;
pub mod integral;
pub mod metrics;
pub mod plane;
pub mod pyramid;
pub mod svf;

pub use error::{Error, Result};
pub use integral::{
    box_mean, build_sat, clip_rect, window_mean, window_variance, Rect, SatPair, SumTable,
};
pub use plane::{ColorMode, Image, ImagePlane};
pub use pyramid::{
    decompose, default_schedule, recompose, Decomposition, LevelSpec, Schedule, Weights,
};
pub use svf::{
    filter_image, filter_plane, patch_stats, preservation_factor, preservation_maps,
    subwindow_rects, FilterParams, Filtered, PreservationMaps, SubWindows, VarianceSet,
};
