//! Frequency-domain curriculum learning toolkit.
//!
//! * [`spectral`]: centered 2D DFT, low-frequency cropping and circular filters.
//! * [`resample`]: kernel down-sampling and its aliasing analysis.
//! * [`augment`]: magnitude-scheduled random augmentation.
//! * [`curriculum`]: schedules, epoch lookup and the relative cost model.
//! * [`search`]: greedy backward search for per-stage bandwidths.
//!
//! Image and spectrum containers are generic over [`Real`] (`f32` or `f64`);
//! the aliases below fix them to double precision, which every numeric
//! tolerance in this crate assumes.

pub mod augment;
pub mod curriculum;
pub mod error;
pub mod image;
pub mod resample;
pub mod scalar;
pub mod search;
pub mod spectral;

pub use error::{Error, Result};
pub use image::ImageTensor;
pub use scalar::Real;
pub use spectral::Spectrum;

/// Double-precision image.
pub type Image = ImageTensor<f64>;
/// Single-precision image.
pub type Image32 = ImageTensor<f32>;
/// Double-precision centered spectrum.
pub type Spectrum64 = Spectrum<f64>;
/// Single-precision centered spectrum.
pub type Spectrum32 = Spectrum<f32>;
