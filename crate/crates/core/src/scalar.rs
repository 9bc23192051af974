//! Scalar abstraction shared by the image, spectral and resampling code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real floating-point type the pixel and spectrum containers are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances used by runtime checks (for
/// example the imaginary-residue test of the inverse transform) live here so
/// that single precision gets a threshold it can actually meet.
pub trait Real: Float + FloatConst + FftNum + FromPrimitive + ToPrimitive + Default + Debug + Display {
    /// Relative bound on the imaginary residue accepted by the inverse DFT.
    const SYMMETRY_TOL: Self;

    fn from_f64_lossy(value: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    const SYMMETRY_TOL: Self = 1e-4;

    #[inline]
    fn from_f64_lossy(value: f64) -> Self {
        value as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const SYMMETRY_TOL: Self = 1e-6;

    #[inline]
    fn from_f64_lossy(value: f64) -> Self {
        value
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
