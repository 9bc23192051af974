//! Centered 2D DFT, low-frequency spectrum cropping and circular filters.
//!
//! Conventions used throughout:
//!
//! * Both pixel and frequency axes use signed indices. Array position `p` of
//!   an axis of length `n` holds signed index `p - n/2`, so the DC bin of a
//!   spectrum and the spatial origin both sit at `(n/2, n/2)`.
//! * The forward transform is unnormalized,
//!   `F[u,v] = sum_{x,y} X[x,y] exp(-2 pi j (u x / H + v y / W))`, and the
//!   inverse carries the `1/(H W)` factor.
//! * Only even side lengths are accepted.
//!
//! With both axes centered, the FFT is wrapped in a half-length circular
//! shift on each side (`shift_half`), which is its own inverse for even sizes.

use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::scalar::Real;

/// Complex `height x width` frequency map in centered layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    height: usize,
    width: usize,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        check_even(height, width)?;
        Ok(Self {
            height,
            width,
            coeffs: vec![Complex::new(T::zero(), T::zero()); height * width],
        })
    }

    /// Wraps coefficients already laid out in centered order.
    pub fn from_coeffs(height: usize, width: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        check_even(height, width)?;
        if coeffs.len() != height * width {
            return Err(Error::Dimension(format!(
                "coefficient count {} does not match {height}x{width}",
                coeffs.len()
            )));
        }
        Ok(Self { height, width, coeffs })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Signed row range `[-H/2, H/2)`.
    pub fn rows(&self) -> std::ops::Range<i64> {
        signed_range(self.height)
    }

    /// Signed column range `[-W/2, W/2)`.
    pub fn cols(&self) -> std::ops::Range<i64> {
        signed_range(self.width)
    }

    pub fn contains(&self, u: i64, v: i64) -> bool {
        self.rows().contains(&u) && self.cols().contains(&v)
    }

    #[inline]
    fn offset(&self, u: i64, v: i64) -> usize {
        debug_assert!(self.contains(u, v), "bin ({u}, {v}) out of range");
        let row = (u + (self.height / 2) as i64) as usize;
        let col = (v + (self.width / 2) as i64) as usize;
        row * self.width + col
    }

    /// Coefficient at signed bin `(u, v)`.
    ///
    /// Panics if the bin is outside the signed range.
    pub fn at(&self, u: i64, v: i64) -> Complex<T> {
        assert!(self.contains(u, v), "bin ({u}, {v}) out of range");
        self.coeffs[self.offset(u, v)]
    }

    pub fn set(&mut self, u: i64, v: i64, value: Complex<T>) {
        assert!(self.contains(u, v), "bin ({u}, {v}) out of range");
        let idx = self.offset(u, v);
        self.coeffs[idx] = value;
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    /// Largest `|F(u,v) - conj(F(-u,-v))|` over bins whose negation is in range.
    pub fn hermitian_deviation(&self) -> T {
        let mut worst = T::zero();
        for u in self.rows() {
            for v in self.cols() {
                if self.contains(-u, -v) {
                    let d = (self.at(u, v) - self.at(-u, -v).conj()).norm();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Target size of a centered spectrum crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropParams {
    out_height: usize,
    out_width: usize,
}

impl CropParams {
    pub fn new(out_height: usize, out_width: usize) -> Result<Self> {
        if out_height == 0 || out_width == 0 || !out_height.is_multiple_of(2) || !out_width.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "crop size must be positive and even, got {out_height}x{out_width}"
            )));
        }
        Ok(Self { out_height, out_width })
    }

    pub fn square(bandwidth: usize) -> Result<Self> {
        Self::new(bandwidth, bandwidth)
    }

    pub fn out_height(&self) -> usize {
        self.out_height
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }
}

/// Radius of a circular frequency mask, in bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    radius: f64,
}

impl FilterParams {
    pub fn new(radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::Config(format!(
                "filter radius must be finite and non-negative, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Inclusive test `sqrt(u^2 + v^2) <= r`.
    pub fn inside(&self, u: i64, v: i64) -> bool {
        ((u * u + v * v) as f64).sqrt() <= self.radius
    }
}

pub(crate) fn signed_range(n: usize) -> std::ops::Range<i64> {
    let half = (n / 2) as i64;
    -half..half
}

fn check_even(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 || !height.is_multiple_of(2) || !width.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "spectral operations need positive even dimensions, got {height}x{width}"
        )));
    }
    Ok(())
}

fn single_channel<T: Real>(image: &ImageTensor<T>) -> Result<()> {
    if image.channels() != 1 {
        return Err(Error::Dimension(format!(
            "expected a single-channel image, got {} channels",
            image.channels()
        )));
    }
    Ok(())
}

/// Circular shift by half the length along both axes.
fn shift_half<X: Copy>(height: usize, width: usize, input: &[X]) -> Vec<X> {
    let (hh, hw) = (height / 2, width / 2);
    let mut out = Vec::with_capacity(input.len());
    for row in 0..height {
        let src_row = (row + hh) % height;
        let base = src_row * width;
        out.extend_from_slice(&input[base + hw..base + width]);
        out.extend_from_slice(&input[base..base + hw]);
    }
    out
}

/// In-place unnormalized 2D FFT of a row-major buffer in natural (uncentered) order.
fn fft2_in_place<T: Real>(height: usize, width: usize, buffer: &mut [Complex<T>], direction: FftDirection) {
    let mut planner = FftPlanner::<T>::new();
    let row_fft = planner.plan_fft(width, direction);
    let mut scratch = vec![Complex::default(); row_fft.get_inplace_scratch_len()];
    for row in buffer.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    let col_fft = planner.plan_fft(height, direction);
    scratch.resize(col_fft.get_inplace_scratch_len(), Complex::default());
    let mut column = vec![Complex::default(); height];
    for col in 0..width {
        for (row, slot) in column.iter_mut().enumerate() {
            *slot = buffer[row * width + col];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for (row, value) in column.iter().enumerate() {
            buffer[row * width + col] = *value;
        }
    }
}

/// Forward transform of a centered complex field; no normalization.
pub(crate) fn dft2_complex<T: Real>(height: usize, width: usize, field: &[Complex<T>]) -> Result<Spectrum<T>> {
    check_even(height, width)?;
    let mut buf = shift_half(height, width, field);
    fft2_in_place(height, width, &mut buf, FftDirection::Forward);
    Spectrum::from_coeffs(height, width, shift_half(height, width, &buf))
}

/// Inverse transform to a centered complex field, including the `1/(H W)` factor.
pub(crate) fn idft2_complex<T: Real>(spec: &Spectrum<T>) -> Vec<Complex<T>> {
    let (h, w) = (spec.height, spec.width);
    let mut buf = shift_half(h, w, &spec.coeffs);
    fft2_in_place(h, w, &mut buf, FftDirection::Inverse);
    let norm = T::one() / T::from_usize(h * w).unwrap();
    let mut out = shift_half(h, w, &buf);
    for c in &mut out {
        *c = *c * norm;
    }
    out
}

/// Centered forward DFT of a single-channel image.
pub fn dft2<T: Real>(image: &ImageTensor<T>) -> Result<Spectrum<T>> {
    single_channel(image)?;
    check_even(image.height(), image.width())?;
    if image.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("image contains non-finite values".into()));
    }
    let field: Vec<Complex<T>> = image.data().iter().map(|&v| Complex::new(v, T::zero())).collect();
    dft2_complex(image.height(), image.width(), &field)
}

/// Inverse DFT back to a real single-channel image.
///
/// Fails with [`Error::Symmetry`] when the imaginary residue exceeds
/// `tol * (1 + max |real|)`; a spectrum that inverts to a visibly complex
/// field was not produced from a real image.
pub fn idft2<T: Real>(spec: &Spectrum<T>) -> Result<ImageTensor<T>> {
    if !spec.is_finite() {
        return Err(Error::Data("spectrum contains non-finite values".into()));
    }
    let field = idft2_complex(spec);
    let max_real = field.iter().fold(T::zero(), |acc, c| acc.max(c.re.abs()));
    let residue = field.iter().fold(T::zero(), |acc, c| acc.max(c.im.abs()));
    let bound = T::SYMMETRY_TOL * (T::one() + max_real);
    if residue > bound {
        return Err(Error::Symmetry {
            residue: residue.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
        });
    }
    ImageTensor::new(1, spec.height, spec.width, field.into_iter().map(|c| c.re).collect())
}

/// Copies the centered `out_h x out_w` window, scaled by `(out_h out_w)/(H W)`.
///
/// When an axis actually shrinks, its Nyquist line (signed index `-out/2`)
/// has no conjugate partner inside the window and is zeroed.
pub fn crop_spectrum<T: Real>(spec: &Spectrum<T>, params: CropParams) -> Result<Spectrum<T>> {
    let (out_h, out_w) = (params.out_height, params.out_width);
    if out_h > spec.height || out_w > spec.width {
        return Err(Error::Dimension(format!(
            "crop {out_h}x{out_w} is larger than spectrum {}x{}",
            spec.height, spec.width
        )));
    }
    let scale = T::from_usize(out_h * out_w).unwrap() / T::from_usize(spec.height * spec.width).unwrap();
    let mut out = Spectrum::zeros(out_h, out_w)?;
    let nyquist_u = (out_h < spec.height).then_some(-((out_h / 2) as i64));
    let nyquist_v = (out_w < spec.width).then_some(-((out_w / 2) as i64));
    for u in out.rows() {
        if Some(u) == nyquist_u {
            continue;
        }
        for v in out.cols() {
            if Some(v) == nyquist_v {
                continue;
            }
            out.set(u, v, spec.at(u, v) * scale);
        }
    }
    Ok(out)
}

/// Zero-pads a centered spectrum out to `height x width`.
pub fn embed_spectrum<T: Real>(spec: &Spectrum<T>, height: usize, width: usize) -> Result<Spectrum<T>> {
    if height < spec.height || width < spec.width {
        return Err(Error::Dimension(format!(
            "cannot embed {}x{} into smaller {height}x{width}",
            spec.height, spec.width
        )));
    }
    let mut out = Spectrum::zeros(height, width)?;
    for u in spec.rows() {
        for v in spec.cols() {
            out.set(u, v, spec.at(u, v));
        }
    }
    Ok(out)
}

/// Low-frequency cropping of every channel to `out_h x out_w` pixels.
pub fn low_frequency_crop_rect<T: Real>(image: &ImageTensor<T>, params: CropParams) -> Result<ImageTensor<T>> {
    check_even(image.height(), image.width())?;
    image.map_channels(|plane| idft2(&crop_spectrum(&dft2(plane)?, params)?))
}

/// Low-frequency cropping to a `bandwidth x bandwidth` image.
pub fn low_frequency_crop<T: Real>(image: &ImageTensor<T>, bandwidth: usize) -> Result<ImageTensor<T>> {
    low_frequency_crop_rect(image, CropParams::square(bandwidth)?)
}

/// Rebuilds the scaled-back, zero-embedded `height x width` spectrum of the
/// original image from a single-channel cropped image.
pub fn recover_low_spectrum<T: Real>(cropped: &ImageTensor<T>, height: usize, width: usize) -> Result<Spectrum<T>> {
    single_channel(cropped)?;
    check_even(height, width)?;
    if cropped.height() > height || cropped.width() > width {
        return Err(Error::Dimension(format!(
            "cropped image {}x{} exceeds target {height}x{width}",
            cropped.height(),
            cropped.width()
        )));
    }
    let small = dft2(cropped)?;
    let scale = T::from_usize(height * width).unwrap() / T::from_usize(cropped.height() * cropped.width()).unwrap();
    let rescaled = Spectrum {
        coeffs: small.coeffs.iter().map(|&c| c * scale).collect(),
        ..small
    };
    embed_spectrum(&rescaled, height, width)
}

fn circular_filter<T: Real>(image: &ImageTensor<T>, params: FilterParams, keep_inside: bool) -> Result<ImageTensor<T>> {
    check_even(image.height(), image.width())?;
    image.map_channels(|plane| {
        let mut spec = dft2(plane)?;
        let zero = Complex::new(T::zero(), T::zero());
        for u in spec.rows() {
            for v in spec.cols() {
                if params.inside(u, v) != keep_inside {
                    spec.set(u, v, zero);
                }
            }
        }
        idft2(&spec)
    })
}

/// Keeps bins with `sqrt(u^2 + v^2) <= r` in every channel.
pub fn low_pass_filter<T: Real>(image: &ImageTensor<T>, radius: f64) -> Result<ImageTensor<T>> {
    circular_filter(image, FilterParams::new(radius)?, true)
}

/// Keeps the strict complement of [`low_pass_filter`].
pub fn high_pass_filter<T: Real>(image: &ImageTensor<T>, radius: f64) -> Result<ImageTensor<T>> {
    circular_filter(image, FilterParams::new(radius)?, false)
}
