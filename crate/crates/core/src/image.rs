//! Channel-major pixel container.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A `channels x height x width` real image stored row-major per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor<T> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> ImageTensor<T> {
    /// Builds a tensor, checking the shape and that every value is finite.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "image dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::Dimension(format!(
                "data length {} does not match {channels}x{height}x{width}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at index {pos}")));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::filled(channels, height, width, T::zero())
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: T) -> Result<Self> {
        Self::new(channels, height, width, vec![value; channels * height * width])
    }

    /// Single-channel image from a closure over `(row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(1, height, width, data)
    }

    /// Stacks equally sized single-channel planes into one tensor.
    pub fn from_planes(planes: Vec<ImageTensor<T>>) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Dimension("no channels supplied".into()))?;
        let (height, width) = (first.height, first.width);
        let mut data = Vec::with_capacity(planes.len() * height * width);
        for plane in &planes {
            if plane.channels != 1 || plane.height != height || plane.width != width {
                return Err(Error::Dimension(
                    "channel planes must be single-channel and equally sized".into(),
                ));
            }
            data.extend_from_slice(&plane.data);
        }
        Ok(Self {
            channels: planes.len(),
            height,
            width,
            data,
        })
    }

    pub(crate) fn from_parts_unchecked(channels: usize, height: usize, width: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), channels * height * width);
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> T {
        self.data[(channel * self.height + row) * self.width + col]
    }

    pub fn plane(&self, channel: usize) -> &[T] {
        let len = self.height * self.width;
        &self.data[channel * len..(channel + 1) * len]
    }

    /// Copies one channel out as a single-channel image.
    pub fn channel(&self, channel: usize) -> ImageTensor<T> {
        Self::from_parts_unchecked(1, self.height, self.width, self.plane(channel).to_vec())
    }

    /// Applies `f` to every channel plane and stacks the results.
    pub fn map_channels(&self, mut f: impl FnMut(&ImageTensor<T>) -> Result<ImageTensor<T>>) -> Result<ImageTensor<T>> {
        let planes = (0..self.channels)
            .map(|c| f(&self.channel(c)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_planes(planes)
    }

    pub fn mean(&self, channel: usize) -> T {
        let plane = self.plane(channel);
        let sum = plane.iter().fold(T::zero(), |acc, &v| acc + v);
        sum / T::from_usize(plane.len()).unwrap()
    }

    /// Sum of squared values over all channels.
    pub fn energy(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    pub fn max_abs_diff(&self, other: &ImageTensor<T>) -> T {
        assert_eq!(self.data.len(), other.data.len(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &ImageTensor<T>) -> Result<ImageTensor<T>> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(Self::from_parts_unchecked(self.channels, self.height, self.width, data))
    }

    /// Returns `a * self + b * other`.
    pub fn linear_combination(&self, a: T, other: &ImageTensor<T>, b: T) -> Result<ImageTensor<T>> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(Self::from_parts_unchecked(self.channels, self.height, self.width, data))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> ImageTensor<T> {
        Self::from_parts_unchecked(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn clamp_unit(&self) -> ImageTensor<T> {
        self.map(|v| v.max(T::zero()).min(T::one()))
    }

    fn check_same_shape(&self, other: &ImageTensor<T>) -> Result<()> {
        if (self.channels, self.height, self.width) != (other.channels, other.height, other.width) {
            return Err(Error::Dimension(format!(
                "shape mismatch: {}x{}x{} vs {}x{}x{}",
                self.channels, self.height, self.width, other.channels, other.height, other.width
            )));
        }
        Ok(())
    }
}
