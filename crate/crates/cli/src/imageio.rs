//! Decoding PNG/PGM/tensor inputs into planar `[0, 1]` images and back.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};
use spectral_curriculum::Image;
use thiserror::Error;

use crate::tensor_file::{TensorData, TensorFile, TensorFileError};

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("decode failed: {0}")]
    Decode(#[from] image::ImageError),
    #[error(transparent)]
    Tensor(#[from] TensorFileError),
    #[error("unsupported layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Core(#[from] spectral_curriculum::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Planar 8-bit pixels, `channels × height × width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct U8Planes {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl U8Planes {
    pub fn to_unit(&self) -> Result<Image, ImageIoError> {
        let data = self.data.iter().map(|&v| v as f64 / 255.0).collect();
        Ok(Image::new(self.channels, self.height, self.width, data)?)
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let dims = vec![self.channels as u64, self.height as u64, self.width as u64];
        TensorFile::new(dims, TensorData::U8(self.data.clone())).expect("planes are consistent")
    }
}

/// Decodes a PNG or PNM file. Colour images become three planes (alpha is
/// dropped), grayscale images one.
pub fn decode_u8(path: &Path) -> Result<U8Planes, ImageIoError> {
    let img = ImageReader::open(path)?.with_guessed_format()?.decode()?;
    Ok(planes_from_dynamic(&img))
}

pub fn planes_from_dynamic(img: &DynamicImage) -> U8Planes {
    let (width, height) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        let mut data = vec![0u8; 3 * height * width];
        for (i, px) in rgb.pixels().enumerate() {
            for c in 0..3 {
                data[c * height * width + i] = px.0[c];
            }
        }
        U8Planes {
            channels: 3,
            height,
            width,
            data,
        }
    } else {
        U8Planes {
            channels: 1,
            height,
            width,
            data: img.to_luma8().into_raw(),
        }
    }
}

/// Clamps to `[0, 1]` and rounds `v * 255` half-up.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn quantize_image(image: &Image) -> U8Planes {
    U8Planes {
        channels: image.channels(),
        height: image.height(),
        width: image.width(),
        data: image.data().iter().map(|&v| quantize(v)).collect(),
    }
}

/// Interprets a tensor file as `[C, H, W]` or `[H, W]`; u8 payloads are scaled by 1/255.
pub fn image_from_tensor(tensor: &TensorFile) -> Result<Image, ImageIoError> {
    let (c, h, w) = match *tensor.dims() {
        [h, w] => (1, h, w),
        [c, h, w] => (c, h, w),
        ref dims => return Err(ImageIoError::Layout(format!("expected 2 or 3 dims, got {dims:?}"))),
    };
    let data = match tensor.data() {
        TensorData::U8(v) => v.iter().map(|&x| x as f64 / 255.0).collect(),
        other => other.to_f64(),
    };
    Ok(Image::new(c as usize, h as usize, w as usize, data)?)
}

pub fn tensor_from_image(image: &Image) -> TensorFile {
    let dims = vec![image.channels() as u64, image.height() as u64, image.width() as u64];
    TensorFile::new(dims, TensorData::F64(image.data().to_vec())).expect("image shape is consistent")
}

fn is_tensor_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("etns"))
}

/// Loads any supported input as a `[0, 1]` image.
pub fn load_image(path: &Path) -> Result<Image, ImageIoError> {
    if is_tensor_path(path) {
        image_from_tensor(&TensorFile::read(path)?)
    } else {
        decode_u8(path)?.to_unit()
    }
}

/// Re-quantizes and writes a one- or three-channel image as PNG.
pub fn save_png(image: &Image, path: &Path) -> Result<(), ImageIoError> {
    let planes = quantize_image(image);
    let (w, h) = (planes.width as u32, planes.height as u32);
    match planes.channels {
        1 => GrayImage::from_raw(w, h, planes.data)
            .expect("buffer matches dimensions")
            .save(path)?,
        3 => {
            let n = planes.height * planes.width;
            let interleaved = (0..n)
                .flat_map(|i| (0..3).map(move |c| (c, i)))
                .map(|(c, i)| planes.data[c * n + i]);
            RgbImage::from_raw(w, h, interleaved.collect())
                .expect("buffer matches dimensions")
                .save(path)?
        }
        c => return Err(ImageIoError::Layout(format!("cannot write {c}-channel image as PNG"))),
    }
    Ok(())
}

/// Writes `image` as f64 tensor or, for `.png` paths, as a re-quantized PNG.
pub fn save_image(image: &Image, path: &Path) -> Result<(), ImageIoError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        save_png(image, path)
    } else {
        Ok(tensor_from_image(image).write(path)?)
    }
}
