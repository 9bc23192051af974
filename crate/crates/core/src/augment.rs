//! Magnitude-parameterized random augmentation with counter-based seeding.
//!
//! Each op maps a magnitude in `[0, 30]` linearly onto its parameter, with
//! `m = 0` always the identity:
//!
//! | op            | parameter at m = 30        |
//! |---------------|----------------------------|
//! | brightness    | gain 1 +/- 0.9             |
//! | contrast      | gain 1 +/- 0.9 about mean  |
//! | rotate        | +/- 30 degrees             |
//! | shear-x/y     | +/- 0.3                    |
//! | translate-x/y | +/- 0.3 of the side length |
//! | posterize     | 8 -> 4 bits                |
//!
//! Signs are drawn at random. Geometric ops resample bilinearly around the
//! image centre with edge clamping. Values are expected in `[0, 1]` and every
//! op clamps its output to that range.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::scalar::Real;

pub const MAX_MAGNITUDE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AugOp {
    Brightness,
    Contrast,
    Rotate,
    ShearX,
    ShearY,
    TranslateX,
    TranslateY,
    Posterize,
}

impl AugOp {
    pub const ALL: [AugOp; 8] = [
        AugOp::Brightness,
        AugOp::Contrast,
        AugOp::Rotate,
        AugOp::ShearX,
        AugOp::ShearY,
        AugOp::TranslateX,
        AugOp::TranslateY,
        AugOp::Posterize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AugOp::Brightness => "brightness",
            AugOp::Contrast => "contrast",
            AugOp::Rotate => "rotate",
            AugOp::ShearX => "shear-x",
            AugOp::ShearY => "shear-y",
            AugOp::TranslateX => "translate-x",
            AugOp::TranslateY => "translate-y",
            AugOp::Posterize => "posterize",
        }
    }
}

impl FromStr for AugOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AugOp::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown augmentation op '{s}'")))
    }
}

impl TryFrom<String> for AugOp {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AugOp> for String {
    fn from(op: AugOp) -> Self {
        op.as_str().to_string()
    }
}

/// RandAug configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugPolicy {
    pub op_set: Vec<AugOp>,
    pub n_ops: usize,
    pub magnitude: f64,
    pub magnitude_std: f64,
    pub seed: u64,
}

impl AugPolicy {
    /// Two ops per image, magnitude 9, noise std 0.5, all eight ops.
    pub fn baseline(seed: u64) -> Self {
        Self {
            op_set: AugOp::ALL.to_vec(),
            n_ops: 2,
            magnitude: 9.0,
            magnitude_std: 0.5,
            seed,
        }
    }

    pub fn with_magnitude(mut self, magnitude: f64) -> Self {
        self.magnitude = magnitude;
        self
    }

    /// Builds a policy from op names, rejecting unknown ones.
    pub fn from_names<S: AsRef<str>>(
        names: &[S],
        n_ops: usize,
        magnitude: f64,
        magnitude_std: f64,
        seed: u64,
    ) -> Result<Self> {
        let op_set = names.iter().map(|n| n.as_ref().parse()).collect::<Result<Vec<_>>>()?;
        let policy = Self {
            op_set,
            n_ops,
            magnitude,
            magnitude_std,
            seed,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.op_set.is_empty() {
            return Err(Error::Config("op_set must not be empty".into()));
        }
        if self.n_ops == 0 {
            return Err(Error::Config("n_ops must be at least 1".into()));
        }
        if !(0.0..=MAX_MAGNITUDE).contains(&self.magnitude) {
            return Err(Error::Config(format!(
                "magnitude {} outside [0, {MAX_MAGNITUDE}]",
                self.magnitude
            )));
        }
        if !self.magnitude_std.is_finite() || self.magnitude_std < 0.0 {
            return Err(Error::Config("magnitude_std must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Linear magnitude ramp `(t / T) * m0`.
pub fn magnitude_at(t: u32, total: u32, m0: f64) -> Result<f64> {
    if total == 0 {
        return Err(Error::Range("total epochs must be at least 1".into()));
    }
    if t > total {
        return Err(Error::Range(format!("epoch {t} exceeds total {total}")));
    }
    Ok(t as f64 / total as f64 * m0)
}

/// One draw: which op, at which magnitude, with which sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpDraw {
    pub op: AugOp,
    pub magnitude: f64,
    pub negate: bool,
}

/// Op draws for image `index`; the stream depends only on `(seed, index)`.
pub fn draw_ops(policy: &AugPolicy, index: u64) -> Result<Vec<OpDraw>> {
    policy.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    rng.set_stream(index);
    let noise = Normal::new(0.0, policy.magnitude_std).map_err(|e| Error::Config(format!("magnitude noise: {e}")))?;
    Ok((0..policy.n_ops)
        .map(|_| {
            let op = policy.op_set[rng.random_range(0..policy.op_set.len())];
            let jitter = noise.sample(&mut rng);
            let negate = rng.random_bool(0.5);
            OpDraw {
                op,
                magnitude: (policy.magnitude + jitter).clamp(0.0, MAX_MAGNITUDE),
                negate,
            }
        })
        .collect())
}

/// Applies `policy.n_ops` randomly drawn ops to image number `index`.
///
/// A policy magnitude of exactly zero returns the input unchanged, noise
/// included.
pub fn randaug<T: Real>(image: &ImageTensor<T>, policy: &AugPolicy, index: u64) -> Result<ImageTensor<T>> {
    let draws = draw_ops(policy, index)?;
    if policy.magnitude == 0.0 {
        return Ok(image.clone());
    }
    let mut out = image.clone();
    for draw in draws {
        out = apply_op(&out, draw.op, draw.magnitude, draw.negate)?;
    }
    Ok(out)
}

/// Applies a single op at `magnitude` in `[0, 30]`.
pub fn apply_op<T: Real>(image: &ImageTensor<T>, op: AugOp, magnitude: f64, negate: bool) -> Result<ImageTensor<T>> {
    if !(0.0..=MAX_MAGNITUDE).contains(&magnitude) {
        return Err(Error::Config(format!("op magnitude {magnitude} outside [0, 30]")));
    }
    if magnitude == 0.0 {
        return Ok(image.clone());
    }
    let level = magnitude / MAX_MAGNITUDE;
    let sign = if negate { -1.0 } else { 1.0 };
    let out = match op {
        AugOp::Brightness => {
            let gain = T::from_f64_lossy(1.0 + sign * 0.9 * level);
            image.map(|v| v * gain).clamp_unit()
        }
        AugOp::Contrast => contrast(image, 1.0 + sign * 0.9 * level),
        AugOp::Rotate => {
            let theta = (sign * 30.0 * level).to_radians();
            let (sin, cos) = theta.sin_cos();
            // inverse rotation maps output coordinates to source coordinates
            warp(image, [cos, sin, -sin, cos], [0.0, 0.0])
        }
        AugOp::ShearX => warp(image, [1.0, sign * 0.3 * level, 0.0, 1.0], [0.0, 0.0]),
        AugOp::ShearY => warp(image, [1.0, 0.0, sign * 0.3 * level, 1.0], [0.0, 0.0]),
        AugOp::TranslateX => {
            let shift = sign * 0.3 * level * image.width() as f64;
            warp(image, [1.0, 0.0, 0.0, 1.0], [shift, 0.0])
        }
        AugOp::TranslateY => {
            let shift = sign * 0.3 * level * image.height() as f64;
            warp(image, [1.0, 0.0, 0.0, 1.0], [0.0, shift])
        }
        AugOp::Posterize => {
            let bits = 8 - (4.0 * level).floor() as u32;
            if bits >= 8 {
                image.clone()
            } else {
                posterize(image, bits)
            }
        }
    };
    Ok(out)
}

fn contrast<T: Real>(image: &ImageTensor<T>, gain: f64) -> ImageTensor<T> {
    let n = T::from_usize(image.data().len()).unwrap();
    let mean = image.data().iter().fold(T::zero(), |a, &v| a + v) / n;
    let gain = T::from_f64_lossy(gain);
    image.map(|v| mean + (v - mean) * gain).clamp_unit()
}

fn posterize<T: Real>(image: &ImageTensor<T>, bits: u32) -> ImageTensor<T> {
    let mask = !((1u32 << (8 - bits)) - 1) & 0xff;
    let scale = T::from_f64_lossy(255.0);
    image.map(|v| {
        let q = (v.max(T::zero()).min(T::one()) * scale).round().to_u32().unwrap_or(0);
        T::from_u32(q & mask).unwrap() / scale
    })
}

/// Resamples every channel at `source = A (p - centre) + centre + offset`,
/// with `p = (x, y)` the output column/row and `A` given row-major.
fn warp<T: Real>(image: &ImageTensor<T>, matrix: [f64; 4], offset: [f64; 2]) -> ImageTensor<T> {
    let (h, w) = (image.height(), image.width());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut data = Vec::with_capacity(image.data().len());
    for c in 0..image.channels() {
        for row in 0..h {
            for col in 0..w {
                let (dx, dy) = (col as f64 - cx, row as f64 - cy);
                let sx = matrix[0] * dx + matrix[1] * dy + cx + offset[0];
                let sy = matrix[2] * dx + matrix[3] * dy + cy + offset[1];
                data.push(bilinear(image, c, sy, sx));
            }
        }
    }
    ImageTensor::from_parts_unchecked(image.channels(), h, w, data).clamp_unit()
}

fn bilinear<T: Real>(image: &ImageTensor<T>, channel: usize, y: f64, x: f64) -> T {
    let (h, w) = (image.height(), image.width());
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = (T::from_f64_lossy(y - y0 as f64), T::from_f64_lossy(x - x0 as f64));
    let one = T::one();
    let top = image.get(channel, y0, x0) * (one - fx) + image.get(channel, y0, x1) * fx;
    let bottom = image.get(channel, y1, x0) * (one - fx) + image.get(channel, y1, x1) * fx;
    top * (one - fy) + bottom * fy
}
