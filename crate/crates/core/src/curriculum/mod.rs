//! Curriculum schedules: which input transformation and augmentation
//! magnitude apply at each training epoch.

mod cost;

pub use cost::{relative_cost, relative_cost_of_stages, CostEstimate};

use serde::{Deserialize, Serialize};

use crate::augment::magnitude_at;
use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::resample::{self, KernelName, KernelSpec};
use crate::scalar::Real;
use crate::spectral;

pub const DEFAULT_BASE_RESOLUTION: u32 = 224;
pub const DEFAULT_M0: f64 = 9.0;

/// One input transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TransformSpec {
    Identity,
    Crop {
        #[serde(rename = "B")]
        bandwidth: u32,
    },
    #[serde(rename = "lowpass")]
    LowPass {
        r: f64,
    },
    #[serde(rename = "highpass")]
    HighPass {
        r: f64,
    },
    Downsample {
        k: u32,
        kernel: KernelName,
    },
}

impl TransformSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TransformSpec::Identity => Ok(()),
            TransformSpec::Crop { bandwidth } if bandwidth == 0 || bandwidth % 2 != 0 => Err(Error::Schedule(format!(
                "crop bandwidth must be even and positive, got {bandwidth}"
            ))),
            TransformSpec::LowPass { r } | TransformSpec::HighPass { r } if !(r.is_finite() && r >= 0.0) => {
                Err(Error::Schedule(format!("filter radius must be non-negative, got {r}")))
            }
            TransformSpec::Downsample { k, kernel } => {
                if k == 0 {
                    return Err(Error::Schedule("down-sampling ratio must be at least 1".into()));
                }
                if kernel == KernelName::Custom {
                    return Err(Error::Schedule("schedules only support built-in kernels".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// True when the transform leaves base-resolution inputs untouched.
    pub fn is_identity_at(&self, base_resolution: u32) -> bool {
        match *self {
            TransformSpec::Identity => true,
            TransformSpec::Crop { bandwidth } => bandwidth == base_resolution,
            TransformSpec::Downsample { k, .. } => k == 1,
            _ => false,
        }
    }

    /// Applies the transform to a base-resolution image.
    ///
    /// `Crop(B)` with `B >= base_resolution` keeps the original data.
    pub fn apply<T: Real>(&self, image: &ImageTensor<T>, base_resolution: u32) -> Result<ImageTensor<T>> {
        self.validate()?;
        match *self {
            TransformSpec::Identity => Ok(image.clone()),
            TransformSpec::Crop { bandwidth } => {
                let b = bandwidth as usize;
                if bandwidth >= base_resolution || (b == image.height() && b == image.width()) {
                    Ok(image.clone())
                } else {
                    spectral::low_frequency_crop(image, b)
                }
            }
            TransformSpec::LowPass { r } => spectral::low_pass_filter(image, r),
            TransformSpec::HighPass { r } => spectral::high_pass_filter(image, r),
            TransformSpec::Downsample { k, kernel } => {
                resample::downsample(image, &KernelSpec::new(kernel, k as usize)?)
            }
        }
    }
}

/// A contiguous range of epochs, 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub start: u32,
    pub end: u32,
    pub transform: TransformSpec,
}

impl Stage {
    pub fn new(start: u32, end: u32, transform: TransformSpec) -> Self {
        Self { start, end, transform }
    }

    pub fn len(&self) -> u32 {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// Augmentation magnitude as a function of the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MagnitudeRepr", into = "MagnitudeRepr")]
pub enum MagnitudeRule {
    /// `(t / T) * m0`.
    Linear { m0: f64 },
    /// A fixed magnitude; `m0` is kept for reference.
    Constant { m0: f64, value: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MagnitudeRepr {
    m0: f64,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

impl TryFrom<MagnitudeRepr> for MagnitudeRule {
    type Error = Error;

    fn try_from(repr: MagnitudeRepr) -> Result<Self> {
        match (repr.kind.as_str(), repr.value) {
            ("linear", None) => Ok(MagnitudeRule::Linear { m0: repr.m0 }),
            ("constant", Some(value)) => Ok(MagnitudeRule::Constant { m0: repr.m0, value }),
            (kind, _) => Err(Error::Schedule(format!("invalid magnitude rule kind '{kind}'"))),
        }
    }
}

impl From<MagnitudeRule> for MagnitudeRepr {
    fn from(rule: MagnitudeRule) -> Self {
        match rule {
            MagnitudeRule::Linear { m0 } => MagnitudeRepr {
                m0,
                kind: "linear".into(),
                value: None,
            },
            MagnitudeRule::Constant { m0, value } => MagnitudeRepr {
                m0,
                kind: "constant".into(),
                value: Some(value),
            },
        }
    }
}

impl MagnitudeRule {
    pub fn at(&self, t: u32, total: u32) -> Result<f64> {
        match *self {
            MagnitudeRule::Linear { m0 } => magnitude_at(t, total, m0),
            MagnitudeRule::Constant { value, .. } => Ok(value),
        }
    }
}

/// A validated curriculum over `total_epochs` epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr")]
pub struct Schedule {
    total_epochs: u32,
    base_resolution: u32,
    stages: Vec<Stage>,
    magnitude: MagnitudeRule,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleRepr {
    total_epochs: u32,
    #[serde(default = "default_base")]
    base_resolution: u32,
    stages: Vec<Stage>,
    magnitude: MagnitudeRule,
}

fn default_base() -> u32 {
    DEFAULT_BASE_RESOLUTION
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = Error;

    fn try_from(r: ScheduleRepr) -> Result<Self> {
        Schedule::new(r.total_epochs, r.base_resolution, r.stages, r.magnitude)
    }
}

impl Schedule {
    /// Checks coverage of `[1, T]`, contiguity, and that the last stage is
    /// the identity at base resolution.
    pub fn new(total_epochs: u32, base_resolution: u32, stages: Vec<Stage>, magnitude: MagnitudeRule) -> Result<Self> {
        if total_epochs == 0 {
            return Err(Error::Schedule("total_epochs must be at least 1".into()));
        }
        if base_resolution == 0 {
            return Err(Error::Schedule("base_resolution must be positive".into()));
        }
        if stages.is_empty() {
            return Err(Error::Schedule("schedule has no stages".into()));
        }
        let mut expected = 1;
        for stage in &stages {
            stage.transform.validate()?;
            if stage.start != expected {
                return Err(Error::Schedule(format!(
                    "stage starting at epoch {} leaves a gap or overlap (expected {expected})",
                    stage.start
                )));
            }
            if stage.end < stage.start {
                return Err(Error::Schedule(format!(
                    "stage {}-{} ends before it starts",
                    stage.start, stage.end
                )));
            }
            expected = stage.end + 1;
        }
        if expected != total_epochs + 1 {
            return Err(Error::Schedule(format!(
                "stages cover epochs 1-{} but total_epochs is {total_epochs}",
                expected - 1
            )));
        }
        let last = &stages[stages.len() - 1].transform;
        if !last.is_identity_at(base_resolution) {
            return Err(Error::Schedule(format!(
                "final stage must be the identity at base resolution {base_resolution}, got {last:?}"
            )));
        }
        let (MagnitudeRule::Linear { m0 } | MagnitudeRule::Constant { m0, .. }) = magnitude;
        if !m0.is_finite() || m0 < 0.0 {
            return Err(Error::Schedule(format!("m0 must be non-negative, got {m0}")));
        }
        Ok(Self {
            total_epochs,
            base_resolution,
            stages,
            magnitude,
        })
    }

    /// Equal-length crop stages with the given bandwidths, linear magnitude.
    pub fn from_stage_bandwidths(total_epochs: u32, bandwidths: &[u32], base_resolution: u32, m0: f64) -> Result<Self> {
        let n = bandwidths.len() as u32;
        if n == 0 || !total_epochs.is_multiple_of(n) {
            return Err(Error::Schedule(format!(
                "{total_epochs} epochs cannot be split into {n} equal stages"
            )));
        }
        let len = total_epochs / n;
        let stages = bandwidths
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let i = i as u32;
                Stage::new(i * len + 1, (i + 1) * len, TransformSpec::Crop { bandwidth: b })
            })
            .collect();
        Self::new(total_epochs, base_resolution, stages, MagnitudeRule::Linear { m0 })
    }

    pub fn total_epochs(&self) -> u32 {
        self.total_epochs
    }

    pub fn base_resolution(&self) -> u32 {
        self.base_resolution
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn magnitude_rule(&self) -> MagnitudeRule {
        self.magnitude
    }

    /// Transform and augmentation magnitude in effect at epoch `t` (1-based).
    pub fn lookup(&self, t: u32) -> Result<(TransformSpec, f64)> {
        if t == 0 || t > self.total_epochs {
            return Err(Error::Range(format!("epoch {t} outside 1..={}", self.total_epochs)));
        }
        let stage = self
            .stages
            .iter()
            .find(|s| s.start <= t && t <= s.end)
            .expect("validated stages cover every epoch");
        Ok((stage.transform.clone(), self.magnitude.at(t, self.total_epochs)?))
    }

    /// Crop bandwidth of every stage, with the identity counted as base resolution.
    pub fn stage_bandwidths(&self) -> Result<Vec<u32>> {
        self.stages
            .iter()
            .map(|s| match s.transform {
                TransformSpec::Crop { bandwidth } => Ok(bandwidth),
                TransformSpec::Identity => Ok(self.base_resolution),
                ref other => Err(Error::Schedule(format!("stage transform {other:?} has no bandwidth"))),
            })
            .collect()
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `round(numer * total / denom)` with halves rounded up, in integers.
fn scaled_boundary(total: u32, numer: u32, denom: u32) -> u32 {
    let total = total as u64;
    ((2 * numer as u64 * total + denom as u64) / (2 * denom as u64)) as u32
}

/// The three-stage low-frequency cropping curriculum, scaled to `total_epochs`.
///
/// Bandwidth 160 until `round(0.6 T)`, 192 until `round(0.8 T)`, then 224;
/// magnitude grows linearly from 0 to 9. Stages that round to zero length are
/// dropped, the final full-resolution stage always keeps at least one epoch.
pub fn efficienttrain_schedule(total_epochs: u32) -> Result<Schedule> {
    if total_epochs == 0 {
        return Err(Error::Range("total epochs must be at least 1".into()));
    }
    let last_shrunk = total_epochs - 1;
    let b1 = scaled_boundary(total_epochs, 6, 10).min(last_shrunk);
    let b2 = scaled_boundary(total_epochs, 8, 10).min(last_shrunk).max(b1);
    let plan = [
        (1, b1, 160),
        (b1 + 1, b2, 192),
        (b2 + 1, total_epochs, DEFAULT_BASE_RESOLUTION),
    ];
    let stages = plan
        .into_iter()
        .map(|(start, end, b)| Stage::new(start, end, TransformSpec::Crop { bandwidth: b }))
        .filter(|s| !s.is_empty())
        .collect();
    Schedule::new(
        total_epochs,
        DEFAULT_BASE_RESOLUTION,
        stages,
        MagnitudeRule::Linear { m0: DEFAULT_M0 },
    )
}
