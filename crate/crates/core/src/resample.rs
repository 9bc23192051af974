//! Kernel-model down-sampling and its spectral dependency analysis.
//!
//! An integer-ratio down-sampler aggregates each aligned `k x k` block with a
//! fixed kernel `w`, normalized so that `sum w = 1`. Under the centered DFT
//! conventions of [`crate::spectral`], output bin `(u, v)` of the reduced
//! image is a linear combination of input bins:
//!
//! ```text
//! F_d(u, v) = sum alpha(u, v, u', v') F(u', v')
//! alpha     = beta(u', v') / k^2   if u' - u = 0 mod H/k and v' - v = 0 mod W/k
//!           = 0                    otherwise
//! beta      = sum_{s,t} w[s][t] exp(2 pi j (u' s / H + v' t / W))
//! ```
//!
//! Every output bin therefore depends on `k^2` aliased input bins, most of
//! which lie outside the low-frequency window. Cropping the spectrum, by
//! contrast, depends only on the matching in-band bin. [`leakage_report`]
//! measures both and cross-checks the closed form against single-frequency
//! probe images.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::scalar::Real;
use crate::spectral::{self, signed_range, CropParams, Spectrum};

/// Probe and closed-form coefficients must agree to this absolute tolerance.
pub const PROBE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Nearest,
    Mean,
    Bilinear,
    Bicubic,
    Custom,
}

impl KernelName {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelName::Nearest => "nearest",
            KernelName::Mean => "mean",
            KernelName::Bilinear => "bilinear",
            KernelName::Bicubic => "bicubic",
            KernelName::Custom => "custom",
        }
    }
}

impl std::str::FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(KernelName::Nearest),
            "mean" => Ok(KernelName::Mean),
            "bilinear" => Ok(KernelName::Bilinear),
            "bicubic" => Ok(KernelName::Bicubic),
            "custom" => Ok(KernelName::Custom),
            other => Err(Error::Config(format!("unknown kernel '{other}'"))),
        }
    }
}

/// A `k x k` aggregation kernel with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct KernelSpec {
    name: KernelName,
    k: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelRepr {
    name: KernelName,
    k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Vec<f64>>>,
}

impl TryFrom<KernelRepr> for KernelSpec {
    type Error = Error;

    fn try_from(repr: KernelRepr) -> Result<Self> {
        match (repr.name, repr.weights) {
            (KernelName::Custom, Some(rows)) => {
                if rows.len() != repr.k || rows.iter().any(|r| r.len() != repr.k) {
                    return Err(Error::Config(format!("custom kernel weights must be {0}x{0}", repr.k)));
                }
                KernelSpec::custom(repr.k, rows.concat())
            }
            (KernelName::Custom, None) => Err(Error::Config("custom kernel needs weights".into())),
            (name, None) => KernelSpec::new(name, repr.k),
            (name, Some(rows)) => {
                let built = KernelSpec::new(name, repr.k)?;
                let flat = rows.concat();
                if flat.len() != built.weights.len()
                    || flat.iter().zip(&built.weights).any(|(a, b)| (a - b).abs() > 1e-12)
                {
                    return Err(Error::Config(format!(
                        "weights do not match the built-in '{}' kernel",
                        name.as_str()
                    )));
                }
                Ok(built)
            }
        }
    }
}

impl From<KernelSpec> for KernelRepr {
    fn from(spec: KernelSpec) -> Self {
        KernelRepr {
            name: spec.name,
            k: spec.k,
            weights: Some(spec.weights.chunks(spec.k).map(<[f64]>::to_vec).collect()),
        }
    }
}

/// Catmull-Rom cubic (a = -0.5).
fn catmull_rom(x: f64) -> f64 {
    let a = -0.5;
    let x = x.abs();
    if x < 1.0 {
        (a + 2.0) * x.powi(3) - (a + 3.0) * x.powi(2) + 1.0
    } else if x < 2.0 {
        a * x.powi(3) - 5.0 * a * x.powi(2) + 8.0 * a * x - 4.0 * a
    } else {
        0.0
    }
}

/// Separable 1D taps over the `k` positions of a block, centred on the block
/// centre and stretched by `k`, then renormalized.
fn separable_taps(k: usize, profile: impl Fn(f64) -> f64) -> Vec<f64> {
    let centre = (k as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..k).map(|s| profile((s as f64 - centre) / k as f64)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

impl KernelSpec {
    /// Built-in kernel for ratio `k`.
    ///
    /// Bilinear and bicubic are the usual anti-aliasing profiles (tent and
    /// Catmull-Rom, stretched by `k`) truncated to the `k x k` block. For
    /// `k = 2` both truncations coincide with the mean kernel.
    pub fn new(name: KernelName, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("kernel ratio k must be at least 1".into()));
        }
        let weights = match name {
            KernelName::Nearest => {
                let mut w = vec![0.0; k * k];
                w[0] = 1.0;
                w
            }
            KernelName::Mean => vec![1.0 / (k * k) as f64; k * k],
            KernelName::Bilinear => outer(&separable_taps(k, |x| (1.0 - x.abs()).max(0.0))),
            KernelName::Bicubic => outer(&separable_taps(k, catmull_rom)),
            KernelName::Custom => return Err(Error::Config("use KernelSpec::custom for user weights".into())),
        };
        Ok(Self { name, k, weights })
    }

    /// User-supplied row-major `k x k` weights.
    pub fn custom(k: usize, weights: Vec<f64>) -> Result<Self> {
        if k == 0 || weights.len() != k * k {
            return Err(Error::Config(format!("custom kernel needs {} weights", k * k)));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("kernel weights must be finite".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("kernel weights must sum to 1, got {sum}")));
        }
        Ok(Self {
            name: KernelName::Custom,
            k,
            weights,
        })
    }

    pub fn name(&self) -> KernelName {
        self.name
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, s: usize, t: usize) -> f64 {
        self.weights[s * self.k + t]
    }

    /// Kernel frequency response `beta(u', v')` on an `height x width` grid.
    pub fn response(&self, u: i64, v: i64, height: usize, width: usize) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for s in 0..self.k {
            for t in 0..self.k {
                let w = self.weight(s, t);
                if w != 0.0 {
                    let phase =
                        2.0 * PI * ((u * s as i64) as f64 / height as f64 + (v * t as i64) as f64 / width as f64);
                    acc += Complex::from_polar(w, phase);
                }
            }
        }
        acc
    }
}

fn outer(taps: &[f64]) -> Vec<f64> {
    taps.iter().flat_map(|&a| taps.iter().map(move |&b| a * b)).collect()
}

fn check_divisible(height: usize, width: usize, k: usize) -> Result<()> {
    if k == 0 || !height.is_multiple_of(k) || !width.is_multiple_of(k) {
        return Err(Error::Dimension(format!(
            "ratio {k} does not divide image size {height}x{width}"
        )));
    }
    Ok(())
}

/// Checks that an `H x W -> H/k x W/k` pair of spectra is well formed.
fn check_spectral_ratio(height: usize, width: usize, k: usize) -> Result<(usize, usize)> {
    check_divisible(height, width, k)?;
    let (oh, ow) = (height / k, width / k);
    if !height.is_multiple_of(2) || !width.is_multiple_of(2) || oh % 2 != 0 || ow % 2 != 0 {
        return Err(Error::Dimension(format!(
            "spectral analysis needs even input and output sizes, got {height}x{width} -> {oh}x{ow}"
        )));
    }
    Ok((oh, ow))
}

/// `D[x', y'] = sum_{s,t} w[s][t] X[k x' + s, k y' + t]`, per channel.
pub fn downsample<T: Real>(image: &ImageTensor<T>, kernel: &KernelSpec) -> Result<ImageTensor<T>> {
    let k = kernel.k;
    check_divisible(image.height(), image.width(), k)?;
    let (oh, ow) = (image.height() / k, image.width() / k);
    let weights: Vec<T> = kernel.weights.iter().map(|&w| T::from_f64_lossy(w)).collect();
    let mut data = Vec::with_capacity(image.channels() * oh * ow);
    for c in 0..image.channels() {
        for r in 0..oh {
            for q in 0..ow {
                let mut acc = T::zero();
                for s in 0..k {
                    for t in 0..k {
                        acc = acc + weights[s * k + t] * image.get(c, k * r + s, k * q + t);
                    }
                }
                data.push(acc);
            }
        }
    }
    ImageTensor::new(image.channels(), oh, ow, data)
}

/// Nearest-neighbour up-sampling by an integer factor.
pub fn upsample_nearest<T: Real>(image: &ImageTensor<T>, factor: usize) -> Result<ImageTensor<T>> {
    if factor == 0 {
        return Err(Error::Config("up-sampling factor must be at least 1".into()));
    }
    let (oh, ow) = (image.height() * factor, image.width() * factor);
    let mut data = Vec::with_capacity(image.channels() * oh * ow);
    for c in 0..image.channels() {
        for r in 0..oh {
            for q in 0..ow {
                data.push(image.get(c, r / factor, q / factor));
            }
        }
    }
    ImageTensor::new(image.channels(), oh, ow, data)
}

/// Rational-ratio resize `up / k`: nearest up-sampling then kernel down-sampling.
pub fn resample_rational<T: Real>(image: &ImageTensor<T>, up: usize, kernel: &KernelSpec) -> Result<ImageTensor<T>> {
    downsample(&upsample_nearest(image, up)?, kernel)
}

/// Input bins that fold onto output bin `(u, v)` under `k`-fold down-sampling.
pub fn alias_set(u: i64, v: i64, height: usize, width: usize, k: usize) -> Result<BTreeSet<(i64, i64)>> {
    let (oh, ow) = check_spectral_ratio(height, width, k)?;
    if !signed_range(oh).contains(&u) || !signed_range(ow).contains(&v) {
        return Err(Error::Dimension(format!(
            "bin ({u}, {v}) is outside the {oh}x{ow} output spectrum"
        )));
    }
    let rows = aliases_1d(u, height, oh);
    let cols = aliases_1d(v, width, ow);
    Ok(rows.iter().flat_map(|&a| cols.iter().map(move |&b| (a, b))).collect())
}

fn aliases_1d(index: i64, full: usize, stride: usize) -> Vec<i64> {
    signed_range(full)
        .filter(|&p| (p - index).rem_euclid(stride as i64) == 0)
        .collect()
}

fn is_alias(u: i64, v: i64, up: i64, vp: i64, oh: usize, ow: usize) -> bool {
    (up - u).rem_euclid(oh as i64) == 0 && (vp - v).rem_euclid(ow as i64) == 0
}

/// Closed-form dependency of output bin `(u, v)` on input bin `(u', v')`.
pub fn alpha(
    u: i64,
    v: i64,
    u_in: i64,
    v_in: i64,
    kernel: &KernelSpec,
    height: usize,
    width: usize,
) -> Result<Complex<f64>> {
    let k = kernel.k;
    let (oh, ow) = check_spectral_ratio(height, width, k)?;
    let out_ok = signed_range(oh).contains(&u) && signed_range(ow).contains(&v);
    let in_ok = signed_range(height).contains(&u_in) && signed_range(width).contains(&v_in);
    if !out_ok || !in_ok {
        return Err(Error::Dimension(format!(
            "bins ({u}, {v}) / ({u_in}, {v_in}) out of range for {height}x{width}, k = {k}"
        )));
    }
    if !is_alias(u, v, u_in, v_in, oh, ow) {
        return Ok(Complex::new(0.0, 0.0));
    }
    Ok(kernel.response(u_in, v_in, height, width) / (k * k) as f64)
}

/// Dense dependency matrix `coeff[out_bin][in_bin]` of a linear image operator.
#[derive(Debug, Clone)]
pub struct DependencyMatrix {
    pub in_height: usize,
    pub in_width: usize,
    pub out_height: usize,
    pub out_width: usize,
    values: Vec<Complex<f64>>,
}

impl DependencyMatrix {
    fn in_offset(&self, u: i64, v: i64) -> usize {
        let r = (u + (self.in_height / 2) as i64) as usize;
        let c = (v + (self.in_width / 2) as i64) as usize;
        r * self.in_width + c
    }

    fn out_offset(&self, u: i64, v: i64) -> usize {
        let r = (u + (self.out_height / 2) as i64) as usize;
        let c = (v + (self.out_width / 2) as i64) as usize;
        r * self.out_width + c
    }

    pub fn get(&self, u: i64, v: i64, u_in: i64, v_in: i64) -> Complex<f64> {
        let n_in = self.in_height * self.in_width;
        self.values[self.out_offset(u, v) * n_in + self.in_offset(u_in, v_in)]
    }

    fn set(&mut self, u: i64, v: i64, u_in: i64, v_in: i64, value: Complex<f64>) {
        let n_in = self.in_height * self.in_width;
        let idx = self.out_offset(u, v) * n_in + self.in_offset(u_in, v_in);
        self.values[idx] = value;
    }
}

/// Measures the dependency matrix of `op` by feeding it one complex
/// exponential per input bin.
///
/// The probe for `(u', v')` has a spectrum equal to `H W` at that bin and zero
/// elsewhere; its real and imaginary parts are pushed through `op` separately
/// (the operator is real-linear) and recombined.
pub fn probe_dependencies(
    height: usize,
    width: usize,
    op: impl Fn(&ImageTensor<f64>) -> Result<ImageTensor<f64>>,
) -> Result<DependencyMatrix> {
    let mut matrix: Option<DependencyMatrix> = None;
    let norm = (height * width) as f64;
    for u_in in signed_range(height) {
        for v_in in signed_range(width) {
            let phase = |r: usize, c: usize| {
                let x = r as f64 - (height / 2) as f64;
                let y = c as f64 - (width / 2) as f64;
                2.0 * PI * (u_in as f64 * x / height as f64 + v_in as f64 * y / width as f64)
            };
            let re = ImageTensor::from_fn(height, width, |r, c| phase(r, c).cos())?;
            let im = ImageTensor::from_fn(height, width, |r, c| phase(r, c).sin())?;
            let (out_re, out_im) = (op(&re)?, op(&im)?);
            let (oh, ow) = (out_re.height(), out_re.width());
            let field: Vec<Complex<f64>> = out_re
                .data()
                .iter()
                .zip(out_im.data())
                .map(|(&a, &b)| Complex::new(a, b))
                .collect();
            let spec = spectral::dft2_complex(oh, ow, &field)?;
            let m = matrix.get_or_insert_with(|| DependencyMatrix {
                in_height: height,
                in_width: width,
                out_height: oh,
                out_width: ow,
                values: vec![Complex::new(0.0, 0.0); oh * ow * height * width],
            });
            for u in spec.rows() {
                for v in spec.cols() {
                    m.set(u, v, u_in, v_in, spec.at(u, v) / norm);
                }
            }
        }
    }
    matrix.ok_or_else(|| Error::Dimension("empty probe grid".into()))
}

/// Dependency matrix of spectrum cropping, measured by pushing unit spectra
/// through [`spectral::crop_spectrum`].
pub fn crop_dependencies(height: usize, width: usize, out_height: usize, out_width: usize) -> Result<DependencyMatrix> {
    let params = CropParams::new(out_height, out_width)?;
    let mut m = DependencyMatrix {
        in_height: height,
        in_width: width,
        out_height,
        out_width,
        values: vec![Complex::new(0.0, 0.0); out_height * out_width * height * width],
    };
    for u_in in signed_range(height) {
        for v_in in signed_range(width) {
            let mut unit = Spectrum::<f64>::zeros(height, width)?;
            unit.set(u_in, v_in, Complex::new(1.0, 0.0));
            let out = spectral::crop_spectrum(&unit, params)?;
            for u in out.rows() {
                for v in out.cols() {
                    m.set(u, v, u_in, v_in, out.at(u, v));
                }
            }
        }
    }
    Ok(m)
}

/// Dependency energy of one output bin, split by where the input bin lies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinLeakage {
    pub u: i64,
    pub v: i64,
    pub in_band_energy: f64,
    pub out_band_energy: f64,
}

/// Band split summary for a reference operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSplit {
    pub in_band_fraction: f64,
    pub out_band_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub height: usize,
    pub width: usize,
    /// Up-sampling factor applied before the kernel; 1 for integer ratios.
    pub up: usize,
    pub k: usize,
    pub kernel: KernelSpec,
    pub normalization: String,
    pub notes: Vec<String>,
    /// True when closed-form coefficients were checked against probes.
    pub analytic_cross_checked: bool,
    pub per_output_bin: Vec<BinLeakage>,
    pub total_in_band_fraction: f64,
    pub total_out_band_fraction: f64,
    /// Cropping the spectrum to the same output size.
    pub crop_reference: BandSplit,
}

const NORMALIZATION_NOTE: &str =
    "kernel weights sum to 1 (mean preserving); alpha = beta / k^2 under an unnormalized forward DFT";

/// Splits the dependency energy of every output bin into the part coming from
/// the centred `out_h x out_w` input window and the rest.
fn band_split(m: &DependencyMatrix) -> (Vec<BinLeakage>, f64, f64) {
    let in_band_u = signed_range(m.out_height);
    let in_band_v = signed_range(m.out_width);
    let mut bins = Vec::with_capacity(m.out_height * m.out_width);
    let (mut total_in, mut total_out) = (0.0, 0.0);
    for u in signed_range(m.out_height) {
        for v in signed_range(m.out_width) {
            let (mut e_in, mut e_out) = (0.0, 0.0);
            for u_in in signed_range(m.in_height) {
                for v_in in signed_range(m.in_width) {
                    let e = m.get(u, v, u_in, v_in).norm_sqr();
                    if in_band_u.contains(&u_in) && in_band_v.contains(&v_in) {
                        e_in += e;
                    } else {
                        e_out += e;
                    }
                }
            }
            total_in += e_in;
            total_out += e_out;
            bins.push(BinLeakage {
                u,
                v,
                in_band_energy: e_in,
                out_band_energy: e_out,
            });
        }
    }
    (bins, total_in, total_out)
}

fn fractions(e_in: f64, e_out: f64) -> (f64, f64) {
    let total = e_in + e_out;
    if total > 0.0 {
        (e_in / total, e_out / total)
    } else {
        (0.0, 0.0)
    }
}

fn crop_reference(height: usize, width: usize, oh: usize, ow: usize) -> Result<BandSplit> {
    let (_, e_in, e_out) = band_split(&crop_dependencies(height, width, oh, ow)?);
    let (in_band_fraction, out_band_fraction) = fractions(e_in, e_out);
    Ok(BandSplit {
        in_band_fraction,
        out_band_fraction,
    })
}

fn kernel_notes(kernel: &KernelSpec) -> Vec<String> {
    let mut notes = Vec::new();
    if kernel.name == KernelName::Bicubic && kernel.k > 1 {
        notes.push("bicubic approximated by Catmull-Rom truncated to the k x k block and renormalized".into());
    }
    if kernel.name == KernelName::Bilinear && kernel.k > 1 {
        notes.push("bilinear approximated by a tent truncated to the k x k block and renormalized".into());
    }
    notes
}

/// Leakage of an integer-ratio kernel down-sampler on `height x width` images.
///
/// Every closed-form coefficient (zeros included) is compared with the
/// probe-measured one before the report is built.
pub fn leakage_report(kernel: &KernelSpec, height: usize, width: usize) -> Result<LeakageReport> {
    let k = kernel.k;
    let (oh, ow) = check_spectral_ratio(height, width, k)?;
    let probed = probe_dependencies(height, width, |img| downsample(img, kernel))?;

    let mut worst = 0.0f64;
    for u in signed_range(oh) {
        for v in signed_range(ow) {
            for u_in in signed_range(height) {
                for v_in in signed_range(width) {
                    let analytic = alpha(u, v, u_in, v_in, kernel, height, width)?;
                    let err = (analytic - probed.get(u, v, u_in, v_in)).norm();
                    if err > PROBE_TOLERANCE {
                        return Err(Error::InternalConsistency(format!(
                            "alpha({u}, {v}, {u_in}, {v_in}) analytic {analytic} vs probe {} (|diff| = {err:e})",
                            probed.get(u, v, u_in, v_in)
                        )));
                    }
                    worst = worst.max(err);
                }
            }
        }
    }

    let (per_output_bin, e_in, e_out) = band_split(&probed);
    let (total_in_band_fraction, total_out_band_fraction) = fractions(e_in, e_out);
    let mut notes = kernel_notes(kernel);
    notes.push(format!("max |analytic - probe| = {worst:.3e}"));
    Ok(LeakageReport {
        height,
        width,
        up: 1,
        k,
        kernel: kernel.clone(),
        normalization: NORMALIZATION_NOTE.into(),
        notes,
        analytic_cross_checked: true,
        per_output_bin,
        total_in_band_fraction,
        total_out_band_fraction,
        crop_reference: crop_reference(height, width, oh, ow)?,
    })
}

/// Leakage of the rational resize `up / k` (nearest up-sampling followed by
/// the kernel), measured with probes only.
pub fn rational_leakage_report(up: usize, kernel: &KernelSpec, height: usize, width: usize) -> Result<LeakageReport> {
    if up == 0 {
        return Err(Error::Config("up-sampling factor must be at least 1".into()));
    }
    let (oh, ow) = check_spectral_ratio(height * up, width * up, kernel.k)?;
    if oh > height || ow > width || !height.is_multiple_of(2) || !width.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "rational resize {up}/{} of {height}x{width} must shrink to an even size",
            kernel.k
        )));
    }
    let probed = probe_dependencies(height, width, |img| resample_rational(img, up, kernel))?;
    let (per_output_bin, e_in, e_out) = band_split(&probed);
    let (total_in_band_fraction, total_out_band_fraction) = fractions(e_in, e_out);
    let mut notes = kernel_notes(kernel);
    notes.push(format!(
        "nearest up-sampling by {up} before the kernel; probe-measured only"
    ));
    Ok(LeakageReport {
        height,
        width,
        up,
        k: kernel.k,
        kernel: kernel.clone(),
        normalization: NORMALIZATION_NOTE.into(),
        notes,
        analytic_cross_checked: false,
        per_output_bin,
        total_in_band_fraction,
        total_out_band_fraction,
        crop_reference: crop_reference(height, width, oh, ow)?,
    })
}

impl fmt::Display for LeakageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "kernel {} ratio {}/{} on {}x{}",
            self.kernel.name.as_str(),
            self.up,
            self.k,
            self.height,
            self.width
        )?;
        writeln!(f, "# {}", self.normalization)?;
        for note in &self.notes {
            writeln!(f, "# {note}")?;
        }
        writeln!(f, "{:>5} {:>5} {:>14} {:>14}", "u", "v", "in_band", "out_band")?;
        for bin in &self.per_output_bin {
            writeln!(
                f,
                "{:>5} {:>5} {:>14.6e} {:>14.6e}",
                bin.u, bin.v, bin.in_band_energy, bin.out_band_energy
            )?;
        }
        writeln!(
            f,
            "{:<12} in-band {:.6}  out-of-band {:.6}",
            "downsample", self.total_in_band_fraction, self.total_out_band_fraction
        )?;
        write!(
            f,
            "{:<12} in-band {:.6}  out-of-band {:.6}",
            "crop", self.crop_reference.in_band_fraction, self.crop_reference.out_band_fraction
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_kernels_sum_to_one() {
        for name in [
            KernelName::Nearest,
            KernelName::Mean,
            KernelName::Bilinear,
            KernelName::Bicubic,
        ] {
            for k in 1..=5 {
                let kernel = KernelSpec::new(name, k).unwrap();
                let sum: f64 = kernel.weights().iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "{name:?} k={k}");
            }
        }
        let nearest = KernelSpec::new(KernelName::Nearest, 3).unwrap();
        assert_eq!(nearest.weight(0, 0), 1.0);
        assert_eq!(nearest.weights().iter().filter(|&&w| w != 0.0).count(), 1);
    }

    #[test]
    fn custom_kernel_validation() {
        assert!(KernelSpec::custom(2, vec![0.5, 0.5, 0.0, 0.0]).is_ok());
        assert!(KernelSpec::custom(2, vec![0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(KernelSpec::custom(2, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(KernelSpec::new(KernelName::Mean, 0).is_err());
    }

    #[test]
    fn kernel_json_roundtrip() {
        let kernel = KernelSpec::new(KernelName::Bicubic, 4).unwrap();
        let json = serde_json::to_string(&kernel).unwrap();
        let back: KernelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, kernel);
        let short: KernelSpec = serde_json::from_str(r#"{"name":"mean","k":2}"#).unwrap();
        assert_eq!(short.weights(), &[0.25; 4]);
        assert!(serde_json::from_str::<KernelSpec>(r#"{"name":"mean","k":2,"x":1}"#).is_err());
    }

    #[test]
    fn unit_ratio_is_identity() {
        let img = ImageTensor::from_fn(6, 4, |r, c| (r * 7 + c) as f64 * 0.1).unwrap();
        for name in [
            KernelName::Nearest,
            KernelName::Mean,
            KernelName::Bilinear,
            KernelName::Bicubic,
        ] {
            let out = downsample(&img, &KernelSpec::new(name, 1).unwrap()).unwrap();
            assert_eq!(out, img);
        }
    }

    #[test]
    fn mean_kernel_cancels_checkerboard() {
        let img = ImageTensor::from_fn(8, 8, |r, c| if (r + c) % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let out = downsample(&img, &KernelSpec::new(KernelName::Mean, 2).unwrap()).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_is_preserved() {
        let img = ImageTensor::filled(2, 12, 12, 0.3f64).unwrap();
        for name in [
            KernelName::Nearest,
            KernelName::Mean,
            KernelName::Bilinear,
            KernelName::Bicubic,
        ] {
            for k in [1, 2, 3, 4, 6] {
                let out = downsample(&img, &KernelSpec::new(name, k).unwrap()).unwrap();
                assert!(out.data().iter().all(|&v| (v - 0.3).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn non_divisible_sizes_error() {
        let img = ImageTensor::<f64>::zeros(1, 10, 10).unwrap();
        let k3 = KernelSpec::new(KernelName::Mean, 3).unwrap();
        assert!(matches!(downsample(&img, &k3), Err(Error::Dimension(_))));
        assert!(alias_set(0, 0, 10, 10, 3).is_err());
    }

    #[test]
    fn alias_set_examples() {
        let set = alias_set(0, 0, 16, 16, 2).unwrap();
        let expected: BTreeSet<_> = [(0, 0), (0, -8), (-8, 0), (-8, -8)].into_iter().collect();
        assert_eq!(set, expected);
        let set = alias_set(3, 0, 16, 16, 2).unwrap();
        let expected: BTreeSet<_> = [(3, 0), (3, -8), (-5, 0), (-5, -8)].into_iter().collect();
        assert_eq!(set, expected);
        assert_eq!(
            alias_set(5, -2, 16, 16, 1).unwrap().into_iter().collect::<Vec<_>>(),
            vec![(5, -2)]
        );
        assert!(alias_set(4, 0, 16, 16, 2).is_err());
    }

    #[test]
    fn alpha_closed_form_values() {
        let nearest = KernelSpec::new(KernelName::Nearest, 2).unwrap();
        let a = alpha(3, 0, 3, 0, &nearest, 16, 16).unwrap();
        assert!((a - Complex::new(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(alpha(3, 0, 4, 0, &nearest, 16, 16).unwrap(), Complex::new(0.0, 0.0));
        let unit = KernelSpec::new(KernelName::Mean, 1).unwrap();
        assert!((alpha(2, 3, 2, 3, &unit, 8, 8).unwrap() - Complex::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(alpha(2, 3, 2, 2, &unit, 8, 8).unwrap(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn nearest_report_leaks_three_quarters() {
        let kernel = KernelSpec::new(KernelName::Nearest, 2).unwrap();
        let report = leakage_report(&kernel, 16, 16).unwrap();
        assert!((report.total_out_band_fraction - 0.75).abs() < 1e-9);
        assert!(report.crop_reference.out_band_fraction.abs() < 1e-12);
        assert_eq!(report.per_output_bin.len(), 64);
        let text = report.to_string();
        assert!(text.contains("crop"));
    }

    #[test]
    fn upsample_then_downsample_shapes() {
        let img = ImageTensor::<f64>::zeros(1, 12, 12).unwrap();
        let out = resample_rational(&img, 2, &KernelSpec::new(KernelName::Mean, 3).unwrap()).unwrap();
        assert_eq!((out.height(), out.width()), (8, 8));
    }
}
