//! Band-pass amplitude fusion of a well-lit image with a low-light exemplar.
//!
//! Both images are moved to the centered frequency plane. Inside the
//! rectangular band `R_u \ R_l` the well-lit amplitude is blended toward the
//! exemplar's with a separable Blackman-shaped weight that is 1 at DC and
//! falls to 0 on the edge of `R_u`:
//!
//! ```text
//! w(m, n) = b(m, λu·H) · b(n, λu·W),   b(k, L) = 0.42 + 0.5·cos(2πk/L) + 0.08·cos(4πk/L)
//! A_fused = α·A_low + (1 − α)·A_well,  α = w on R_u \ R_l, 0 elsewhere
//! ```
//!
//! `R_x = {|m| ≤ λx·H/2, |n| ≤ λx·W/2}` with `R_l` empty when `λl = 0`. The
//! well-lit phase is kept as is, the inverse transform is clamped to `[0, 1]`
//! and raised to `γ`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{clamp_unit, resize, Raster};
use crate::scalar::Scalar;
use crate::spectrum::{ChannelSpectrum, Fft2Plan};

pub const DEFAULT_LAMBDA_L: f64 = 0.01;
pub const DEFAULT_LAMBDA_U: f64 = 0.1;
pub const DEFAULT_GAMMA: f64 = 3.5;
/// Gamma used for very dark exemplar pools (e.g. raw-sensor night captures).
pub const EXTREME_LOW_LIGHT_GAMMA: f64 = 6.0;
/// Gamma of the ablation contact sheet.
pub const ABLATION_GAMMA: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Blackman-weighted band-pass fusion.
    #[default]
    Ours,
    /// Hard swap of the whole `R_u` block, DC included.
    Fda,
    /// Band-pass with a flat weight of 1 instead of the Blackman taper.
    #[serde(rename = "rect")]
    AblationRect,
    /// Blackman weight over all of `R_u`; `λl` is ignored.
    #[serde(rename = "lowpass")]
    AblationLowpass,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Ours, Mode::Fda, Mode::AblationRect, Mode::AblationLowpass];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ours => "ours",
            Mode::Fda => "fda",
            Mode::AblationRect => "rect",
            Mode::AblationLowpass => "lowpass",
        }
    }

    fn tapered(self) -> bool {
        matches!(self, Mode::Ours | Mode::AblationLowpass)
    }

    fn keeps_lower_band(self) -> bool {
        matches!(self, Mode::Ours | Mode::AblationRect)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ours" => Ok(Mode::Ours),
            "fda" => Ok(Mode::Fda),
            "rect" | "ablation_rect" => Ok(Mode::AblationRect),
            "lowpass" | "ablation_lowpass" => Ok(Mode::AblationLowpass),
            other => Err(Error::Argument(format!("unknown mode `{other}` (expected ours, fda, rect or lowpass)"))),
        }
    }
}

/// Validated hyperparameters: `0 ≤ λl < λu < 1`, `γ ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranslationParams {
    lambda_l: f64,
    lambda_u: f64,
    gamma: f64,
    mode: Mode,
}

impl Default for TranslationParams {
    fn default() -> Self {
        Self { lambda_l: DEFAULT_LAMBDA_L, lambda_u: DEFAULT_LAMBDA_U, gamma: DEFAULT_GAMMA, mode: Mode::Ours }
    }
}

impl TranslationParams {
    pub fn new(lambda_l: f64, lambda_u: f64, gamma: f64, mode: Mode) -> Result<Self> {
        if !(lambda_l.is_finite() && lambda_u.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if lambda_l < 0.0 {
            return Err(Error::InvalidParams(format!("lambda_l = {lambda_l} must be >= 0")));
        }
        if lambda_l >= lambda_u {
            return Err(Error::InvalidParams(format!(
                "lambda_l = {lambda_l} must be strictly less than lambda_u = {lambda_u}"
            )));
        }
        if lambda_u >= 1.0 {
            return Err(Error::InvalidParams(format!("lambda_u = {lambda_u} must be < 1")));
        }
        if gamma < 1.0 {
            return Err(Error::InvalidParams(format!("gamma = {gamma} must be >= 1")));
        }
        Ok(Self { lambda_l, lambda_u, gamma, mode })
    }

    pub fn lambda_l(&self) -> f64 {
        self.lambda_l
    }

    pub fn lambda_u(&self) -> f64 {
        self.lambda_u
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.lambda_l, self.lambda_u, gamma, self.mode)
    }

    pub fn with_mode(self, mode: Mode) -> Self {
        Self { mode, ..self }
    }

    /// Lower cutoff actually applied; the FDA and low-pass variants have none.
    pub fn effective_lambda_l(&self) -> f64 {
        if self.mode.keeps_lower_band() {
            self.lambda_l
        } else {
            0.0
        }
    }
}

impl<'de> Deserialize<'de> for TranslationParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lambda_l: f64,
            lambda_u: f64,
            gamma: f64,
            mode: Mode,
        }
        let raw = Raw::deserialize(d)?;
        TranslationParams::new(raw.lambda_l, raw.lambda_u, raw.gamma, raw.mode).map_err(serde::de::Error::custom)
    }
}

/// Per-bin fusion weight `α` on the centered plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionMask<T = f64> {
    height: usize,
    width: usize,
    alpha: Vec<T>,
    degenerate: bool,
}

impl<T: Scalar> FusionMask<T> {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    /// `α` at centered frequency `(m, n)`.
    pub fn at(&self, m: isize, n: isize) -> T {
        let row = m + (self.height / 2) as isize;
        let col = n + (self.width / 2) as isize;
        assert!(
            (0..self.height as isize).contains(&row) && (0..self.width as isize).contains(&col),
            "frequency ({m}, {n}) outside the {}x{} plane",
            self.height,
            self.width
        );
        self.alpha[row as usize * self.width + col as usize]
    }

    /// True when `R_u \ R_l` contains no bin, so fusion is the identity.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Centered half-extents of a rectangular region.
#[derive(Debug, Clone, Copy)]
struct Region<T> {
    rows: T,
    cols: T,
}

impl<T: Scalar> Region<T> {
    fn new(lambda: f64, height: usize, width: usize) -> Option<Self> {
        (lambda > 0.0).then(|| {
            let half = T::of(lambda) / T::of(2.0);
            Region { rows: half * T::of_usize(height), cols: half * T::of_usize(width) }
        })
    }

    fn contains(&self, m: isize, n: isize) -> bool {
        T::of(m.unsigned_abs() as f64) <= self.rows && T::of(n.unsigned_abs() as f64) <= self.cols
    }
}

/// One factor of the separable window; `period` is `λu·H` or `λu·W`.
fn blackman_factor<T: Scalar>(k: isize, period: T) -> T {
    let phase = T::TAU() * T::of(k as f64) / period;
    T::of(0.42) + T::of(0.5) * phase.cos() + T::of(0.08) * (phase + phase).cos()
}

pub fn build_mask<T: Scalar>(height: usize, width: usize, params: &TranslationParams) -> FusionMask<T> {
    assert!(height > 0 && width > 0, "mask size must be nonzero");
    let upper = Region::<T>::new(params.lambda_u, height, width).expect("lambda_u > lambda_l >= 0");
    let lower = Region::<T>::new(params.effective_lambda_l(), height, width);
    let period_rows = T::of(params.lambda_u) * T::of_usize(height);
    let period_cols = T::of(params.lambda_u) * T::of_usize(width);
    let tapered = params.mode.tapered();

    let mut alpha = vec![T::zero(); height * width];
    let mut empty = true;
    for row in 0..height {
        let m = row as isize - (height / 2) as isize;
        if T::of(m.unsigned_abs() as f64) > upper.rows {
            continue;
        }
        let row_weight = blackman_factor(m, period_rows);
        for col in 0..width {
            let n = col as isize - (width / 2) as isize;
            if !upper.contains(m, n) || lower.is_some_and(|l| l.contains(m, n)) {
                continue;
            }
            empty = false;
            alpha[row * width + col] =
                if tapered { clamp_unit(row_weight * blackman_factor(n, period_cols)) } else { T::one() };
        }
    }
    FusionMask { height, width, alpha, degenerate: empty }
}

/// `α·A_low + (1 − α)·A_well`, bin by bin.
pub fn fuse_amplitude<T: Scalar>(a_well: &[T], a_low: &[T], mask: &FusionMask<T>) -> Result<Vec<T>> {
    let n = mask.alpha.len();
    if a_well.len() != n || a_low.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} bins ({}x{})", mask.height, mask.width),
            actual: format!("{} well-lit / {} low-light bins", a_well.len(), a_low.len()),
        });
    }
    Ok(a_well.iter().zip(a_low).zip(&mask.alpha).map(|((w, l), a)| blend(*w, *l, *a)).collect())
}

fn blend<T: Scalar>(well: T, low: T, alpha: T) -> T {
    if alpha == T::zero() {
        well
    } else if alpha == T::one() {
        low
    } else {
        (alpha * low + (T::one() - alpha) * well).max(T::zero())
    }
}

/// Spectrum with the fused amplitude and the well-lit phase, unchanged.
pub fn fuse_spectrum<T: Scalar>(
    well: &ChannelSpectrum<T>,
    low: &ChannelSpectrum<T>,
    mask: &FusionMask<T>,
) -> Result<ChannelSpectrum<T>> {
    well.with_amplitude(fuse_amplitude(well.amplitude(), low.amplitude(), mask)?)
}

/// A translated image with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Proxy<T = f64> {
    pub image: Raster<T>,
    /// The band was empty: the output is only the gamma-darkened input.
    pub degenerate_band: bool,
    pub max_imag_residual: T,
}

/// Reusable translation state. Masks and FFT plans are memoized per size and
/// parameter set; the caches are safe to share between threads.
pub struct Translator<T: Scalar> {
    masks: RwLock<HashMap<MaskKey, Arc<FusionMask<T>>>>,
    plans: RwLock<HashMap<(usize, usize), Fft2Plan<T>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct MaskKey {
    height: usize,
    width: usize,
    lambda_l: u64,
    lambda_u: u64,
    mode: Mode,
}

impl<T: Scalar> Default for Translator<T> {
    fn default() -> Self {
        Self { masks: RwLock::default(), plans: RwLock::default() }
    }
}

impl<T: Scalar> Translator<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mask(&self, height: usize, width: usize, params: &TranslationParams) -> Arc<FusionMask<T>> {
        let key = MaskKey {
            height,
            width,
            lambda_l: params.lambda_l.to_bits(),
            lambda_u: params.lambda_u.to_bits(),
            mode: params.mode,
        };
        if let Some(mask) = self.masks.read().expect("mask cache poisoned").get(&key) {
            return Arc::clone(mask);
        }
        let mask = Arc::new(build_mask(height, width, params));
        let mut masks = self.masks.write().expect("mask cache poisoned");
        Arc::clone(masks.entry(key).or_insert(mask))
    }

    fn plan(&self, height: usize, width: usize) -> Fft2Plan<T> {
        if let Some(plan) = self.plans.read().expect("plan cache poisoned").get(&(height, width)) {
            return plan.clone();
        }
        let plan = Fft2Plan::new(height, width);
        self.plans.write().expect("plan cache poisoned").entry((height, width)).or_insert(plan).clone()
    }

    pub fn translate(&self, well: &Raster<T>, low: &Raster<T>, params: &TranslationParams) -> Result<Proxy<T>> {
        let (h, w) = well.dims();
        let exemplar = self.prepare_exemplar(low, h, w, well.channels())?;
        self.translate_prepared(well, &exemplar, params)
    }

    /// Resizes `low` to `height×width`, converts it to `channels` and keeps
    /// its amplitude spectra so one exemplar can serve many images.
    pub fn prepare_exemplar(
        &self,
        low: &Raster<T>,
        height: usize,
        width: usize,
        channels: usize,
    ) -> Result<ExemplarAmplitude<T>> {
        let low = resize(&low.with_channels(channels)?, height, width)?;
        let plan = self.plan(height, width);
        let planes = low.planes().iter().map(|p| plan.forward_complex(p).iter().map(|c| c.norm()).collect()).collect();
        Ok(ExemplarAmplitude { height, width, planes })
    }

    /// [`Translator::translate`] against an already prepared exemplar.
    ///
    /// Bins outside the band pass through untouched; inside it each bin is
    /// rescaled to the fused amplitude, which leaves its phase as it was.
    pub fn translate_prepared(
        &self,
        well: &Raster<T>,
        exemplar: &ExemplarAmplitude<T>,
        params: &TranslationParams,
    ) -> Result<Proxy<T>> {
        let (h, w) = well.dims();
        if (exemplar.height, exemplar.width, exemplar.planes.len()) != (h, w, well.channels()) {
            return Err(Error::DimensionMismatch {
                expected: format!("{h}x{w}x{}", well.channels()),
                actual: format!("{}x{}x{}", exemplar.height, exemplar.width, exemplar.planes.len()),
            });
        }
        let plan = self.plan(h, w);
        let mask = self.mask(h, w, params);
        let gamma = T::of(params.gamma);

        let mut planes = Vec::with_capacity(well.channels());
        let mut max_imag_residual = T::zero();
        for (well_plane, low_amp) in well.planes().iter().zip(&exemplar.planes) {
            let mut bins = plan.forward_complex(well_plane);
            for ((bin, a_low), alpha) in bins.iter_mut().zip(low_amp).zip(mask.alpha()) {
                if *alpha == T::zero() {
                    continue;
                }
                let a_well = bin.norm();
                let a_fused = blend(a_well, *a_low, *alpha);
                *bin = if a_well > T::zero() { *bin * (a_fused / a_well) } else { Complex::new(a_fused, T::zero()) };
            }
            let (real, residual) = plan.inverse_complex(&bins);
            max_imag_residual = max_imag_residual.max(residual);
            planes.push(real.into_iter().map(|v| clamp_unit(v).powf(gamma)).collect());
        }
        Ok(Proxy {
            image: Raster::from_planes(h, w, &planes)?,
            degenerate_band: mask.is_degenerate(),
            max_imag_residual,
        })
    }
}

/// Per-channel amplitude spectra of an exemplar at a fixed size, as built by
/// [`Translator::prepare_exemplar`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarAmplitude<T = f64> {
    height: usize,
    width: usize,
    planes: Vec<Vec<T>>,
}

impl<T> ExemplarAmplitude<T> {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.planes.len())
    }
}

/// Translates `well` toward the illumination of `low`. The exemplar is
/// converted to the well-lit channel count and resized to its size first.
pub fn translate<T: Scalar>(well: &Raster<T>, low: &Raster<T>, params: &TranslationParams) -> Result<Proxy<T>> {
    Translator::new().translate(well, low, params)
}

/// Mean squared overshoot of `img` outside the intensity range of
/// `reference`, per channel, normalized by pixel count. Gibbs ringing around
/// a step edge shows up as values above the bright level and below the dark
/// one; smooth transitions inside the range cost nothing.
pub fn ringing_energy<T: Scalar>(img: &Raster<T>, reference: &Raster<T>) -> Result<T> {
    if img.dims() != reference.dims() || img.channels() != reference.channels() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}x{}", reference.height(), reference.width(), reference.channels()),
            actual: format!("{}x{}x{}", img.height(), img.width(), img.channels()),
        });
    }
    let c = img.channels();
    let mut total = T::zero();
    for ch in 0..c {
        let band = reference.data().iter().skip(ch).step_by(c);
        let low = band.clone().fold(T::infinity(), |a, v| a.min(*v));
        let high = band.fold(T::neg_infinity(), |a, v| a.max(*v));
        for v in img.data().iter().skip(ch).step_by(c) {
            let over = (*v - high).max(T::zero());
            let under = (low - *v).max(T::zero());
            total = total + over * over + under * under;
        }
    }
    Ok(total / T::of_usize(img.height() * img.width()))
}
