//! Per-channel 2D DFT analysis and synthesis on a centered frequency plane.
//!
//! The forward transform is unnormalized and the inverse carries `1/(H·W)`.
//! After the forward transform the plane is shifted so that the DC bin sits at
//! row `H/2`, column `W/2` (integer division); frequency `(m, n)` relative to
//! that center is what the fusion mask indexes. Spectra are kept in polar form
//! (amplitude and phase) because fusion only ever touches the amplitude.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::Raster;
use crate::scalar::Scalar;

/// Largest `H·W` accepted by [`naive_dft2`].
pub const NAIVE_DFT_MAX_PIXELS: usize = 4096;

/// Amplitude and phase of one channel on the centered frequency plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpectrum<T = f64> {
    height: usize,
    width: usize,
    amplitude: Vec<T>,
    phase: Vec<T>,
}

impl<T: Scalar> ChannelSpectrum<T> {
    pub fn new(height: usize, width: usize, amplitude: Vec<T>, phase: Vec<T>) -> Result<Self> {
        let n = height * width;
        if n == 0 || amplitude.len() != n || phase.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} bins for {height}x{width}"),
                actual: format!("{} amplitude / {} phase bins", amplitude.len(), phase.len()),
            });
        }
        if amplitude.iter().any(|a| a.is_nan() || *a < T::zero()) {
            return Err(Error::Argument("amplitudes must be nonnegative".into()));
        }
        Ok(Self { height, width, amplitude, phase })
    }

    fn from_centered(height: usize, width: usize, bins: &[Complex<T>]) -> Self {
        let amplitude = bins.iter().map(|c| c.norm()).collect();
        let phase = bins.iter().map(|c| principal_phase(c.im.atan2(c.re))).collect();
        Self { height, width, amplitude, phase }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amplitude(&self) -> &[T] {
        &self.amplitude
    }

    pub fn phase(&self) -> &[T] {
        &self.phase
    }

    /// Replaces the amplitude plane, keeping the phase untouched.
    pub fn with_amplitude(&self, amplitude: Vec<T>) -> Result<Self> {
        Self::new(self.height, self.width, amplitude, self.phase.clone())
    }

    /// Bin at centered frequency `(m, n)`.
    pub fn index_of(&self, m: isize, n: isize) -> usize {
        let row = (m + (self.height / 2) as isize).rem_euclid(self.height as isize) as usize;
        let col = (n + (self.width / 2) as isize).rem_euclid(self.width as isize) as usize;
        row * self.width + col
    }

    pub fn complex(&self, index: usize) -> Complex<T> {
        Complex::from_polar(self.amplitude[index], self.phase[index])
    }

    /// Σ amplitude² over all bins.
    pub fn energy(&self) -> T {
        self.amplitude.iter().fold(T::zero(), |acc, a| acc + *a * *a)
    }

    /// `log(1 + A)` scaled to `[0, 1]` as a grayscale image, for inspection.
    pub fn log_amplitude_image(&self) -> Result<Raster<T>> {
        let logs: Vec<T> = self.amplitude.iter().map(|a| a.ln_1p()).collect();
        let peak = logs.iter().fold(T::zero(), |m, v| m.max(*v));
        let scale = if peak > T::zero() { T::one() / peak } else { T::zero() };
        Raster::from_unclamped(self.height, self.width, 1, logs.into_iter().map(|v| v * scale).collect())
    }
}

/// One [`ChannelSpectrum`] per image channel, all of the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSpectrum<T = f64> {
    channels: Vec<ChannelSpectrum<T>>,
}

impl<T: Scalar> ImageSpectrum<T> {
    pub fn new(channels: Vec<ChannelSpectrum<T>>) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::Argument("a spectrum needs at least one channel".into()))?;
        let dims = (first.height, first.width);
        if let Some(c) = channels.iter().find(|c| (c.height, c.width) != dims) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", dims.0, dims.1),
                actual: format!("{}x{}", c.height, c.width),
            });
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[ChannelSpectrum<T>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<ChannelSpectrum<T>> {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.channels[0].height, self.channels[0].width)
    }
}

/// Real-valued output of the inverse transform, not yet clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField<T = f64> {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Row-major, channel-interleaved like [`Raster`].
    pub data: Vec<T>,
    /// Largest `|Im|` discarded when taking the real part.
    pub max_imag_residual: T,
}

impl<T: Scalar> RealField<T> {
    pub fn into_raster(self) -> Result<Raster<T>> {
        Raster::from_unclamped(self.height, self.width, self.channels, self.data)
    }
}

fn principal_phase<T: Scalar>(p: T) -> T {
    if p <= -T::PI() {
        T::PI()
    } else {
        p
    }
}

/// Planned forward and inverse transforms for one `H×W` size. Immutable once
/// built, so a plan can be shared across threads.
#[derive(Clone)]
pub struct Fft2Plan<T: Scalar> {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> std::fmt::Debug for Fft2Plan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2Plan").field("height", &self.height).field("width", &self.width).finish()
    }
}

impl<T: Scalar> Fft2Plan<T> {
    pub fn new(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "transform size must be nonzero");
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            col_fwd: planner.plan_fft_forward(height),
            row_inv: planner.plan_fft_inverse(width),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Forward transform of one row-major real plane.
    pub fn forward(&self, plane: &[T]) -> ChannelSpectrum<T> {
        ChannelSpectrum::from_centered(self.height, self.width, &self.forward_complex(plane))
    }

    /// Forward transform returning centered complex bins.
    pub fn forward_complex(&self, plane: &[T]) -> Vec<Complex<T>> {
        assert_eq!(plane.len(), self.height * self.width, "plane size does not match plan");
        let mut buf: Vec<Complex<T>> = plane.iter().map(|v| Complex::new(*v, T::zero())).collect();
        self.transform(&mut buf, &self.row_fwd, &self.col_fwd);
        shift(&buf, self.height, self.width, false)
    }

    /// Inverse transform of a centered spectrum. Returns the real part and
    /// the largest imaginary magnitude dropped.
    pub fn inverse(&self, spectrum: &ChannelSpectrum<T>) -> (Vec<T>, T) {
        assert_eq!((spectrum.height, spectrum.width), (self.height, self.width), "spectrum size does not match plan");
        let centered: Vec<Complex<T>> = (0..spectrum.amplitude.len()).map(|i| spectrum.complex(i)).collect();
        self.inverse_complex(&centered)
    }

    /// Inverse transform of centered complex bins; see [`Fft2Plan::inverse`].
    pub fn inverse_complex(&self, centered: &[Complex<T>]) -> (Vec<T>, T) {
        assert_eq!(centered.len(), self.height * self.width, "spectrum size does not match plan");
        let mut buf = shift(centered, self.height, self.width, true);
        self.transform(&mut buf, &self.row_inv, &self.col_inv);
        let norm = T::one() / T::of_usize(self.height * self.width);
        let mut residual = T::zero();
        let real = buf
            .iter()
            .map(|c| {
                residual = residual.max((c.im * norm).abs());
                c.re * norm
            })
            .collect();
        (real, residual)
    }

    fn transform(&self, buf: &mut [Complex<T>], rows: &Arc<dyn Fft<T>>, cols: &Arc<dyn Fft<T>>) {
        let (h, w) = (self.height, self.width);
        let mut scratch = vec![
            Complex::new(T::zero(), T::zero());
            rows.get_inplace_scratch_len().max(cols.get_inplace_scratch_len())
        ];
        rows.process_with_scratch(buf, &mut scratch[..rows.get_inplace_scratch_len()]);
        let mut transposed = transpose(buf, h, w);
        cols.process_with_scratch(&mut transposed, &mut scratch[..cols.get_inplace_scratch_len()]);
        buf.copy_from_slice(&transpose(&transposed, w, h));
    }

    pub fn forward_image(&self, img: &Raster<T>) -> Result<ImageSpectrum<T>> {
        self.check(img.dims())?;
        ImageSpectrum::new(img.planes().iter().map(|p| self.forward(p)).collect())
    }

    pub fn inverse_image(&self, spectrum: &ImageSpectrum<T>) -> Result<RealField<T>> {
        self.check(spectrum.dims())?;
        let planes: Vec<(Vec<T>, T)> = spectrum.channels.iter().map(|c| self.inverse(c)).collect();
        Ok(interleave(self.height, self.width, planes))
    }

    fn check(&self, dims: (usize, usize)) -> Result<()> {
        if dims != (self.height, self.width) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.height, self.width),
                actual: format!("{}x{}", dims.0, dims.1),
            });
        }
        Ok(())
    }
}

fn interleave<T: Scalar>(height: usize, width: usize, planes: Vec<(Vec<T>, T)>) -> RealField<T> {
    let channels = planes.len();
    let mut data = vec![T::zero(); height * width * channels];
    let mut max_imag_residual = T::zero();
    for (c, (plane, residual)) in planes.into_iter().enumerate() {
        max_imag_residual = max_imag_residual.max(residual);
        for (i, v) in plane.into_iter().enumerate() {
            data[i * channels + c] = v;
        }
    }
    RealField { height, width, channels, data, max_imag_residual }
}

fn transpose<T: Copy>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(src.len());
    for c in 0..cols {
        for r in 0..rows {
            out.push(src[r * cols + c]);
        }
    }
    out
}

/// Moves DC from index 0 to the center (`inverse == false`) or back.
fn shift<T: Copy>(src: &[T], height: usize, width: usize, inverse: bool) -> Vec<T> {
    let (dy, dx) = if inverse { (height - height / 2, width - width / 2) } else { (height / 2, width / 2) };
    let mut out = src.to_vec();
    for r in 0..height {
        let rr = (r + dy) % height;
        for c in 0..width {
            out[rr * width + (c + dx) % width] = src[r * width + c];
        }
    }
    out
}

/// Forward transform of every channel on the centered plane.
pub fn dft2<T: Scalar>(img: &Raster<T>) -> ImageSpectrum<T> {
    let (h, w) = img.dims();
    Fft2Plan::new(h, w).forward_image(img).expect("plan built for the image size")
}

/// Inverse of [`dft2`]: real part of the normalized inverse transform.
pub fn idft2<T: Scalar>(spectrum: &ImageSpectrum<T>) -> RealField<T> {
    let (h, w) = spectrum.dims();
    Fft2Plan::new(h, w).inverse_image(spectrum).expect("plan built for the spectrum size")
}

/// Direct double-sum DFT, centered like [`dft2`]. Quartic cost, so limited to
/// [`NAIVE_DFT_MAX_PIXELS`] pixels; meant as a reference for testing.
pub fn naive_dft2<T: Scalar>(img: &Raster<T>) -> Result<ImageSpectrum<T>> {
    let (h, w) = img.dims();
    if h * w > NAIVE_DFT_MAX_PIXELS {
        return Err(Error::Argument(format!("naive DFT limited to {NAIVE_DFT_MAX_PIXELS} pixels, got {h}x{w}")));
    }
    let tau = T::TAU();
    let mut channels = Vec::with_capacity(img.channels());
    for plane in img.planes() {
        let mut bins = Vec::with_capacity(h * w);
        for row in 0..h {
            let u = (row + h - h / 2) % h;
            for col in 0..w {
                let v = (col + w - w / 2) % w;
                let mut acc = Complex::new(T::zero(), T::zero());
                for y in 0..h {
                    // Reduce the integer phase before converting to keep the angle small.
                    let py = T::of_usize((u * y) % h) / T::of_usize(h);
                    for x in 0..w {
                        let px = T::of_usize((v * x) % w) / T::of_usize(w);
                        let angle = -tau * (py + px);
                        acc = acc + Complex::new(angle.cos(), angle.sin()) * plane[y * w + x];
                    }
                }
                bins.push(acc);
            }
        }
        channels.push(ChannelSpectrum::from_centered(h, w, &bins));
    }
    ImageSpectrum::new(channels)
}
