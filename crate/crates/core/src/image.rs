//! Raster images with normalized intensities, 8-bit PNG/JPEG codecs and
//! bilinear resampling.

use std::io::Cursor;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub mod synth;

/// Quality used for JPEG output. Proxy datasets are usually stored as PNG;
/// JPEG is only offered for size-constrained exports.
pub const JPEG_QUALITY: u8 = 95;

/// H×W×C image with every intensity in `[0, 1]`, stored row-major and
/// channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T = f64> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodeFormat {
    Png,
    Jpeg,
}

impl EncodeFormat {
    pub fn extension(self) -> &'static str {
        match self {
            EncodeFormat::Png => "png",
            EncodeFormat::Jpeg => "jpg",
        }
    }
}

impl<T: Scalar> Raster<T> {
    /// Builds an image from interleaved data, checking every invariant.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{} samples for {height}x{width}x{channels}", height * width * channels),
                actual: format!("{} samples", data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(Error::Argument(format!("intensity {} at sample {i} is outside [0, 1]", data[i])));
        }
        Ok(Self { height, width, channels, data })
    }

    /// Builds an image from arbitrary reals, clamping into `[0, 1]`.
    /// NaN samples become 0.
    pub fn from_unclamped(height: usize, width: usize, channels: usize, mut data: Vec<T>) -> Result<Self> {
        for v in &mut data {
            *v = clamp_unit(*v);
        }
        Self::new(height, width, channels, data)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Result<Self> {
        check_dims(height, width, channels)?;
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds an image by evaluating `f(row, col, channel)`; results are clamped.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self> {
        check_dims(height, width, channels)?;
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(clamp_unit(f(y, x, c)));
                }
            }
        }
        Ok(Self { height, width, channels, data })
    }

    /// Reassembles an image from per-channel row-major planes.
    pub fn from_planes(height: usize, width: usize, planes: &[Vec<T>]) -> Result<Self> {
        let channels = planes.len();
        check_dims(height, width, channels)?;
        let n = height * width;
        if let Some(p) = planes.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: format!("{n} samples per plane"),
                actual: format!("{} samples", p.len()),
            });
        }
        let mut data = Vec::with_capacity(n * channels);
        for i in 0..n {
            for p in planes {
                data.push(p[i]);
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> T {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// Row-major copy of one channel.
    pub fn plane(&self, channel: usize) -> Vec<T> {
        assert!(channel < self.channels, "channel {channel} out of range");
        self.data.iter().skip(channel).step_by(self.channels).copied().collect()
    }

    pub fn planes(&self) -> Vec<Vec<T>> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }

    pub fn mean(&self) -> T {
        let sum = self.data.iter().fold(T::zero(), |acc, v| acc + *v);
        sum / T::of_usize(self.data.len())
    }

    /// Applies `f` to every intensity, clamping the result.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| clamp_unit(f(*v))).collect(),
        }
    }

    /// Raises every intensity to `gamma`.
    pub fn powf(&self, gamma: T) -> Self {
        self.map(|v| v.powf(gamma))
    }

    /// Converts between grayscale and RGB. Gray→RGB replicates; RGB→gray
    /// uses the Rec. 601 luma weights.
    pub fn with_channels(&self, channels: usize) -> Result<Self> {
        match (self.channels, channels) {
            (a, b) if a == b => Ok(self.clone()),
            (1, 3) => {
                let data = self.data.iter().flat_map(|v| [*v, *v, *v]).collect();
                Self::new(self.height, self.width, 3, data)
            }
            (3, 1) => {
                let (wr, wg, wb) = (T::of(0.299), T::of(0.587), T::of(0.114));
                let data = self.data.chunks_exact(3).map(|p| clamp_unit(wr * p[0] + wg * p[1] + wb * p[2])).collect();
                Self::new(self.height, self.width, 1, data)
            }
            (a, b) => Err(Error::Argument(format!("cannot convert {a} channels to {b}"))),
        }
    }

    /// Casts to another scalar precision.
    pub fn cast<U: Scalar>(&self) -> Raster<U> {
        Raster {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| clamp_unit(U::of(v.to_f64_lossy()))).collect(),
        }
    }
}

fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::Argument(format!("image dimensions must be nonzero, got {height}x{width}")));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::Argument(format!("images have 1 or 3 channels, got {channels}")));
    }
    Ok(())
}

pub(crate) fn clamp_unit<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::zero()
    } else {
        v.max(T::zero()).min(T::one())
    }
}

/// Round-half-up quantization of a unit intensity to a byte.
pub fn quantize<T: Scalar>(v: T) -> u8 {
    let scaled = (clamp_unit(v) * T::of(255.0) + T::of(0.5)).floor();
    scaled.to_u8().unwrap_or(255)
}

/// Decodes an 8-bit PNG or JPEG. Alpha is dropped; gray images stay single
/// channel, everything else becomes RGB.
pub fn decode_image<T: Scalar>(bytes: &[u8]) -> Result<Raster<T>> {
    let format =
        image::guess_format(bytes).map_err(|e| Error::Decode { format: "unknown".into(), message: e.to_string() })?;
    let name = format_name(format);
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(Error::Decode { format: name, message: "only PNG and JPEG are supported".into() });
    }
    let dynamic = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Decode { format: name.clone(), message: e.to_string() })?;
    from_dynamic(&dynamic)
}

fn format_name(format: ImageFormat) -> String {
    format.extensions_str().first().copied().unwrap_or("unknown").to_ascii_uppercase()
}

fn from_dynamic<T: Scalar>(dynamic: &DynamicImage) -> Result<Raster<T>> {
    let (width, height) = (dynamic.width() as usize, dynamic.height() as usize);
    let scale = T::of(255.0);
    let (channels, bytes) = if dynamic.color().has_color() {
        (3, dynamic.to_rgb8().into_raw())
    } else {
        (1, dynamic.to_luma8().into_raw())
    };
    let data = bytes.into_iter().map(|u| T::of(u as f64) / scale).collect();
    Raster::new(height, width, channels, data)
}

pub fn encode_image<T: Scalar>(img: &Raster<T>, format: EncodeFormat) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = img.data.iter().map(|v| quantize(*v)).collect();
    let color = if img.channels == 1 { ExtendedColorType::L8 } else { ExtendedColorType::Rgb8 };
    let (w, h) = (img.width as u32, img.height as u32);
    let mut out = Vec::new();
    let result = match format {
        EncodeFormat::Png => PngEncoder::new(&mut out).write_image(&bytes, w, h, color),
        EncodeFormat::Jpeg => {
            JpegEncoder::new_with_quality(Cursor::new(&mut out), JPEG_QUALITY).write_image(&bytes, w, h, color)
        }
    };
    result.map_err(|e| Error::Encode {
        format: match format {
            EncodeFormat::Png => "PNG",
            EncodeFormat::Jpeg => "JPEG",
        },
        message: e.to_string(),
    })?;
    Ok(out)
}

pub fn read_image<T: Scalar>(path: impl AsRef<Path>) -> Result<Raster<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| e.in_file(path))
}

pub fn write_image<T: Scalar>(img: &Raster<T>, path: impl AsRef<Path>, format: EncodeFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(img, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Bilinear resize with pixel-center alignment and edge-clamped sampling.
pub fn resize<T: Scalar>(img: &Raster<T>, target_h: usize, target_w: usize) -> Result<Raster<T>> {
    if target_h == 0 || target_w == 0 {
        return Err(Error::Argument(format!("resize target must be nonzero, got {target_h}x{target_w}")));
    }
    if (target_h, target_w) == img.dims() {
        return Ok(img.clone());
    }
    let ys = sample_positions::<T>(img.height, target_h);
    let xs = sample_positions::<T>(img.width, target_w);
    let c = img.channels;
    let mut data = Vec::with_capacity(target_h * target_w * c);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for ch in 0..c {
                let top = lerp(img.get(y0, x0, ch), img.get(y0, x1, ch), fx);
                let bottom = lerp(img.get(y1, x0, ch), img.get(y1, x1, ch), fx);
                data.push(clamp_unit(lerp(top, bottom, fy)));
            }
        }
    }
    Raster::new(target_h, target_w, c, data)
}

fn lerp<T: Scalar>(a: T, b: T, t: T) -> T {
    if a == b {
        a
    } else {
        a + (b - a) * t
    }
}

/// For each output index: the two source taps and the weight of the second.
fn sample_positions<T: Scalar>(src: usize, dst: usize) -> Vec<(usize, usize, T)> {
    let ratio = T::of_usize(src) / T::of_usize(dst);
    let half = T::of(0.5);
    let last = T::of_usize(src - 1);
    (0..dst)
        .map(|i| {
            let pos = ((T::of_usize(i) + half) * ratio - half).max(T::zero()).min(last);
            let lo = pos.floor();
            let i0 = lo.to_usize().unwrap_or(0);
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, pos - lo)
        })
        .collect()
}

/// Vertical step edge: columns left of `edge_col` get `low`, the rest `high`.
pub fn synth_step_image<T: Scalar>(
    height: usize,
    width: usize,
    channels: usize,
    edge_col: usize,
    low: T,
    high: T,
) -> Result<Raster<T>> {
    if edge_col >= width {
        return Err(Error::Argument(format!("edge column {edge_col} must be below width {width}")));
    }
    Raster::from_fn(height, width, channels, |_, x, _| if x < edge_col { low } else { high })
}
