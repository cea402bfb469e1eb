//! Proxy low-light image synthesis by band-pass Fourier amplitude fusion.
//!
//! A well-lit photograph keeps its phase spectrum (structure) while a band of
//! its low-frequency amplitude spectrum (illumination and color statistics)
//! is blended toward a real low-light exemplar through a Blackman-tapered
//! mask, then the result is darkened with a gamma curve. Applied over a
//! dataset with a small exemplar pool this produces training data for
//! low-light saliency or depth models.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the batch pipeline and CLI use.
//!
//! ```
//! use proxylight::{translate, RasterImage, TranslationParams};
//! use proxylight::image::synth::{synth_low_light, synth_scene};
//!
//! let well: RasterImage = synth_scene(64, 96, 1).unwrap();
//! let dark: RasterImage = synth_low_light(64, 96, 0.05, 2).unwrap();
//! let proxy = translate(&well, &dark, &TranslationParams::default()).unwrap();
//! assert!(proxy.image.mean() < well.mean());
//! ```

pub mod dataset;
pub mod error;
pub mod fusion;
pub mod image;
pub mod metrics;
pub mod scalar;
pub mod spectrum;

pub use dataset::{generate, sweep, DatasetManifest, GenerateOptions, LowLightPool, ManifestEntry};
pub use error::{Error, Result};
pub use fusion::{
    build_mask, fuse_amplitude, ringing_energy, translate, ExemplarAmplitude, Mode, Proxy, TranslationParams,
    Translator,
};
pub use image::{decode_image, encode_image, resize, synth_step_image, EncodeFormat};
pub use metrics::{depth_metrics, f_measure, mae};
pub use scalar::Scalar;
pub use spectrum::{dft2, idft2, naive_dft2};

pub type RasterImage = image::Raster<f64>;
pub type RasterImageF32 = image::Raster<f32>;
pub type ChannelSpectrum = spectrum::ChannelSpectrum<f64>;
pub type ImageSpectrum = spectrum::ImageSpectrum<f64>;
pub type FusionMask = fusion::FusionMask<f64>;
pub type FusionMaskF32 = fusion::FusionMask<f32>;
pub type GrayMap = metrics::GrayMap<f64>;
pub type DepthMap = metrics::DepthMap<f64>;
