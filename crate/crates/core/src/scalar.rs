//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the pipeline can run on: `f32` or `f64`.
///
/// The bound on [`rustfft::FftNum`] lets spectra of any `Scalar` go through
/// the planned FFT path.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + rustfft::FftNum + Debug + Display + Default
{
    /// Lossy conversion from an `f64` constant or hyperparameter.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    /// Conversion from a pixel or bin count.
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
