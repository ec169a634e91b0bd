//! Scalar abstraction for the continuous-valued models.
//!
//! The carbon and accuracy models are plain real-valued formulas, so they are
//! written once over any IEEE float. Concrete `f64` aliases live at the crate
//! root; instantiate with `f32` only where storage pressure matters.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display {
    /// Shorthand for lossy conversion from `f64` model constants.
    fn from_f64_const(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant converts to any float scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
