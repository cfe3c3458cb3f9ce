//! Cuntz families implementing the Koopman endomorphism a ↦ a∘φ of L∞(X, μ)
//! for N-to-one local homeomorphisms, with exact (full shift) and numerical
//! (circle maps) realizations and a verification suite.

pub mod cuntz;
pub mod discretize;
pub mod dynamics;
pub mod error;
pub mod quadrature;
pub mod scalar;
pub mod symbolic;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{FloatScalar, Scalar, Surd, C64};

use num_complex::Complex;

/// Complex single precision.
pub type C32 = Complex<f32>;

pub type Matrix64 = discretize::OperatorMatrix<C64>;
pub type ExactMatrix = discretize::OperatorMatrix<Surd>;

/// Full shift in exact arithmetic.
pub type ExactShift = discretize::CylinderRealization<Surd>;
pub type Shift64 = discretize::CylinderRealization<C64>;
/// Product shift × rotation (float only).
pub type Product64 = discretize::CylinderRealization<C64>;
pub type Circle64 = discretize::CircleRealization<C64>;
pub type Circle32 = discretize::CircleRealization<C32>;

pub type Family64 = cuntz::CuntzFamily<Circle64>;
pub type ExactFamily = cuntz::CuntzFamily<ExactShift>;
