//! Floating-point abstraction: the whole numeric core is generic over the
//! real scalar type, with `f32` and `f64` as the supported instantiations.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar underlying matrices, probabilities, and trajectory weights.
///
/// The crate never names `f64` directly in its numerics; it goes through this
/// trait so that single- and double-precision builds share one code path.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant (tolerances, preset amplitudes) into `Self`.
    ///
    /// Panics only if the value has no finite representation in `Self`, which
    /// never happens for the constants this crate uses.
    fn cst(value: f64) -> Self {
        Self::from_f64(value).expect("constant not representable in scalar type")
    }

    /// Round-trips into `f64` for error reporting and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
