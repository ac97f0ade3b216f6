use std::fmt;

/// Scalar type the engine is generic over. `f64` is the verification-mode
/// precision; `f32` is allowed for fast runs.
pub trait Real:
    num_traits::Float
    + num_traits::NumAssignOps
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_double(self) -> f64;
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_double(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_double(self) -> f64 {
        self as f64
    }
}
