use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Coefficient field for vectors, shift actions and indefinite forms.
pub trait Scalar: Float + FromPrimitive + Debug + Sum + Send + Sync + 'static {
    /// Lossy conversion of a magnitude computed in double precision.
    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
