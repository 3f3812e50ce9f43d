use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Scalar type for all real arithmetic: `f32`, `f64`, or anything
/// float-like enough to carry error rates and MW weights.
pub trait Real:
    Float + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Absolute tolerance for "sums to one" checks on weights and masses.
    ///
    /// The contract value is 1e-9; scalars too coarse to ever satisfy that
    /// (e.g. `f32`) get a tolerance a few ulps wide instead.
    fn prob_tolerance() -> Self {
        let contract = Self::from_f64(1e-9).unwrap_or_else(Self::epsilon);
        contract.max(Self::epsilon() * Self::from_f64(16.0).unwrap())
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}
