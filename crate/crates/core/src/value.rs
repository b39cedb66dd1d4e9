//! Scalar abstraction for objective values and weights.
//!
//! All algorithms are generic over the scalar so that the modular solvers can
//! run on exact integers (equality checks with no round-off) while the general
//! submodular pipeline runs on floats. Concrete aliases live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Scalar type usable as an objective value or element weight.
///
/// `tol()` is the absolute tolerance used whenever a value is compared against
/// a threshold; it is zero for integer scalars, so integer runs are exact.
pub trait Value:
    Copy
    + PartialOrd
    + NumAssign
    + Signed
    + Sum<Self>
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn tol() -> Self;
}

macro_rules! impl_value_float {
    ($t:ty, $tol:expr) => {
        impl Value for $t {
            fn tol() -> Self {
                $tol
            }
        }
    };
}

macro_rules! impl_value_int {
    ($($t:ty),*) => {
        $(impl Value for $t {
            fn tol() -> Self {
                0
            }
        })*
    };
}

impl_value_float!(f64, 1e-9);
impl_value_float!(f32, 1e-6);
impl_value_int!(i32, i64, i128);

/// `a >= b` up to the scalar's comparison tolerance.
pub fn approx_ge<W: Value>(a: W, b: W) -> bool {
    a >= b - W::tol()
}

/// `a == b` up to the scalar's comparison tolerance.
pub fn approx_eq<W: Value>(a: W, b: W) -> bool {
    (a - b).abs() <= W::tol()
}
