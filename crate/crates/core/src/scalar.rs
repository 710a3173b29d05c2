//! Numeric scalar abstraction for polynomial evaluation.

use std::fmt::Debug;

use num_traits::Num;

/// Field-like scalar: floats and exact rationals both qualify.
pub trait Scalar: Num + PartialOrd + Clone + Debug {}

impl<T: Num + PartialOrd + Clone + Debug> Scalar for T {}
