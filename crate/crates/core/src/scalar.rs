//! Floating-point abstraction shared by every module.
//!
//! All geometry is written once against [`Scalar`]; `f64` is the working
//! precision for certificates, `f32` is supported for lightweight use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    fn cst(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Small dense-vector helpers over `&[T]`.
pub(crate) mod vecops {
    use super::Scalar;

    pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
        a.iter().zip(b).map(|(&x, &y)| x * y).sum()
    }

    /// Minkowski pairing `-a0 b0 + sum ai bi`.
    pub fn mdot<T: Scalar>(a: &[T], b: &[T]) -> T {
        dot(&a[1..], &b[1..]) - a[0] * b[0]
    }

    pub fn norm<T: Scalar>(a: &[T]) -> T {
        dot(a, a).sqrt()
    }

    pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x + y).collect()
    }

    pub fn scale<T: Scalar>(a: &[T], s: T) -> Vec<T> {
        a.iter().map(|&x| x * s).collect()
    }

    /// `a * sa + b * sb`
    pub fn lincomb<T: Scalar>(a: &[T], sa: T, b: &[T], sb: T) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x * sa + y * sb).collect()
    }
}
