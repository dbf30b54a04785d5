//! Floating point scalar used by the geometric and constitutive kernels.

use std::fmt::{Debug, Display};

/// floating point: f32 or f64
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}
impl Real for f32 {}
impl Real for f64 {}

/// Converts an f64 literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

/// Converts `x` into f64.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap()
}

/// A point or vector in the plane.
pub type Point<T> = [T; 2];

#[inline]
pub fn sub<T: Real>(a: Point<T>, b: Point<T>) -> Point<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add<T: Real>(a: Point<T>, b: Point<T>) -> Point<T> {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale<T: Real>(s: T, a: Point<T>) -> Point<T> {
    [s * a[0], s * a[1]]
}

#[inline]
pub fn dot<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm<T: Real>(a: Point<T>) -> T {
    a[0].hypot(a[1])
}

/// Point on the segment `a + t (b - a)`.
#[inline]
pub fn lerp<T: Real>(a: Point<T>, b: Point<T>, t: T) -> Point<T> {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Twice the signed area of the triangle (a, b, c).
#[inline]
pub fn orient<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    cross(sub(b, a), sub(c, a))
}
