//! Scalar abstraction shared by the symbolic and geometric layers.
//!
//! Everything that only needs field arithmetic plus a few elementary
//! functions is written against [`Real`]; the numerical engine pins `f64`.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::FromPrimitive;

/// Real floating point type usable as the base of every complex quantity.
pub trait Real: RealField + Copy + FromPrimitive + Debug + Display + LowerExp {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + Debug + Display + LowerExp {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in target float type")
}

#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(lit(re), lit(im))
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// The imaginary unit.
#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Modulus computed without overflow in the intermediate square.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.re.exp();
    Complex::new(r * z.im.cos(), r * z.im.sin())
}

/// `base^z` for a positive real base.
#[inline]
pub fn real_pow<T: Real>(base: T, z: Complex<T>) -> Complex<T> {
    cexp(z * base.ln())
}

/// `i^k` for a non-negative integer power.
pub fn imag_unit_pow<T: Real>(k: usize) -> Complex<T> {
    match k % 4 {
        0 => cone(),
        1 => imag_unit(),
        2 => -cone::<T>(),
        _ => -imag_unit::<T>(),
    }
}

pub fn factorial<T: Real>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, j| acc * lit::<T>(j as f64))
}

pub fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    (0..k).fold(T::one(), |acc, j| {
        acc * lit::<T>((n - j) as f64) / lit::<T>((j + 1) as f64)
    })
}

/// Tolerance used to decide whether two complex numbers coincide
/// (exponent identity, root clustering).
pub fn cluster_tol<T: Real>() -> T {
    T::default_epsilon().powf(lit(2.0 / 3.0))
}

/// Whether two exponents name the same point, up to rounding.
pub fn same_point<T: Real>(a: Complex<T>, b: Complex<T>) -> bool {
    let scale = T::one() + cabs(a).max(cabs(b));
    cabs(a - b) <= lit::<T>(1e3) * T::default_epsilon() * scale
}
