//! Floating-point abstraction shared by every computation in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar backing the complex arithmetic: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal fits the scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;

pub fn cplx<T: Real>(re: f64, im: f64) -> C<T> {
    C::new(T::lit(re), T::lit(im))
}

/// Double-precision literal.
pub fn c64(re: f64, im: f64) -> C<f64> {
    C::new(re, im)
}

pub fn creal<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}

/// Integer power of a complex number, including negative exponents.
pub fn cpowi<T: Real>(z: C<T>, exp: i64) -> C<T> {
    let mut base = if exp < 0 { z.inv() } else { z };
    let mut e = exp.unsigned_abs();
    let mut acc = C::new(T::one(), T::zero());
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

/// Bit-exact key of a complex value, valid for any `Real`.
pub fn bits_key<T: Real>(z: C<T>) -> [(u64, i16, i8); 2] {
    [z.re.integer_decode(), z.im.integer_decode()]
}

/// `|a - b| / max(|a|, |b|)`; zero when both vanish.
pub fn rel_err<T: Real>(a: C<T>, b: C<T>) -> T {
    let d = (a - b).norm();
    let s = a.norm().max(b.norm());
    if s == T::zero() {
        d
    } else {
        d / s
    }
}

/// Comparison scale: geometric mean of magnitudes, floored at one.
pub fn scale_of<T: Real>(values: &[C<T>]) -> T {
    if values.is_empty() {
        return T::one();
    }
    let mut log_sum = T::zero();
    for v in values {
        let m = v.norm();
        if m == T::zero() {
            return T::one();
        }
        log_sum += m.ln();
    }
    let n = T::from_usize(values.len()).unwrap();
    (log_sum / n).exp().max(T::one())
}

/// `|a - b|` divided by [`scale_of`] the pair.
pub fn scaled_err<T: Real>(a: C<T>, b: C<T>) -> T {
    (a - b).norm() / scale_of(&[a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_repeated_products() {
        let z: C<f64> = c64(0.3, -1.2);
        assert!((cpowi(z, 3) - z * z * z).norm() < 1e-14);
        assert!((cpowi(z, -2) * z * z - c64(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(cpowi(z, 0), c64(1.0, 0.0));
    }

    #[test]
    fn scale_is_floored_at_one() {
        let small: [C<f64>; 2] = [c64(1e-3, 0.0), c64(0.0, 2e-3)];
        assert_eq!(scale_of(&small), 1.0);
        let big: [C<f64>; 2] = [c64(100.0, 0.0), c64(0.0, 10000.0)];
        assert!((scale_of(&big) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn works_for_single_precision() {
        let z: C<f32> = cplx(2.0, 0.0);
        assert_eq!(cpowi(z, 4), cplx(16.0, 0.0));
        assert!(rel_err(z, z) == 0.0);
    }
}
