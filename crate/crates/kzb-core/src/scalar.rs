//! Coefficient scalars: exact rationals for the algebra layer, complex
//! doubles for the analytic layer.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;
pub type C64 = Complex64;

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    BigRational::from(BigInt::from(n))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back on separate conversion of numerator/denominator
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn rat_to_c64(r: &Rat) -> C64 {
    C64::new(rat_to_f64(r), 0.0)
}

/// Serialize a rational as "p/q" (denominator always present, normalized).
pub fn rat_to_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rat_is_zero(r: &Rat) -> bool {
    r.is_zero()
}

pub fn rat_one() -> Rat {
    BigRational::one()
}

pub fn rat_abs(r: &Rat) -> Rat {
    r.abs()
}

pub const TWO_PI: f64 = std::f64::consts::TAU;

pub fn two_pi_i() -> C64 {
    C64::new(0.0, TWO_PI)
}
