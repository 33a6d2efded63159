//! High-precision binary floating point for the Poisson diagnostics, plus a
//! decimal renderer shared with exact rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Mantissa bits carried by every [`Real`]; 139 more than an `f64`.
pub const PRECISION_BITS: usize = 192;

type Float = FBig<HalfEven, 2>;

#[derive(Debug, Clone)]
pub struct Real(Float);

fn to_ibig(v: &BigInt) -> IBig {
    IBig::from_le_bytes(&v.to_signed_bytes_le())
}

fn to_bigint(v: &IBig) -> BigInt {
    BigInt::from_signed_bytes_le(&v.to_le_bytes())
}

fn lift(v: IBig) -> Float {
    Float::from_parts(v, 0)
        .with_precision(PRECISION_BITS)
        .value()
}

impl Real {
    pub fn zero() -> Self {
        Real(lift(IBig::ZERO))
    }

    pub fn one() -> Self {
        Real(lift(IBig::ONE))
    }

    /// Nearest representable value to an exact rational.
    pub fn from_ratio(r: &BigRational) -> Self {
        let num = lift(to_ibig(r.numer()));
        let den = lift(to_ibig(r.denom()));
        Real(num / den)
    }

    /// The exact rational this value represents.
    pub fn to_ratio(&self) -> BigRational {
        let (significand, exponent) = self.0.repr().clone().into_parts();
        let sig = to_bigint(&significand);
        let two = BigInt::from(2);
        if exponent >= 0 {
            BigRational::from_integer(sig * num_traits::pow(two, exponent as usize))
        } else {
            BigRational::new(sig, num_traits::pow(two, (-exponent) as usize))
        }
    }

    pub fn exp(&self) -> Self {
        Real(self.0.exp())
    }

    pub fn abs(&self) -> Self {
        if self.0 < Float::ZERO {
            Real(-self.0.clone())
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    pub fn is_zero(&self) -> bool {
        self.0 == Float::ZERO
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let r = self.to_ratio();
        format_decimal(r.numer(), r.denom(), digits)
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Add for &Real {
    type Output = Real;
    fn add(self, rhs: &Real) -> Real {
        Real(&self.0 + &rhs.0)
    }
}

impl Sub for &Real {
    type Output = Real;
    fn sub(self, rhs: &Real) -> Real {
        Real(&self.0 - &rhs.0)
    }
}

impl Mul for &Real {
    type Output = Real;
    fn mul(self, rhs: &Real) -> Real {
        Real(&self.0 * &rhs.0)
    }
}

impl std::iter::Sum for Real {
    fn sum<I: Iterator<Item = Real>>(iter: I) -> Real {
        iter.fold(Real::zero(), |acc, x| &acc + &x)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(f.precision().unwrap_or(15)))
    }
}

fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

/// Renders `num/den` rounded half-up to `digits` significant digits.
///
/// Plain positional notation is used for decimal exponents in `-5..digits`,
/// scientific notation (`1.23e-9`) otherwise.
pub fn format_decimal(num: &BigInt, den: &BigInt, digits: usize) -> String {
    assert!(digits >= 1 && !den.is_zero());
    if num.is_zero() {
        return "0".to_string();
    }
    let negative = num.is_negative() != den.is_negative();
    let (num, den) = (num.abs(), den.abs());

    // exponent e with 10^e <= num/den < 10^(e+1)
    let mut e = num.to_string().len() as i64 - den.to_string().len() as i64;
    let scaled_cmp = |e: i64| -> Ordering {
        if e >= 0 {
            num.cmp(&(&den * pow10(e as u32)))
        } else {
            (&num * pow10((-e) as u32)).cmp(&den)
        }
    };
    if scaled_cmp(e) == Ordering::Less {
        e -= 1;
    }

    let shift = digits as i64 - 1 - e;
    let (n, d) = if shift >= 0 {
        (&num * pow10(shift as u32), den.clone())
    } else {
        (num.clone(), &den * pow10((-shift) as u32))
    };
    let (q, r) = n.div_rem(&d);
    let mut mant = if &r * 2 >= d { q + BigInt::one() } else { q };
    if mant == pow10(digits as u32) {
        mant /= 10;
        e += 1;
    }
    let mant = mant.to_string();

    let body = if (-5..digits as i64).contains(&e) {
        if e < 0 {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), mant)
        } else {
            let point = (e + 1) as usize;
            if point == mant.len() {
                mant
            } else {
                format!("{}.{}", &mant[..point], &mant[point..])
            }
        }
    } else if mant.len() == 1 {
        format!("{mant}e{e}")
    } else {
        format!("{}.{}e{e}", &mant[..1], &mant[1..])
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn fmt(n: i64, d: i64, digits: usize) -> String {
        format_decimal(&BigInt::from(n), &BigInt::from(d), digits)
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(fmt(1, 2, 12), "0.500000000000");
        assert_eq!(fmt(2, 3, 4), "0.6667");
        assert_eq!(fmt(16481, 44800, 12), "0.367879464286");
        assert_eq!(fmt(2100, 1, 4), "2100");
        assert_eq!(fmt(21001, 10, 4), "2100");
        assert_eq!(fmt(99999, 100000, 3), "1.00");
        assert_eq!(fmt(1, 3_000_000_000, 3), "3.33e-10");
        assert_eq!(fmt(-1, 4, 2), "-0.25");
        assert_eq!(fmt(0, 7, 5), "0");
        assert_eq!(fmt(123456789, 1, 3), "1.23e8");
    }

    #[test]
    fn ratio_round_trip_is_close() {
        let r = ratio(1, 3);
        let x = Real::from_ratio(&r);
        let back = x.to_ratio();
        let err = (back - &r).abs() / &r;
        assert!(err < BigRational::new(BigInt::one(), BigInt::from(2).pow(180)));
    }

    #[test]
    fn exp_of_one() {
        let e = Real::one().exp();
        assert_eq!(
            e.to_decimal(40),
            "2.718281828459045235360287471352662497757"
        );
    }

    #[test]
    fn arithmetic_and_order() {
        let a = Real::from_ratio(&ratio(1, 4));
        let b = Real::from_ratio(&ratio(3, 4));
        assert_eq!((&a + &b), Real::one());
        assert!(a < b);
        assert_eq!((&a - &b).abs(), Real::from_ratio(&ratio(1, 2)));
        assert_eq!((&a * &b).to_f64(), 0.1875);
    }
}
