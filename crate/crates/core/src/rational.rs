//! Arbitrary-precision rationals, the value type of every orbital integral.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A reduced fraction with positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn zero() -> Self {
        ExactRational(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactRational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        ExactRational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0);
        ExactRational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// q^e for e >= 0.
    pub fn pow_u(q: u64, e: u32) -> Self {
        ExactRational(BigRational::from_integer(BigInt::from(q).pow(e)))
    }

    /// q^e for any integer e.
    pub fn pow_i(q: u64, e: i64) -> Self {
        let mag = BigInt::from(q).pow(e.unsigned_abs() as u32);
        if e >= 0 {
            ExactRational(BigRational::from_integer(mag))
        } else {
            ExactRational(BigRational::new(BigInt::one(), mag))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn scale_int(&self, n: i64) -> Self {
        ExactRational(&self.0 * BigRational::from_integer(BigInt::from(n)))
    }

    /// Render as "n/d" ("n" when d = 1).
    pub fn to_fraction_string(&self) -> String {
        if self.0.denom().is_one() {
            format!("{}", self.0.numer())
        } else {
            format!("{}/{}", self.0.numer(), self.0.denom())
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut parts = s.splitn(2, '/');
        let num: BigInt = parts.next()?.trim().parse().ok()?;
        let den: BigInt = match parts.next() {
            Some(d) => d.trim().parse().ok()?,
            None => BigInt::one(),
        };
        if den.is_zero() {
            return None;
        }
        Some(ExactRational(BigRational::new(num, den)))
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_fraction_string())
    }
}

impl Add for ExactRational {
    type Output = ExactRational;
    fn add(self, rhs: Self) -> Self {
        ExactRational(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a ExactRational> for ExactRational {
    type Output = ExactRational;
    fn add(self, rhs: &'a Self) -> Self {
        ExactRational(self.0 + &rhs.0)
    }
}

impl AddAssign for ExactRational {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for ExactRational {
    type Output = ExactRational;
    fn sub(self, rhs: Self) -> Self {
        ExactRational(self.0 - rhs.0)
    }
}

impl Mul for ExactRational {
    type Output = ExactRational;
    fn mul(self, rhs: Self) -> Self {
        ExactRational(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a ExactRational> for &'a ExactRational {
    type Output = ExactRational;
    fn mul(self, rhs: &'a ExactRational) -> ExactRational {
        ExactRational(&self.0 * &rhs.0)
    }
}

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> Self {
        ExactRational(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_and_positive_denominator() {
        let r = ExactRational::from_ratio(6, -4);
        assert_eq!(r.to_fraction_string(), "-3/2");
        assert_eq!(ExactRational::parse("-3/2"), Some(r));
    }

    #[test]
    fn negative_power() {
        assert_eq!(ExactRational::pow_i(5, -2), ExactRational::from_ratio(1, 25));
    }
}
