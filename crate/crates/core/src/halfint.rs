//! Half-integer valuations, stored doubled so the ramified tower's
//! fractional valuations stay exact integers internally.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// An element of (1/2)Z. `twice` holds 2v.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };

    pub fn from_int(n: i64) -> Self {
        HalfInt { twice: 2 * n }
    }

    pub fn from_twice(t: i64) -> Self {
        HalfInt { twice: t }
    }

    pub fn twice(self) -> i64 {
        self.twice
    }

    pub fn is_integral(self) -> bool {
        self.twice % 2 == 0
    }

    /// The integer value; panics on a genuine half-integer.
    pub fn to_int(self) -> i64 {
        assert!(self.is_integral(), "half-integer where an integer was required");
        self.twice / 2
    }

    pub fn floor(self) -> i64 {
        self.twice.div_euclid(2)
    }

    pub fn ceil(self) -> i64 {
        (self.twice + 1).div_euclid(2)
    }

    pub fn is_negative(self) -> bool {
        self.twice < 0
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other { self } else { other }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other { self } else { other }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl std::str::FromStr for HalfInt {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(num) = s.strip_suffix("/2") {
            let t: i64 = num.trim().parse().map_err(|e| format!("{e}"))?;
            Ok(HalfInt::from_twice(t))
        } else {
            let n: i64 = s.trim().parse().map_err(|e| format!("{e}"))?;
            Ok(HalfInt::from_int(n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_ceil_on_halves() {
        let h = HalfInt::from_twice(7); // 7/2
        assert_eq!(h.floor(), 3);
        assert_eq!(h.ceil(), 4);
        let n = HalfInt::from_twice(-7); // -7/2
        assert_eq!(n.floor(), -4);
        assert_eq!(n.ceil(), -3);
        assert_eq!(HalfInt::from_int(3).floor(), 3);
    }

    #[test]
    fn parse_roundtrip() {
        assert_eq!("7/2".parse::<HalfInt>().unwrap(), HalfInt::from_twice(7));
        assert_eq!("4".parse::<HalfInt>().unwrap(), HalfInt::from_int(4));
        assert_eq!(HalfInt::from_twice(7).to_string(), "7/2");
        assert_eq!(HalfInt::from_twice(8).to_string(), "4");
    }
}
