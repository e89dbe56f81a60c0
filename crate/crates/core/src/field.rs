//! The ambient field data: F = Q_p with p an odd prime, the unramified
//! quadratic extension E = F(xi) with xi^2 = epsilon a non-square unit,
//! and the four square classes of F^x.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Legendre symbol of `a` mod the odd prime `p`: +1, -1, or 0.
pub fn legendre(a: u64, p: u64) -> i8 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    let r = mod_pow(a, (p - 1) / 2, p);
    if r == 1 {
        1
    } else {
        -1
    }
}

pub fn mod_pow(b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc: u128 = 1;
    let mm = m as u128;
    let mut bb = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * bb % mm;
        }
        bb = bb * bb % mm;
        e >>= 1;
    }
    acc as u64
}

/// Square root mod an odd prime by Tonelli-Shanks. Returns a root r with
/// r^2 = a mod p, or None for a non-residue.
pub fn sqrt_mod_p(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if legendre(a, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(mod_pow(a, (p + 1) / 4, p));
    }
    // write p-1 = q * 2^s with q odd
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while legendre(z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = mod_pow(z, q, p);
    let mut t = mod_pow(a, q, p);
    let mut r = mod_pow(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = (tt as u128 * tt as u128 % p as u128) as u64;
            i += 1;
        }
        let b = mod_pow(c, 1 << (m - i - 1), p);
        m = i;
        c = (b as u128 * b as u128 % p as u128) as u64;
        t = (t as u128 * c as u128 % p as u128) as u64;
        r = (r as u128 * b as u128 % p as u128) as u64;
    }
    Some(r)
}

fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The four square classes of F^x, also used as torus parameters nu,
/// orbit twists mu, and elements of the rational-orbit group D_gamma.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum SquareClass {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "xi2")]
    Xi2,
    #[serde(rename = "pi")]
    Pi,
    #[serde(rename = "xi2pi")]
    Xi2Pi,
}

pub use SquareClass as Nu;
pub type MuLabel = SquareClass;

impl SquareClass {
    pub const ALL: [SquareClass; 4] =
        [SquareClass::One, SquareClass::Xi2, SquareClass::Pi, SquareClass::Xi2Pi];

    /// Valuation of a representative: 0 for unit classes, 1 for the rest.
    pub fn v(self) -> i64 {
        match self {
            SquareClass::One | SquareClass::Xi2 => 0,
            SquareClass::Pi | SquareClass::Xi2Pi => 1,
        }
    }

    /// Whether the unit part is a non-residue.
    pub fn twisted(self) -> bool {
        matches!(self, SquareClass::Xi2 | SquareClass::Xi2Pi)
    }

    pub fn from_bits(odd_val: bool, twisted: bool) -> Self {
        match (odd_val, twisted) {
            (false, false) => SquareClass::One,
            (false, true) => SquareClass::Xi2,
            (true, false) => SquareClass::Pi,
            (true, true) => SquareClass::Xi2Pi,
        }
    }

    /// Group law of F^x / (F^x)^2.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Self) -> Self {
        Self::from_bits(
            (self.v() + other.v()) % 2 == 1,
            self.twisted() ^ other.twisted(),
        )
    }

    /// +1 for the trivial class (a square), -1 otherwise.
    pub fn symbol(self) -> i8 {
        if self == SquareClass::One {
            1
        } else {
            -1
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SquareClass::One => "1",
            SquareClass::Xi2 => "xi2",
            SquareClass::Pi => "pi",
            SquareClass::Xi2Pi => "xi2pi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(SquareClass::One),
            "xi2" => Ok(SquareClass::Xi2),
            "pi" => Ok(SquareClass::Pi),
            "xi2pi" => Ok(SquareClass::Xi2Pi),
            other => Err(Error::InvalidNu(other.to_string())),
        }
    }
}

impl std::fmt::Display for SquareClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ambient arithmetic context. `precision` counts significant
/// half-uniformizer digits, so field elements of F and E carry
/// `precision / 2` whole digits per coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldContext {
    pub p: u64,
    pub precision: u32,
    pub epsilon: u64,
}

impl FieldContext {
    pub fn new(p: u64, precision: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::BadInput(format!("p = {p} is not an odd prime")));
        }
        if precision < 8 {
            return Err(Error::BadInput(format!(
                "precision {precision} below the minimum of 8 half-digits"
            )));
        }
        let epsilon = (2..p)
            .find(|&a| legendre(a, p) == -1)
            .expect("every odd prime has a non-residue");
        Ok(FieldContext { p, precision, epsilon })
    }

    /// Certified whole digits per coordinate.
    pub fn digits(&self) -> u32 {
        self.precision.div_ceil(2)
    }

    pub fn doubled(&self) -> Result<Self> {
        FieldContext::new(self.p, self.precision * 2)
    }

    /// Residue size q (here q = p).
    pub fn q(&self) -> u64 {
        self.p
    }

    pub fn legendre(&self, a: u64) -> i8 {
        legendre(a, self.p)
    }

    /// Square class of a small nonzero integer.
    pub fn class_of_int(&self, n: i64) -> SquareClass {
        assert!(n != 0);
        let mut v = 0;
        let mut m = n.unsigned_abs();
        while m.is_multiple_of(self.p) {
            m /= self.p;
            v += 1;
        }
        let mut lc = m % self.p;
        if n < 0 {
            lc = (self.p - lc) % self.p;
        }
        SquareClass::from_bits(v % 2 == 1, self.legendre(lc) == -1)
    }
}
