//! Truncated exact arithmetic in F = Q_p, in E = F(xi) with xi^2 = epsilon,
//! and in the ramified quadratic tower L = E(sqrt(nu)).
//!
//! Every quantity carries the modulus to which it is certified. A coordinate
//! is either exactly zero, a unit times a power of p known to `digits`
//! significant digits, or "small": congruent to 0 modulo p^bound with the
//! exact valuation out of reach. Subtraction of nearly equal values degrades
//! a Unit into a Small rather than inventing digits; any question the data
//! cannot answer surfaces as `PrecisionExhausted`.

use crate::error::{Error, Result};
use crate::field::{sqrt_mod_p, FieldContext, Nu, SquareClass};
use crate::halfint::HalfInt;
use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// p^k as a big integer.
pub fn pk(p: u64, k: u32) -> BigUint {
    BigUint::from(p).pow(k)
}

/// Inverse of a unit modulo p^k, by Newton lifting from the residue field.
fn inv_mod_pk(u: &BigUint, p: u64, k: u32) -> BigUint {
    let m = pk(p, k);
    let u0 = (u % p).to_u64_digits().first().copied().unwrap_or(0);
    debug_assert!(u0 % p != 0, "inverse of a non-unit");
    // inverse mod p by Fermat
    let mut x = BigUint::from(crate::field::mod_pow(u0, p - 2, p));
    let mut have: u32 = 1;
    let two = BigUint::from(2u32);
    while have < k {
        have = (have * 2).min(k);
        let mm = pk(p, have);
        // x <- x(2 - ux) mod p^have
        let ux = u % &mm * &x % &mm;
        let t = (&two + &mm - ux) % &mm;
        x = &x % &mm * t % &mm;
    }
    x % m
}

fn vp_biguint(c: &BigUint, p: u64) -> u32 {
    debug_assert!(!c.is_zero());
    let mut v = 0;
    let mut c = c.clone();
    let pb = BigUint::from(p);
    while (&c % &pb).is_zero() {
        c /= &pb;
        v += 1;
    }
    v
}

// ---------------------------------------------------------------------------
// Coordinates over F
// ---------------------------------------------------------------------------

/// One F-coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coord {
    /// Exactly zero.
    Zero,
    /// unit * p^val modulo p^(val+digits), with p not dividing unit.
    Unit { val: i64, digits: u32, unit: BigUint },
    /// Congruent to 0 modulo p^bound; the true valuation is unknown.
    Small { bound: i64 },
}

impl Coord {
    pub fn zero() -> Self {
        Coord::Zero
    }

    pub fn one(ctx: &FieldContext) -> Self {
        Coord::from_int(ctx, 1)
    }

    pub fn from_int(ctx: &FieldContext, n: i64) -> Self {
        if n == 0 {
            return Coord::Zero;
        }
        let neg = n < 0;
        let mag = BigUint::from(n.unsigned_abs());
        Coord::from_window_signed(ctx, 0, ctx.digits() + 40, mag, neg)
    }

    /// c * p^shift for a nonnegative mantissa known exactly.
    pub fn from_mantissa(ctx: &FieldContext, mant: &BigUint, shift: i64) -> Self {
        if mant.is_zero() {
            return Coord::Zero;
        }
        let e = vp_biguint(mant, ctx.p);
        let unit = mant / pk(ctx.p, e);
        let digits = ctx.digits();
        Coord::Unit { val: shift + e as i64, digits, unit: unit % pk(ctx.p, digits) }
    }

    fn from_window_signed(ctx: &FieldContext, scale: i64, rel: u32, mag: BigUint, neg: bool) -> Self {
        let m = pk(ctx.p, rel);
        let mut c = mag % &m;
        if neg && !c.is_zero() {
            c = &m - c;
        }
        Coord::from_window(ctx, scale, rel, c)
    }

    /// Interpret c (mod p^rel) at scale p^scale and normalize.
    fn from_window(ctx: &FieldContext, scale: i64, rel: u32, c: BigUint) -> Self {
        if c.is_zero() {
            return Coord::Small { bound: scale + rel as i64 };
        }
        let e = vp_biguint(&c, ctx.p);
        debug_assert!(e < rel);
        let digits = (rel - e).min(ctx.digits());
        let unit = c / pk(ctx.p, e) % pk(ctx.p, digits);
        Coord::Unit { val: scale + e as i64, digits, unit }
    }

    /// Exponent of the modulus to which this value is known (None = exact).
    pub fn known(&self) -> Option<i64> {
        match self {
            Coord::Zero => None,
            Coord::Unit { val, digits, .. } => Some(val + *digits as i64),
            Coord::Small { bound } => Some(*bound),
        }
    }

    /// Lower bound on the valuation (None = +infinity).
    pub fn val_lower_bound(&self) -> Option<i64> {
        match self {
            Coord::Zero => None,
            Coord::Unit { val, .. } => Some(*val),
            Coord::Small { bound } => Some(*bound),
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Coord::Zero)
    }

    pub fn exact_val(&self) -> Result<i64> {
        match self {
            Coord::Zero => Err(Error::ZeroValuation),
            Coord::Unit { val, .. } => Ok(*val),
            Coord::Small { bound } => Err(Error::PrecisionExhausted(format!(
                "valuation known only to be >= {bound}"
            ))),
        }
    }

    /// Certified test v(self) >= l.
    pub fn val_at_least(&self, l: i64) -> Result<bool> {
        match self {
            Coord::Zero => Ok(true),
            Coord::Unit { val, .. } => Ok(*val >= l),
            Coord::Small { bound } => {
                if *bound >= l {
                    Ok(true)
                } else {
                    Err(Error::PrecisionExhausted(format!(
                        "cannot compare valuation >= {l} against bound {bound}"
                    )))
                }
            }
        }
    }

    /// Leading coefficient in the residue field.
    pub fn leading(&self, ctx: &FieldContext) -> Result<u64> {
        match self {
            Coord::Zero => Err(Error::ZeroValuation),
            Coord::Small { .. } => Err(Error::PrecisionExhausted(
                "leading coefficient below certified digits".into(),
            )),
            Coord::Unit { unit, .. } => {
                Ok((unit % ctx.p).to_u64_digits().first().copied().unwrap_or(0))
            }
        }
    }

    /// Residue of self / p^scale modulo p^rel; caller guarantees scale <= v.
    fn residue_scaled(&self, ctx: &FieldContext, scale: i64, rel: u32) -> BigUint {
        match self {
            Coord::Zero | Coord::Small { .. } => BigUint::zero(),
            Coord::Unit { val, unit, .. } => {
                debug_assert!(*val >= scale);
                let sh = (*val - scale) as u32;
                if sh >= rel {
                    BigUint::zero()
                } else {
                    unit * pk(ctx.p, sh) % pk(ctx.p, rel)
                }
            }
        }
    }

    pub fn add(ctx: &FieldContext, a: &Coord, b: &Coord) -> Coord {
        match (a, b) {
            (Coord::Zero, x) | (x, Coord::Zero) => x.clone(),
            _ => {
                let known = a.known().unwrap().min(b.known().unwrap());
                let s = a.val_lower_bound().unwrap().min(b.val_lower_bound().unwrap());
                if known <= s {
                    return Coord::Small { bound: known };
                }
                let rel = (known - s) as u32;
                let m = pk(ctx.p, rel);
                let c = (a.residue_scaled(ctx, s, rel) + b.residue_scaled(ctx, s, rel)) % m;
                Coord::from_window(ctx, s, rel, c)
            }
        }
    }

    pub fn neg(ctx: &FieldContext, a: &Coord) -> Coord {
        match a {
            Coord::Zero => Coord::Zero,
            Coord::Small { bound } => Coord::Small { bound: *bound },
            Coord::Unit { val, digits, unit } => {
                let m = pk(ctx.p, *digits);
                Coord::Unit { val: *val, digits: *digits, unit: (&m - unit) % m }
            }
        }
    }

    pub fn sub(ctx: &FieldContext, a: &Coord, b: &Coord) -> Coord {
        Coord::add(ctx, a, &Coord::neg(ctx, b))
    }

    pub fn mul(ctx: &FieldContext, a: &Coord, b: &Coord) -> Coord {
        match (a, b) {
            (Coord::Zero, _) | (_, Coord::Zero) => Coord::Zero,
            (Coord::Small { bound }, x) | (x, Coord::Small { bound }) => {
                match x.val_lower_bound() {
                    Some(v) => Coord::Small { bound: bound + v },
                    None => Coord::Zero,
                }
            }
            (
                Coord::Unit { val: va, digits: da, unit: ua },
                Coord::Unit { val: vb, digits: db, unit: ub },
            ) => {
                let digits = (*da).min(*db);
                let m = pk(ctx.p, digits);
                Coord::Unit { val: va + vb, digits, unit: ua % &m * (ub % &m) % &m }
            }
        }
    }

    pub fn inv(ctx: &FieldContext, a: &Coord) -> Result<Coord> {
        match a {
            Coord::Zero => Err(Error::DivisionByZero),
            Coord::Small { .. } => Err(Error::PrecisionExhausted(
                "division by a value not certified nonzero".into(),
            )),
            Coord::Unit { val, digits, unit } => Ok(Coord::Unit {
                val: -val,
                digits: *digits,
                unit: inv_mod_pk(unit, ctx.p, *digits),
            }),
        }
    }

    pub fn div(ctx: &FieldContext, a: &Coord, b: &Coord) -> Result<Coord> {
        Ok(Coord::mul(ctx, a, &Coord::inv(ctx, b)?))
    }

    /// Multiply by p^j.
    pub fn shift(&self, j: i64) -> Coord {
        match self {
            Coord::Zero => Coord::Zero,
            Coord::Small { bound } => Coord::Small { bound: bound + j },
            Coord::Unit { val, digits, unit } => {
                Coord::Unit { val: val + j, digits: *digits, unit: unit.clone() }
            }
        }
    }

    pub fn scale_int(ctx: &FieldContext, n: i64, a: &Coord) -> Coord {
        Coord::mul(ctx, &Coord::from_int(ctx, n), a)
    }

    /// Equality on all jointly certified digits.
    pub fn congruent(ctx: &FieldContext, a: &Coord, b: &Coord) -> bool {
        let d = Coord::sub(ctx, a, b);
        match d {
            Coord::Zero | Coord::Small { .. } => true,
            Coord::Unit { .. } => false,
        }
    }

    /// p-adic digits of the unit part, little-endian.
    pub fn digit_list(&self, ctx: &FieldContext) -> Vec<u64> {
        match self {
            Coord::Unit { digits, unit, .. } => {
                let mut out = Vec::with_capacity(*digits as usize);
                let mut c = unit.clone();
                let pb = BigUint::from(ctx.p);
                for _ in 0..*digits {
                    out.push((&c % &pb).to_u64_digits().first().copied().unwrap_or(0));
                    c /= &pb;
                }
                out
            }
            _ => Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// E = F(xi)
// ---------------------------------------------------------------------------

/// Element a + b*xi of the unramified quadratic extension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ext {
    pub a: Coord,
    pub b: Coord,
}

impl Ext {
    pub fn zero() -> Self {
        Ext { a: Coord::Zero, b: Coord::Zero }
    }

    pub fn one(ctx: &FieldContext) -> Self {
        Ext { a: Coord::one(ctx), b: Coord::Zero }
    }

    pub fn from_f(c: Coord) -> Self {
        Ext { a: c, b: Coord::Zero }
    }

    pub fn from_ints(ctx: &FieldContext, a: i64, b: i64) -> Self {
        Ext { a: Coord::from_int(ctx, a), b: Coord::from_int(ctx, b) }
    }

    pub fn xi(ctx: &FieldContext) -> Self {
        Ext { a: Coord::Zero, b: Coord::one(ctx) }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.a.is_exact_zero() && self.b.is_exact_zero()
    }

    pub fn add(ctx: &FieldContext, x: &Ext, y: &Ext) -> Ext {
        Ext { a: Coord::add(ctx, &x.a, &y.a), b: Coord::add(ctx, &x.b, &y.b) }
    }

    pub fn sub(ctx: &FieldContext, x: &Ext, y: &Ext) -> Ext {
        Ext { a: Coord::sub(ctx, &x.a, &y.a), b: Coord::sub(ctx, &x.b, &y.b) }
    }

    pub fn neg(ctx: &FieldContext, x: &Ext) -> Ext {
        Ext { a: Coord::neg(ctx, &x.a), b: Coord::neg(ctx, &x.b) }
    }

    pub fn mul(ctx: &FieldContext, x: &Ext, y: &Ext) -> Ext {
        let eps = Coord::from_int(ctx, ctx.epsilon as i64);
        let aa = Coord::mul(ctx, &x.a, &y.a);
        let bb = Coord::mul(ctx, &x.b, &y.b);
        let ab = Coord::mul(ctx, &x.a, &y.b);
        let ba = Coord::mul(ctx, &x.b, &y.a);
        Ext {
            a: Coord::add(ctx, &aa, &Coord::mul(ctx, &eps, &bb)),
            b: Coord::add(ctx, &ab, &ba),
        }
    }

    pub fn mul_f(ctx: &FieldContext, x: &Ext, c: &Coord) -> Ext {
        Ext { a: Coord::mul(ctx, &x.a, c), b: Coord::mul(ctx, &x.b, c) }
    }

    /// Galois conjugate: xi -> -xi.
    pub fn theta(ctx: &FieldContext, x: &Ext) -> Ext {
        Ext { a: x.a.clone(), b: Coord::neg(ctx, &x.b) }
    }

    /// Norm to F: a^2 - epsilon b^2.
    pub fn norm(ctx: &FieldContext, x: &Ext) -> Coord {
        let eps = Coord::from_int(ctx, ctx.epsilon as i64);
        let a2 = Coord::mul(ctx, &x.a, &x.a);
        let b2 = Coord::mul(ctx, &x.b, &x.b);
        Coord::sub(ctx, &a2, &Coord::mul(ctx, &eps, &b2))
    }

    pub fn trace(ctx: &FieldContext, x: &Ext) -> Coord {
        Coord::scale_int(ctx, 2, &x.a)
    }

    pub fn inv(ctx: &FieldContext, x: &Ext) -> Result<Ext> {
        let n = Ext::norm(ctx, x);
        let ninv = Coord::inv(ctx, &n)?;
        let conj = Ext::theta(ctx, x);
        Ok(Ext::mul_f(ctx, &conj, &ninv))
    }

    pub fn div(ctx: &FieldContext, x: &Ext, y: &Ext) -> Result<Ext> {
        Ok(Ext::mul(ctx, x, &Ext::inv(ctx, y)?))
    }

    pub fn shift(&self, j: i64) -> Ext {
        Ext { a: self.a.shift(j), b: self.b.shift(j) }
    }

    /// Exact valuation when certified. Unramified, so integral.
    pub fn exact_val(&self) -> Result<i64> {
        let mut best: Option<i64> = None;
        let mut small_floor: Option<i64> = None;
        for c in [&self.a, &self.b] {
            match c {
                Coord::Zero => {}
                Coord::Unit { val, .. } => {
                    best = Some(best.map_or(*val, |b| b.min(*val)));
                }
                Coord::Small { bound } => {
                    small_floor = Some(small_floor.map_or(*bound, |b| b.min(*bound)));
                }
            }
        }
        match (best, small_floor) {
            (Some(v), None) => Ok(v),
            (Some(v), Some(s)) if v <= s => Ok(v),
            (None, None) => Err(Error::ZeroValuation),
            _ => Err(Error::PrecisionExhausted("E-valuation not certified".into())),
        }
    }

    pub fn val_lower_bound(&self) -> Option<i64> {
        match (self.a.val_lower_bound(), self.b.val_lower_bound()) {
            (None, None) => None,
            (Some(v), None) | (None, Some(v)) => Some(v),
            (Some(v), Some(w)) => Some(v.min(w)),
        }
    }

    pub fn val_at_least(&self, l: i64) -> Result<bool> {
        Ok(self.a.val_at_least(l)? && self.b.val_at_least(l)?)
    }

    /// A certified "v < l" witness exists (some Unit coordinate below l).
    pub fn val_below(&self, l: i64) -> bool {
        for c in [&self.a, &self.b] {
            if let Coord::Unit { val, .. } = c {
                if *val < l {
                    return true;
                }
            }
        }
        false
    }

    pub fn congruent(ctx: &FieldContext, x: &Ext, y: &Ext) -> bool {
        Coord::congruent(ctx, &x.a, &y.a) && Coord::congruent(ctx, &x.b, &y.b)
    }

    /// The F-part, requiring the xi-coordinate to vanish at certified depth.
    pub fn expect_f(&self, ctx: &FieldContext) -> Result<Coord> {
        let _ = ctx;
        match &self.b {
            Coord::Zero | Coord::Small { .. } => Ok(self.a.clone()),
            Coord::Unit { .. } => {
                Err(Error::BadInput("value expected to lie in F has a xi-part".into()))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// L = E(sqrt(nu)) for ramified nu
// ---------------------------------------------------------------------------

/// Element a + b*sqrt(nu) of the ramified tower; nu in {pi, xi^2 pi}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    pub a: Ext,
    pub b: Ext,
    pub nu: Nu,
}

impl Tower {
    pub fn from_e(a: Ext, nu: Nu) -> Self {
        Tower { a, b: Ext::zero(), nu }
    }

    fn nu_coord(ctx: &FieldContext, nu: Nu) -> Coord {
        match nu {
            Nu::Pi => Coord::from_int(ctx, 1).shift(1),
            Nu::Xi2Pi => Coord::from_int(ctx, ctx.epsilon as i64).shift(1),
            _ => unreachable!("tower built over a ramified nu"),
        }
    }

    pub fn add(ctx: &FieldContext, x: &Tower, y: &Tower) -> Tower {
        debug_assert_eq!(x.nu, y.nu);
        Tower { a: Ext::add(ctx, &x.a, &y.a), b: Ext::add(ctx, &x.b, &y.b), nu: x.nu }
    }

    pub fn sub(ctx: &FieldContext, x: &Tower, y: &Tower) -> Tower {
        debug_assert_eq!(x.nu, y.nu);
        Tower { a: Ext::sub(ctx, &x.a, &y.a), b: Ext::sub(ctx, &x.b, &y.b), nu: x.nu }
    }

    pub fn mul(ctx: &FieldContext, x: &Tower, y: &Tower) -> Tower {
        debug_assert_eq!(x.nu, y.nu);
        let nu = Tower::nu_coord(ctx, x.nu);
        let ac = Ext::mul(ctx, &x.a, &y.a);
        let bd = Ext::mul(ctx, &x.b, &y.b);
        let ad = Ext::mul(ctx, &x.a, &y.b);
        let bc = Ext::mul(ctx, &x.b, &y.a);
        Tower {
            a: Ext::add(ctx, &ac, &Ext::mul_f(ctx, &bd, &nu)),
            b: Ext::add(ctx, &ad, &bc),
            nu: x.nu,
        }
    }

    /// theta_nu: xi -> -xi with sqrt(nu) fixed.
    pub fn theta(ctx: &FieldContext, x: &Tower) -> Tower {
        Tower { a: Ext::theta(ctx, &x.a), b: Ext::theta(ctx, &x.b), nu: x.nu }
    }

    /// sqrt(nu) -> -sqrt(nu).
    pub fn conj(ctx: &FieldContext, x: &Tower) -> Tower {
        Tower { a: x.a.clone(), b: Ext::neg(ctx, &x.b), nu: x.nu }
    }

    pub fn inv(ctx: &FieldContext, x: &Tower) -> Result<Tower> {
        // 1/(A + B sqrt(nu)) = (A - B sqrt(nu)) / (A^2 - nu B^2)
        let nu = Tower::nu_coord(ctx, x.nu);
        let a2 = Ext::mul(ctx, &x.a, &x.a);
        let b2 = Ext::mul(ctx, &x.b, &x.b);
        let den = Ext::sub(ctx, &a2, &Ext::mul_f(ctx, &b2, &nu));
        let di = Ext::inv(ctx, &den)?;
        Ok(Tower {
            a: Ext::mul(ctx, &x.a, &di),
            b: Ext::neg(ctx, &Ext::mul(ctx, &x.b, &di)),
            nu: x.nu,
        })
    }

    pub fn div(ctx: &FieldContext, x: &Tower, y: &Tower) -> Result<Tower> {
        Ok(Tower::mul(ctx, x, &Tower::inv(ctx, y)?))
    }

    /// Doubled valuation: min(2 v(A), 2 v(B) + 1); the two parities never tie.
    pub fn exact_val2(&self) -> Result<i64> {
        // per component: certified doubled valuation if available, plus a floor
        fn comp(e: &Ext, odd: bool) -> (Option<i64>, Option<i64>) {
            let shift = if odd { 1 } else { 0 };
            match e.exact_val() {
                Ok(v) => (Some(2 * v + shift), Some(2 * v + shift)),
                Err(Error::ZeroValuation) => (None, None),
                Err(_) => (None, e.val_lower_bound().map(|v| 2 * v + shift)),
            }
        }
        let (va, fa) = comp(&self.a, false);
        let (vb, fb) = comp(&self.b, true);
        match [va, vb].into_iter().flatten().min() {
            None => {
                if fa.is_none() && fb.is_none() {
                    Err(Error::ZeroValuation)
                } else {
                    Err(Error::PrecisionExhausted("tower valuation not certified".into()))
                }
            }
            Some(v) => {
                let a_ok = va.is_some() || fa.is_none_or(|f| f >= v);
                let b_ok = vb.is_some() || fb.is_none_or(|f| f >= v);
                if a_ok && b_ok {
                    Ok(v)
                } else {
                    Err(Error::PrecisionExhausted("tower valuation not certified".into()))
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// The public scalar type
// ---------------------------------------------------------------------------

/// The level of a scalar in the tower F < E < L.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Level {
    F,
    E,
    L,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A truncated element of F, E, or L = E(sqrt(nu)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PadicScalar {
    F(Coord),
    E(Ext),
    L(Tower),
}

impl PadicScalar {
    pub fn from_int(ctx: &FieldContext, n: i64) -> Self {
        PadicScalar::F(Coord::from_int(ctx, n))
    }

    pub fn xi(ctx: &FieldContext) -> Self {
        PadicScalar::E(Ext::xi(ctx))
    }

    pub fn level(&self) -> Level {
        match self {
            PadicScalar::F(_) => Level::F,
            PadicScalar::E(_) => Level::E,
            PadicScalar::L(_) => Level::L,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        match self {
            PadicScalar::F(c) => c.is_exact_zero(),
            PadicScalar::E(e) => e.is_exact_zero(),
            PadicScalar::L(t) => t.a.is_exact_zero() && t.b.is_exact_zero(),
        }
    }

    fn coords(&self) -> Vec<&Coord> {
        match self {
            PadicScalar::F(c) => vec![c],
            PadicScalar::E(e) => vec![&e.a, &e.b],
            PadicScalar::L(t) => vec![&t.a.a, &t.a.b, &t.b.a, &t.b.b],
        }
    }

    pub fn as_ext(&self, _ctx: &FieldContext) -> Result<Ext> {
        match self {
            PadicScalar::F(c) => Ok(Ext::from_f(c.clone())),
            PadicScalar::E(e) => Ok(e.clone()),
            PadicScalar::L(_) => Err(Error::BadInput("tower element used at level E".into())),
        }
    }

    fn as_tower(&self, nu: Nu) -> Result<Tower> {
        match self {
            PadicScalar::F(c) => Ok(Tower::from_e(Ext::from_f(c.clone()), nu)),
            PadicScalar::E(e) => Ok(Tower::from_e(e.clone(), nu)),
            PadicScalar::L(t) => {
                if t.nu == nu {
                    Ok(t.clone())
                } else {
                    Err(Error::InvalidNu("mixed tower parameters".into()))
                }
            }
        }
    }

    /// A result that retains no certified digit anywhere is unusable.
    fn check_informative(self) -> Result<Self> {
        let starved = {
            let coords = self.coords();
            coords.iter().all(|c| matches!(c, Coord::Small { .. }))
        };
        if starved {
            return Err(Error::PrecisionExhausted(
                "cancellation left no certified digits".into(),
            ));
        }
        Ok(self)
    }
}

/// Field arithmetic with automatic level promotion F -> E -> L.
pub fn arith(
    ctx: &FieldContext,
    a: &PadicScalar,
    b: &PadicScalar,
    op: ArithOp,
) -> Result<PadicScalar> {
    use PadicScalar as S;
    // promote to the widest level present
    let out = if matches!(a, S::L(_)) || matches!(b, S::L(_)) {
        let nu = match (a, b) {
            (S::L(t), _) | (_, S::L(t)) => t.nu,
            _ => unreachable!(),
        };
        let x = a.as_tower(nu)?;
        let y = b.as_tower(nu)?;
        let r = match op {
            ArithOp::Add => Tower::add(ctx, &x, &y),
            ArithOp::Sub => Tower::sub(ctx, &x, &y),
            ArithOp::Mul => Tower::mul(ctx, &x, &y),
            ArithOp::Div => Tower::div(ctx, &x, &y)?,
        };
        S::L(r)
    } else if matches!(a, S::E(_)) || matches!(b, S::E(_)) {
        let x = a.as_ext(ctx)?;
        let y = b.as_ext(ctx)?;
        let r = match op {
            ArithOp::Add => Ext::add(ctx, &x, &y),
            ArithOp::Sub => Ext::sub(ctx, &x, &y),
            ArithOp::Mul => Ext::mul(ctx, &x, &y),
            ArithOp::Div => Ext::div(ctx, &x, &y)?,
        };
        S::E(r)
    } else {
        let (S::F(x), S::F(y)) = (a, b) else { unreachable!() };
        let r = match op {
            ArithOp::Add => Coord::add(ctx, x, y),
            ArithOp::Sub => Coord::sub(ctx, x, y),
            ArithOp::Mul => Coord::mul(ctx, x, y),
            ArithOp::Div => Coord::div(ctx, x, y)?,
        };
        S::F(r)
    };
    out.check_informative()
}

/// Equality of scalars on all jointly certified digits.
pub fn congruent(ctx: &FieldContext, a: &PadicScalar, b: &PadicScalar) -> bool {
    match arith(ctx, a, b, ArithOp::Sub) {
        Ok(d) => d.coords().iter().all(|c| matches!(c, Coord::Zero | Coord::Small { .. })),
        // total cancellation: equal on everything certified
        Err(Error::PrecisionExhausted(_)) => true,
        Err(_) => false,
    }
}

/// v(a) in half-integer units (stored doubled).
pub fn valuation(a: &PadicScalar) -> Result<HalfInt> {
    match a {
        PadicScalar::F(c) => Ok(HalfInt::from_int(c.exact_val()?)),
        PadicScalar::E(e) => Ok(HalfInt::from_int(e.exact_val()?)),
        PadicScalar::L(t) => Ok(HalfInt::from_twice(t.exact_val2()?)),
    }
}

/// Residue-field image of pi^{-v(a)} a.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LeadingCoeff {
    F(u64),
    /// Coordinates of the residue with respect to {1, xi-bar}.
    E(u64, u64),
}

pub fn leading_coeff(ctx: &FieldContext, a: &PadicScalar) -> Result<LeadingCoeff> {
    match a {
        PadicScalar::F(c) => Ok(LeadingCoeff::F(c.leading(ctx)?)),
        PadicScalar::E(e) => {
            let v = e.exact_val()?;
            let lead = |c: &Coord| -> Result<u64> {
                match c {
                    Coord::Zero => Ok(0),
                    Coord::Small { bound } => {
                        if *bound > v {
                            Ok(0)
                        } else {
                            Err(Error::PrecisionExhausted("leading pair not certified".into()))
                        }
                    }
                    Coord::Unit { val, .. } => {
                        if *val > v {
                            Ok(0)
                        } else {
                            c.leading(ctx)
                        }
                    }
                }
            };
            Ok(LeadingCoeff::E(lead(&e.a)?, lead(&e.b)?))
        }
        PadicScalar::L(_) => Err(Error::BadInput("leading coefficient at level L".into())),
    }
}

/// xi -> -xi (and the identity on F); sqrt(nu) is fixed.
pub fn conj_theta(ctx: &FieldContext, a: &PadicScalar) -> PadicScalar {
    match a {
        PadicScalar::F(c) => PadicScalar::F(c.clone()),
        PadicScalar::E(e) => PadicScalar::E(Ext::theta(ctx, e)),
        PadicScalar::L(t) => PadicScalar::L(Tower::theta(ctx, t)),
    }
}

/// sqrt(nu) -> -sqrt(nu); the identity below level L.
pub fn conj_tower(ctx: &FieldContext, a: &PadicScalar) -> PadicScalar {
    match a {
        PadicScalar::L(t) => PadicScalar::L(Tower::conj(ctx, t)),
        other => other.clone(),
    }
}

/// Quadratic symbol (a/F) for a nonzero F-scalar: +1 iff a is a square.
pub fn quad_symbol(ctx: &FieldContext, a: &Coord) -> Result<i8> {
    let v = a.exact_val()?;
    if v.rem_euclid(2) == 1 {
        return Ok(-1);
    }
    let lc = a.leading(ctx)?;
    Ok(ctx.legendre(lc))
}

/// Square class of a nonzero F-scalar.
pub fn square_class(ctx: &FieldContext, a: &Coord) -> Result<SquareClass> {
    let v = a.exact_val()?;
    let lc = a.leading(ctx)?;
    Ok(SquareClass::from_bits(v.rem_euclid(2) == 1, ctx.legendre(lc) == -1))
}

/// Square root of a square F-scalar by Hensel lifting (p odd). The root is
/// normalized so its leading coefficient lies in 1..=(p-1)/2; downstream
/// formulas are insensitive to this choice.
pub fn hensel_sqrt(ctx: &FieldContext, a: &Coord) -> Result<Coord> {
    let v = a.exact_val()?;
    if v.rem_euclid(2) != 0 {
        return Err(Error::NotASquare);
    }
    let (digits, unit) = match a {
        Coord::Unit { digits, unit, .. } => (*digits, unit.clone()),
        _ => unreachable!(),
    };
    let lc = a.leading(ctx)?;
    let r0 = sqrt_mod_p(lc, ctx.p).ok_or(Error::NotASquare)?;
    // Newton: r <- (r + u/r)/2, doubling certified digits each round
    let mut r = BigUint::from(r0);
    let mut have: u32 = 1;
    let inv2 = inv_mod_pk(&BigUint::from(2u32), ctx.p, digits);
    while have < digits {
        have = (have * 2).min(digits);
        let m = pk(ctx.p, have);
        let rinv = inv_mod_pk(&r, ctx.p, have);
        r = (&r + &unit % &m * rinv) % &m * &inv2 % &m;
    }
    let lead = (&r % ctx.p).to_u64_digits().first().copied().unwrap_or(0);
    if lead > (ctx.p - 1) / 2 {
        let m = pk(ctx.p, digits);
        r = &m - r;
    }
    Ok(Coord::Unit { val: v / 2, digits, unit: r })
}

/// Count residues x mod pi^depth with v(x^2 - a^2) >= l, by enumeration.
/// `a` may lie in F or in E (the lemma it checks holds over the maximal
/// unramified extension).
pub fn count_congruence(
    ctx: &FieldContext,
    a: &PadicScalar,
    l: i64,
    depth: u32,
) -> Result<u64> {
    if matches!(a, PadicScalar::L(_)) {
        return Err(Error::BadInput("count_congruence needs an unramified argument".into()));
    }
    let total = pk(ctx.p, depth);
    let total = total
        .to_u64_digits()
        .first()
        .copied()
        .filter(|_| total.bits() <= 40)
        .ok_or_else(|| Error::BadInput("enumeration depth too large".into()))?;
    let a_ext = a.as_ext(ctx)?;
    let a2 = Ext::mul(ctx, &a_ext, &a_ext);
    let mut count = 0u64;
    for x in 0..total {
        let xc = Coord::from_mantissa(ctx, &BigUint::from(x), 0);
        let x2 = Coord::mul(ctx, &xc, &xc);
        let d = Ext::sub(ctx, &Ext::from_f(x2), &a2);
        if d.val_at_least(l)? {
            count += 1;
        }
    }
    Ok(count)
}

// ---------------------------------------------------------------------------
// Serialization (decimal digit lists, little-endian, per coordinate)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoordJson {
    Zero,
    Small { bound: i64 },
    Unit { val: i64, digits: Vec<u64> },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct ScalarJson {
    pub level: Level,
    /// Doubled valuation when certified.
    pub val2: Option<i64>,
    /// Certified half-digit count.
    pub known2: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nu: Option<Nu>,
    pub coords: Vec<CoordJson>,
}

fn coord_to_json(ctx: &FieldContext, c: &Coord) -> CoordJson {
    match c {
        Coord::Zero => CoordJson::Zero,
        Coord::Small { bound } => CoordJson::Small { bound: *bound },
        Coord::Unit { val, .. } => CoordJson::Unit { val: *val, digits: c.digit_list(ctx) },
    }
}

fn coord_from_json(ctx: &FieldContext, j: &CoordJson) -> Result<Coord> {
    Ok(match j {
        CoordJson::Zero => Coord::Zero,
        CoordJson::Small { bound } => Coord::Small { bound: *bound },
        CoordJson::Unit { val, digits } => {
            let mut unit = BigUint::zero();
            for &d in digits.iter().rev() {
                if d >= ctx.p {
                    return Err(Error::BadInput(format!("digit {d} out of range")));
                }
                unit = unit * ctx.p + d;
            }
            if (&unit % ctx.p).is_zero() {
                return Err(Error::BadInput("unit part divisible by p".into()));
            }
            let n = digits.len() as u32;
            Coord::Unit { val: *val, digits: n.min(ctx.digits()), unit: unit % pk(ctx.p, n.min(ctx.digits())) }
        }
    })
}

pub fn scalar_to_json(ctx: &FieldContext, s: &PadicScalar) -> ScalarJson {
    let coords: Vec<CoordJson> = s.coords().into_iter().map(|c| coord_to_json(ctx, c)).collect();
    let val2 = valuation(s).ok().map(|h| h.twice());
    let known2 = s
        .coords()
        .iter()
        .filter_map(|c| c.known())
        .min()
        .map(|k| 2 * k);
    let nu = match s {
        PadicScalar::L(t) => Some(t.nu),
        _ => None,
    };
    ScalarJson { level: s.level(), val2, known2, nu, coords }
}

pub fn scalar_from_json(ctx: &FieldContext, j: &ScalarJson) -> Result<PadicScalar> {
    let cs: Vec<Coord> =
        j.coords.iter().map(|c| coord_from_json(ctx, c)).collect::<Result<_>>()?;
    match (j.level, cs.len()) {
        (Level::F, 1) => Ok(PadicScalar::F(cs[0].clone())),
        (Level::E, 2) => Ok(PadicScalar::E(Ext { a: cs[0].clone(), b: cs[1].clone() })),
        (Level::L, 4) => {
            let nu = j.nu.ok_or_else(|| Error::BadInput("tower scalar without nu".into()))?;
            if nu.v() == 0 {
                return Err(Error::InvalidNu("tower over an unramified nu".into()));
            }
            Ok(PadicScalar::L(Tower {
                a: Ext { a: cs[0].clone(), b: cs[1].clone() },
                b: Ext { a: cs[2].clone(), b: cs[3].clone() },
                nu,
            }))
        }
        (lvl, n) => Err(Error::BadInput(format!("level {lvl:?} with {n} coordinates"))),
    }
}
