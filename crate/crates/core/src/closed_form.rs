//! Case-by-case closed forms for the orbital integrals
//! O_{gamma_mu}(1_{S(O_F)}) and for the kappa-weighted sums over rational
//! orbits.
//!
//! Shared building blocks: G(M) = (q^ceil(M/2) - 1)/(q - 1), and the count
//! over the residual full-cell region
//!
//!   C(A, X, mu) = sum over j in (0, 2A] with j = X + v(mu) mod 2
//!                 of q^floor(j/4),
//!
//! which collapses to Sum_{l=1}^{A} q^{floor(l/2)} for even parity and to
//! Sum_{l=0}^{A-1} q^{floor(l/2)} for odd parity. The parity argument X is
//! M13 (cases with M12 strictly below M13) or M12 (equal-M cases); the two
//! branches genuinely differ and collapsing them to the even one breaks
//! exactness against the lattice count.

use crate::error::{Error, Result};
use crate::field::{MuLabel, Nu, SquareClass};
use crate::halfint::HalfInt;
use crate::orbit::{
    delta, stabilizer_order, EndoscopicGroup, KappaCharacter, OrbitInvariants, TorusType,
};
use crate::rational::ExactRational;

/// The matched proposition case for a set of invariants.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CaseTag {
    /// x = 0 branch (types I and II only).
    XZero,
    I1,
    I2,
    I3,
    I4,
    II1,
    II2,
    II3,
    /// M12 > M13 (`swapped = false`) or M23 > M13 (`swapped = true`).
    II4 { swapped: bool },
    II5,
    III1,
    III2,
    III3,
    III4,
    III5,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::XZero => "x=0",
            CaseTag::I1 => "I.1",
            CaseTag::I2 => "I.2",
            CaseTag::I3 => "I.3",
            CaseTag::I4 => "I.4",
            CaseTag::II1 => "II.1",
            CaseTag::II2 => "II.2",
            CaseTag::II3 => "II.3",
            CaseTag::II4 { swapped: false } => "II.4",
            CaseTag::II4 { swapped: true } => "II.4s",
            CaseTag::II5 => "II.5",
            CaseTag::III1 => "III.1",
            CaseTag::III2 => "III.2",
            CaseTag::III3 => "III.3",
            CaseTag::III4 => "III.4",
            CaseTag::III5 => "III.5",
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// q^e as an exact rational (e may be negative).
fn qp(q: u64, e: i64) -> ExactRational {
    ExactRational::pow_i(q, e)
}

/// (q^e - 1)/(q - 1) for e >= 0.
fn geom(q: u64, e: i64) -> ExactRational {
    assert!(e >= 0);
    (qp(q, e) - ExactRational::one()) * ExactRational::from_ratio(1, q as i64 - 1)
}

/// G(M) = (q^ceil(M/2) - 1)/(q - 1).
fn g_of(q: u64, m: HalfInt) -> ExactRational {
    let e = (m.twice() + 3).div_euclid(4); // ceil(M/2)
    geom(q, e.max(0))
}

/// Sum_{l=1}^{A} q^{floor(l/2)} = 2 G(A) - 1 + delta_A(1) q^{floor(A/2)}.
fn sum_q_floor(q: u64, a: i64) -> ExactRational {
    if a <= 0 {
        return ExactRational::zero();
    }
    let d = if a % 2 == 0 { 1 } else { 0 };
    geom(q, (a + 1) / 2).scale_int(2) - ExactRational::one() + qp(q, a / 2).scale_int(d)
}

/// The residual full-cell count C(A, X, mu).
fn c_region_sum(q: u64, a: i64, x: HalfInt, mu: MuLabel) -> ExactRational {
    debug_assert!(x.is_integral());
    if a <= 0 {
        return ExactRational::zero();
    }
    if (x.to_int() + mu.v()) % 2 == 0 {
        sum_q_floor(q, a)
    } else {
        // Sum_{l=0}^{A-1} q^{floor(l/2)}
        sum_q_floor(q, a - 1) + ExactRational::one()
    }
}

/// Full-cell contributions for type III with M13 = M12 + 1/2.
///
/// With c_+ = 2 mu nu^{-1}(z_y + r) of valuation w - 1 and
/// c_- = 2 mu nu^{-1}(z_y - r) of valuation w (r = sqrt(z_y^2 - nu),
/// w = v(mu)), the quartic congruence on a cell (m, k) with v(u) = k
/// degenerates to pure valuation inequalities whenever 2k avoids v(c_+)
/// and v(c_-):
///   2k <= w - 2:      4k >= 2m - M12 + w - 1,
///   2k in {w-1, w}:   2m <= M12,
///   2k >  w:          2m <= M12 + w,
/// together with k <= M12 - m + w and 3k >= m - M12 + w - 1 from the
/// second congruence, over the baseline range m > k >= max(m0, m - M12).
fn full_cells_iii4(q: u64, m12: i64, w: i64) -> ExactRational {
    let num = w - 1 - m12;
    let m0 = num.div_euclid(2) + (num.rem_euclid(2) != 0) as i64; // ceil(num/2)
    let mut total = ExactRational::zero();
    let unit_frac = ExactRational::from_ratio(q as i64 - 1, q as i64);
    for m in m0..=(m12 + w + 2) {
        for k in m0.max(m - m12)..m {
            if 3 * k < m - m12 + w - 1 {
                continue;
            }
            if k > m12 - m + w {
                continue;
            }
            let ok = if 2 * k < w - 1 {
                4 * k >= 2 * m - m12 + w - 1
            } else if 2 * k <= w {
                2 * m <= m12
            } else {
                2 * m <= m12 + w
            };
            if ok {
                total += qp(q, m - k) * unit_frac.clone();
            }
        }
    }
    total
}

fn prefactor(t: TorusType) -> ExactRational {
    ExactRational::from_ratio(1, stabilizer_order(t) as i64)
}

fn floor2(h: HalfInt) -> i64 {
    h.floor().div_euclid(2)
}

/// Decide which proposition case applies; negative invariants signal the
/// vanishing branch via `NegativeInvariant`.
pub fn dispatch_case(inv: &OrbitInvariants) -> Result<CaseTag> {
    if !inv.all_nonnegative() {
        return Err(Error::NegativeInvariant);
    }
    if inv.x_is_zero {
        if matches!(inv.nu, Nu::Pi | Nu::Xi2Pi) {
            return Err(Error::InvalidNu(
                "x = 0 forces nu N(y) = 1, impossible for ramified nu".into(),
            ));
        }
        return Ok(CaseTag::XZero);
    }
    let (m12, m13, m23) = (inv.m12, inv.m13, inv.m23);
    let zero = HalfInt::ZERO;
    let half = HalfInt::from_twice(1);
    Ok(match inv.gamma_type {
        TorusType::I => {
            if m13 == zero {
                CaseTag::I1
            } else if m12 == zero {
                CaseTag::I2
            } else if m13 > m12 {
                CaseTag::I3
            } else {
                CaseTag::I4
            }
        }
        TorusType::II => {
            if m13 == zero {
                CaseTag::II1
            } else if m12 == zero && m23 == zero {
                CaseTag::II2
            } else if m13 > m12 && m13 > m23 {
                CaseTag::II3
            } else if m12 > m13 {
                CaseTag::II4 { swapped: false }
            } else if m23 > m13 {
                CaseTag::II4 { swapped: true }
            } else {
                CaseTag::II5
            }
        }
        TorusType::III => {
            if m13 == half {
                CaseTag::III1
            } else if m12 == zero {
                CaseTag::III2
            } else if m13 > m12 + half {
                CaseTag::III3
            } else if m13 == m12 + half {
                CaseTag::III4
            } else {
                CaseTag::III5
            }
        }
    })
}

/// O_{gamma_mu}(1_{S(O_F)}) for the x = 0 branch.
pub fn eval_orbital_x_zero(inv: &OrbitInvariants, mu: MuLabel) -> Result<ExactRational> {
    if !inv.x_is_zero {
        return Err(Error::NotApplicable("x is nonzero"));
    }
    match inv.nu {
        // (1/#G) delta_{v(y)}(mu) (1 - v(nu)), with v(nu) = 0 here
        Nu::Xi2 => Ok(prefactor(TorusType::I).scale_int(delta(inv.v_y, mu))),
        Nu::One => {
            let s_plus = inv.sym_pm2_mu(1, mu) as i64;
            let s_minus = inv.sym_pm2_mu(-1, mu) as i64;
            let total = (s_plus + 1) * floor2(inv.m23)
                + (s_minus + 1) * floor2(inv.m12)
                + delta(inv.m13, mu);
            Ok(prefactor(TorusType::II).scale_int(total))
        }
        _ => Err(Error::InvalidNu("x = 0 with ramified nu".into())),
    }
}

/// O_{gamma_mu}(1_{S(O_F)}) by case dispatch. Negative invariants give 0.
pub fn eval_orbital(inv: &OrbitInvariants, mu: MuLabel) -> Result<ExactRational> {
    let case = match dispatch_case(inv) {
        Ok(c) => c,
        Err(Error::NegativeInvariant) => return Ok(ExactRational::zero()),
        Err(e) => return Err(e),
    };
    let q = inv.q;
    let (m12, m13, m23) = (inv.m12, inv.m13, inv.m23);
    let w = mu.v();
    let pre = prefactor(inv.gamma_type);
    let val = match case {
        CaseTag::XZero => return eval_orbital_x_zero(inv, mu),

        // ---- type I (mu in {1, pi}) ----
        CaseTag::I1 => ExactRational::from_int(delta(HalfInt::ZERO, mu)),
        CaseTag::I2 => ExactRational::from_int(m13.to_int() + delta(m13, mu)),
        CaseTag::I3 => {
            // 2 delta_{M12-M13}(mu) G(M12) + (M13 - M12)(q^floor(M12/2) - 1)
            //   + C(M12, M13, mu) - M12 + M13 + delta_{M13}(mu)
            let a = m12.to_int();
            g_of(q, m12).scale_int(2 * delta(m12 - m13, mu))
                + (qp(q, floor2(m12)) - ExactRational::one()).scale_int(m13.to_int() - a)
                + c_region_sum(q, a, m13, mu)
                + ExactRational::from_int(m13.to_int() - a + delta(m13, mu))
        }
        CaseTag::I4 => {
            let sym = inv.sym_zy2_nu()? as i64;
            g_of(q, m12).scale_int((1 + sym) * (1 - w))
                + c_region_sum(q, m12.to_int(), m12, mu)
                + ExactRational::from_int(delta(m12, mu))
        }

        // ---- type II ----
        CaseTag::II1 => {
            let s_plus = inv.sym_pm2_mu(1, mu) as i64;
            let s_minus = inv.sym_pm2_mu(-1, mu) as i64;
            ExactRational::from_int(
                (s_plus + 1) * floor2(m23)
                    + (s_minus + 1) * floor2(m12)
                    + delta(HalfInt::ZERO, mu),
            )
        }
        CaseTag::II2 => ExactRational::from_int(m13.to_int() + delta(m13, mu)),
        CaseTag::II3 => {
            let a = m12.to_int();
            let s = inv.sym_neg_mu_zy(mu)? as i64;
            g_of(q, m12).scale_int(2 * (1 + s))
                + (qp(q, floor2(m12)) - ExactRational::one()).scale_int(m13.to_int() - a)
                + c_region_sum(q, a, m13, mu)
                + ExactRational::from_int(m13.to_int() - a + delta(m13, mu))
        }
        CaseTag::II4 { swapped } => {
            // the swapped row exchanges M12 <-> M23 and flips the sign of 2mu
            let big = if swapped { m23 } else { m12 };
            let sign = if swapped { 1 } else { -1 };
            let s2 = inv.sym_pm2_mu(sign, mu) as i64;
            let sym = inv.sym_zy2_nu()? as i64;
            let fl13 = floor2(m13);
            g_of(q, m13).scale_int((sym + 1) * (s2 + 1))
                + qp(q, fl13).scale_int((s2 + 1) * (floor2(big) - fl13))
                + c_region_sum(q, m13.to_int(), m13, mu)
                + ExactRational::from_int(delta(m13, mu))
        }
        CaseTag::II5 => {
            let sym = inv.sym_zy2_nu()? as i64;
            let root_term = if sym == 1 {
                let cls = inv.class_m2_zy_root()?;
                (1 + sym) * (1 + cls.mul(mu).symbol() as i64)
            } else {
                0
            };
            g_of(q, m12).scale_int(root_term)
                + c_region_sum(q, m12.to_int(), m12, mu)
                + ExactRational::from_int(delta(m12, mu))
        }

        // ---- type III ----
        CaseTag::III1 => ExactRational::one(),
        CaseTag::III2 => ExactRational::from_int(m13.floor() + 1), // M13 + 1/2
        CaseTag::III3 => {
            let s1 = inv.sym_neg_mu_nu_zy(mu)? as i64;
            let s2 = inv.sym_neg_mu_zy(mu)? as i64;
            g_of(q, m12).scale_int(s1 + s2 + 4)
                + qp(q, floor2(m12))
                    .scale_int(m13.floor() - m12.to_int() + delta(m12, SquareClass::One))
        }
        CaseTag::III4 => {
            let s1 = inv.sym_neg_mu_nu_zy(mu)? as i64;
            let s2 = inv.sym_neg_mu_zy(mu)? as i64;
            g_of(q, m12).scale_int(s1 + s2 + 2)
                + full_cells_iii4(q, m12.to_int(), w)
                + ExactRational::from_int(m13.floor() + 1)
        }
        CaseTag::III5 => {
            let m = m12 - HalfInt::from_twice(1);
            g_of(q, m).scale_int(2)
                + qp(q, m.to_int().div_euclid(2)).scale_int(delta(m, SquareClass::One))
        }
    };
    Ok(pre * val)
}

/// Both routes to the kappa-orbital integral: the direct character-weighted
/// sum of per-orbit values, and the corollary closed form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KappaEval {
    pub summed: ExactRational,
    pub corollary: ExactRational,
}

/// SO^kappa_gamma by both routes; `CorollaryMismatch` if they differ.
pub fn eval_kappa_orbital(inv: &OrbitInvariants, kappa: &KappaCharacter) -> Result<KappaEval> {
    let group = EndoscopicGroup::for_type(inv.gamma_type);
    let mut summed = ExactRational::zero();
    for &mu in &group.elements {
        let v = eval_orbital(inv, mu)?;
        summed += v.scale_int(kappa.value(mu) as i64);
    }
    let corollary = kappa_corollary(inv, kappa)?;
    if summed != corollary {
        return Err(Error::CorollaryMismatch(format!(
            "{}: sum {} vs closed form {}",
            kappa.label(),
            summed.to_fraction_string(),
            corollary.to_fraction_string()
        )));
    }
    Ok(KappaEval { summed, corollary })
}

/// The corollary closed forms for nontrivial kappa.
pub fn kappa_corollary(inv: &OrbitInvariants, kappa: &KappaCharacter) -> Result<ExactRational> {
    if !inv.all_nonnegative() {
        return Ok(ExactRational::zero());
    }
    let q = inv.q;
    let (m12, m13, m23) = (inv.m12, inv.m13, inv.m23);
    let m_min = inv.m_min();
    let m_max = inv.m_max();
    let half = ExactRational::from_ratio(1, 2);
    match inv.gamma_type {
        TorusType::I => {
            // (1/2)(-1)^{M12-M13}(1 + (z_y^2 - nu/F)) G(Mmin)
            //   + (1/2)(-1)^{M13} q^{floor(Mmin/2)}
            let mut total = ExactRational::zero();
            if m_min > HalfInt::ZERO && !inv.x_is_zero {
                let sym = inv.sym_zy2_nu()? as i64;
                let sgn = if (m12 - m13).to_int() % 2 == 0 { 1 } else { -1 };
                total += half.clone() * g_of(q, m_min).scale_int(sgn * (1 + sym));
            }
            let sgn13 = if m13.to_int() % 2 == 0 { 1 } else { -1 };
            total += half * qp(q, floor2(m_min)).scale_int(sgn13);
            Ok(total)
        }
        TorusType::II => {
            let fl13 = floor2(m13);
            if kappa.s == SquareClass::Xi2 {
                let mut total = ExactRational::zero();
                if m_min > HalfInt::ZERO && !inv.x_is_zero {
                    let sym = inv.sym_zy2_nu()? as i64;
                    let sgn = if (m12 - m13).to_int() % 2 == 0 { 1 } else { -1 };
                    total += half.clone() * g_of(q, m_min).scale_int(sgn * (1 + sym));
                }
                total += half.clone() * qp(q, fl13).scale_int(floor2(m_max) - fl13);
                let sgn13 = if m13.to_int() % 2 == 0 { 1 } else { -1 };
                total += half * qp(q, floor2(m_min)).scale_int(sgn13);
                Ok(total)
            } else {
                // kappa_pi / kappa_{xi2 pi}; the sign of the +-2 symbol
                // follows the ordering of M12 and M23.
                let mut total = ExactRational::zero();
                if m_min > HalfInt::ZERO && !inv.x_is_zero {
                    let sym = inv.sym_zy2_nu()? as i64;
                    if sym == 1 {
                        let cls = inv.class_m2_zy_root()?;
                        total += half.clone()
                            * g_of(q, m_min).scale_int((1 + sym) * kappa.value(cls) as i64);
                    }
                }
                let sign = if m12 >= m23 { -1 } else { 1 };
                let s2 = inv.ctx.class_of_int(2 * sign).symbol() as i64;
                total += half * qp(q, fl13).scale_int(s2 * (floor2(m_max) - fl13));
                Ok(total)
            }
        }
        TorusType::III => {
            let nu_label = match inv.nu {
                Nu::Pi => SquareClass::Pi,
                Nu::Xi2Pi => SquareClass::Xi2Pi,
                _ => unreachable!(),
            };
            if kappa.s != nu_label {
                return Ok(ExactRational::zero());
            }
            // kappa_nu([-z_y]) (1/2)((z_y^2 - nu/F) + 1) G(M12)
            if m12 == HalfInt::ZERO {
                return Ok(ExactRational::zero());
            }
            let sym = inv.sym_zy2_nu()? as i64;
            if sym == -1 {
                return Ok(ExactRational::zero());
            }
            let sigma = kappa.value(inv.class_neg_zy()?) as i64;
            Ok(half * g_of(q, m12).scale_int(sigma * (sym + 1)))
        }
    }
}
