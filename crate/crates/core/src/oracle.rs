//! Brute-force evaluation of O_{gamma_mu}(1_{S(O_F)}) by exact lattice-point
//! counting.
//!
//! The conjugating element runs over N(F) A(F) K; after collapsing the
//! torus variable t to its valuation m (the entries depend on t only
//! through pi^m up to units), the integral becomes
//!
//!   #G * O = sum_m q^m * vol{ u in F : the six conjugated entries are
//!                                      integral },
//!
//! and the u-volume is measured exactly over residue classes. Classes are
//! refined adaptively: a class is counted once every condition is certified
//! on all of it, discarded once some condition is certifiably violated on
//! all of it, and split into its p children otherwise. Exact arithmetic
//! makes the total independent of the traversal order.
//!
//! A second, reduced oracle evaluates the double sum over (m, k) with the
//! two residual congruence conditions in F obtained by decomposing z over
//! the basis {x, y}, plus the closed tail term
//! v(y) + delta_{v(y)}(mu)(1 - v(nu)) + v(nu) counting the cells with
//! v(u) >= m. Both oracles must agree exactly, with each other and with
//! the closed forms.

use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::halfint::HalfInt;
use crate::orbit::{delta, stabilizer_order, OrbitInvariants, SymmetricPoint};
use crate::rational::ExactRational;
use crate::scalar::{pk, Coord, Ext};
use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// Truncation caps for the oracle sums, plus the shared prefactor.
#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Cap on m = v(t).
    pub m_max: i64,
    /// Maximum residue-refinement depth K.
    pub u_depth: i64,
    /// Multiplier for the convergence re-check of the m-cap.
    pub stability_factor: i64,
    /// 1 / #G_{1 gamma}(F).
    pub prefactor: ExactRational,
}

/// Echo of the configuration a result was computed with.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct OracleCfgEcho {
    pub m_max: i64,
    pub u_depth: i64,
    pub stability_factor: i64,
    pub stable: bool,
}

impl OracleConfig {
    /// Default caps for a sample: safe-by-construction m cap plus a deep
    /// refinement allowance; both are double-checked by the stability run.
    pub fn for_sample(inv: &OrbitInvariants, mu: crate::field::MuLabel) -> Self {
        let m_max = support_bound(inv, mu);
        let vy_mag = inv.v_y.twice().abs() / 2 + 1;
        OracleConfig {
            m_max,
            u_depth: 2 * m_max + vy_mag + 8,
            stability_factor: 2,
            prefactor: ExactRational::from_ratio(1, stabilizer_order(inv.gamma_type) as i64),
        }
    }

    pub fn echo(&self, stable: bool) -> OracleCfgEcho {
        OracleCfgEcho {
            m_max: self.m_max,
            u_depth: self.u_depth,
            stability_factor: self.stability_factor,
            stable,
        }
    }
}

/// Safe cap on the t-valuation sum: every case analysis bounds the support
/// of the m-sum by combinations of the M_ij; the ceiling of their total
/// plus |v(y)| and v(mu), padded by 2, is comfortably beyond all of them.
/// The stability re-run verifies the choice on every sample.
pub fn support_bound(inv: &OrbitInvariants, mu: crate::field::MuLabel) -> i64 {
    let msum = inv.m12.max(HalfInt::ZERO)
        + inv.m13.max(HalfInt::ZERO)
        + inv.m23.max(HalfInt::ZERO);
    let vy_mag = (inv.v_y.twice().abs() + 1) / 2;
    msum.ceil() + mu.v() + vy_mag + 2
}

/// ceil(a / 2).
fn ceil_div2(a: i64) -> i64 {
    a.div_euclid(2) + (a.rem_euclid(2) != 0) as i64
}

// ---------------------------------------------------------------------------
// Adaptive residue refinement
// ---------------------------------------------------------------------------

/// A polynomial in u with E coefficients, tested against v(P(u)) >= bound.
struct Condition {
    coeffs: Vec<Ext>,
    bound: i64,
    coeff_floors: Vec<Option<i64>>,
}

impl Condition {
    fn new(coeffs: Vec<Ext>, bound: i64) -> Self {
        let coeff_floors = coeffs.iter().map(|c| c.val_lower_bound()).collect();
        Condition { coeffs, bound, coeff_floors }
    }

    fn eval(&self, ctx: &FieldContext, u: &Coord) -> Ext {
        let mut acc = Ext::zero();
        for c in self.coeffs.iter().rev() {
            acc = Ext::add(ctx, &Ext::mul_f(ctx, &acc, u), c);
        }
        acc
    }

    /// Lower bound on v(P(u0 + h) - P(u0)) over a class with v(h) >= d and
    /// class valuation floor kc.
    fn perturbation_floor(&self, kc: i64, d: i64) -> i64 {
        let mut best = i64::MAX;
        let base = kc.min(d);
        for (i, fl) in self.coeff_floors.iter().enumerate() {
            if i == 0 {
                continue;
            }
            if let Some(v) = fl {
                best = best.min(v + d + (i as i64 - 1) * base);
            }
        }
        best
    }
}

enum Verdict {
    Holds,
    Fails,
    Refine,
}

fn decide(ctx: &FieldContext, cond: &Condition, u0: &Coord, kc: i64, d: i64) -> Verdict {
    let value = cond.eval(ctx, u0);
    let pert = cond.perturbation_floor(kc, d);
    // certified violation: a digit of the center value sits below both the
    // bound and the perturbation floor, so no member of the class clears it
    if value.val_below(cond.bound.min(pert)) {
        return Verdict::Fails;
    }
    if pert >= cond.bound {
        // the class is constant at this resolution: decide by the center
        return match value.val_at_least(cond.bound) {
            Ok(true) => Verdict::Holds,
            _ => Verdict::Refine, // undecidable center: refine narrows kc
        };
    }
    Verdict::Refine
}

/// Exact measure of {u : v(u) >= kmin, all conditions hold} under the Haar
/// measure with vol(O_F) = 1.
fn refine_measure(
    ctx: &FieldContext,
    conds: &[Condition],
    kmin: i64,
    depth_cap: i64,
) -> Result<ExactRational> {
    let mut total = ExactRational::zero();
    // class = mant * p^kmin + p^depth O_F, mant < p^(depth - kmin)
    let mut stack: Vec<(BigUint, i64)> = vec![(BigUint::zero(), kmin)];
    while let Some((mant, depth)) = stack.pop() {
        let u0 = Coord::from_mantissa(ctx, &mant, kmin);
        let kc = match &u0 {
            Coord::Zero => depth,
            other => other.val_lower_bound().unwrap(),
        };
        let mut all_hold = true;
        let mut split = false;
        for cond in conds {
            match decide(ctx, cond, &u0, kc, depth) {
                Verdict::Holds => {}
                Verdict::Fails => {
                    all_hold = false;
                    break;
                }
                Verdict::Refine => {
                    split = true;
                    all_hold = false;
                    break;
                }
            }
        }
        if all_hold {
            total += ExactRational::pow_i(ctx.p, -depth);
        } else if split {
            if depth + 1 - kmin > depth_cap {
                return Err(Error::PrecisionExhausted(format!(
                    "residue refinement exceeded depth cap {depth_cap}"
                )));
            }
            let step = pk(ctx.p, (depth - kmin) as u32);
            for t in 0..ctx.p {
                stack.push((&mant + t * &step, depth + 1));
            }
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// The six entries
// ---------------------------------------------------------------------------

/// Coefficient lists (in u) of the six entries, without the t-powers and
/// with the always-integral +z of entry (3) separated out:
///   (1) x - u^2/2 mu^{-1} nu y        (4) mu^{-1} nu y
///   (2) u mu^{-1} nu y                (5) u(x - z) - u^3/2 mu^{-1} nu y
///   (3) u^2 mu^{-1} nu y [+ z]        (6) mu y - u^2(x - z) + u^4/4 mu^{-1} nu y
fn entry_polynomials(gamma: &SymmetricPoint) -> [Vec<Ext>; 6] {
    let ctx = &gamma.ctx;
    let mu = gamma.mu_coord();
    let nu = gamma.nu_coord();
    let minv_nu = Coord::div(ctx, &nu, &mu).expect("mu is a unit times a power of p");
    let minv_nu_y = Ext::mul_f(ctx, &gamma.y, &minv_nu);
    let half = Coord::inv(ctx, &Coord::from_int(ctx, 2)).expect("p odd");
    let quarter = Coord::mul(ctx, &half, &half);
    let neg_half_mny = Ext::neg(ctx, &Ext::mul_f(ctx, &minv_nu_y, &half));
    let quarter_mny = Ext::mul_f(ctx, &minv_nu_y, &quarter);
    let x_minus_z = Ext::sub(ctx, &gamma.x, &gamma.z);
    let z = Ext::zero();
    [
        vec![gamma.x.clone(), z.clone(), neg_half_mny.clone()],
        vec![z.clone(), minv_nu_y.clone()],
        vec![z.clone(), z.clone(), minv_nu_y.clone()],
        vec![minv_nu_y.clone()],
        vec![z.clone(), x_minus_z.clone(), z.clone(), neg_half_mny],
        vec![
            Ext::mul_f(ctx, &gamma.y, &mu),
            z.clone(),
            Ext::neg(ctx, &x_minus_z),
            z,
            quarter_mny,
        ],
    ]
}

/// The six entries of the conjugated matrix at t = pi^m, with the pi^{+-m}
/// scalings applied and the +z of entry (3) restored.
pub fn raw_entries(gamma: &SymmetricPoint, m: i64, u: &Coord) -> [Ext; 6] {
    let ctx = &gamma.ctx;
    let polys = entry_polynomials(gamma);
    let scale = [0, 1, 0, 2, -1, -2].map(|s: i64| s * m);
    let mut out: Vec<Ext> = Vec::with_capacity(6);
    for (i, coeffs) in polys.iter().enumerate() {
        let mut acc = Ext::zero();
        for c in coeffs.iter().rev() {
            acc = Ext::add(ctx, &Ext::mul_f(ctx, &acc, u), c);
        }
        if i == 2 {
            acc = Ext::add(ctx, &acc, &gamma.z);
        }
        out.push(acc.shift(scale[i]));
    }
    out.try_into().expect("six entries")
}

fn m_floor(gamma: &SymmetricPoint, inv: &OrbitInvariants) -> i64 {
    // integrality of t^2 mu^{-1} nu y: 2m >= v(mu) - v(nu) - v(y)
    ceil_div2(gamma.mu.v() - gamma.nu.v() - inv.v_y.to_int())
}

fn raw_total(
    gamma: &SymmetricPoint,
    inv: &OrbitInvariants,
    m_lo: i64,
    m_hi: i64,
    u_depth: i64,
) -> Result<ExactRational> {
    let ctx = &gamma.ctx;
    let polys = entry_polynomials(gamma);
    let kmin = m_floor(gamma, inv);
    let mut total = ExactRational::zero();
    for m in m_lo..=m_hi {
        let bounds = [0, -m, 0, -2 * m, m, 2 * m];
        // entry (4) is u-free and gates the whole m-term
        if !polys[3][0].val_at_least(bounds[3])? {
            continue;
        }
        let conds: Vec<Condition> = polys
            .iter()
            .zip(bounds)
            .enumerate()
            .filter(|(i, _)| *i != 3)
            .map(|(_, (coeffs, bound))| Condition::new(coeffs.clone(), bound))
            .collect();
        let measure = refine_measure(ctx, &conds, kmin, u_depth)?;
        total += ExactRational::pow_i(ctx.p, m) * measure;
    }
    Ok(total)
}

/// O_{gamma_mu}(1_{S(O_F)}) by direct integrality testing of the six
/// entries over residue classes of (m, u). The m-sum is re-extended by
/// `stability_factor` and must contribute nothing; a deeper refinement cap
/// can only turn errors into answers, never change an answer, so the
/// extension check covers both caps.
pub fn raw_orbital_oracle(gamma: &SymmetricPoint, cfg: &OracleConfig) -> Result<ExactRational> {
    let inv = gamma.invariants()?;
    let m_lo = m_floor(gamma, &inv);
    let total = raw_total(gamma, &inv, m_lo, cfg.m_max, cfg.u_depth)?;
    let extended = raw_total(
        gamma,
        &inv,
        cfg.m_max + 1,
        cfg.m_max.abs() * cfg.stability_factor.max(1) + 2,
        cfg.u_depth * cfg.stability_factor.max(1),
    )?;
    if !extended.is_zero() {
        return Err(Error::Unstable(format!(
            "raw m-sum grew by {} beyond m_max = {}",
            extended.to_fraction_string(),
            cfg.m_max
        )));
    }
    Ok(&cfg.prefactor * &total)
}

fn reduced_total(
    gamma: &SymmetricPoint,
    inv: &OrbitInvariants,
    m_lo: i64,
    m_hi: i64,
    u_depth: i64,
) -> Result<ExactRational> {
    let ctx = &gamma.ctx;
    let zy = inv.z_y.clone().ok_or(Error::MissingSymbol("z_y"))?;
    let mu = gamma.mu_coord();
    let nu = gamma.nu_coord();
    let quarter_minv_nu = {
        let four = Coord::from_int(ctx, 4);
        Coord::div(ctx, &nu, &Coord::mul(ctx, &mu, &four))?
    };
    let vy = inv.v_y.to_int();
    // v(u^2 (z_x - 1) x) >= 2m collapses to 2k >= 2m - (M12 + M23): the
    // N13 contributions of v(z_x - 1) and v(x) cancel exactly
    let twice_m_sum = (inv.m12 + inv.m23).twice(); // 2(M12 + M23)
    // Q1 = mu + z_y u^2 + (nu / 4mu) u^4, tested against 2m - v(y)
    let q1: Vec<Ext> = vec![
        Ext::from_f(mu.clone()),
        Ext::zero(),
        Ext::from_f(zy.clone()),
        Ext::zero(),
        Ext::from_f(quarter_minv_nu.clone()),
    ];
    // Q2 = mu - (nu / 4mu) u^4, tested against m + k - v(y)
    let q2: Vec<Ext> = vec![
        Ext::from_f(mu),
        Ext::zero(),
        Ext::zero(),
        Ext::zero(),
        Ext::from_f(Coord::neg(ctx, &quarter_minv_nu)),
    ];

    let kmin = m_floor(gamma, inv);
    let mut total = ExactRational::zero();
    for m in m_lo..=m_hi {
        // 2k >= 2m - (M12 + M23), i.e. 4k >= 4m - 2(M12 + M23)
        let num = 4 * m - twice_m_sum;
        let k_lo = kmin.max(num.div_euclid(4) + (num.rem_euclid(4) != 0) as i64);
        for k in k_lo..m {
            let sphere = |kk: i64| -> Result<ExactRational> {
                let conds = vec![
                    Condition::new(q1.clone(), 2 * m - vy),
                    Condition::new(q2.clone(), m + k - vy),
                ];
                refine_measure(ctx, &conds, kk, u_depth)
            };
            // measure over {v(u) = k} = {v(u) >= k} - {v(u) >= k + 1}
            let measure = sphere(k)? - sphere(k + 1)?;
            total += ExactRational::pow_i(ctx.p, m) * measure;
        }
    }
    Ok(total)
}

/// O_{gamma_mu}(1_{S(O_F)}) by the reduced double sum over (m, k) with the
/// residual F-congruences in (mu + z_y u^2 + nu u^4/4mu) y and
/// (mu - nu u^4/4mu) y, plus the closed tail term. Requires x != 0.
pub fn reduced_orbital_oracle(
    gamma: &SymmetricPoint,
    cfg: &OracleConfig,
) -> Result<ExactRational> {
    if gamma.x.is_exact_zero() {
        return Err(Error::NotApplicable("x = 0 has no z-decomposition over {x, y}"));
    }
    let inv = gamma.invariants()?;
    // 1_{O_E}(x) gates the whole expression
    if !gamma.x.val_at_least(0)? {
        return Ok(ExactRational::zero());
    }
    let m_lo = m_floor(gamma, &inv);
    // tail cells v(u) >= m: count of m with v(y)+v(mu) >= 2m >= -v(y)+v(mu)-v(nu)
    let tail = if inv.v_y.is_negative() {
        0
    } else {
        inv.v_y.to_int() + delta(inv.v_y, gamma.mu) * (1 - gamma.nu.v()) + gamma.nu.v()
    };
    let mut total = ExactRational::from_int(tail);
    total += reduced_total(gamma, &inv, m_lo, cfg.m_max, cfg.u_depth)?;
    let extended = reduced_total(
        gamma,
        &inv,
        cfg.m_max + 1,
        cfg.m_max.abs() * cfg.stability_factor.max(1) + 2,
        cfg.u_depth * cfg.stability_factor.max(1),
    )?;
    if !extended.is_zero() {
        return Err(Error::Unstable(format!(
            "reduced m-sum grew by {} beyond m_max = {}",
            extended.to_fraction_string(),
            cfg.m_max
        )));
    }
    Ok(&cfg.prefactor * &total)
}

/// Measure of {u : v(u) >= k} by the refinement machinery (sanity oracle).
pub fn ball_measure(ctx: &FieldContext, k: i64) -> Result<ExactRational> {
    let none: Vec<Condition> = Vec::new();
    refine_measure(ctx, &none, k, 4)
}

/// Exact measure of a valuation sphere {v(u) = k}: should equal
/// q^{-k}(1 - 1/q).
pub fn sphere_measure(ctx: &FieldContext, k: i64) -> Result<ExactRational> {
    Ok(ball_measure(ctx, k)? - ball_measure(ctx, k + 1)?)
}

/// Indicator of the collapsed tail condition 1_{O_E}(pi^{-2m} mu y); the
/// cells with v(u) >= m contribute exactly this times q^{-m}.
pub fn tail_cell_indicator(gamma: &SymmetricPoint, inv: &OrbitInvariants, m: i64) -> bool {
    gamma.mu.v() + inv.v_y.to_int() >= 2 * m
}
