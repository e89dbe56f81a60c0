//! Deterministic construction of regular torus points with targeted
//! stable-orbit invariants.
//!
//! Every eigenvalue triple is built from Hilbert-90 data: norm-1 elements
//! are w/theta(w) for seeded units w, and the targeted distances are hit
//! constructively (pure rejection cannot reach M >= 3 in reasonable time,
//! since random units collide to depth s with probability about q^{-s}).
//! All random draws are small integers, so a sample regenerated at higher
//! precision is the same point carried to more digits.

use crate::error::{Error, Result};
use crate::field::{FieldContext, Nu};
use crate::halfint::HalfInt;
use crate::orbit::{SymmetricPoint, TorusType};
use crate::scalar::{hensel_sqrt, quad_symbol, Coord, Ext, Tower};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const RETRIES: u32 = 400;

/// What to sample. `target_m23` attaches lambda_2 to lambda_3 instead of
/// lambda_1 (type II), reaching the symmetric M23 > M13 configurations;
/// `x_zero` requests the x = 0 branch (types I and II); `negative_shift`
/// scales lambda_1 by p^j to force negative invariants (type I);
/// `n13_shift` pulls lambda_3 toward -lambda_1 (type II), producing
/// M13 = 0 with N13 = j.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSpec {
    pub gamma_type: TorusType,
    pub p: u64,
    #[serde(default)]
    pub nu: Option<Nu>,
    #[serde(default)]
    pub target_m12: Option<HalfInt>,
    #[serde(default)]
    pub target_m13: Option<HalfInt>,
    #[serde(default)]
    pub target_m23: Option<HalfInt>,
    #[serde(default)]
    pub x_zero: bool,
    /// x = 0, type II: attach z near -y instead of +y.
    #[serde(default)]
    pub x_zero_flip: bool,
    #[serde(default)]
    pub negative_shift: Option<u32>,
    #[serde(default)]
    pub n13_shift: Option<u32>,
    pub seed: u64,
    pub precision: u32,
}

impl SampleSpec {
    pub fn basic(gamma_type: TorusType, p: u64, seed: u64, precision: u32) -> Self {
        SampleSpec {
            gamma_type,
            p,
            nu: None,
            target_m12: None,
            target_m13: None,
            target_m23: None,
            x_zero: false,
            x_zero_flip: false,
            negative_shift: None,
            n13_shift: None,
            seed,
            precision,
        }
    }

    /// The torus parameter: fixed by the type for I and II; for III the
    /// explicit choice wins, otherwise the seed alternates the two
    /// ramified classes.
    pub fn nu(&self) -> Nu {
        match self.gamma_type {
            TorusType::I => Nu::Xi2,
            TorusType::II => Nu::One,
            TorusType::III => {
                self.nu.unwrap_or(if self.seed.is_multiple_of(2) { Nu::Pi } else { Nu::Xi2Pi })
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadInput(m.to_string()));
        let (m12, m13) = (self.target_m12, self.target_m13);
        match self.gamma_type {
            TorusType::I | TorusType::II => {
                for t in [m12, m13, self.target_m23].into_iter().flatten() {
                    if !t.is_integral() || t.is_negative() {
                        return bad("type I/II targets must be non-negative integers");
                    }
                }
                if self.gamma_type == TorusType::I {
                    if self.target_m23.is_some() {
                        return bad("type I forces M23 = M12; drop target_m23");
                    }
                    if let (Some(a), Some(b)) = (m12, m13) {
                        if a > b {
                            return bad("type I needs M12 <= M13");
                        }
                    }
                }
            }
            TorusType::III => {
                if self.x_zero {
                    return bad("x = 0 is impossible for ramified nu");
                }
                if let Some(t) = m13 {
                    if t.is_integral() || t.is_negative() {
                        return bad("type III needs M13 in Z + 1/2, positive");
                    }
                }
                if let Some(s) = m12 {
                    let ok = (s.is_integral() && !s.is_negative()) || Some(s) == m13;
                    if !ok {
                        return bad("type III needs M12 integral or equal to M13");
                    }
                }
            }
        }
        Ok(())
    }

    /// RNG seeded by the full spec (excluding precision), so distinct cells
    /// with equal seeds decorrelate while a precision retry replays the
    /// same draws.
    fn rng(&self) -> ChaCha8Rng {
        let mut h: u64 = 0x9e3779b97f4a7c15;
        let mut mix = |v: u64| {
            h ^= v.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
            h = h.wrapping_mul(0xbf58476d1ce4e5b9);
        };
        mix(self.seed);
        mix(self.p);
        mix(match self.gamma_type {
            TorusType::I => 1,
            TorusType::II => 2,
            TorusType::III => 3,
        });
        mix(self.nu.map_or(7, |n| n.v() as u64 + 10 * n.twisted() as u64));
        for t in [self.target_m12, self.target_m13, self.target_m23] {
            mix(t.map_or(u64::MAX, |h| h.twice() as u64));
        }
        mix(self.x_zero as u64 + 2 * self.x_zero_flip as u64);
        mix(self.negative_shift.map_or(u64::MAX, u64::from));
        mix(self.n13_shift.map_or(u64::MAX, u64::from));
        ChaCha8Rng::seed_from_u64(h)
    }
}

// ---------------------------------------------------------------------------
// Elementary constructions
// ---------------------------------------------------------------------------

fn unit_int(rng: &mut ChaCha8Rng, p: u64) -> i64 {
    loop {
        let n = rng.gen_range(-(3 * p as i64)..=3 * p as i64);
        if n != 0 && !n.unsigned_abs().is_multiple_of(p) {
            return n;
        }
    }
}

fn any_int(rng: &mut ChaCha8Rng, p: u64) -> i64 {
    rng.gen_range(-(3 * p as i64)..=3 * p as i64)
}

/// A seeded unit of E, as a small-integer pair.
fn unit_pair(ctx: &FieldContext, rng: &mut ChaCha8Rng) -> Ext {
    loop {
        let w = Ext::from_ints(ctx, any_int(rng, ctx.p), any_int(rng, ctx.p));
        if w.exact_val() == Ok(0) {
            return w;
        }
    }
}

/// A norm-1 element w/theta(w) for a seeded unit w with unit norm.
fn u1_element(ctx: &FieldContext, rng: &mut ChaCha8Rng) -> Ext {
    loop {
        let w = unit_pair(ctx, rng);
        if Ext::norm(ctx, &w).exact_val() != Ok(0) {
            continue;
        }
        return Ext::div(ctx, &w, &Ext::theta(ctx, &w)).expect("unit norm");
    }
}

/// The Hilbert-90 twist (a + b xi)/(a - b xi) with v(b) = s, v(a) = 0;
/// its distance to 1 is exactly s.
fn u1_twist(ctx: &FieldContext, rng: &mut ChaCha8Rng, s: i64) -> Ext {
    let a = unit_int(rng, ctx.p);
    let b = unit_int(rng, ctx.p);
    let bc = Coord::from_int(ctx, b).shift(s);
    let w = Ext { a: Coord::from_int(ctx, a), b: bc.clone() };
    let wt = Ext { a: Coord::from_int(ctx, a), b: Coord::neg(ctx, &bc) };
    Ext::div(ctx, &w, &wt).expect("unit denominator")
}

/// Distance of two E-scalars, certified.
fn dist(ctx: &FieldContext, a: &Ext, b: &Ext) -> Result<i64> {
    Ext::sub(ctx, a, b).exact_val()
}

/// A norm-1 element z with v(xprime - z) = s exactly, for an xprime whose
/// norm is 1 + O(pi^T) with T > s. Solves x' theta(w) - w = pi^s g by one
/// p-adic pivot step on the 2x2 matrix of the F-linear map
/// w -> x' theta(w) - w, whose determinant is -(N(x') - 1).
fn u1_near(ctx: &FieldContext, rng: &mut ChaCha8Rng, xprime: &Ext, s: i64) -> Result<Ext> {
    let alpha = &xprime.a;
    let beta = &xprime.b;
    let one = Coord::one(ctx);
    let eps = Coord::from_int(ctx, ctx.epsilon as i64);
    // row-major matrix of w -> x' theta(w) - w on coordinates (w0, w1)
    let m = [
        [Coord::sub(ctx, alpha, &one), Coord::neg(ctx, &Coord::mul(ctx, &eps, beta))],
        [beta.clone(), Coord::neg(ctx, &Coord::add(ctx, alpha, &one))],
    ];
    let det = Coord::sub(
        ctx,
        &Coord::mul(ctx, &m[0][0], &m[1][1]),
        &Coord::mul(ctx, &m[0][1], &m[1][0]),
    );
    let t = det.exact_val()?;
    // pivot: entry of smallest certified valuation
    let mut c1 = i64::MAX;
    let mut pivot = (0usize, 0usize);
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if let Ok(v) = e.exact_val() {
                if v < c1 {
                    c1 = v;
                    pivot = (i, j);
                }
            }
        }
    }
    if c1 == i64::MAX {
        return Err(Error::PrecisionExhausted("pivot not certified".into()));
    }
    if s < c1 {
        // any twist at distance s from 1 also sits at distance s from x'
        return Ok(u1_twist(ctx, rng, s));
    }
    if s > t - c1 {
        return Err(Error::TargetUnreachable(format!(
            "distance {s} exceeds the reachable range [{c1}, {}]",
            t - c1
        )));
    }
    // permute the pivot to (0,0)
    let (ri, cj) = pivot;
    let rows = if ri == 0 { [0, 1] } else { [1, 0] };
    let cols = if cj == 0 { [0, 1] } else { [1, 0] };
    let a2: Vec<Vec<Coord>> =
        rows.iter().map(|&i| cols.iter().map(|&j| m[i][j].clone()).collect()).collect();
    // Smith coordinates: w~ = (p^{s-c1}, 1), w = V^{-1} w~ for the
    // unimodular column operation V = [[1, g],[0, 1]]
    let g_col = Coord::div(ctx, &a2[0][1], &a2[0][0])?;
    let wt0 = Coord::one(ctx).shift(s - c1);
    let wt1 = Coord::one(ctx);
    let w0p = Coord::sub(ctx, &wt0, &Coord::mul(ctx, &g_col, &wt1));
    let mut w = [Coord::Zero, Coord::Zero];
    w[cols[0]] = w0p;
    w[cols[1]] = wt1;
    let w = Ext { a: w[0].clone(), b: w[1].clone() };
    let z = Ext::div(ctx, &w, &Ext::theta(ctx, &w))?;
    if dist(ctx, xprime, &z)? != s {
        return Err(Error::TargetUnreachable(format!(
            "pivot construction missed the distance target {s}"
        )));
    }
    Ok(z)
}

// ---------------------------------------------------------------------------
// Per-type constructions
// ---------------------------------------------------------------------------

fn from_eigen_unramified(
    ctx: &FieldContext,
    nu: Nu,
    l1: &Ext,
    l2: &Ext,
    l3: &Ext,
) -> Result<SymmetricPoint> {
    let two_inv = Coord::inv(ctx, &Coord::from_int(ctx, 2))?;
    let x = Ext::mul_f(ctx, &Ext::add(ctx, l1, l3), &two_inv);
    let diff = Ext::mul_f(ctx, &Ext::sub(ctx, l1, l3), &two_inv);
    let y = match nu {
        Nu::One => diff,
        Nu::Xi2 => Ext::div(ctx, &diff, &Ext::xi(ctx))?,
        _ => unreachable!(),
    };
    Ok(SymmetricPoint::new(*ctx, nu, x, y, l2.clone()))
}

/// Type II: the eigenvalues are three independent norm-1 elements.
fn sample_type_ii(
    ctx: &FieldContext,
    rng: &mut ChaCha8Rng,
    spec: &SampleSpec,
) -> Result<SymmetricPoint> {
    let t = spec.target_m13.map_or(0, |h| h.to_int());
    let s12 = spec.target_m12.map_or(0, |h| h.to_int());
    let s23 = spec.target_m23.map(|h| h.to_int());
    for _ in 0..RETRIES {
        let l1 = u1_element(ctx, rng);
        let l3 = if let Some(j) = spec.n13_shift {
            // lambda_3 near -lambda_1: M13 = 0 with N13 = j
            Ext::neg(ctx, &Ext::mul(ctx, &l1, &u1_twist(ctx, rng, j as i64)))
        } else {
            Ext::mul(ctx, &l1, &u1_twist(ctx, rng, t))
        };
        let l2 = match s23 {
            Some(s) => Ext::mul(ctx, &l3, &u1_twist(ctx, rng, s)),
            None => Ext::mul(ctx, &l1, &u1_twist(ctx, rng, s12)),
        };
        let g = from_eigen_unramified(ctx, Nu::One, &l1, &l2, &l3)?;
        if g.x.exact_val().is_err() || g.y.exact_val().is_err() {
            continue;
        }
        let inv = match g.invariants() {
            Ok(i) => i,
            // a degenerate draw (deep coincidence) is resampled
            Err(_) => continue,
        };
        if let Some(j) = spec.n13_shift {
            if inv.m13 != HalfInt::ZERO
                || inv.n13 != Some(HalfInt::from_int(j as i64))
                || inv.m12.to_int() != s12
            {
                continue;
            }
        } else {
            if inv.m13.to_int() != t {
                continue;
            }
            match s23 {
                Some(s) => {
                    if inv.m23.to_int() != s {
                        continue;
                    }
                }
                None => {
                    if inv.m12.to_int() != s12 {
                        continue;
                    }
                    // equal positive targets mean the all-equal case: pin
                    // M23 too, or the draw may land deeper by accident
                    if s12 == t && t > 0 && inv.m23.to_int() != t {
                        continue;
                    }
                }
            }
        }
        return Ok(g);
    }
    Err(Error::TargetUnreachable(format!("type II targets M12={s12} M13={t}")))
}

/// Type II with x = 0: y is norm-1 and z sits near +-y.
fn sample_type_ii_x0(
    ctx: &FieldContext,
    rng: &mut ChaCha8Rng,
    spec: &SampleSpec,
) -> Result<SymmetricPoint> {
    let s = spec.target_m12.or(spec.target_m23).map_or(1, |h| h.to_int());
    for _ in 0..RETRIES {
        let y = u1_element(ctx, rng);
        let mut z = Ext::mul(ctx, &y, &u1_twist(ctx, rng, s));
        if spec.x_zero_flip {
            z = Ext::neg(ctx, &z);
        }
        let g = SymmetricPoint::new(*ctx, Nu::One, Ext::zero(), y, z);
        let inv = match g.invariants() {
            Ok(i) => i,
            // a degenerate draw (deep coincidence) is resampled
            Err(_) => continue,
        };
        let hit = if spec.x_zero_flip { inv.m23.to_int() } else { inv.m12.to_int() };
        if hit != s {
            continue;
        }
        return Ok(g);
    }
    Err(Error::TargetUnreachable("type II x = 0".into()))
}

/// Type I: lambda_2 is norm-1 and lambda_1 = lambda_2 (1 + h) is a free
/// unit of E with v(h) = M12 and v(N(lambda_1) - 1) = M13; the F-part of h
/// is tuned by Newton against Tr(h) + N(h) = c pi^{M13}.
fn sample_type_i(
    ctx: &FieldContext,
    rng: &mut ChaCha8Rng,
    spec: &SampleSpec,
) -> Result<SymmetricPoint> {
    let t = spec.target_m13.map_or(0, |h| h.to_int());
    let s = spec.target_m12.map_or(0, |h| h.to_int().min(t));
    for _ in 0..RETRIES {
        let l2 = u1_element(ctx, rng);
        let l1 = if t == 0 {
            let cand = unit_pair(ctx, rng);
            let n1 = Coord::sub(ctx, &Ext::norm(ctx, &cand), &Coord::one(ctx));
            if n1.exact_val() != Ok(0) {
                continue;
            }
            cand
        } else if s == 0 {
            // (1 + h0)^2 = 1 + eps h1^2 + c pi^t needs a square right side
            let h1 = unit_int(rng, ctx.p);
            let c = unit_int(rng, ctx.p);
            let rhs = Coord::add(
                ctx,
                &Coord::from_int(ctx, 1 + ctx.epsilon as i64 * h1 * h1),
                &Coord::from_int(ctx, c).shift(t),
            );
            if quad_symbol(ctx, &rhs) != Ok(1) {
                continue;
            }
            let root = hensel_sqrt(ctx, &rhs)?;
            let g = Ext { a: root, b: Coord::from_int(ctx, h1) };
            let l1 = Ext::mul(ctx, &l2, &g);
            if dist(ctx, &l1, &l2) != Ok(0) {
                continue;
            }
            l1
        } else {
            // Newton-solve 2 h0 + pi^s (h0^2 - eps h1^2) = c pi^{t-s}
            let h1 = Coord::from_int(ctx, unit_int(rng, ctx.p));
            let c = Coord::from_int(ctx, unit_int(rng, ctx.p));
            let target = c.shift(t - s);
            let eps = Coord::from_int(ctx, ctx.epsilon as i64);
            let eps_h1sq = Coord::mul(ctx, &eps, &Coord::mul(ctx, &h1, &h1));
            let two = Coord::from_int(ctx, 2);
            let mut h0 = Coord::mul(ctx, &target, &Coord::inv(ctx, &two)?);
            for _ in 0..(ctx.digits().ilog2() + 3) {
                // f(h0) = 2 h0 + pi^s (h0^2 - eps h1^2), f'(h0) = 2 + 2 pi^s h0
                let f = Coord::add(
                    ctx,
                    &Coord::mul(ctx, &two, &h0),
                    &Coord::sub(ctx, &Coord::mul(ctx, &h0, &h0), &eps_h1sq).shift(s),
                );
                let fp = Coord::add(ctx, &two, &Coord::mul(ctx, &two, &h0).shift(s));
                let step = Coord::div(ctx, &Coord::sub(ctx, &f, &target), &fp)?;
                h0 = Coord::sub(ctx, &h0, &step);
            }
            let h = Ext { a: h0.shift(s), b: h1.shift(s) };
            let l1 = Ext::mul(ctx, &l2, &Ext::add(ctx, &Ext::one(ctx), &h));
            let n1 = Coord::sub(ctx, &Ext::norm(ctx, &l1), &Coord::one(ctx));
            if n1.exact_val() != Ok(t) {
                continue;
            }
            l1
        };
        let l3 = Ext::inv(ctx, &Ext::theta(ctx, &l1))?;
        let g = from_eigen_unramified(ctx, Nu::Xi2, &l1, &l2, &l3)?;
        if g.x.exact_val().is_err() || g.y.exact_val().is_err() {
            continue;
        }
        let inv = match g.invariants() {
            Ok(i) => i,
            // a degenerate draw (deep coincidence) is resampled
            Err(_) => continue,
        };
        if inv.m13.to_int() != t || inv.m12.to_int() != s {
            continue;
        }
        return Ok(g);
    }
    Err(Error::TargetUnreachable(format!("type I targets M12={s} M13={t}")))
}

/// Type I with x = 0: lambda_1 of norm -1 (so lambda_3 = -lambda_1) and
/// z norm-1.
fn sample_type_i_x0(ctx: &FieldContext, rng: &mut ChaCha8Rng) -> Result<SymmetricPoint> {
    for _ in 0..RETRIES {
        let b = unit_int(rng, ctx.p);
        // a^2 = eps b^2 - 1, solvable when the right side is a square
        let rhs = Coord::from_int(ctx, ctx.epsilon as i64 * b * b - 1);
        if rhs.is_exact_zero() || quad_symbol(ctx, &rhs) != Ok(1) {
            continue;
        }
        let a = hensel_sqrt(ctx, &rhs)?;
        let l1 = Ext { a, b: Coord::from_int(ctx, b) };
        if l1.exact_val() != Ok(0) {
            continue;
        }
        // x = 0, y = lambda_1 / xi
        let y = Ext::div(ctx, &l1, &Ext::xi(ctx))?;
        let z = u1_element(ctx, rng);
        let g = SymmetricPoint::new(*ctx, Nu::Xi2, Ext::zero(), y, z);
        if g.invariants().is_err() {
            continue;
        }
        return Ok(g);
    }
    Err(Error::TargetUnreachable("type I x = 0".into()))
}

/// Type I with forced-negative invariants: v(lambda_1) = j > 0.
fn sample_type_i_negative(
    ctx: &FieldContext,
    rng: &mut ChaCha8Rng,
    j: u32,
) -> Result<SymmetricPoint> {
    for _ in 0..RETRIES {
        let l1 = unit_pair(ctx, rng).shift(j as i64);
        let l2 = u1_element(ctx, rng);
        let l3 = Ext::inv(ctx, &Ext::theta(ctx, &l1))?;
        let g = from_eigen_unramified(ctx, Nu::Xi2, &l1, &l2, &l3)?;
        let inv = match g.invariants() {
            Ok(i) => i,
            // a degenerate draw (deep coincidence) is resampled
            Err(_) => continue,
        };
        if inv.all_nonnegative() {
            continue;
        }
        return Ok(g);
    }
    Err(Error::TargetUnreachable("type I negative invariants".into()))
}

/// Type III: lambda_1 = w / theta_nu(w) for a tower unit w = A + B sqrt(nu)
/// with v(B) = n, giving M13 = n + 1/2; z is pivoted to distance M12
/// (or n + 1 for the equal-invariant case) from the E-part of lambda_1.
fn sample_type_iii(
    ctx: &FieldContext,
    rng: &mut ChaCha8Rng,
    spec: &SampleSpec,
) -> Result<SymmetricPoint> {
    let nu = spec.nu();
    let m13 = spec.target_m13.unwrap_or(HalfInt::from_twice(1));
    let n = m13.floor(); // M13 = n + 1/2
    let m12 = spec.target_m12.unwrap_or(HalfInt::ZERO);
    for _ in 0..RETRIES {
        // tower unit with exact sqrt(nu)-part valuation n
        let a_part = unit_pair(ctx, rng);
        let b_part = {
            let b = Ext::from_ints(ctx, any_int(rng, ctx.p), unit_int(rng, ctx.p));
            if b.exact_val() != Ok(0) {
                continue;
            }
            b.shift(n)
        };
        let w = Tower { a: a_part, b: b_part, nu };
        let l1 = match Tower::div(ctx, &w, &Tower::theta(ctx, &w)) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let (xe, ye) = (l1.a.clone(), l1.b.clone());
        if xe.exact_val() != Ok(0) || ye.exact_val() != Ok(n) {
            continue;
        }
        let starget = if m12 == m13 { n + 1 } else { m12.to_int() };
        let z = if starget == 0 {
            let z = u1_element(ctx, rng);
            if dist(ctx, &xe, &z) != Ok(0) {
                continue;
            }
            z
        } else {
            match u1_near(ctx, rng, &xe, starget) {
                Ok(z) => z,
                Err(Error::TargetUnreachable(_)) | Err(Error::PrecisionExhausted(_)) => continue,
                Err(e) => return Err(e),
            }
        };
        let g = SymmetricPoint::new(*ctx, nu, xe, ye, z);
        let inv = match g.invariants() {
            Ok(i) => i,
            // a degenerate draw (deep coincidence) is resampled
            Err(_) => continue,
        };
        if inv.m13 != m13 || inv.m12 != m12 {
            continue;
        }
        return Ok(g);
    }
    Err(Error::TargetUnreachable(format!("type III targets M12={m12} M13={m13}")))
}

/// Build the sample a spec describes. Deterministic in the spec and seed;
/// re-running at doubled precision replays the identical construction.
pub fn sample_gamma(spec: &SampleSpec) -> Result<SymmetricPoint> {
    spec.validate()?;
    let ctx = FieldContext::new(spec.p, spec.precision)?;
    let mut rng = spec.rng();
    match spec.gamma_type {
        TorusType::I => {
            if let Some(j) = spec.negative_shift {
                sample_type_i_negative(&ctx, &mut rng, j.max(1))
            } else if spec.x_zero {
                sample_type_i_x0(&ctx, &mut rng)
            } else {
                sample_type_i(&ctx, &mut rng, spec)
            }
        }
        TorusType::II => {
            if spec.x_zero {
                sample_type_ii_x0(&ctx, &mut rng, spec)
            } else {
                sample_type_ii(&ctx, &mut rng, spec)
            }
        }
        TorusType::III => sample_type_iii(&ctx, &mut rng, spec),
    }
}
