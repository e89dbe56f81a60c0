//! Randomized property suites shared by the CLI `selftest` subcommand and
//! the acceptance run. Every assertion is exact.

use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::halfint::HalfInt;
use crate::orbit::TorusType;
use crate::sampler::{sample_gamma, SampleSpec};
use crate::scalar::{
    arith, count_congruence, hensel_sqrt, quad_symbol, valuation, ArithOp, Coord, Ext,
    PadicScalar,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fail(suite: &str, detail: String) -> Error {
    Error::BadInput(format!("{suite}: {detail}"))
}

fn random_unit(ctx: &FieldContext, rng: &mut ChaCha8Rng) -> Coord {
    loop {
        let n = rng.gen_range(-9999i64..=9999);
        if n != 0 && n.unsigned_abs() % ctx.p != 0 {
            let j = rng.gen_range(-3i64..=3);
            return Coord::from_int(ctx, n).shift(j);
        }
    }
}

/// Multiplicativity of the quadratic symbol on units.
pub fn symbol_multiplicativity(p: u64, cases: u32, seed: u64) -> Result<()> {
    let ctx = FieldContext::new(p, 32)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let a = random_unit(&ctx, &mut rng).shift(0);
        let b = random_unit(&ctx, &mut rng);
        // restrict to unit valuation
        let a = match &a {
            Coord::Unit { val, .. } => a.shift(-val),
            _ => unreachable!(),
        };
        let b = match &b {
            Coord::Unit { val, .. } => b.shift(-val),
            _ => unreachable!(),
        };
        let ab = Coord::mul(&ctx, &a, &b);
        let lhs = quad_symbol(&ctx, &ab)?;
        let rhs = quad_symbol(&ctx, &a)? * quad_symbol(&ctx, &b)?;
        if lhs != rhs {
            return Err(fail("symbol multiplicativity", format!("{lhs} != {rhs}")));
        }
    }
    Ok(())
}

/// hensel_sqrt squares back exactly on all certified digits.
pub fn hensel_square_back(p: u64, cases: u32, seed: u64) -> Result<()> {
    let ctx = FieldContext::new(p, 64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < cases {
        let a = random_unit(&ctx, &mut rng);
        let a = Coord::mul(&ctx, &a, &a); // guaranteed square, even valuation
        let r = hensel_sqrt(&ctx, &a)?;
        let r2 = Coord::mul(&ctx, &r, &r);
        if !Coord::congruent(&ctx, &r2, &a) {
            return Err(fail("hensel sqrt", "r^2 differs from a".into()));
        }
        // canonical leading coefficient in the lower half-range
        let lc = r.leading(&ctx)?;
        if lc == 0 || lc > (p - 1) / 2 {
            return Err(fail("hensel sqrt", format!("leading {lc} not canonical")));
        }
        done += 1;
    }
    // non-squares are rejected
    let eps = Coord::from_int(&ctx, ctx.epsilon as i64);
    match hensel_sqrt(&ctx, &eps) {
        Err(Error::NotASquare) => Ok(()),
        other => Err(fail("hensel sqrt", format!("non-residue gave {other:?}"))),
    }
}

/// count_congruence matches the closed two-class count
/// 2 p^{depth - (l - v(a))} whenever 2v(a) < l.
pub fn congruence_count_closed_form(p: u64, cases: u32, seed: u64) -> Result<()> {
    let ctx = FieldContext::new(p, 32)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth_cap = match p {
        3 => 6,
        5 => 5,
        _ => 4,
    };
    for _ in 0..cases {
        let va = rng.gen_range(0i64..=1);
        let a = random_unit(&ctx, &mut rng);
        let a = match &a {
            Coord::Unit { val, .. } => a.shift(va - val),
            _ => unreachable!(),
        };
        let depth = rng.gen_range((2 * va + 1).max(1)..=depth_cap) as u32;
        let l = rng.gen_range((2 * va + 1)..=depth as i64);
        let got = count_congruence(&ctx, &PadicScalar::F(a.clone()), l, depth)?;
        let expect = 2 * p.pow((depth as i64 - (l - va)) as u32);
        if got != expect {
            return Err(fail(
                "congruence count",
                format!("v(a)={va} l={l} depth={depth}: {got} != {expect}"),
            ));
        }
        // for 2v(a) >= l the count is that of 2v(x) >= l
        let l2 = rng.gen_range(0..=(2 * va));
        let got2 = count_congruence(&ctx, &PadicScalar::F(a), l2, depth)?;
        let expect2 = p.pow((depth as i64 - l2.div_euclid(2) - (l2.rem_euclid(2) != 0) as i64)
            as u32);
        if got2 != expect2 {
            return Err(fail(
                "congruence count",
                format!("large-a case l={l2} depth={depth}: {got2} != {expect2}"),
            ));
        }
    }
    Ok(())
}

/// Norm and trace identities, valuation additivity and the ultrametric
/// inequality.
pub fn arithmetic_identities(p: u64, cases: u32, seed: u64) -> Result<()> {
    let ctx = FieldContext::new(p, 48)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let a = random_unit(&ctx, &mut rng);
        let b = random_unit(&ctx, &mut rng);
        let e = Ext { a: a.clone(), b: b.clone() };
        // N(a + b xi) = a^2 - eps b^2
        let n = Ext::norm(&ctx, &e);
        let eps = Coord::from_int(&ctx, ctx.epsilon as i64);
        let expect = Coord::sub(
            &ctx,
            &Coord::mul(&ctx, &a, &a),
            &Coord::mul(&ctx, &eps, &Coord::mul(&ctx, &b, &b)),
        );
        if !Coord::congruent(&ctx, &n, &expect) {
            return Err(fail("norm identity", "N(a+b xi) != a^2 - eps b^2".into()));
        }
        // Tr = 2a, via the conjugation route
        let tr = Ext::add(&ctx, &e, &Ext::theta(&ctx, &e));
        let two_a = Coord::scale_int(&ctx, 2, &a);
        if !Coord::congruent(&ctx, &tr.a, &two_a) || !matches!(tr.b, Coord::Small { .. } | Coord::Zero)
        {
            return Err(fail("trace identity", "Tr(a+b xi) != 2a".into()));
        }
        // v(ab) = v(a) + v(b); ultrametric with equality on distinct valuations
        let x = PadicScalar::F(a.clone());
        let y = PadicScalar::F(b.clone());
        let prod = arith(&ctx, &x, &y, ArithOp::Mul)?;
        if valuation(&prod)? != valuation(&x)? + valuation(&y)? {
            return Err(fail("valuation", "v(ab) != v(a) + v(b)".into()));
        }
        let sum = match arith(&ctx, &x, &y, ArithOp::Add) {
            Ok(s) if !s.is_exact_zero() => s,
            _ => continue, // full cancellation: nothing to compare
        };
        let (va, vb) = (valuation(&x)?, valuation(&y)?);
        match valuation(&sum) {
            Ok(vs) => {
                if vs < va.min(vb) {
                    return Err(fail("ultrametric", format!("v(a+b) = {vs} < min")));
                }
                if va != vb && vs != va.min(vb) {
                    return Err(fail("ultrametric", "strict inequality without a tie".into()));
                }
            }
            Err(Error::ZeroValuation) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// The three valuation identities relating z_x, z_y to the eigenvalue
/// invariants, plus the structural facts per type, on random regular
/// samples. `per_type` counts samples for each torus type.
pub fn invariant_identities(p: u64, per_type: u32, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in [TorusType::I, TorusType::II, TorusType::III] {
        for i in 0..per_type {
            let mut spec = SampleSpec::basic(t, p, seed.wrapping_add(i as u64), 64);
            // random small targets keep every case in rotation
            match t {
                TorusType::III => {
                    let h2 = 2 * rng.gen_range(0i64..=2) + 1;
                    let m13 = HalfInt::from_twice(h2);
                    let m12 = if rng.gen_bool(0.3) {
                        m13
                    } else {
                        HalfInt::from_int(rng.gen_range(0..=(h2 - 1) / 2))
                    };
                    spec.target_m13 = Some(m13);
                    spec.target_m12 = Some(m12);
                }
                _ => {
                    let m13 = rng.gen_range(0i64..=3);
                    let m12 = rng.gen_range(0i64..=m13);
                    spec.target_m13 = Some(HalfInt::from_int(m13));
                    spec.target_m12 = Some(HalfInt::from_int(m12));
                }
            }
            let gamma = sample_gamma(&spec)?;
            check_valuation_identities(&gamma)?;
        }
    }
    Ok(())
}

/// v(z_x - 1) = M12 + M23 - N13,
/// v(z_y + sqrt(nu)) = M23 + N12 - M13 + v(nu)/2,
/// v(z_y - sqrt(nu)) = M12 + N23 - M13 + v(nu)/2;
/// M12 = M23 for types I and III; the type I dichotomy; and invariance of
/// all M, N across the rational representatives.
pub fn check_valuation_identities(gamma: &crate::orbit::SymmetricPoint) -> Result<()> {
    let ctx = &gamma.ctx;
    let inv = gamma.invariants()?;
    let e = |m: String| Err(fail("valuation identities", m));

    if matches!(inv.gamma_type, TorusType::I | TorusType::III) && inv.m12 != inv.m23 {
        return e(format!("M12 = {} != M23 = {}", inv.m12, inv.m23));
    }
    if inv.gamma_type == TorusType::I && inv.all_nonnegative() {
        let pos = inv.m12 > HalfInt::ZERO;
        if inv.m13 < inv.m12 {
            return e("M13 < M12".into());
        }
        if pos && !(inv.n12 == Some(HalfInt::ZERO) && inv.n23 == Some(HalfInt::ZERO)) {
            return e("dichotomy: M12 > 0 without N12 = N23 = 0".into());
        }
    }
    // eigenvalue symmetry: lambda1 + lambda3 = 2x, lambda1 - lambda3 = 2 sqrt(nu) y
    let [l1, _, l3] = gamma.eigenvalues();
    let two_x = Ext::mul_f(ctx, &gamma.x, &Coord::from_int(ctx, 2));
    let sum = arith(ctx, &l1, &l3, ArithOp::Add)?;
    let sum_e = match &sum {
        PadicScalar::E(v) => v.clone(),
        PadicScalar::L(t) => t.a.clone(),
        PadicScalar::F(c) => Ext::from_f(c.clone()),
    };
    if !Ext::congruent(ctx, &sum_e, &two_x) {
        return e("lambda1 + lambda3 != 2x".into());
    }

    if let (Some(zx), Some(zy)) = (&inv.z_x, &inv.z_y) {
        // z = z_x x + z_y y reproduces z (the linear-system route)
        let recon = Ext::add(
            ctx,
            &Ext::mul_f(ctx, &gamma.x, zx),
            &Ext::mul_f(ctx, &gamma.y, zy),
        );
        if !Ext::congruent(ctx, &recon, &gamma.z) {
            return e("z != z_x x + z_y y".into());
        }
        let one = Coord::one(ctx);
        if let Some(n13) = inv.n13 {
            let lhs = Coord::sub(ctx, zx, &one);
            let expect = inv.m12 + inv.m23 - n13;
            match lhs.exact_val() {
                Ok(v) => {
                    if HalfInt::from_int(v) != expect {
                        return e(format!("v(z_x - 1) = {v} != {expect}"));
                    }
                }
                Err(Error::ZeroValuation) => return e("z_x = 1 exactly".into()),
                Err(_) => {} // below certified depth: expect is out of reach
            }
        }
        // v(z_y -+ sqrt(nu)) in the splitting field of nu
        let vnu = HalfInt::from_twice(gamma.nu.v());
        for (sign, m_side, n_side) in
            [(1, inv.m23, inv.n12), (-1, inv.m12, inv.n23)]
        {
            let Some(n_side) = n_side else { continue };
            let expect = m_side + n_side - inv.m13 + vnu;
            let got = match gamma.nu {
                crate::field::Nu::One | crate::field::Nu::Xi2 => {
                    let root = if gamma.nu == crate::field::Nu::One {
                        Ext::one(ctx)
                    } else {
                        Ext::xi(ctx)
                    };
                    let term = Ext::add(
                        ctx,
                        &Ext::from_f(zy.clone()),
                        &Ext::mul_f(ctx, &root, &Coord::from_int(ctx, sign)),
                    );
                    term.exact_val().map(HalfInt::from_int)
                }
                nu => {
                    let t = crate::scalar::Tower {
                        a: Ext::from_f(zy.clone()),
                        b: Ext::from_f(Coord::from_int(ctx, sign)),
                        nu,
                    };
                    t.exact_val2().map(HalfInt::from_twice)
                }
            };
            match got {
                Ok(v) => {
                    if v != expect {
                        return e(format!("v(z_y {sign:+} sqrt(nu)) = {v} != {expect}"));
                    }
                }
                Err(Error::ZeroValuation) => return e("z_y = -+sqrt(nu) exactly".into()),
                Err(_) => {}
            }
        }
    }

    // stable-orbit invariance: the M, N of every representative agree
    for rep in gamma.rational_representatives() {
        let jnv = rep.invariants()?;
        if (jnv.m12, jnv.m13, jnv.m23) != (inv.m12, inv.m13, inv.m23)
            || (jnv.n12, jnv.n13, jnv.n23) != (inv.n12, inv.n13, inv.n23)
        {
            return e(format!("invariants moved under mu = {}", rep.mu));
        }
    }
    Ok(())
}

/// Sum of all suite runners, as used by `selftest`.
pub fn run_all(primes: &[u64], cases: u32, seed: u64) -> Vec<(String, Result<()>)> {
    let mut out = Vec::new();
    for &p in primes {
        out.push((
            format!("quadratic-symbol multiplicativity (p={p}, {cases} cases)"),
            symbol_multiplicativity(p, cases, seed),
        ));
        out.push((
            format!("hensel sqrt squares back (p={p}, {cases} cases)"),
            hensel_square_back(p, cases, seed + 1),
        ));
        out.push((
            format!("congruence count closed form (p={p}, {cases} cases)"),
            congruence_count_closed_form(p, cases, seed + 2),
        ));
        out.push((
            format!("norm/trace/valuation identities (p={p}, {cases} cases)"),
            arithmetic_identities(p, cases, seed + 3),
        ));
        let per_type = (cases / 6).max(8);
        out.push((
            format!("orbit valuation identities (p={p}, {per_type} samples/type)"),
            invariant_identities(p, per_type, seed + 4),
        ));
    }
    out
}
