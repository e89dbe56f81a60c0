//! Arithmetic-kernel checks: the worked examples for each operation, and
//! proptest suites for the invariants (multiplicativity of the symbol,
//! Hensel consistency, the congruence-count closed form, norm/trace and
//! valuation laws).

use num_bigint::BigUint;
use orbital_core::field::FieldContext;
use orbital_core::halfint::HalfInt;
use orbital_core::scalar::{
    arith, conj_theta, conj_tower, count_congruence, hensel_sqrt, leading_coeff, pk,
    quad_symbol, scalar_from_json, scalar_to_json, valuation, ArithOp, Coord, Ext, LeadingCoeff,
    PadicScalar, Tower,
};
use orbital_core::{Error, Nu};
use proptest::prelude::*;

fn ctx5() -> FieldContext {
    FieldContext::new(5, 64).unwrap()
}

fn f(ctx: &FieldContext, n: i64) -> PadicScalar {
    PadicScalar::from_int(ctx, n)
}

#[test]
fn arith_examples() {
    let ctx = ctx5();
    // 2 + 3 = 5, valuation 1 (stored doubled: 2)
    let s = arith(&ctx, &f(&ctx, 2), &f(&ctx, 3), ArithOp::Add).unwrap();
    assert_eq!(valuation(&s).unwrap(), HalfInt::from_int(1));
    assert_eq!(valuation(&s).unwrap().twice(), 2);
    // xi * xi = epsilon, an F-level unit value
    let xixi = arith(&ctx, &PadicScalar::xi(&ctx), &PadicScalar::xi(&ctx), ArithOp::Mul).unwrap();
    let eps = f(&ctx, ctx.epsilon as i64);
    match (&xixi, &eps) {
        (PadicScalar::E(e), PadicScalar::F(c)) => {
            assert!(Coord::congruent(&ctx, &e.a, c));
            assert!(e.b.is_exact_zero());
        }
        _ => panic!("unexpected levels"),
    }
    // cancellation below certified depth: precision 8 half-digits = 4 digits
    let shallow = FieldContext::new(5, 8).unwrap();
    let big = Coord::from_mantissa(&shallow, &(BigUint::from(1u32) + pk(5, 12)), 0);
    let diff = arith(
        &shallow,
        &PadicScalar::F(big),
        &PadicScalar::F(Coord::one(&shallow)),
        ArithOp::Sub,
    );
    assert!(matches!(diff, Err(Error::PrecisionExhausted(_))));
}

#[test]
fn division_guards() {
    let ctx = ctx5();
    assert!(matches!(
        arith(&ctx, &f(&ctx, 1), &f(&ctx, 0), ArithOp::Div),
        Err(Error::DivisionByZero)
    ));
    let q = arith(&ctx, &f(&ctx, 7), &f(&ctx, 5), ArithOp::Div).unwrap();
    assert_eq!(valuation(&q).unwrap(), HalfInt::from_int(-1));
}

#[test]
fn valuation_examples() {
    let ctx = ctx5();
    assert_eq!(valuation(&f(&ctx, 50)).unwrap(), HalfInt::from_int(2));
    assert_eq!(valuation(&PadicScalar::xi(&ctx)).unwrap(), HalfInt::ZERO);
    // v(sqrt(nu)) = 1/2 for nu = pi
    let root = PadicScalar::L(Tower {
        a: Ext::zero(),
        b: Ext::one(&ctx),
        nu: Nu::Pi,
    });
    assert_eq!(valuation(&root).unwrap(), HalfInt::from_twice(1));
    assert!(matches!(valuation(&f(&ctx, 0)), Err(Error::ZeroValuation)));
}

#[test]
fn leading_coeff_examples() {
    let ctx = ctx5();
    assert_eq!(leading_coeff(&ctx, &f(&ctx, 50)).unwrap(), LeadingCoeff::F(2));
    assert_eq!(leading_coeff(&ctx, &f(&ctx, -5)).unwrap(), LeadingCoeff::F(4));
    let q = arith(&ctx, &f(&ctx, 7), &f(&ctx, 5), ArithOp::Div).unwrap();
    assert_eq!(leading_coeff(&ctx, &q).unwrap(), LeadingCoeff::F(2));
    // E-level leading pair
    let e = PadicScalar::E(Ext::from_ints(&ctx, 10, 3));
    assert_eq!(leading_coeff(&ctx, &e).unwrap(), LeadingCoeff::E(0, 3));
}

#[test]
fn conjugation_examples() {
    let ctx = ctx5();
    let one_plus_xi = PadicScalar::E(Ext::from_ints(&ctx, 1, 1));
    let conj = conj_theta(&ctx, &one_plus_xi);
    match &conj {
        PadicScalar::E(e) => {
            assert!(Coord::congruent(&ctx, &e.a, &Coord::one(&ctx)));
            assert!(Coord::congruent(&ctx, &e.b, &Coord::from_int(&ctx, -1)));
        }
        _ => panic!(),
    }
    // identity on F
    let a = f(&ctx, 42);
    assert_eq!(conj_theta(&ctx, &a), a);
    // N(1 + xi) = (1 + xi)(1 - xi) = 1 - epsilon
    let n = arith(&ctx, &one_plus_xi, &conj, ArithOp::Mul).unwrap();
    let expect = f(&ctx, 1 - ctx.epsilon as i64);
    match (&n, &expect) {
        (PadicScalar::E(e), PadicScalar::F(c)) => {
            assert!(Coord::congruent(&ctx, &e.a, c));
            assert!(matches!(e.b, Coord::Zero | Coord::Small { .. }));
        }
        _ => panic!(),
    }
    // tower conjugation: sqrt(nu) -> -sqrt(nu), involutive, identity below L
    let t = PadicScalar::L(Tower {
        a: Ext::from_ints(&ctx, 3, 0),
        b: Ext::from_ints(&ctx, 2, 1),
        nu: Nu::Pi,
    });
    let s = conj_tower(&ctx, &t);
    assert_ne!(s, t);
    assert_eq!(conj_tower(&ctx, &s), t);
    assert_eq!(conj_tower(&ctx, &a), a);
}

#[test]
fn quad_symbol_examples() {
    let ctx = ctx5();
    let sym = |n: i64| quad_symbol(&ctx, &Coord::from_int(&ctx, n)).unwrap();
    assert_eq!(sym(4), 1);
    assert_eq!(sym(10), -1); // odd valuation
    // 2 is a non-residue mod 5: the squares mod 5 are exactly {1, 4}
    let squares: Vec<u64> = (1..5u64).map(|x| x * x % 5).collect();
    assert!(!squares.contains(&2));
    assert_eq!(sym(2), -1);
    assert!(matches!(
        quad_symbol(&ctx, &Coord::Zero),
        Err(Error::ZeroValuation)
    ));
}

#[test]
fn hensel_sqrt_examples() {
    let ctx = ctx5();
    let r = hensel_sqrt(&ctx, &Coord::from_int(&ctx, 4)).unwrap();
    assert!(Coord::congruent(&ctx, &r, &Coord::from_int(&ctx, 2)));
    // sqrt(6) = 16 mod 125 (16^2 = 256 = 6 + 2*125)
    let r6 = hensel_sqrt(&ctx, &Coord::from_int(&ctx, 6)).unwrap();
    let m125 = Coord::sub(&ctx, &r6, &Coord::from_int(&ctx, 16));
    assert!(m125.val_at_least(3).unwrap());
    assert!(matches!(
        hensel_sqrt(&ctx, &Coord::from_int(&ctx, 2)),
        Err(Error::NotASquare)
    ));
    assert!(matches!(
        hensel_sqrt(&ctx, &Coord::from_int(&ctx, 10)),
        Err(Error::NotASquare)
    ));
}

#[test]
fn count_congruence_examples() {
    let ctx = ctx5();
    // x = +-1 mod 25
    assert_eq!(count_congruence(&ctx, &f(&ctx, 1), 2, 2).unwrap(), 2);
    // no constraint
    assert_eq!(count_congruence(&ctx, &f(&ctx, 1), 0, 1).unwrap(), 5);
    // a = xi has a^2 = epsilon = 2, a non-residue: no x with v(x^2 - 2) >= 1
    assert_eq!(count_congruence(&ctx, &PadicScalar::xi(&ctx), 1, 2).unwrap(), 0);
}

#[test]
fn scalar_json_roundtrip() {
    let ctx = ctx5();
    let vals = [
        f(&ctx, 350),
        PadicScalar::E(Ext::from_ints(&ctx, 7, -10)),
        PadicScalar::L(Tower {
            a: Ext::from_ints(&ctx, 1, 2),
            b: Ext::from_ints(&ctx, 0, 5),
            nu: Nu::Xi2Pi,
        }),
    ];
    for v in vals {
        let j = scalar_to_json(&ctx, &v);
        let text = serde_json::to_string(&j).unwrap();
        let back = scalar_from_json(&ctx, &serde_json::from_str(&text).unwrap()).unwrap();
        assert!(orbital_core::scalar::congruent(&ctx, &v, &back));
    }
}

// ---------------------------------------------------------------------------
// property suites (>= 256 randomized cases each)
// ---------------------------------------------------------------------------

fn arb_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7, 11, 13])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn symbol_multiplicative_on_units(p in arb_prime(), a in 1i64..4000, b in 1i64..4000) {
        let ctx = FieldContext::new(p, 32).unwrap();
        prop_assume!(a.unsigned_abs() % p != 0 && b.unsigned_abs() % p != 0);
        let ca = Coord::from_int(&ctx, a);
        let cb = Coord::from_int(&ctx, b);
        let ab = Coord::mul(&ctx, &ca, &cb);
        prop_assert_eq!(
            quad_symbol(&ctx, &ab).unwrap(),
            quad_symbol(&ctx, &ca).unwrap() * quad_symbol(&ctx, &cb).unwrap()
        );
    }

    #[test]
    fn hensel_root_squares_back(p in arb_prime(), a in 1i64..9999, shift in -2i64..3) {
        let ctx = FieldContext::new(p, 64).unwrap();
        prop_assume!(a.unsigned_abs() % p != 0);
        let c = Coord::from_int(&ctx, a).shift(shift);
        let sq = Coord::mul(&ctx, &c, &c);
        let r = hensel_sqrt(&ctx, &sq).unwrap();
        let r2 = Coord::mul(&ctx, &r, &r);
        prop_assert!(Coord::congruent(&ctx, &r2, &sq));
        // the canonical root has leading coefficient in the lower half-range
        let lc = r.leading(&ctx).unwrap();
        prop_assert!(lc >= 1 && lc <= (p - 1) / 2);
    }

    #[test]
    fn congruence_count_closed_form(p in prop::sample::select(vec![3u64, 5]),
                                    a in 1i64..500, va in 0i64..2, extra in 0i64..2) {
        let ctx = FieldContext::new(p, 32).unwrap();
        prop_assume!(a.unsigned_abs() % p != 0);
        let depth_cap: i64 = if p == 3 { 6 } else { 5 };
        let l = (2 * va + 1 + extra).min(depth_cap);
        let depth = depth_cap;
        let c = PadicScalar::F(Coord::from_int(&ctx, a).shift(va));
        let got = count_congruence(&ctx, &c, l, depth as u32).unwrap();
        prop_assert_eq!(got, 2 * p.pow((depth - (l - va)) as u32));
    }

    #[test]
    fn norm_trace_identities(p in arb_prime(), a in -999i64..999, b in -999i64..999) {
        let ctx = FieldContext::new(p, 48).unwrap();
        prop_assume!(a != 0 || b != 0);
        let e = Ext::from_ints(&ctx, a, b);
        let n = Ext::norm(&ctx, &e);
        let eps = ctx.epsilon as i64;
        // compare against integer arithmetic: N = a^2 - eps b^2, Tr = 2a
        let expect_n = Coord::from_int(&ctx, a * a - eps * b * b);
        prop_assert!(Coord::congruent(&ctx, &n, &expect_n));
        let tr = Ext::trace(&ctx, &e);
        prop_assert!(Coord::congruent(&ctx, &tr, &Coord::from_int(&ctx, 2 * a)));
        // and via the conjugate: x theta(x) = N(x)
        let alt = Ext::mul(&ctx, &e, &Ext::theta(&ctx, &e));
        prop_assert!(Coord::congruent(&ctx, &alt.a, &n));
    }

    #[test]
    fn valuation_laws(p in arb_prime(), a in 1i64..9999, b in 1i64..9999,
                      sa in -3i64..4, sb in -3i64..4) {
        let ctx = FieldContext::new(p, 48).unwrap();
        prop_assume!(a.unsigned_abs() % p != 0 && b.unsigned_abs() % p != 0);
        let x = PadicScalar::F(Coord::from_int(&ctx, a).shift(sa));
        let y = PadicScalar::F(Coord::from_int(&ctx, b).shift(sb));
        let (va, vb) = (valuation(&x).unwrap(), valuation(&y).unwrap());
        let prod = arith(&ctx, &x, &y, ArithOp::Mul).unwrap();
        prop_assert_eq!(valuation(&prod).unwrap(), va + vb);
        if let Ok(sum) = arith(&ctx, &x, &y, ArithOp::Add) {
            if let Ok(vs) = valuation(&sum) {
                prop_assert!(vs >= va.min(vb));
                if va != vb {
                    prop_assert_eq!(vs, va.min(vb));
                }
            }
        }
    }
}
