//! Acceptance suite: six exit criteria, one pass/fail line each.
//!
//! 1. Oracle-formula equivalence over the default grid, exact and total.
//! 2. Kappa-sum = corollary closed form on the same grid, including the
//!    type III vanishing away from kappa_nu.
//! 3. Pinned spot values against both oracles.
//! 4. Fifty engineered vanishing samples give 0 along every route.
//! 5. Randomized arithmetic and invariant property suites (>= 200 cases),
//!    plus oracle stability under doubled caps.
//! 6. Byte-identical reports for identical flags (run twice through the
//!    binary).

use orbital_core::closed_form::{eval_orbital, kappa_corollary};
use orbital_core::field::SquareClass;
use orbital_core::halfint::HalfInt;
use orbital_core::harness::{run_comparison, GridSpec};
use orbital_core::oracle::{raw_orbital_oracle, reduced_orbital_oracle, OracleConfig};
use orbital_core::orbit::{EndoscopicGroup, TorusType};
use orbital_core::rational::ExactRational;
use orbital_core::sampler::{sample_gamma, SampleSpec};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(v: &Verdict) {
    println!(
        "criterion {} ... {}{}",
        v.name,
        if v.pass { "PASS" } else { "FAIL" },
        if v.detail.is_empty() { String::new() } else { format!(" ({})", v.detail) }
    );
    assert!(v.pass, "criterion {} failed: {}", v.name, v.detail);
}

fn grid_records() -> &'static Vec<orbital_core::harness::ComparisonRecord> {
    static RECORDS: OnceLock<Vec<orbital_core::harness::ComparisonRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| {
        let t0 = Instant::now();
        let records = run_comparison(&GridSpec::default());
        eprintln!("default grid: {} records in {:.1?}", records.len(), t0.elapsed());
        records
    })
}

#[test]
fn criterion_1_oracle_formula_equivalence() {
    let t0 = Instant::now();
    let records = grid_records();
    let total = records.len();
    let bad: Vec<_> = records
        .iter()
        .filter(|r| {
            r.error.is_some()
                || !r.stable
                || r.closed != r.raw
                || (r.reduced != "-" && r.closed != r.reduced)
        })
        .collect();
    let elapsed = t0.elapsed();
    report(&Verdict {
        name: "1 (closed = raw = reduced on the default grid)",
        pass: bad.is_empty() && total > 0 && elapsed.as_secs() < 600,
        detail: format!(
            "{} records, {} disagreements, {:.1?}{}",
            total,
            bad.len(),
            elapsed,
            bad.first().map(|r| format!("; first: {}", r.id)).unwrap_or_default()
        ),
    });
}

#[test]
fn criterion_2_kappa_corollaries() {
    let records = grid_records();
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for r in records.iter().filter(|r| r.mu == "1" && r.error.is_none()) {
        for k in &r.kappa {
            checked += 1;
            if !k.matched {
                failures.push(format!("{}:{}", r.id, k.kappa));
            }
            // type III vanishes away from kappa_nu
            if r.gamma_type == "III" && k.kappa != format!("kappa_{}", r.nu) && k.summed != "0" {
                failures.push(format!("{}:{} nonzero", r.id, k.kappa));
            }
        }
    }
    report(&Verdict {
        name: "2 (kappa-sums equal the corollary closed forms)",
        pass: failures.is_empty() && checked > 0,
        detail: format!(
            "{checked} character sums{}",
            failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
    });
}

#[test]
fn criterion_3_spot_values() {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |label: &str, got: ExactRational, want: ExactRational| {
        if got != want {
            failures.push(format!("{label}: {} != {}", got, want));
        }
    };

    // type I, M13 = 0: O = 1/2 at mu = 1 and 0 at mu = pi
    let mut spec = SampleSpec::basic(TorusType::I, 5, 0, 64);
    spec.target_m12 = Some(HalfInt::ZERO);
    spec.target_m13 = Some(HalfInt::ZERO);
    let g = sample_gamma(&spec).unwrap();
    let inv = g.invariants().unwrap();
    for rep in g.rational_representatives() {
        let want = if rep.mu == SquareClass::One {
            ExactRational::from_ratio(1, 2)
        } else {
            ExactRational::zero()
        };
        let cfg = OracleConfig::for_sample(&inv, rep.mu);
        check("I M13=0 closed", eval_orbital(&inv, rep.mu).unwrap(), want.clone());
        check("I M13=0 raw", raw_orbital_oracle(&rep, &cfg).unwrap(), want.clone());
        check("I M13=0 reduced", reduced_orbital_oracle(&rep, &cfg).unwrap(), want);
    }

    // type I, M13 = 3, M12 = 0: O = 3/2 and 2; the kappa1 sum is -1/2
    let mut spec = SampleSpec::basic(TorusType::I, 5, 1, 64);
    spec.target_m12 = Some(HalfInt::ZERO);
    spec.target_m13 = Some(HalfInt::from_int(3));
    let g = sample_gamma(&spec).unwrap();
    let inv = g.invariants().unwrap();
    for rep in g.rational_representatives() {
        let want = if rep.mu == SquareClass::One {
            ExactRational::from_ratio(3, 2)
        } else {
            ExactRational::from_int(2)
        };
        let cfg = OracleConfig::for_sample(&inv, rep.mu);
        check("I M13=3 closed", eval_orbital(&inv, rep.mu).unwrap(), want.clone());
        check("I M13=3 raw", raw_orbital_oracle(&rep, &cfg).unwrap(), want.clone());
        check("I M13=3 reduced", reduced_orbital_oracle(&rep, &cfg).unwrap(), want);
    }
    let kappa1 = EndoscopicGroup::for_type(TorusType::I).nontrivial_characters()[0];
    check(
        "I M13=3 kappa1",
        kappa_corollary(&inv, &kappa1).unwrap(),
        ExactRational::from_ratio(-1, 2),
    );
    let mut summed = ExactRational::zero();
    for &mu in &EndoscopicGroup::for_type(TorusType::I).elements {
        summed += eval_orbital(&inv, mu).unwrap().scale_int(kappa1.value(mu) as i64);
    }
    check("I M13=3 kappa1 sum", summed, ExactRational::from_ratio(-1, 2));

    // type II, M13 = 2, M12 = 0: O = 3/4 at mu = 1
    let mut spec = SampleSpec::basic(TorusType::II, 5, 2, 64);
    spec.target_m12 = Some(HalfInt::ZERO);
    spec.target_m13 = Some(HalfInt::from_int(2));
    let g = sample_gamma(&spec).unwrap();
    let inv2 = g.invariants().unwrap();
    check(
        "II M13=2 closed",
        eval_orbital(&inv2, SquareClass::One).unwrap(),
        ExactRational::from_ratio(3, 4),
    );
    let cfg = OracleConfig::for_sample(&inv2, SquareClass::One);
    check(
        "II M13=2 raw",
        raw_orbital_oracle(&g, &cfg).unwrap(),
        ExactRational::from_ratio(3, 4),
    );

    // type III, M13 = 1/2: O = 1/4 for all four mu
    for p in [3u64, 5, 7] {
        let mut spec = SampleSpec::basic(TorusType::III, p, 3, 64);
        spec.target_m13 = Some(HalfInt::from_twice(1));
        let g = sample_gamma(&spec).unwrap();
        let inv = g.invariants().unwrap();
        for rep in g.rational_representatives() {
            let cfg = OracleConfig::for_sample(&inv, rep.mu);
            check(
                "III M13=1/2 closed",
                eval_orbital(&inv, rep.mu).unwrap(),
                ExactRational::from_ratio(1, 4),
            );
            check(
                "III M13=1/2 raw",
                raw_orbital_oracle(&rep, &cfg).unwrap(),
                ExactRational::from_ratio(1, 4),
            );
            check(
                "III M13=1/2 reduced",
                reduced_orbital_oracle(&rep, &cfg).unwrap(),
                ExactRational::from_ratio(1, 4),
            );
        }
    }

    report(&Verdict {
        name: "3 (pinned spot values)",
        pass: failures.is_empty(),
        detail: failures.first().cloned().unwrap_or_default(),
    });
}

#[test]
fn criterion_4_vanishing_suite() {
    let mut count = 0usize;
    let mut failures = Vec::new();
    'outer: for p in [3u64, 5, 7] {
        for j in 1..=2u32 {
            for seed in 0..9u64 {
                let mut spec = SampleSpec::basic(TorusType::I, p, seed, 64);
                spec.negative_shift = Some(j);
                let g = sample_gamma(&spec).unwrap();
                let inv = g.invariants().unwrap();
                if inv.all_nonnegative() {
                    failures.push(format!("p={p} j={j} s={seed}: invariants not negative"));
                    continue;
                }
                for rep in g.rational_representatives() {
                    let cfg = OracleConfig::for_sample(&inv, rep.mu);
                    let raw = raw_orbital_oracle(&rep, &cfg).unwrap();
                    let closed = eval_orbital(&inv, rep.mu).unwrap();
                    if !raw.is_zero() || !closed.is_zero() {
                        failures.push(format!("p={p} j={j} s={seed} mu={}", rep.mu));
                    }
                    count += 1;
                    if count >= 54 {
                        break 'outer;
                    }
                }
            }
        }
    }
    report(&Verdict {
        name: "4 (vanishing suite, 50+ engineered samples)",
        pass: failures.is_empty() && count >= 50,
        detail: format!(
            "{count} samples{}",
            failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
    });
}

#[test]
fn criterion_5_property_suites() {
    let mut failures = Vec::new();
    for (name, res) in orbital_core::selftest::run_all(&[3, 5, 7], 200, 77) {
        if let Err(e) = res {
            failures.push(format!("{name}: {e}"));
        }
    }
    // oracle stability under doubled m_max and u_depth
    for (t, m12_2, m13_2) in [
        (TorusType::I, 4, 6),
        (TorusType::II, 2, 4),
        (TorusType::III, 2, 5),
    ] {
        let mut spec = SampleSpec::basic(t, 5, 5, 64);
        spec.target_m12 = Some(HalfInt::from_twice(m12_2));
        spec.target_m13 = Some(HalfInt::from_twice(m13_2));
        let g = sample_gamma(&spec).unwrap();
        let inv = g.invariants().unwrap();
        for rep in g.rational_representatives() {
            let mut cfg = OracleConfig::for_sample(&inv, rep.mu);
            let a = raw_orbital_oracle(&rep, &cfg).unwrap();
            let ra = reduced_orbital_oracle(&rep, &cfg).unwrap();
            cfg.m_max *= 2;
            cfg.u_depth *= 2;
            let b = raw_orbital_oracle(&rep, &cfg).unwrap();
            let rb = reduced_orbital_oracle(&rep, &cfg).unwrap();
            if a != b || ra != rb {
                failures.push(format!("{t} mu={} moved under doubled caps", rep.mu));
            }
        }
    }
    report(&Verdict {
        name: "5 (randomized property suites, >= 200 cases each)",
        pass: failures.is_empty(),
        detail: failures.first().cloned().unwrap_or_default(),
    });
}

#[test]
fn criterion_6_byte_identical_reports() {
    let bin = env!("CARGO_BIN_EXE_orbital");
    let run = || {
        Command::new(bin)
            .args([
                "compare",
                "--types",
                "I,III",
                "--primes",
                "3,5",
                "--max-m",
                "2",
                "--seeds",
                "2",
            ])
            .env_remove("ORBITAL_OUT_DIR")
            .output()
            .expect("binary runs")
    };
    let a = run();
    let b = run();
    let pass = a.status.success() && b.status.success() && a.stdout == b.stdout
        && !a.stdout.is_empty();
    report(&Verdict {
        name: "6 (byte-identical reports for identical flags)",
        pass,
        detail: format!(
            "{} bytes per report, exit {:?}/{:?}",
            a.stdout.len(),
            a.status.code(),
            b.status.code()
        ),
    });
}
