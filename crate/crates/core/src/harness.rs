//! Grid-driven comparison of the closed forms against both oracles, with
//! machine-readable reports.
//!
//! A grid names torus types, primes, invariant targets and seed counts;
//! every sampled point is evaluated three ways per rational representative
//! (closed form, raw lattice count, reduced lattice count) and the
//! kappa-sums are checked against their corollary closed forms. Records
//! carry exact-equality verdicts only; a run is reproducible byte for byte
//! from its flags, so wall-clock timings stay out of the serialized schema.

use crate::closed_form::{dispatch_case, eval_orbital, kappa_corollary};
use crate::error::{Error, Result};
use crate::field::Nu;
use crate::halfint::HalfInt;
use crate::oracle::{raw_orbital_oracle, reduced_orbital_oracle, OracleCfgEcho, OracleConfig};
use crate::orbit::{EndoscopicGroup, SymmetricPoint, TorusType};
use crate::rational::ExactRational;
use crate::sampler::{sample_gamma, SampleSpec};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One cell of the sampling grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellKind {
    /// Targets (M12, M13).
    Std(HalfInt, HalfInt),
    /// Targets (M23, M13): lambda_2 attached to lambda_3.
    Heavy(HalfInt, HalfInt),
    /// x = 0 with the given twist depth; `flip` targets M23 instead of M12.
    XZero { s: i64, flip: bool },
    /// Forced-negative invariants (type I), shift j.
    Negative(u32),
    /// M13 = 0 with N13 = j (type II), M12 targeted.
    N13 { m12: i64, j: u32 },
}

impl CellKind {
    fn label(&self) -> String {
        match self {
            CellKind::Std(a, b) => format!("m12_{a}-m13_{b}"),
            CellKind::Heavy(a, b) => format!("m23_{a}-m13_{b}"),
            CellKind::XZero { s, flip } => {
                format!("x0_{s}{}", if *flip { "f" } else { "" })
            }
            CellKind::Negative(j) => format!("neg_{j}"),
            CellKind::N13 { m12, j } => format!("m12_{m12}-n13_{j}"),
        }
        .replace('/', "h")
    }
}

/// Grid description for `run_comparison`.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub types: Vec<TorusType>,
    pub primes: Vec<u64>,
    /// Cap on targeted M13 (type III uses the largest half-integer below
    /// or equal to it).
    pub max_m: HalfInt,
    /// Seeds 0..seeds per cell.
    pub seeds: u64,
    pub precision: u32,
    pub m_max_override: Option<i64>,
    pub u_depth_override: Option<i64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            types: vec![TorusType::I, TorusType::II, TorusType::III],
            primes: vec![3, 5, 7],
            max_m: HalfInt::from_int(4),
            seeds: 5,
            precision: 64,
            m_max_override: None,
            u_depth_override: None,
        }
    }
}

/// The default cells for one torus type: every proposition case, the x = 0
/// branches and the vanishing branch each appear in several cells.
pub fn default_cells(t: TorusType, max_m: HalfInt) -> Vec<(Option<Nu>, CellKind)> {
    use CellKind::*;
    let c = max_m.floor().max(1);
    let hi = |n: i64| HalfInt::from_int(n);
    let mut cells: Vec<(Option<Nu>, CellKind)> = Vec::new();
    match t {
        TorusType::I => {
            cells.push((None, Std(hi(0), hi(0))));
            for tt in 1..=c {
                cells.push((None, Std(hi(0), hi(tt))));
            }
            for tt in 2..=c {
                cells.push((None, Std(hi(1), hi(tt))));
                if tt >= 3 {
                    cells.push((None, Std(hi(tt - 1), hi(tt))));
                }
            }
            for s in 1..=c {
                cells.push((None, Std(hi(s), hi(s))));
            }
            cells.push((None, XZero { s: 0, flip: false }));
            cells.push((None, Negative(1)));
            cells.push((None, Negative(2)));
        }
        TorusType::II => {
            cells.push((None, Std(hi(0), hi(0))));
            for s in 1..=c {
                cells.push((None, Std(hi(s), hi(0))));
            }
            for tt in 1..=c {
                cells.push((None, Std(hi(0), hi(tt))));
            }
            for tt in 2..=c {
                cells.push((None, Std(hi(1), hi(tt))));
                if tt >= 3 {
                    cells.push((None, Std(hi(tt - 1), hi(tt))));
                }
            }
            for s in 2..=c {
                cells.push((None, Std(hi(s), hi(s - 1))));
                cells.push((None, Heavy(hi(s), hi(s - 1))));
            }
            if c >= 3 {
                cells.push((None, Std(hi(c), hi(1))));
                cells.push((None, Heavy(hi(c), hi(1))));
            }
            for s in 1..=c {
                cells.push((None, Std(hi(s), hi(s))));
            }
            for s in 1..=c.min(3) {
                cells.push((None, XZero { s, flip: false }));
                cells.push((None, XZero { s, flip: true }));
            }
            cells.push((None, N13 { m12: 2, j: 1 }));
            cells.push((None, N13 { m12: 3, j: 2 }));
        }
        TorusType::III => {
            // targeted M13 runs over half-integers up to max_m
            let cap2 = if max_m.is_integral() { max_m.twice() - 1 } else { max_m.twice() };
            for nu in [Nu::Pi, Nu::Xi2Pi] {
                let nu = Some(nu);
                let mut h2 = 1;
                while h2 <= cap2 {
                    cells.push((nu, Std(hi(0), HalfInt::from_twice(h2))));
                    h2 += 2;
                }
                let mut h2 = 5;
                while h2 <= cap2 {
                    // strictly below M13 - 1/2
                    cells.push((nu, Std(hi(1), HalfInt::from_twice(h2))));
                    if (h2 - 1) / 2 > 2 {
                        cells.push((nu, Std(hi((h2 - 1) / 2 - 1), HalfInt::from_twice(h2))));
                    }
                    h2 += 2;
                }
                let mut h2 = 3;
                while h2 <= cap2 {
                    // M13 = M12 + 1/2
                    cells.push((nu, Std(hi((h2 - 1) / 2), HalfInt::from_twice(h2))));
                    h2 += 2;
                }
                let mut h2 = 3;
                while h2 <= cap2 {
                    // all three equal
                    cells.push((nu, Std(HalfInt::from_twice(h2), HalfInt::from_twice(h2))));
                    h2 += 2;
                }
            }
        }
    }
    cells
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct KappaRecord {
    pub kappa: String,
    pub summed: String,
    pub corollary: String,
    pub matched: bool,
}

/// One line of a comparison report: a single (sample, mu) evaluation, with
/// the per-sample kappa table repeated on each line for self-containment.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct ComparisonRecord {
    pub schema: u32,
    pub id: String,
    pub p: u64,
    pub nu: String,
    pub gamma_type: String,
    pub mu: String,
    pub case: String,
    #[serde(rename = "M12")]
    pub m12: String,
    #[serde(rename = "M13")]
    pub m13: String,
    #[serde(rename = "M23")]
    pub m23: String,
    #[serde(rename = "N12")]
    pub n12: String,
    #[serde(rename = "N13")]
    pub n13: String,
    #[serde(rename = "N23")]
    pub n23: String,
    pub closed: String,
    pub raw: String,
    /// "-" on the x = 0 branch, where the reduced sum does not apply.
    pub reduced: String,
    pub kappa: Vec<KappaRecord>,
    #[serde(rename = "match")]
    pub matched: bool,
    pub stable: bool,
    pub precision: u32,
    pub cfg: OracleCfgEcho,
    pub error: Option<String>,
}

fn opt_half(v: Option<HalfInt>) -> String {
    v.map_or_else(|| "inf".to_string(), |h| h.to_string())
}

fn spec_for_cell(
    t: TorusType,
    p: u64,
    nu: Option<Nu>,
    kind: &CellKind,
    seed: u64,
    precision: u32,
) -> SampleSpec {
    let mut spec = SampleSpec::basic(t, p, seed, precision);
    spec.nu = nu;
    match kind {
        CellKind::Std(m12, m13) => {
            spec.target_m12 = Some(*m12);
            spec.target_m13 = Some(*m13);
        }
        CellKind::Heavy(m23, m13) => {
            spec.target_m23 = Some(*m23);
            spec.target_m13 = Some(*m13);
        }
        CellKind::XZero { s, flip } => {
            spec.x_zero = true;
            spec.x_zero_flip = *flip;
            spec.target_m12 = Some(HalfInt::from_int(*s));
        }
        CellKind::Negative(j) => {
            spec.negative_shift = Some(*j);
        }
        CellKind::N13 { m12, j } => {
            spec.target_m12 = Some(HalfInt::from_int(*m12));
            spec.target_m13 = Some(HalfInt::ZERO);
            spec.n13_shift = Some(*j);
        }
    }
    spec
}

/// Evaluate one sampled point: closed form, both oracles and the kappa
/// table for every rational representative.
pub fn evaluate_sample(
    gamma: &SymmetricPoint,
    id_prefix: &str,
    m_max_override: Option<i64>,
    u_depth_override: Option<i64>,
) -> Result<Vec<ComparisonRecord>> {
    let inv = gamma.invariants()?;
    let case = match dispatch_case(&inv) {
        Ok(c) => c.as_str().to_string(),
        Err(Error::NegativeInvariant) => "vanishing".to_string(),
        Err(e) => return Err(e),
    };
    // per-sample kappa table
    let group = EndoscopicGroup::for_type(inv.gamma_type);
    let mut kappa_records = Vec::new();
    for k in group.nontrivial_characters() {
        let mut summed = ExactRational::zero();
        for &mu in &group.elements {
            summed += eval_orbital(&inv, mu)?.scale_int(k.value(mu) as i64);
        }
        let corollary = kappa_corollary(&inv, &k)?;
        let matched = summed == corollary;
        kappa_records.push(KappaRecord {
            kappa: k.label(),
            summed: summed.to_fraction_string(),
            corollary: corollary.to_fraction_string(),
            matched,
        });
    }
    let mut out = Vec::new();
    for rep in gamma.rational_representatives() {
        let mut cfg = OracleConfig::for_sample(&inv, rep.mu);
        if let Some(m) = m_max_override {
            cfg.m_max = m;
        }
        if let Some(d) = u_depth_override {
            cfg.u_depth = d;
        }
        let closed = eval_orbital(&inv, rep.mu)?;
        let (raw, stable) = match raw_orbital_oracle(&rep, &cfg) {
            Ok(v) => (v, true),
            Err(Error::Unstable(_)) => (ExactRational::zero(), false),
            Err(e) => return Err(e),
        };
        let (reduced, matched) = if inv.x_is_zero {
            (None, closed == raw)
        } else {
            let red = reduced_orbital_oracle(&rep, &cfg)?;
            let ok = closed == raw && closed == red;
            (Some(red), ok)
        };
        let matched = matched && kappa_records.iter().all(|k| k.matched);
        out.push(ComparisonRecord {
            schema: REPORT_SCHEMA,
            id: format!("{id_prefix}-mu_{}", rep.mu.as_str()),
            p: gamma.ctx.p,
            nu: gamma.nu.as_str().to_string(),
            gamma_type: inv.gamma_type.to_string(),
            mu: rep.mu.as_str().to_string(),
            case: case.clone(),
            m12: inv.m12.to_string(),
            m13: inv.m13.to_string(),
            m23: inv.m23.to_string(),
            n12: opt_half(inv.n12),
            n13: opt_half(inv.n13),
            n23: opt_half(inv.n23),
            closed: closed.to_fraction_string(),
            raw: raw.to_fraction_string(),
            reduced: reduced.map_or_else(|| "-".to_string(), |r| r.to_fraction_string()),
            kappa: kappa_records.clone(),
            matched,
            stable,
            precision: gamma.ctx.precision,
            cfg: cfg.echo(stable),
            error: None,
        });
    }
    Ok(out)
}

fn error_record(id: String, p: u64, t: TorusType, precision: u32, err: &Error) -> ComparisonRecord {
    ComparisonRecord {
        schema: REPORT_SCHEMA,
        id,
        p,
        nu: "-".into(),
        gamma_type: t.to_string(),
        mu: "-".into(),
        case: "-".into(),
        m12: "-".into(),
        m13: "-".into(),
        m23: "-".into(),
        n12: "-".into(),
        n13: "-".into(),
        n23: "-".into(),
        closed: "-".into(),
        raw: "-".into(),
        reduced: "-".into(),
        kappa: Vec::new(),
        matched: false,
        stable: false,
        precision,
        cfg: OracleCfgEcho { m_max: 0, u_depth: 0, stability_factor: 0, stable: false },
        error: Some(err.to_string()),
    }
}

/// Run a full grid. Per-sample failures are recorded, never fatal; a
/// precision exhaustion retries the whole sample once at doubled
/// precision before being reported.
pub fn run_comparison(grid: &GridSpec) -> Vec<ComparisonRecord> {
    let mut records = Vec::new();
    for &t in &grid.types {
        for &p in &grid.primes {
            for (nu, kind) in default_cells(t, grid.max_m) {
                for seed in 0..grid.seeds {
                    let id = format!(
                        "{t}-p{p}{}-{}-s{seed}",
                        nu.map_or(String::new(), |n| format!("-{}", n.as_str())),
                        kind.label()
                    );
                    let mut result = None;
                    for precision in [grid.precision, grid.precision * 2] {
                        let spec = spec_for_cell(t, p, nu, &kind, seed, precision);
                        let attempt = sample_gamma(&spec).and_then(|g| {
                            evaluate_sample(&g, &id, grid.m_max_override, grid.u_depth_override)
                        });
                        match attempt {
                            Ok(rs) => {
                                result = Some(Ok(rs));
                                break;
                            }
                            Err(Error::PrecisionExhausted(_)) if precision == grid.precision => {
                                continue; // retry once, doubled
                            }
                            Err(e) => {
                                result = Some(Err(e));
                                break;
                            }
                        }
                    }
                    match result.unwrap_or_else(|| {
                        Err(Error::PrecisionExhausted("doubled precision insufficient".into()))
                    }) {
                        Ok(rs) => records.extend(rs),
                        Err(e) => records.push(error_record(id, p, t, grid.precision, &e)),
                    }
                }
            }
        }
    }
    records
}

/// True iff every record matched, was stable and error-free.
pub fn all_ok(records: &[ComparisonRecord]) -> bool {
    records.iter().all(|r| r.matched && r.stable && r.error.is_none())
}

/// Output format for reports.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ReportFormat {
    JsonLines,
    Csv,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json-lines" | "jsonl" | "json" => Ok(ReportFormat::JsonLines),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::BadInput(format!("unknown format {other:?}"))),
        }
    }
}

/// Fixed CSV header, documented in the README.
pub const CSV_HEADER: &str = "id,p,nu,type,mu,case,M12,M13,M23,N12,N13,N23,closed,raw,reduced,kappa_ok,match,stable,precision,m_max,u_depth,error";

/// Serialize records with a stable field order.
pub fn emit_report<W: Write>(
    records: &[ComparisonRecord],
    format: ReportFormat,
    out: &mut W,
) -> std::io::Result<()> {
    match format {
        ReportFormat::JsonLines => {
            for r in records {
                let line = serde_json::to_string(r).expect("record serializes");
                writeln!(out, "{line}")?;
            }
        }
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in records {
                let kappa_ok = r.kappa.iter().all(|k| k.matched);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.id,
                    r.p,
                    r.nu,
                    r.gamma_type,
                    r.mu,
                    r.case,
                    r.m12,
                    r.m13,
                    r.m23,
                    r.n12,
                    r.n13,
                    r.n23,
                    r.closed,
                    r.raw,
                    r.reduced,
                    kappa_ok,
                    r.matched,
                    r.stable,
                    r.precision,
                    r.cfg.m_max,
                    r.cfg.u_depth,
                    r.error.as_deref().unwrap_or("")
                )?;
            }
        }
    }
    Ok(())
}
