//! Command-line driver: evaluate a single point, run a comparison grid, or
//! execute the property suites.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use orbital_core::halfint::HalfInt;
use orbital_core::harness::{
    all_ok, emit_report, evaluate_sample, run_comparison, ComparisonRecord, GridSpec,
    ReportFormat,
};
use orbital_core::orbit::{PointJson, SymmetricPoint, TorusType};
use orbital_core::sampler::{sample_gamma, SampleSpec};
use orbital_core::{Error, Nu};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

/// Exact evaluation of endoscopic relative orbital integrals on U3/SO3:
/// closed case formulas checked against brute-force lattice sums, as exact
/// rationals.
#[derive(Parser)]
#[command(name = "orbital", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one point gamma: per-orbit values by all evaluators plus
    /// the kappa table.
    Eval(EvalArgs),
    /// Run a sampling grid and compare closed forms with both oracles;
    /// exits nonzero on any mismatch or instability.
    Compare(CompareArgs),
    /// Run the randomized property suites.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// JSON file holding a serialized point {p, precision, nu, x, y, z}.
    #[arg(long, conflicts_with_all = ["gamma_type", "m12", "m13", "m23", "x_zero"])]
    gamma_file: Option<PathBuf>,
    /// Torus type (I, II, III) for the sampler route.
    #[arg(long = "type", value_name = "TYPE")]
    gamma_type: Option<String>,
    /// Odd prime p.
    #[arg(long, default_value_t = 5)]
    p: u64,
    /// Torus parameter for type III: pi or xi2pi.
    #[arg(long)]
    nu: Option<String>,
    /// Target M12 (half-integers as "n/2").
    #[arg(long)]
    m12: Option<String>,
    /// Target M13.
    #[arg(long)]
    m13: Option<String>,
    /// Target M23 (type II; attaches lambda2 to lambda3).
    #[arg(long)]
    m23: Option<String>,
    /// Sample the x = 0 branch.
    #[arg(long, default_value_t = false)]
    x_zero: bool,
    /// With --x-zero (type II): attach z near -y instead of +y.
    #[arg(long, default_value_t = false)]
    x_zero_flip: bool,
    /// Force negative invariants by scaling lambda_1 by p^J (type I).
    #[arg(long, value_name = "J")]
    negative: Option<u32>,
    /// Sampler seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Working precision in half-uniformizer digits.
    #[arg(long, default_value_t = 64)]
    precision: u32,
    /// Override the oracle m-sum cap.
    #[arg(long)]
    m_max_override: Option<i64>,
    /// Override the residue refinement depth cap.
    #[arg(long)]
    u_depth_override: Option<i64>,
    /// Output: "human" or "json".
    #[arg(long, default_value = "human")]
    format: String,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated torus types.
    #[arg(long, default_value = "I,II,III")]
    types: String,
    /// Comma-separated odd primes.
    #[arg(long, default_value = "3,5,7")]
    primes: String,
    /// Cap on targeted M13 (type III uses the half-integers below it).
    #[arg(long, default_value = "4")]
    max_m: String,
    /// Seeds per grid cell.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Working precision in half-uniformizer digits.
    #[arg(long, default_value_t = 64)]
    precision: u32,
    /// Override the oracle m-sum cap.
    #[arg(long)]
    m_max_override: Option<i64>,
    /// Override the residue refinement depth cap.
    #[arg(long)]
    u_depth_override: Option<i64>,
    /// Report format: json-lines or csv.
    #[arg(long, default_value = "json-lines")]
    format: String,
    /// Output path; defaults to a report file under $ORBITAL_OUT_DIR, or
    /// stdout when the variable is unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Comma-separated odd primes.
    #[arg(long, default_value = "3,5,7")]
    primes: String,
    /// Randomized cases per suite.
    #[arg(long, default_value_t = 200)]
    cases: u32,
    /// Base seed for the suites.
    #[arg(long, default_value_t = 17)]
    seed: u64,
}

fn parse_half(s: &str) -> anyhow::Result<HalfInt> {
    s.parse::<HalfInt>().map_err(|e| anyhow!("bad half-integer {s:?}: {e}"))
}

fn parse_primes(s: &str) -> anyhow::Result<Vec<u64>> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().context("bad prime list"))
        .collect()
}

fn parse_types(s: &str) -> anyhow::Result<Vec<TorusType>> {
    s.split(',').map(|t| TorusType::parse(t).map_err(|e| anyhow!("{e}"))).collect()
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<i32> {
    let gamma: SymmetricPoint = if let Some(path) = &args.gamma_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let j: PointJson = serde_json::from_str(&text).context("parsing gamma JSON")?;
        SymmetricPoint::from_json(&j).map_err(|e| anyhow!("{e}"))?
    } else {
        let t = TorusType::parse(
            args.gamma_type.as_deref().ok_or_else(|| anyhow!("--type or --gamma-file required"))?,
        )
        .map_err(|e| anyhow!("{e}"))?;
        let mut spec = SampleSpec::basic(t, args.p, args.seed, args.precision);
        spec.nu = args.nu.as_deref().map(Nu::parse).transpose().map_err(|e| anyhow!("{e}"))?;
        spec.target_m12 = args.m12.as_deref().map(parse_half).transpose()?;
        spec.target_m13 = args.m13.as_deref().map(parse_half).transpose()?;
        spec.target_m23 = args.m23.as_deref().map(parse_half).transpose()?;
        spec.x_zero = args.x_zero;
        spec.x_zero_flip = args.x_zero_flip;
        spec.negative_shift = args.negative;
        sample_gamma(&spec).map_err(|e| anyhow!("sampling failed: {e}"))?
    };
    let records = evaluate_with_retry(&gamma, args.m_max_override, args.u_depth_override)?;
    match args.format.as_str() {
        "json" => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            writeln!(
                lock,
                "{}",
                serde_json::to_string_pretty(&gamma.to_json()).expect("gamma serializes")
            )?;
            emit_report(&records, ReportFormat::JsonLines, &mut lock)?;
        }
        "human" => {
            let r0 = &records[0];
            println!(
                "type {} over Q_{}  nu = {}  case {}",
                r0.gamma_type, r0.p, r0.nu, r0.case
            );
            println!(
                "invariants  M = ({}, {}, {})   N = ({}, {}, {})",
                r0.m12, r0.m13, r0.m23, r0.n12, r0.n13, r0.n23
            );
            println!("{:<8} {:>12} {:>12} {:>12}", "mu", "closed", "raw", "reduced");
            for r in &records {
                println!("{:<8} {:>12} {:>12} {:>12}", r.mu, r.closed, r.raw, r.reduced);
            }
            println!("{:<14} {:>12} {:>12}", "kappa", "mu-sum", "closed form");
            for k in &records[0].kappa {
                println!("{:<14} {:>12} {:>12}", k.kappa, k.summed, k.corollary);
            }
        }
        other => bail!("unknown format {other:?} (expected human or json)"),
    }
    Ok(if all_ok(&records) { 0 } else { 1 })
}

fn evaluate_with_retry(
    gamma: &SymmetricPoint,
    m_max_override: Option<i64>,
    u_depth_override: Option<i64>,
) -> anyhow::Result<Vec<ComparisonRecord>> {
    match evaluate_sample(gamma, "eval", m_max_override, u_depth_override) {
        Ok(r) => Ok(r),
        Err(Error::PrecisionExhausted(_)) => {
            let mut deeper = gamma.clone();
            deeper.ctx = deeper.ctx.doubled().map_err(|e| anyhow!("{e}"))?;
            evaluate_sample(&deeper, "eval", m_max_override, u_depth_override)
                .map_err(|e| anyhow!("evaluation failed at doubled precision: {e}"))
        }
        Err(e) => Err(anyhow!("evaluation failed: {e}")),
    }
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<i32> {
    let grid = GridSpec {
        types: parse_types(&args.types)?,
        primes: parse_primes(&args.primes)?,
        max_m: parse_half(&args.max_m)?,
        seeds: args.seeds,
        precision: args.precision,
        m_max_override: args.m_max_override,
        u_depth_override: args.u_depth_override,
    };
    let format = ReportFormat::parse(&args.format).map_err(|e| anyhow!("{e}"))?;
    let started = Instant::now();
    let records = run_comparison(&grid);
    let ok = all_ok(&records);
    let out_path = args.out.or_else(|| {
        std::env::var_os("ORBITAL_OUT_DIR").map(|dir| {
            let ext = if format == ReportFormat::Csv { "csv" } else { "jsonl" };
            PathBuf::from(dir).join(format!("report.{ext}"))
        })
    });
    match &out_path {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            let mut f = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            emit_report(&records, format, &mut f)?;
        }
        None => {
            let stdout = std::io::stdout();
            emit_report(&records, format, &mut stdout.lock())?;
        }
    }
    let mismatches = records.iter().filter(|r| !r.matched).count();
    let unstable = records.iter().filter(|r| !r.stable).count();
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "compare: {} records, {} mismatched, {} unstable, {} errors in {:.1?}{}",
        records.len(),
        mismatches,
        unstable,
        errors,
        started.elapsed(),
        out_path
            .as_deref()
            .map(|p| format!(" -> {}", p.display()))
            .unwrap_or_default()
    );
    Ok(if ok { 0 } else { 1 })
}

fn cmd_selftest(args: SelftestArgs) -> anyhow::Result<i32> {
    let primes = parse_primes(&args.primes)?;
    let mut failures = 0;
    for (name, res) in orbital_core::selftest::run_all(&primes, args.cases, args.seed) {
        match res {
            Ok(()) => println!("PASS {name}"),
            Err(e) => {
                println!("FAIL {name}: {e}");
                failures += 1;
            }
        }
    }
    Ok(if failures == 0 { 0 } else { 1 })
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Eval(args) => cmd_eval(args)?,
        Command::Compare(args) => cmd_compare(args)?,
        Command::Selftest(args) => cmd_selftest(args)?,
    };
    std::process::exit(code);
}
