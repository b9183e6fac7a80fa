//! Command-line front end: simulation, exact curves, preimage tools, density
//! sweeps, and the cross-identity verification suite.
//!
//! Exit codes: 0 success, 1 runtime or verification failure, 2 usage error.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::rational::Ratio;
use num::{BigInt, BigRational, ToPrimitive};

use fi_traffic::engine::InitMode;
use fi_traffic::formula::{
    self, asymptotic_block_prob, exact_block_prob, exact_block_prob_rational, exact_flow,
    exact_flow_rational, formula_by_name, hypergeometric_flow, hypergeometric_flow_rational,
    steady_block_prob, steady_flow,
};
use fi_traffic::harness::{self, admissibility_census, density_grid, ensemble, flow_identity_residual};
use fi_traffic::preimage;
use fi_traffic::{ModelParams, RunSpec, SimSpec};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

struct Failure {
    message: String,
    code: ExitCode,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: ExitCode::from(2) }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: ExitCode::from(1) }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::runtime(e.to_string())
    }
}

impl From<fi_traffic::HarnessError> for Failure {
    fn from(e: fi_traffic::HarnessError) -> Self {
        Failure::runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "fi-traffic",
    version,
    about = "Deterministic maximum-speed traffic cellular automaton: simulate, evaluate exact flow curves, count preimages, sweep densities, verify identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a ring lattice and emit the measured flow time series as CSV
    Simulate(SimulateArgs),
    /// Print exact/analytic values of the vacancy-block probability and flow
    Exact(ExactArgs),
    /// Count, list, or exhaustively verify preimages of the all-zero block
    Preimage(PreimageArgs),
    /// Sweep a density grid at fixed t and emit the diagram table as CSV
    Diagram(DiagramArgs),
    /// Run the cross-module identity suites
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Maximum speed m >= 1
    #[arg(long = "m", value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    /// Number of lattice sites
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    length: u64,
    /// Car density in [0, 1]; decimals or a fraction like 1/3
    #[arg(long)]
    density: Density,
    /// Record flow at t = 0..=steps
    #[arg(long)]
    steps: u32,
    /// RNG seed (ChaCha8; ensembles put run r on stream r)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initialization mode
    #[arg(long, value_enum, default_value = "exact")]
    init: InitArg,
    /// Independent runs; 2 or more emits per-t mean and standard error
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
    /// Output file (atomic write); default is standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    /// Maximum speed m >= 1
    #[arg(long = "m", value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    /// Car density in [0, 1]; a fraction like 1/3 selects exact-rational evaluation
    #[arg(long)]
    density: Density,
    /// Largest time to print (t = 0..=steps; the asymptotic formula starts at t = 1)
    #[arg(long, default_value_t = 0)]
    steps: u32,
    /// Evaluation strategy
    #[arg(long, value_parser = parse_formula_name, default_value = "sum")]
    formula: String,
}

#[derive(Args)]
struct PreimageArgs {
    /// Maximum speed m >= 1
    #[arg(long = "m", value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    /// Number of evolution steps
    #[arg(long = "n")]
    n: u32,
    /// count: print how many preimages exist; list: print them one per line;
    /// verify: classify every window by predicate and oracle
    #[arg(long, value_enum)]
    action: PreimageAction,
}

#[derive(Args)]
struct DiagramArgs {
    /// Maximum speed m >= 1
    #[arg(long = "m", value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    /// Time at which the curve is evaluated
    #[arg(long = "t")]
    t: u32,
    /// Smallest density of the inclusive grid
    #[arg(long)]
    rho_min: f64,
    /// Largest density of the inclusive grid
    #[arg(long)]
    rho_max: f64,
    /// Number of evenly spaced grid points
    #[arg(long)]
    rho_count: usize,
    /// Also simulate each grid point and add flow_measured/stderr columns
    #[arg(long)]
    simulate: bool,
    /// Lattice length for --simulate
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    length: u64,
    /// Master seed for --simulate
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ensemble size per grid point for --simulate
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
    /// Initialization mode for --simulate
    #[arg(long, value_enum, default_value = "exact")]
    init: InitArg,
    /// Output file (atomic write); default is standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which identity suite to run
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    /// Exactly round(rho * L) cars at random distinct sites
    Exact,
    /// Each site occupied independently with probability rho
    Bernoulli,
}

impl From<InitArg> for InitMode {
    fn from(arg: InitArg) -> Self {
        match arg {
            InitArg::Exact => InitMode::ExactCount,
            InitArg::Bernoulli => InitMode::Bernoulli,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PreimageAction {
    Count,
    List,
    Verify,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Prop1,
    Prop2,
    Formulas,
}

/// Density flag value: plain decimal or an exact fraction "p/q".
#[derive(Clone, Debug)]
enum Density {
    Real(f64),
    Fraction(BigRational),
}

impl Density {
    fn as_f64(&self) -> f64 {
        match self {
            Density::Real(x) => *x,
            Density::Fraction(r) => r.to_f64().expect("finite rational"),
        }
    }
}

impl FromStr for Density {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((num, den)) = s.split_once('/') {
            let num = BigInt::from_str(num.trim()).map_err(|e| format!("bad numerator: {e}"))?;
            let den = BigInt::from_str(den.trim()).map_err(|e| format!("bad denominator: {e}"))?;
            if den == BigInt::from(0) {
                return Err("denominator must be nonzero".into());
            }
            let value = Ratio::new(num, den);
            if value < Ratio::from_integer(BigInt::from(0))
                || value > Ratio::from_integer(BigInt::from(1))
            {
                return Err(format!("density {s} is outside [0, 1]"));
            }
            Ok(Density::Fraction(value))
        } else {
            let value: f64 = s.parse().map_err(|e| format!("bad density: {e}"))?;
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(format!("density {s} is outside [0, 1]"));
            }
            Ok(Density::Real(value))
        }
    }
}

fn parse_formula_name(s: &str) -> Result<String, String> {
    if formula_by_name(s).is_some() {
        Ok(s.to_string())
    } else {
        Err(format!(
            "unknown formula {s:?}; registered: {}",
            formula::formula_names().join(", ")
        ))
    }
}

/// Write through a closure either to stdout or atomically (temp file +
/// rename) to --out.
fn with_output<F>(out: Option<&Path>, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match out {
        None => {
            let stdout = io::stdout();
            let mut handle = io::BufWriter::new(stdout.lock());
            write(&mut handle)?;
            handle.flush()?;
            Ok(())
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let mut temp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))?;
            {
                let mut handle = io::BufWriter::new(temp.as_file_mut());
                write(&mut handle)?;
                handle.flush()?;
            }
            temp.persist(path)
                .map_err(|e| Failure::runtime(format!("cannot write {}: {}", path.display(), e.error)))?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Preimage(args) => cmd_preimage(args),
        Command::Diagram(args) => cmd_diagram(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Failure> {
    let params = ModelParams::new(args.m).expect("validated by clap");
    let spec = RunSpec {
        length: args.length as usize,
        params,
        density: args.density.as_f64(),
        seed: args.seed,
        init: args.init.into(),
        steps: args.steps,
    };
    if args.runs == 1 {
        let series = fi_traffic::run_series(&spec)?;
        with_output(args.out.as_deref(), |out| harness::write_flow_series(&series, out))?;
    } else {
        let stats = ensemble(&spec, args.runs)?;
        with_output(args.out.as_deref(), |out| harness::write_ensemble(&stats, out))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_exact(args: ExactArgs) -> Result<ExitCode, Failure> {
    let m = args.m;
    let mut table = String::from("t,P,flow\n");
    match args.formula.as_str() {
        "steady" => {
            let rho = args.density.as_f64();
            let p = steady_block_prob(m, rho).map_err(|e| Failure::usage(format!("--density: {e}")))?;
            let flow = steady_flow(m, rho).expect("same domain");
            writeln!(table, "inf,{},{}", harness::fmt_sig12(p), harness::fmt_sig12(flow))
                .expect("string write");
        }
        "asymptotic" => {
            let rho = args.density.as_f64();
            for t in 1..=args.steps {
                let p = asymptotic_block_prob(m, t, rho)
                    .map_err(|e| Failure::usage(format!("--density: {e}")))?;
                writeln!(
                    table,
                    "{t},{},{}",
                    harness::fmt_sig12(p),
                    harness::fmt_sig12(1.0 - rho - p)
                )
                .expect("string write");
            }
        }
        name @ ("sum" | "hypergeometric") => match &args.density {
            Density::Fraction(rho) => {
                for t in 0..=args.steps {
                    let (p, flow) = if name == "sum" {
                        let p = exact_block_prob_rational(m, t, rho)
                            .map_err(|e| Failure::usage(format!("--density: {e}")))?;
                        let flow = exact_flow_rational(m, t, rho).expect("same domain");
                        (p, flow)
                    } else {
                        let flow = hypergeometric_flow_rational(m, t, rho)
                            .map_err(|e| Failure::usage(format!("--density: {e}")))?;
                        let p = BigRational::from_integer(BigInt::from(1)) - rho - &flow;
                        (p, flow)
                    };
                    writeln!(
                        table,
                        "{t},{},{}",
                        harness::fmt_sig12(p.to_f64().expect("finite")),
                        harness::fmt_sig12(flow.to_f64().expect("finite"))
                    )
                    .expect("string write");
                }
            }
            Density::Real(rho) => {
                for t in 0..=args.steps {
                    let (p, flow) = if name == "sum" {
                        let p = exact_block_prob(m, t, *rho)
                            .map_err(|e| Failure::usage(format!("--density: {e}")))?;
                        (p, 1.0 - rho - p)
                    } else {
                        let flow = hypergeometric_flow(m, t, *rho)
                            .map_err(|e| Failure::usage(format!("--density: {e}")))?;
                        (1.0 - rho - flow, flow)
                    };
                    writeln!(table, "{t},{},{}", harness::fmt_sig12(p), harness::fmt_sig12(flow))
                        .expect("string write");
                }
            }
        },
        other => unreachable!("formula {other} passed clap validation"),
    }
    print!("{table}");
    io::stdout().flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_preimage(args: PreimageArgs) -> Result<ExitCode, Failure> {
    let (m, n) = (args.m, args.n);
    match args.action {
        PreimageAction::Count => {
            let count = preimage::preimage_count(m, n).map_err(|e| Failure::usage(e.to_string()))?;
            println!("{count}");
        }
        PreimageAction::List => {
            let stdout = io::stdout();
            let mut out = io::BufWriter::new(stdout.lock());
            let mut failed = None;
            let result = preimage::for_each_preimage(m, n, |s| {
                if failed.is_none() {
                    if let Err(e) = writeln!(out, "{s}") {
                        failed = Some(e);
                    }
                }
            });
            result.map_err(|e| Failure::usage(format!("--n: {e}")))?;
            if let Some(e) = failed {
                return Err(e.into());
            }
            out.flush()?;
        }
        PreimageAction::Verify => {
            let census = admissibility_census(m, n).map_err(|e| Failure::usage(format!("--n: {e}")))?;
            let mut buf = Vec::new();
            harness::write_census(&census, m, n, &mut buf)?;
            io::stdout().write_all(&buf)?;
            if census.mismatches > 0 {
                return Err(Failure::runtime(format!(
                    "{} windows classified differently by predicate and oracle",
                    census.mismatches
                )));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_diagram(args: DiagramArgs) -> Result<ExitCode, Failure> {
    let params = ModelParams::new(args.m).expect("validated by clap");
    let grid = density_grid(args.rho_min, args.rho_max, args.rho_count).map_err(|_| {
        Failure::usage("--rho-min/--rho-max/--rho-count describe an empty or inverted grid")
    })?;
    if grid.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Failure::usage("--rho-min/--rho-max must lie in [0, 1]"));
    }
    let sim = args.simulate.then_some(SimSpec {
        length: args.length as usize,
        seed: args.seed,
        runs: args.runs,
        init: args.init.into(),
    });
    let table = fi_traffic::fundamental_diagram(&params, args.t, &grid, sim)?;
    with_output(args.out.as_deref(), |out| harness::write_diagram(&table, out))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Failure> {
    let mut all_passed = true;
    let mut check = |label: &str, passed: bool| {
        println!("{}: {label}", if passed { "PASS" } else { "FAIL" });
        all_passed &= passed;
    };

    if matches!(args.suite, Suite::All | Suite::Prop1) {
        verify_flow_identity(&mut check);
    }
    if matches!(args.suite, Suite::All | Suite::Prop2) {
        verify_admissibility(&mut check)?;
    }
    if matches!(args.suite, Suite::All | Suite::Formulas) {
        verify_formulas(&mut check);
    }

    if all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Failure::runtime("verification failed"))
    }
}

/// prop1: the flow identity holds exactly on seeded random configurations of
/// every density, plus structured edge cases.
fn verify_flow_identity(check: &mut impl FnMut(&str, bool)) {
    use num::Zero;
    let mut violations = 0u32;
    let mut checked = 0u32;
    for (i, seed) in (0..200u64).enumerate() {
        let m = 1 + (i as u32) % 3;
        let params = ModelParams::new(m).unwrap();
        let length = 4 + (7 * i) % 61;
        let density = (i as f64 * 0.617) % 1.0;
        let mode = if i % 2 == 0 { InitMode::ExactCount } else { InitMode::Bernoulli };
        let config = fi_traffic::init_random(length, density, seed, mode).unwrap();
        if config.len() < m as usize + 1 {
            continue;
        }
        checked += 1;
        if !flow_identity_residual(&config, &params).unwrap().is_zero() {
            violations += 1;
        }
    }
    for fixed in ["0000", "1111", "010101", "1100", "100000"] {
        let config: fi_traffic::Configuration = fixed.parse().unwrap();
        for m in 1..=3 {
            if config.len() < m as usize + 1 {
                continue;
            }
            checked += 1;
            let params = ModelParams::new(m).unwrap();
            if !flow_identity_residual(&config, &params).unwrap().is_zero() {
                violations += 1;
            }
        }
    }
    check(
        &format!("prop1: flow = 1 - rho - P(0^(m+1)) exactly on {checked} configurations ({violations} violations)"),
        violations == 0,
    );
}

/// prop2: predicate and oracle classify every window identically; the
/// preimage total also matches the lattice-path count.
fn verify_admissibility(check: &mut impl FnMut(&str, bool)) -> Result<(), Failure> {
    for &(m, n) in harness::EXHAUSTIVE_PAIRS {
        let census = admissibility_census(m, n)?;
        let path_total = preimage::preimage_count(m, n).map_err(fi_traffic::HarnessError::from)?;
        let counts_match = path_total == census.preimages.into();
        check(
            &format!(
                "prop2 (m={m}, n={n}): {} windows, {} preimages, {} mismatches, path-count total {}",
                census.total, census.preimages, census.mismatches, path_total
            ),
            census.mismatches == 0 && counts_match,
        );
    }
    Ok(())
}

/// formulas: closed form vs enumerated preimage sum (exact), sum vs
/// hypergeometric (exact and float grid), t = 0 reduction, steady limits.
fn verify_formulas(check: &mut impl FnMut(&str, bool)) {
    let rationals = [(1i64, 10i64), (1, 3), (1, 2), (9, 10)];

    let mut ok = true;
    for m in 1..=2u32 {
        for n in 0..=3u32 {
            for (num, den) in rationals {
                let rho = Ratio::new(BigInt::from(num), BigInt::from(den));
                let closed = exact_block_prob_rational(m, n, &rho).unwrap();
                let enumerated = preimage::preimage_prob_sum_rational(m, n, &rho).unwrap();
                ok &= closed == enumerated;
            }
        }
    }
    check("formulas: closed-form sum equals enumerated preimage sum (exact rationals)", ok);

    let mut ok = true;
    for m in 1..=3u32 {
        for t in [0u32, 1, 2, 5, 10] {
            for (num, den) in rationals {
                let rho = Ratio::new(BigInt::from(num), BigInt::from(den));
                ok &= hypergeometric_flow_rational(m, t, &rho).unwrap()
                    == exact_flow_rational(m, t, &rho).unwrap();
            }
        }
    }
    check("formulas: hypergeometric flow equals sum flow (exact rationals)", ok);

    let mut ok = true;
    let mut worst = 0.0f64;
    for m in 1..=3u32 {
        for t in 0..=100u32 {
            for i in 1..=19u64 {
                let rho = i as f64 / 20.0;
                let a = exact_flow(m, t, rho).unwrap();
                let b = hypergeometric_flow(m, t, rho).unwrap();
                let rel = (a - b).abs() / a.abs().max(1e-12);
                worst = worst.max(rel);
                ok &= rel <= 1e-9;
            }
        }
    }
    check(
        &format!("formulas: sum vs hypergeometric within 1e-9 relative on the float grid (worst {worst:.3e})"),
        ok,
    );

    let mut ok = true;
    for m in 1..=3u32 {
        for i in 0..=10u64 {
            let rho = i as f64 / 10.0;
            let expected = 1.0 - rho - (1.0 - rho).powi(m as i32 + 1);
            ok &= (exact_flow(m, 0, rho).unwrap() - expected).abs() < 1e-12;
        }
    }
    check("formulas: t = 0 flow reduces to 1 - rho - (1-rho)^(m+1)", ok);

    let mut ok = true;
    for m in 1..=3u32 {
        let crit = formula::critical_density(m);
        ok &= (steady_flow(m, crit).unwrap() - f64::from(m) / (f64::from(m) + 1.0)).abs() < 1e-12;
        ok &= steady_block_prob(m, crit).unwrap() == 0.0;
        ok &= (steady_block_prob(m, crit / 2.0).unwrap()
            - (1.0 - (f64::from(m) + 1.0) * crit / 2.0))
            .abs()
            < 1e-12;
        ok &= steady_flow(m, 0.9).unwrap() == 1.0 - 0.9;
    }
    check("formulas: steady-state piecewise limits and peak flow m/(m+1)", ok);
}
