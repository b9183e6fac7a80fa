//! Seeded simulation runs, ensembles, density sweeps, and CSV output.
//!
//! Every run is reproducible: a run is keyed by `(L, m, rho, seed, init)`,
//! and an ensemble derives run `r`'s generator by putting the master-seeded
//! ChaCha cipher on stream `r`. Ensemble members execute in parallel but are
//! aggregated in run order, so output bytes never depend on scheduling.

use std::io::{self, Write};

use num::{BigInt, BigRational, One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, Configuration, EngineError, InitMode, ModelParams};
use crate::formula::{exact_block_prob, exact_flow, FormulaError};
use crate::preimage::{self, PreimageError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Preimage(#[from] PreimageError),
    #[error("flow identity violated at t = {t}: residual {residual}")]
    IdentityViolation { t: u32, residual: String },
    #[error("ensemble needs at least one run")]
    NoRuns,
    #[error("density grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parameters of a single simulation run.
#[derive(Debug, Clone, Copy)]
pub struct RunSpec {
    pub length: usize,
    pub params: ModelParams,
    pub density: f64,
    pub seed: u64,
    pub init: InitMode,
    /// Flow is recorded at t = 0..=steps, before each update.
    pub steps: u32,
}

/// Provenance attached to emitted tables.
#[derive(Debug, Clone, Copy)]
pub struct RunMeta {
    pub length: usize,
    pub max_speed: u32,
    pub rho_requested: f64,
    pub rho_actual: f64,
    pub seed: u64,
    pub init: InitMode,
    pub steps: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowRow {
    pub t: u32,
    pub measured: f64,
    pub exact: f64,
}

/// Per-step measured flow from one run, paired with the exact curve.
#[derive(Debug, Clone)]
pub struct FlowSeries {
    pub meta: RunMeta,
    pub rows: Vec<FlowRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct EnsembleRow {
    pub t: u32,
    pub mean: f64,
    pub stderr: f64,
    pub exact: f64,
}

/// Per-step mean and standard error over independent runs.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub meta: RunMeta,
    pub runs: u32,
    pub rows: Vec<EnsembleRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct DiagramRow {
    pub rho: f64,
    pub p_exact: f64,
    pub flow_exact: f64,
    pub measured: Option<(f64, f64)>, // (flow mean, stderr)
}

/// Exact (and optionally simulated) values over a density grid at fixed t.
#[derive(Debug, Clone)]
pub struct DiagramTable {
    pub max_speed: u32,
    pub t: u32,
    pub rows: Vec<DiagramRow>,
    pub sim: Option<SimSpec>,
}

/// Simulation side-car for [`fundamental_diagram`].
#[derive(Debug, Clone, Copy)]
pub struct SimSpec {
    pub length: usize,
    pub seed: u64,
    pub runs: u32,
    pub init: InitMode,
}

/// Exhaustive-verification census of all binary windows of one size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreimageCensus {
    pub total: u64,
    pub preimages: u64,
    pub mismatches: u64,
}

/// (m, n) pairs small enough to verify by full enumeration of 2^((n+1)(m+1))
/// windows in well under a second.
pub const EXHAUSTIVE_PAIRS: &[(u32, u32)] = &[
    (1, 0),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 0),
    (2, 1),
    (2, 2),
    (3, 0),
    (3, 1),
];

/// Exact residual of the per-configuration flow identity
/// `flow = 1 - N/L - freq(0^(m+1))`; zero on every configuration.
pub fn flow_identity_residual(
    config: &Configuration,
    params: &ModelParams,
) -> Result<BigRational, HarnessError> {
    let zeros = "0".repeat(params.max_speed() as usize + 1);
    let occupancy = BigRational::new(
        BigInt::from(config.car_count() as u64),
        BigInt::from(config.len() as u64),
    );
    let vacancy_freq = config.block_frequency_rational(&zeros)?;
    let flow = config.flow_rational(params);
    Ok(flow - (BigRational::one() - occupancy - vacancy_freq))
}

/// Classify all `2^((n+1)(m+1))` windows by the admissibility predicate and
/// by the windowed-evolution oracle; `mismatches` must come back 0.
pub fn admissibility_census(m: u32, n: u32) -> Result<PreimageCensus, HarnessError> {
    let p = preimage::window_length(m, n);
    if p > preimage::EXHAUSTIVE_GUARD {
        return Err(PreimageError::GuardExceeded(p).into());
    }
    let total: u64 = 1 << p;
    let census = (0..total)
        .into_par_iter()
        .try_fold(
            || PreimageCensus { total: 0, preimages: 0, mismatches: 0 },
            |mut acc, code| -> Result<PreimageCensus, HarnessError> {
                let mut buf = [0u8; preimage::EXHAUSTIVE_GUARD];
                for (k, slot) in buf[..p].iter_mut().enumerate() {
                    *slot = if code >> (p - 1 - k) & 1 == 1 { b'1' } else { b'0' };
                }
                let window = std::str::from_utf8(&buf[..p]).expect("ascii");
                let predicted = preimage::is_admissible(window, m)?;
                let observed = preimage::brute_force_is_preimage(window, m, n)?;
                acc.total += 1;
                if observed {
                    acc.preimages += 1;
                }
                if predicted != observed {
                    acc.mismatches += 1;
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || PreimageCensus { total: 0, preimages: 0, mismatches: 0 },
            |a, b| {
                Ok(PreimageCensus {
                    total: a.total + b.total,
                    preimages: a.preimages + b.preimages,
                    mismatches: a.mismatches + b.mismatches,
                })
            },
        )?;
    Ok(census)
}

/// Measured flow at t = 0..=steps; the flow identity is spot-checked at the
/// start, midpoint and end of the run.
fn measure_flows(
    mut config: Configuration,
    params: &ModelParams,
    steps: u32,
) -> Result<Vec<f64>, HarnessError> {
    let checkpoints = [0, steps / 2, steps];
    let identity_checkable = config.len() >= params.max_speed() as usize + 1;
    let mut flows = Vec::with_capacity(steps as usize + 1);
    for t in 0..=steps {
        if identity_checkable && checkpoints.contains(&t) {
            let residual = flow_identity_residual(&config, params)?;
            if !residual.is_zero() {
                return Err(HarnessError::IdentityViolation {
                    t,
                    residual: residual.to_string(),
                });
            }
        }
        flows.push(config.flow(params));
        if t < steps {
            config = config.step(params);
        }
    }
    Ok(flows)
}

fn run_measured(spec: &RunSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64), HarnessError> {
    let config = engine::init_from_rng(spec.length, spec.density, spec.init, rng)?;
    let rho_actual = config.density();
    let flows = measure_flows(config, &spec.params, spec.steps)?;
    Ok((flows, rho_actual))
}

/// The density the exact curve is evaluated at: the realized `N/L` for
/// exact-count runs (the requested density up to rounding), the requested
/// one for Bernoulli runs.
fn exact_curve_density(spec: &RunSpec, rho_actual: f64) -> f64 {
    match spec.init {
        InitMode::ExactCount => rho_actual,
        InitMode::Bernoulli => spec.density,
    }
}

/// One seeded run: initialize once, record flow before each step, and pair
/// every measurement with the exact flow value.
pub fn run_series(spec: &RunSpec) -> Result<FlowSeries, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (flows, rho_actual) = run_measured(spec, &mut rng)?;
    let rho_exact = exact_curve_density(spec, rho_actual);
    let m = spec.params.max_speed();
    let rows = flows
        .iter()
        .enumerate()
        .map(|(t, &measured)| {
            Ok(FlowRow {
                t: t as u32,
                measured,
                exact: exact_flow(m, t as u32, rho_exact)?,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(FlowSeries {
        meta: RunMeta {
            length: spec.length,
            max_speed: m,
            rho_requested: spec.density,
            rho_actual,
            seed: spec.seed,
            init: spec.init,
            steps: spec.steps,
        },
        rows,
    })
}

/// `runs` independent runs with stream-per-index generators; results are
/// identical whether members run in parallel or sequentially.
pub fn ensemble(spec: &RunSpec, runs: u32) -> Result<EnsembleStats, HarnessError> {
    if runs == 0 {
        return Err(HarnessError::NoRuns);
    }
    let members: Vec<(Vec<f64>, f64)> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(u64::from(run));
            run_measured(spec, &mut rng)
        })
        .collect::<Result<_, _>>()?;

    let rho_actual_mean =
        members.iter().map(|(_, rho)| rho).sum::<f64>() / f64::from(runs);
    let rho_exact = exact_curve_density(spec, members[0].1);
    let m = spec.params.max_speed();

    let mut rows = Vec::with_capacity(spec.steps as usize + 1);
    for t in 0..=spec.steps {
        let values: Vec<f64> = members.iter().map(|(f, _)| f[t as usize]).collect();
        let mean = values.iter().sum::<f64>() / f64::from(runs);
        let stderr = if runs > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / f64::from(runs - 1);
            (var / f64::from(runs)).sqrt()
        } else {
            0.0
        };
        rows.push(EnsembleRow {
            t,
            mean,
            stderr,
            exact: exact_flow(m, t, rho_exact)?,
        });
    }
    Ok(EnsembleStats {
        meta: RunMeta {
            length: spec.length,
            max_speed: m,
            rho_requested: spec.density,
            rho_actual: rho_actual_mean,
            seed: spec.seed,
            init: spec.init,
            steps: spec.steps,
        },
        runs,
        rows,
    })
}

/// Evenly spaced inclusive density grid.
pub fn density_grid(rho_min: f64, rho_max: f64, count: usize) -> Result<Vec<f64>, HarnessError> {
    if count == 0
        || !rho_min.is_finite()
        || !rho_max.is_finite()
        || rho_min > rho_max
        || (count > 1 && rho_min == rho_max)
    {
        return Err(HarnessError::BadGrid);
    }
    if count == 1 {
        return Ok(vec![rho_min]);
    }
    Ok((0..count)
        .map(|i| rho_min + (rho_max - rho_min) * i as f64 / (count - 1) as f64)
        .collect())
}

/// Exact `P` and flow per density at fixed `t`, optionally with a simulated
/// flow column from an ensemble per grid point.
pub fn fundamental_diagram(
    params: &ModelParams,
    t: u32,
    grid: &[f64],
    sim: Option<SimSpec>,
) -> Result<DiagramTable, HarnessError> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::BadGrid);
    }
    let m = params.max_speed();
    let mut rows = Vec::with_capacity(grid.len());
    for &rho in grid {
        let measured = match sim {
            Some(s) => {
                let stats = ensemble(
                    &RunSpec {
                        length: s.length,
                        params: *params,
                        density: rho,
                        seed: s.seed,
                        init: s.init,
                        steps: t,
                    },
                    s.runs,
                )?;
                let last = stats.rows.last().expect("t row");
                Some((last.mean, last.stderr))
            }
            None => None,
        };
        rows.push(DiagramRow {
            rho,
            p_exact: exact_block_prob(m, t, rho)?,
            flow_exact: exact_flow(m, t, rho)?,
            measured,
        });
    }
    Ok(DiagramTable {
        max_speed: m,
        t,
        rows,
        sim,
    })
}

/// Format with 12 significant digits, plain decimal where the exponent
/// allows (the `%.12g` convention): `0.3`, `0.1875`, `1.23456789012e-13`.
pub fn fmt_sig12(x: f64) -> String {
    format_significant(x, 12)
}

fn format_significant(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent marker");
    let exponent: i32 = exponent.parse().expect("numeric exponent");
    if exponent < -4 || exponent >= sig as i32 {
        format!("{}e{}", trim_trailing_zeros(mantissa), exponent)
    } else {
        let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
        trim_trailing_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_trailing_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_meta(out: &mut (impl Write + ?Sized), meta: &RunMeta) -> io::Result<()> {
    writeln!(out, "# L={}", meta.length)?;
    writeln!(out, "# m={}", meta.max_speed)?;
    writeln!(out, "# rho_requested={}", fmt_sig12(meta.rho_requested))?;
    writeln!(out, "# rho_actual={}", fmt_sig12(meta.rho_actual))?;
    writeln!(out, "# seed={}", meta.seed)?;
    writeln!(out, "# init={}", meta.init)?;
    writeln!(out, "# T_max={}", meta.steps)
}

/// CSV: provenance comments, then `t,flow_measured,flow_exact`.
pub fn write_flow_series(series: &FlowSeries, out: &mut (impl Write + ?Sized)) -> io::Result<()> {
    write_meta(out, &series.meta)?;
    writeln!(out, "t,flow_measured,flow_exact")?;
    for row in &series.rows {
        writeln!(out, "{},{},{}", row.t, fmt_sig12(row.measured), fmt_sig12(row.exact))?;
    }
    Ok(())
}

/// CSV: provenance comments, then `t,flow_mean,flow_stderr,flow_exact`.
pub fn write_ensemble(stats: &EnsembleStats, out: &mut (impl Write + ?Sized)) -> io::Result<()> {
    write_meta(out, &stats.meta)?;
    writeln!(out, "# runs={}", stats.runs)?;
    writeln!(out, "t,flow_mean,flow_stderr,flow_exact")?;
    for row in &stats.rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.t,
            fmt_sig12(row.mean),
            fmt_sig12(row.stderr),
            fmt_sig12(row.exact)
        )?;
    }
    Ok(())
}

/// CSV: `rho,P_exact,flow_exact[,flow_measured,stderr]`.
pub fn write_diagram(table: &DiagramTable, out: &mut (impl Write + ?Sized)) -> io::Result<()> {
    writeln!(out, "# m={}", table.max_speed)?;
    writeln!(out, "# t={}", table.t)?;
    if let Some(sim) = &table.sim {
        writeln!(out, "# L={}", sim.length)?;
        writeln!(out, "# seed={}", sim.seed)?;
        writeln!(out, "# runs={}", sim.runs)?;
        writeln!(out, "# init={}", sim.init)?;
    }
    let with_measurement = table.sim.is_some();
    if with_measurement {
        writeln!(out, "rho,P_exact,flow_exact,flow_measured,stderr")?;
    } else {
        writeln!(out, "rho,P_exact,flow_exact")?;
    }
    for row in &table.rows {
        write!(
            out,
            "{},{},{}",
            fmt_sig12(row.rho),
            fmt_sig12(row.p_exact),
            fmt_sig12(row.flow_exact)
        )?;
        if let Some((mean, stderr)) = row.measured {
            write!(out, ",{},{}", fmt_sig12(mean), fmt_sig12(stderr))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// CSV: `# m=.., n=..` comment plus the single `total,preimages,mismatches`
/// data row.
pub fn write_census(
    census: &PreimageCensus,
    m: u32,
    n: u32,
    out: &mut (impl Write + ?Sized),
) -> io::Result<()> {
    writeln!(out, "# m={m}, n={n}")?;
    writeln!(out, "total,preimages,mismatches")?;
    writeln!(out, "{},{},{}", census.total, census.preimages, census.mismatches)
}
