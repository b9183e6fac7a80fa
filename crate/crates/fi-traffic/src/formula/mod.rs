//! Interchangeable evaluators for the block-vacancy probability and the flow.
//!
//! The central quantities are `P_t(0^(m+1))`, the probability that `m + 1`
//! consecutive sites are all empty at time `t` when sites start occupied
//! independently with probability `rho`, and the flow, which per the exact
//! per-configuration identity equals `1 - rho - P_t(0^(m+1))`.
//!
//! Four evaluation strategies sit behind the [`FlowFormula`] trait and are
//! selected by name at runtime (the CLI's `--formula` flag):
//!
//! - [`ExactSum`]: the closed-form finite sum over preimage shapes, exact up
//!   to floating point; also available on exact rationals.
//! - [`Hypergeometric`]: the same flow rearranged around a terminating Gauss
//!   2F1 series; agrees with [`ExactSum`] to high relative accuracy.
//! - [`Asymptotic`]: a normal-approximation closed form in terms of `erf`,
//!   whose error vanishes as `t` grows.
//! - [`Steady`]: the `t -> infinity` piecewise limits, with the free-flow /
//!   jam transition at density `1 / (m+1)`.

use thiserror::Error;

mod asymptotic;
mod exact_sum;
mod hypergeometric;
pub(crate) mod numeric;
mod steady;

pub use asymptotic::asymptotic_block_prob;
pub use exact_sum::{exact_block_prob, exact_block_prob_rational, exact_flow, exact_flow_rational};
pub use hypergeometric::{hypergeometric_flow, hypergeometric_flow_rational};
pub use steady::{critical_density, steady_block_prob, steady_flow};

use num::BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("maximum speed must be at least 1")]
    InvalidMaxSpeed,
    #[error("density must lie in [0, 1], got {0}")]
    DensityOutOfRange(f64),
    #[error("density must lie in [0, 1]")]
    RationalDensityOutOfRange,
    #[error("the normal approximation needs t >= 1")]
    TimeTooSmall,
    #[error("the normal approximation is undefined at density {0} (zero variance)")]
    DegenerateDensity(f64),
}

pub(crate) fn check_speed(m: u32) -> Result<(), FormulaError> {
    if m < 1 {
        Err(FormulaError::InvalidMaxSpeed)
    } else {
        Ok(())
    }
}

pub(crate) fn check_density(rho: f64) -> Result<(), FormulaError> {
    if !rho.is_finite() || !(0.0..=1.0).contains(&rho) {
        Err(FormulaError::DensityOutOfRange(rho))
    } else {
        Ok(())
    }
}

pub(crate) fn check_density_rational(rho: &BigRational) -> Result<(), FormulaError> {
    use num::{One, Zero};
    if rho < &BigRational::zero() || rho > &BigRational::one() {
        Err(FormulaError::RationalDensityOutOfRange)
    } else {
        Ok(())
    }
}

/// One strategy for evaluating `P_t(0^(m+1))` and the flow.
///
/// Implementations are stateless and reentrant; evaluating grids in parallel
/// is safe.
pub trait FlowFormula: Sync {
    /// Registry key, e.g. `"sum"`.
    fn name(&self) -> &'static str;

    /// One-line human description for help output.
    fn describe(&self) -> &'static str;

    /// `P_t(0^(m+1))` at maximum speed `m`, time `t`, density `rho`.
    fn block_prob(&self, m: u32, t: u32, rho: f64) -> Result<f64, FormulaError>;

    /// Flow at time `t`; defaults to `1 - rho - block_prob`.
    fn flow(&self, m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
        Ok(1.0 - rho - self.block_prob(m, t, rho)?)
    }

    /// Whether `t` enters the formula at all (false for the steady state).
    fn time_dependent(&self) -> bool {
        true
    }
}

/// The closed-form finite sum (log-gamma binomials, compensated summation).
pub struct ExactSum;

impl FlowFormula for ExactSum {
    fn name(&self) -> &'static str {
        "sum"
    }

    fn describe(&self) -> &'static str {
        "closed-form finite sum over preimage shapes (reference evaluator)"
    }

    fn block_prob(&self, m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
        exact_block_prob(m, t, rho)
    }

    fn flow(&self, m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
        exact_flow(m, t, rho)
    }
}

/// The terminating Gauss 2F1 rearrangement of the same flow.
pub struct Hypergeometric;

impl FlowFormula for Hypergeometric {
    fn name(&self) -> &'static str {
        "hypergeometric"
    }

    fn describe(&self) -> &'static str {
        "terminating 2F1 series form of the flow"
    }

    fn block_prob(&self, m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
        Ok(1.0 - rho - hypergeometric_flow(m, t, rho)?)
    }

    fn flow(&self, m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
        hypergeometric_flow(m, t, rho)
    }
}

/// Normal-approximation (erf) closed form; approximate, improves with `t`.
pub struct Asymptotic;

impl FlowFormula for Asymptotic {
    fn name(&self) -> &'static str {
        "asymptotic"
    }

    fn describe(&self) -> &'static str {
        "erf-based normal approximation, error vanishing as t grows"
    }

    fn block_prob(&self, m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
        asymptotic_block_prob(m, t, rho)
    }
}

/// The piecewise steady-state limits.
pub struct Steady;

impl FlowFormula for Steady {
    fn name(&self) -> &'static str {
        "steady"
    }

    fn describe(&self) -> &'static str {
        "t -> infinity limits: free flow below density 1/(m+1), jam above"
    }

    fn block_prob(&self, m: u32, _t: u32, rho: f64) -> Result<f64, FormulaError> {
        steady_block_prob(m, rho)
    }

    fn flow(&self, m: u32, _t: u32, rho: f64) -> Result<f64, FormulaError> {
        steady_flow(m, rho)
    }

    fn time_dependent(&self) -> bool {
        false
    }
}

/// Every registered formula, lookup order = presentation order.
pub static FORMULAS: &[&dyn FlowFormula] = &[&ExactSum, &Hypergeometric, &Asymptotic, &Steady];

/// Look a formula up by its registry name.
pub fn formula_by_name(name: &str) -> Option<&'static dyn FlowFormula> {
    FORMULAS.iter().find(|f| f.name() == name).copied()
}

/// The registered names, for CLI value validation and help text.
pub fn formula_names() -> Vec<&'static str> {
    FORMULAS.iter().map(|f| f.name()).collect()
}
