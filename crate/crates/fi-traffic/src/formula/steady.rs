//! Steady-state (`t -> infinity`) limits.
//!
//! The vacancy-block probability tends to `1 - (m+1) rho` below the critical
//! density `1/(m+1)` and to 0 above it, so it acts as the order parameter of
//! the free-flow / jam transition. The flow correspondingly tends to `m rho`
//! below the transition and `1 - rho` above, peaking at `m/(m+1)`.

use super::{check_density, check_speed, FormulaError};

/// The transition density `1 / (m + 1)`.
pub fn critical_density(m: u32) -> f64 {
    1.0 / (f64::from(m) + 1.0)
}

/// Limit of `P_t(0^(m+1))`: `1 - (m+1) rho` below critical, else 0.
pub fn steady_block_prob(m: u32, rho: f64) -> Result<f64, FormulaError> {
    check_speed(m)?;
    check_density(rho)?;
    if rho < critical_density(m) {
        Ok(1.0 - (f64::from(m) + 1.0) * rho)
    } else {
        Ok(0.0)
    }
}

/// Limit of the flow: `m rho` below critical, `1 - rho` at and above it.
pub fn steady_flow(m: u32, rho: f64) -> Result<f64, FormulaError> {
    check_speed(m)?;
    check_density(rho)?;
    if rho < critical_density(m) {
        Ok(f64::from(m) * rho)
    } else {
        Ok(1.0 - rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_values() {
        assert!((steady_block_prob(2, 0.2).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(steady_block_prob(2, 1.0 / 3.0).unwrap(), 0.0);
        assert_eq!(steady_block_prob(1, 0.8).unwrap(), 0.0);
        assert!((steady_flow(2, 0.2).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(steady_flow(2, 0.5).unwrap(), 0.5);
        assert_eq!(steady_flow(1, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn continuous_at_the_critical_density() {
        for m in 1..=4 {
            let rc = critical_density(m);
            let below = steady_block_prob(m, rc - 1e-12).unwrap();
            assert!(below < 1e-10);
            assert_eq!(steady_block_prob(m, rc).unwrap(), 0.0);
            // flow peaks at m/(m+1) where both branches meet
            let peak = f64::from(m) / (f64::from(m) + 1.0);
            assert!((steady_flow(m, rc).unwrap() - peak).abs() < 1e-12);
        }
    }
}
