//! The flow rearranged around a terminating Gauss 2F1 series.
//!
//! With `c = 2 + m + m*t` the flow at time `t` can be written
//!
//! ```text
//! phi = 1 - rho - (1-rho)^(1+m+mt) * rho^t * C(1+m+t+mt, t+1) / (1+m+mt)
//!                 * 2F1(2, -t; c; 1 - 1/rho)
//! ```
//!
//! The upper parameter `-t` terminates the series after `t + 1` terms, so no
//! convergence questions arise even though the argument `1 - 1/rho` leaves
//! the unit disk; for `rho` in `(0, 1]` every series term is nonnegative,
//! which keeps the floating-point path stable. The argument is singular at
//! `rho = 0`, where the flow is defined as its limiting value 0.

use num::rational::Ratio;
use num::{BigInt, BigRational, One, Zero};

use super::numeric::{ln_binomial, KahanSum};
use super::{check_density, check_density_rational, check_speed, FormulaError};

/// Flow at time `t` via the terminating series, floating-point path.
pub fn hypergeometric_flow(m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
    check_speed(m)?;
    check_density(rho)?;
    if rho == 0.0 || rho == 1.0 {
        // rho = 0: singular argument, limiting flow 0; rho = 1: total jam
        return Ok(0.0);
    }
    let m64 = u64::from(m);
    let t64 = u64::from(t);
    let c = 2 + m64 + m64 * t64;
    let z = 1.0 - 1.0 / rho;

    // 2F1(2, -t; c; z) as a finite sum; term ratio (2+k)(k-t) z / ((c+k)(k+1))
    let mut series = KahanSum::new();
    let mut term = 1.0;
    for k in 0..=t64 {
        series.add(term);
        if k < t64 {
            term *= (2 + k) as f64 * (k as f64 - t64 as f64) * z
                / ((c + k) as f64 * (k + 1) as f64);
        }
    }

    let ln_prefactor = (1 + m64 + m64 * t64) as f64 * (1.0 - rho).ln()
        + t64 as f64 * rho.ln()
        + ln_binomial(1 + m64 + t64 + m64 * t64, t64 + 1)
        - ((1 + m64 + m64 * t64) as f64).ln();
    let block_prob = ln_prefactor.exp() * series.value();
    Ok(1.0 - rho - block_prob)
}

/// Flow at time `t` via the terminating series, exact rationals.
pub fn hypergeometric_flow_rational(
    m: u32,
    t: u32,
    rho: &BigRational,
) -> Result<BigRational, FormulaError> {
    check_speed(m)?;
    check_density_rational(rho)?;
    if rho.is_zero() {
        return Ok(BigRational::zero());
    }
    let m64 = u64::from(m);
    let t64 = u64::from(t);
    let c = 2 + m64 + m64 * t64;
    let z = BigRational::one() - rho.recip();

    let mut series = BigRational::zero();
    let mut term = BigRational::one();
    for k in 0..=t64 {
        series += &term;
        if k < t64 {
            let numer = BigInt::from(2 + k) * (BigInt::from(k) - BigInt::from(t64));
            let denom = BigInt::from(c + k) * BigInt::from(k + 1);
            term = term * Ratio::new(numer, denom) * &z;
        }
    }

    let complement = BigRational::one() - rho;
    let binom: BigInt =
        num_integer::binomial(BigInt::from(1 + m64 + t64 + m64 * t64), BigInt::from(t64 + 1));
    let prefactor = complement.pow((1 + m64 + m64 * t64) as i32)
        * rho.pow(t64 as i32)
        * Ratio::new(binom, BigInt::from(1 + m64 + m64 * t64));
    Ok(BigRational::one() - rho - prefactor * series)
}
