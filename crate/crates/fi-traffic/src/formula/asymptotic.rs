//! Normal-approximation closed form for `P_t(0^(m+1))`.
//!
//! Approximating the binomial weights in the exact sum by a normal density
//! (de Moivre-Laplace) and the sum by an integral gives, with `T = t + 1`,
//! `M = m + 1`, `a = 1 - T + M*rho*T` and `s = sqrt(2*M*T*rho*(1-rho))`:
//!
//! ```text
//! P ~ sqrt(M rho (1-rho) / (2 pi T))
//!       * { exp(-a^2 / (2 M T rho (1-rho))) - exp(-M rho T / (2 (1-rho))) }
//!   + (1/2) (1 - M rho) * { erf(M rho T / s) - erf(a / s) }
//! ```
//!
//! clamped to `[0, 1]`. The error vanishes as `t` grows; as `T -> infinity`
//! the erf terms saturate and the piecewise steady-state limit is recovered.
//! Undefined at `rho` 0 or 1, where the approximating normal has zero
//! variance.

use std::f64::consts::PI;

use super::numeric::erf;
use super::{check_density, check_speed, FormulaError};

/// Approximate `P_t(0^(m+1))` for `t >= 1` and `rho` strictly inside (0, 1).
pub fn asymptotic_block_prob(m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
    check_speed(m)?;
    check_density(rho)?;
    if t < 1 {
        return Err(FormulaError::TimeTooSmall);
    }
    if rho == 0.0 || rho == 1.0 {
        return Err(FormulaError::DegenerateDensity(rho));
    }
    let big_t = f64::from(t) + 1.0;
    let big_m = f64::from(m) + 1.0;
    let variance = big_m * big_t * rho * (1.0 - rho);
    let spread = (2.0 * variance).sqrt();
    let left_edge = 1.0 - big_t + big_m * rho * big_t;

    let gaussian = (big_m * rho * (1.0 - rho) / (2.0 * PI * big_t)).sqrt()
        * ((-left_edge * left_edge / (2.0 * variance)).exp()
            - (-big_m * rho * big_t / (2.0 * (1.0 - rho))).exp());
    let saturation = 0.5
        * (1.0 - big_m * rho)
        * (erf(big_m * rho * big_t / spread) - erf(left_edge / spread));
    Ok((gaussian + saturation).clamp(0.0, 1.0))
}
