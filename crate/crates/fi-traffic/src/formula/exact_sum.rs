//! The closed-form finite sum for `P_t(0^(m+1))`.
//!
//! With `T = t + 1` and `M = m + 1`, the probability that an `(m+1)`-block is
//! empty at time `t` under Bernoulli(`rho`) initial conditions is
//!
//! ```text
//! P = sum_{j=1}^{T} (j / T) * C(M*T, T - j) * rho^(T-j) * (1 - rho)^(m*T + j)
//! ```
//!
//! with `0^0 = 1`, so the density endpoints give `P = 1` at `rho = 0` and
//! `P = 0` at `rho = 1`. Two evaluation paths are provided: exact rationals
//! (authoritative in tests) and log-gamma floating point with compensated
//! summation (for dense grids); they agree to better than 1e-10 relative.

use num::rational::Ratio;
use num::{BigInt, BigRational, One, Signed, Zero};

use super::numeric::{ln_binomial, KahanSum};
use super::{check_density, check_density_rational, check_speed, FormulaError};

/// `P_t(0^(m+1))`, floating-point path.
pub fn exact_block_prob(m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
    check_speed(m)?;
    check_density(rho)?;
    if rho == 0.0 {
        return Ok(1.0);
    }
    if rho == 1.0 {
        return Ok(0.0);
    }
    let big_t = u64::from(t) + 1;
    let window = (u64::from(m) + 1) * big_t;
    let ln_rho = rho.ln();
    let ln_com = (1.0 - rho).ln();
    let ln_t = (big_t as f64).ln();
    let mut sum = KahanSum::new();
    for j in 1..=big_t {
        let ln_term = (j as f64).ln() - ln_t
            + ln_binomial(window, big_t - j)
            + (big_t - j) as f64 * ln_rho
            + (u64::from(m) * big_t + j) as f64 * ln_com;
        sum.add(ln_term.exp());
    }
    Ok(sum.value().clamp(0.0, 1.0))
}

/// Flow at time `t`: `1 - rho - P_t(0^(m+1))`.
pub fn exact_flow(m: u32, t: u32, rho: f64) -> Result<f64, FormulaError> {
    Ok(1.0 - rho - exact_block_prob(m, t, rho)?)
}

/// `P_t(0^(m+1))` on exact rationals.
pub fn exact_block_prob_rational(
    m: u32,
    t: u32,
    rho: &BigRational,
) -> Result<BigRational, FormulaError> {
    check_speed(m)?;
    check_density_rational(rho)?;
    let big_t = u64::from(t) + 1;
    let window = (u64::from(m) + 1) * big_t;
    let complement = BigRational::one() - rho;
    let mut sum = BigRational::zero();
    for j in 1..=big_t {
        let weight = Ratio::new(BigInt::from(j), BigInt::from(big_t));
        let binom: BigInt = num_integer::binomial(BigInt::from(window), BigInt::from(big_t - j));
        let term = weight
            * Ratio::from_integer(binom)
            * rho.pow((big_t - j) as i32)
            * complement.pow((u64::from(m) * big_t + j) as i32);
        sum += term;
    }
    debug_assert!(!sum.is_negative() && sum <= BigRational::one());
    Ok(sum)
}

/// Flow on exact rationals.
pub fn exact_flow_rational(m: u32, t: u32, rho: &BigRational) -> Result<BigRational, FormulaError> {
    Ok(BigRational::one() - rho - exact_block_prob_rational(m, t, rho)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;

    fn ratio(n: i64, d: i64) -> BigRational {
        Ratio::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn t_zero_reduces_to_vacancy_power() {
        // at t = 0 only j = 1 survives: P = (1 - rho)^(m+1)
        assert!((exact_block_prob(2, 0, 0.3).unwrap() - 0.343).abs() < 1e-15);
        assert_eq!(exact_block_prob_rational(2, 0, &ratio(3, 10)).unwrap(), ratio(343, 1000));
    }

    #[test]
    fn one_step_value_matches_preimage_weights() {
        // three one-step preimages of "00" at rho = 1/2, each of weight 1/16
        assert_eq!(exact_block_prob_rational(1, 1, &ratio(1, 2)).unwrap(), ratio(3, 16));
        assert!((exact_block_prob(1, 1, 0.5).unwrap() - 0.1875).abs() < 1e-15);
        assert_eq!(exact_flow_rational(1, 1, &ratio(1, 2)).unwrap(), ratio(5, 16));
    }

    #[test]
    fn density_endpoints() {
        for m in 1..=3 {
            for t in [0, 1, 7] {
                assert_eq!(exact_block_prob(m, t, 0.0).unwrap(), 1.0);
                assert_eq!(exact_block_prob(m, t, 1.0).unwrap(), 0.0);
                assert_eq!(exact_flow(m, t, 0.0).unwrap(), 0.0);
                assert_eq!(exact_flow(m, t, 1.0).unwrap(), 0.0);
                assert_eq!(exact_block_prob_rational(m, t, &ratio(0, 1)).unwrap(), ratio(1, 1));
                assert_eq!(exact_block_prob_rational(m, t, &ratio(1, 1)).unwrap(), ratio(0, 1));
            }
        }
    }

    #[test]
    fn float_and_rational_paths_agree() {
        for m in 1..=3 {
            for t in [0u32, 1, 5, 20, 100, 200] {
                for (num, den) in [(1i64, 10i64), (1, 3), (1, 2), (9, 10)] {
                    let exact = exact_block_prob_rational(m, t, &ratio(num, den))
                        .unwrap()
                        .to_f64()
                        .unwrap();
                    let float = exact_block_prob(m, t, num as f64 / den as f64).unwrap();
                    let scale = exact.abs().max(1e-300);
                    assert!(
                        ((float - exact) / scale).abs() < 1e-10,
                        "m={m} t={t} rho={num}/{den}: {float} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_domain_arguments() {
        assert_eq!(exact_block_prob(0, 1, 0.5), Err(FormulaError::InvalidMaxSpeed));
        assert_eq!(exact_block_prob(1, 1, 1.5), Err(FormulaError::DensityOutOfRange(1.5)));
        assert_eq!(
            exact_block_prob_rational(1, 1, &ratio(11, 10)),
            Err(FormulaError::RationalDensityOutOfRange)
        );
    }
}
