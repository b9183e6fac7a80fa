//! Structural invariants of the dynamics and the combinatorics, checked
//! exhaustively at small sizes and by property testing at random ones.

use num::rational::Ratio;
use num::{BigInt, BigRational, ToPrimitive, Zero};
use proptest::prelude::*;

use fi_traffic::engine::{init_random, Configuration, InitMode, ModelParams};
use fi_traffic::formula::{exact_block_prob, exact_block_prob_rational, exact_flow};
use fi_traffic::harness::flow_identity_residual;
use fi_traffic::preimage::{is_admissible, windowed_evolve};

fn params(m: u32) -> ModelParams {
    ModelParams::new(m).unwrap()
}

fn config_from_code(code: u64, len: usize) -> Configuration {
    Configuration::from_bits((0..len).map(|k| code >> (len - 1 - k) & 1 == 1)).unwrap()
}

fn string_from_code(code: u64, len: usize) -> String {
    (0..len)
        .map(|k| if code >> (len - 1 - k) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// The two update implementations agree on every ring of up to 14 sites.
#[test]
fn exhaustive_dual_implementation_equivalence() {
    for m in 1..=3u32 {
        let p = params(m);
        for len in (m as usize + 2)..=14 {
            for code in 0u64..1 << len {
                let config = config_from_code(code, len);
                assert_eq!(
                    config.step(&p),
                    config.step_local(&p).unwrap(),
                    "m={m} config={config}"
                );
            }
        }
    }
}

/// One windowed step of any admissible string leaves an admissible string.
#[test]
fn exhaustive_windowed_step_preserves_admissibility() {
    for m in 1..=3u32 {
        for len in (m as usize + 2)..=16 {
            for code in 0u64..1 << len {
                let s = string_from_code(code, len);
                if !is_admissible(&s, m).unwrap() {
                    continue;
                }
                let retained = windowed_evolve(&s, m, 1).unwrap();
                assert_eq!(retained.len(), len - m as usize - 1);
                assert!(
                    is_admissible(&retained, m).unwrap(),
                    "m={m} {s} -> {retained}"
                );
            }
        }
    }
}

/// The full admissibility biconditional at every window size up to 16 sites:
/// admissible exactly when the oracle confirms an n-step preimage.
#[test]
fn exhaustive_admissibility_biconditional_up_to_16_sites() {
    use fi_traffic::preimage::{brute_force_is_preimage, window_length};
    for m in 1..=3u32 {
        for n in 0..=7u32 {
            let p = window_length(m, n);
            if p > 16 {
                continue;
            }
            for code in 0u64..1 << p {
                let s = string_from_code(code, p);
                assert_eq!(
                    is_admissible(&s, m).unwrap(),
                    brute_force_is_preimage(&s, m, n).unwrap(),
                    "m={m} n={n} window {s}"
                );
            }
        }
    }
}

/// The enumerated preimage-weight sum equals the closed form at m = 3 as
/// well (16-site windows at n = 3).
#[test]
fn preimage_sum_identity_extends_to_m3() {
    use fi_traffic::preimage::preimage_prob_sum_rational;
    for n in 0..=3u32 {
        for (num, den) in [(1i64, 10i64), (1, 3), (1, 2), (9, 10)] {
            let rho = Ratio::new(BigInt::from(num), BigInt::from(den));
            assert_eq!(
                preimage_prob_sum_rational(3, n, &rho).unwrap(),
                exact_block_prob_rational(3, n, &rho).unwrap(),
                "n={n} rho={num}/{den}"
            );
        }
    }
}

/// Off-critical, the finite-time probability reaches its limit by t = 400.
#[test]
fn block_probability_approaches_steady_limit() {
    use fi_traffic::formula::{critical_density, steady_block_prob};
    for m in 1..=3u32 {
        for offset in [-0.1, 0.1] {
            let rho = critical_density(m) + offset;
            let finite = exact_block_prob(m, 400, rho).unwrap();
            let limit = steady_block_prob(m, rho).unwrap();
            assert!(
                (finite - limit).abs() < 0.02,
                "m={m} rho={rho}: P_400 = {finite:.5}, limit {limit:.5}"
            );
        }
    }
}

/// At m = 1 the update is elementary rule 184 on every 3-site neighborhood.
#[test]
fn rule_184_truth_table() {
    let table = [
        ("111", true),
        ("110", false),
        ("101", true),
        ("100", true),
        ("011", true),
        ("010", false),
        ("001", false),
        ("000", false),
    ];
    let p = params(1);
    for (neighborhood, new_center) in table {
        // embedded on a 3-ring, the new center depends only on these 3 sites
        let ring: Configuration = neighborhood.parse().unwrap();
        assert_eq!(ring.step(&p).get(1), new_center, "ring {neighborhood}");
        assert_eq!(ring.step_local(&p).unwrap().get(1), new_center);
        // and the windowed oracle retains exactly the center after one step
        let retained = windowed_evolve(neighborhood, 1, 1).unwrap();
        assert_eq!(retained == "1", new_center, "window {neighborhood}");
    }
}

/// Monotone pointwise decrease of the vacancy-block probability in t:
/// longer windows impose strictly more constraints.
#[test]
fn block_probability_decreases_with_time() {
    for m in 1..=3 {
        for i in 1..=9u32 {
            let rho = f64::from(i) / 10.0;
            let mut last = exact_block_prob(m, 0, rho).unwrap();
            for t in 1..=6 {
                let next = exact_block_prob(m, t, rho).unwrap();
                assert!(next <= last + 1e-15, "m={m} t={t} rho={rho}");
                last = next;
            }
        }
    }
}

proptest! {
    /// Car count is conserved by both update forms.
    #[test]
    fn step_conserves_cars(bits in proptest::collection::vec(any::<bool>(), 1..120), m in 1..=4u32) {
        let config = Configuration::from_bits(bits).unwrap();
        let p = params(m);
        prop_assert_eq!(config.step(&p).car_count(), config.car_count());
        if config.len() >= m as usize + 2 {
            prop_assert_eq!(config.step_local(&p).unwrap().car_count(), config.car_count());
        }
    }

    /// Random-configuration agreement of the two update forms at sizes the
    /// exhaustive test cannot reach.
    #[test]
    fn dual_implementation_equivalence_random(
        bits in proptest::collection::vec(any::<bool>(), 6..400),
        m in 1..=4u32,
    ) {
        let config = Configuration::from_bits(bits).unwrap();
        if config.len() >= m as usize + 2 {
            let p = params(m);
            prop_assert_eq!(config.step(&p), config.step_local(&p).unwrap());
        }
    }

    /// Velocities: one entry per car, each in [0, m].
    #[test]
    fn velocity_field_shape(bits in proptest::collection::vec(any::<bool>(), 1..200), m in 1..=4u32) {
        let config = Configuration::from_bits(bits).unwrap();
        let p = params(m);
        match config.velocities(&p) {
            Ok(field) => {
                prop_assert_eq!(field.car_count(), config.car_count());
                prop_assert!(field.as_slice().iter().all(|&v| v <= m));
            }
            Err(_) => prop_assert_eq!(config.car_count(), 0),
        }
    }

    /// The flow identity residual is exactly zero on every configuration.
    #[test]
    fn flow_identity_residual_is_zero(
        bits in proptest::collection::vec(any::<bool>(), 4..120),
        m in 1..=3u32,
    ) {
        let config = Configuration::from_bits(bits).unwrap();
        if config.len() >= m as usize + 1 {
            let residual = flow_identity_residual(&config, &params(m)).unwrap();
            prop_assert!(residual.is_zero(), "residual {} on {}", residual, config);
        }
    }

    /// Ring block-count consistency: every `0^k` window is preceded by a car
    /// or extends left, and likewise for `10^k` windows followed by a car.
    #[test]
    fn block_count_consistency(bits in proptest::collection::vec(any::<bool>(), 6..100), k in 1usize..=3) {
        let config = Configuration::from_bits(bits).unwrap();
        let zeros = "0".repeat(k);
        // count(10^k 1) + count(10^(k+1)) = count(10^k)
        let a = config.block_count(&format!("1{zeros}1")).unwrap();
        let b = config.block_count(&format!("1{zeros}0")).unwrap();
        let c = config.block_count(&format!("1{zeros}")).unwrap();
        prop_assert_eq!(a + b, c);
        // count(10^k) = count(0^k) - count(0^(k+1))
        let d = config.block_count(&zeros).unwrap();
        let e = config.block_count(&format!("0{zeros}")).unwrap();
        prop_assert_eq!(c, d - e);
    }

    /// Exact-count initialization honors the rounded car total; both modes
    /// reproduce bit-identically from the same seed.
    #[test]
    fn init_contract(length in 1usize..500, density in 0.0..=1.0f64, seed in any::<u64>()) {
        let exact = init_random(length, density, seed, InitMode::ExactCount).unwrap();
        prop_assert_eq!(exact.car_count(), (density * length as f64).round() as usize);
        let again = init_random(length, density, seed, InitMode::ExactCount).unwrap();
        prop_assert_eq!(&exact, &again);
        let bern = init_random(length, density, seed, InitMode::Bernoulli).unwrap();
        let again = init_random(length, density, seed, InitMode::Bernoulli).unwrap();
        prop_assert_eq!(&bern, &again);
    }

    /// Admissibility via the capital walk agrees with the prefix-fraction
    /// form: fewer than k/(m+1) ones in every length-k prefix.
    #[test]
    fn admissibility_forms_agree(s in "[01]{1,40}", m in 1..=4u32) {
        let mut ones = 0u64;
        let mut fraction_ok = true;
        for (k, c) in s.chars().enumerate() {
            if c == '1' {
                ones += 1;
            }
            if ones * (u64::from(m) + 1) >= k as u64 + 1 {
                fraction_ok = false;
                break;
            }
        }
        prop_assert_eq!(is_admissible(&s, m).unwrap(), fraction_ok);
    }

    /// Windowed evolution drops exactly m + 1 sites per step.
    #[test]
    fn windowed_evolution_shrinkage(s in "[01]{2,40}", m in 1..=3u32, steps in 0..=3u32) {
        let consumed = (m as usize + 1) * steps as usize;
        prop_assume!(s.len() > consumed);
        let out = windowed_evolve(&s, m, steps).unwrap();
        prop_assert_eq!(out.len(), s.len() - consumed);
    }

    /// Probability bounds and the t = 0 reduction of the exact formulas.
    #[test]
    fn formula_bounds(m in 1..=3u32, t in 0..=40u32, i in 0..=20u64) {
        let rho = i as f64 / 20.0;
        let p = exact_block_prob(m, t, rho).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let flow = exact_flow(m, t, rho).unwrap();
        prop_assert!(flow >= -1e-12 && flow <= 1.0 - rho + 1e-12);
        if t == 0 {
            let expected = 1.0 - rho - (1.0 - rho).powi(m as i32 + 1);
            prop_assert!((flow - expected).abs() < 1e-12);
        }
    }

    /// The rational and floating paths agree closely at random points.
    #[test]
    fn rational_float_agreement(m in 1..=3u32, t in 0..=60u32, num in 0i64..=24, den in 24i64..=25) {
        let rho = Ratio::new(BigInt::from(num), BigInt::from(den));
        let exact = exact_block_prob_rational(m, t, &rho).unwrap();
        let float = exact_block_prob(m, t, num as f64 / den as f64).unwrap();
        let reference = exact.to_f64().unwrap();
        prop_assert!((float - reference).abs() <= 1e-10 * reference.abs().max(1e-30) + 1e-300);
    }
}

/// `step` never errors and full/empty rings are fixed points (degenerate
/// densities included).
#[test]
fn fixed_points() {
    for len in [1usize, 2, 7, 64, 65] {
        let zeros = Configuration::from_bits(std::iter::repeat_n(false, len)).unwrap();
        let ones = Configuration::from_bits(std::iter::repeat_n(true, len)).unwrap();
        for m in 1..=3 {
            let p = params(m);
            assert_eq!(zeros.step(&p), zeros);
            assert_eq!(ones.step(&p), ones);
        }
    }
}

/// The vacancy-probability curve is smooth in rho at small t but sharpens at
/// the critical density 1/3 as t grows (the developing kink of the diagram).
#[test]
fn diagram_sharpens_at_the_critical_density() {
    let h = 0.01;
    let curvature = |t: u32| {
        let rho = 1.0 / 3.0;
        let p = |r: f64| exact_block_prob(2, t, r).unwrap();
        ((p(rho - h) - 2.0 * p(rho) + p(rho + h)) / (h * h)).abs()
    };
    let early = curvature(1);
    let mid = curvature(5);
    let late = curvature(100);
    assert!(early < 10.0, "t=1 curve should be smooth, curvature {early:.2}");
    assert!(late > 30.0, "t=100 curve should be near-kinked, curvature {late:.2}");
    assert!(early < mid && mid < late);
}

/// Normalized flow phi(t)/phi(inf) approaches 1 below and above the
/// transition, but visibly slower at the critical density itself.
#[test]
fn normalized_flow_converges_slowest_at_critical_density() {
    use fi_traffic::formula::steady_flow;
    let normalized_gap = |rho: f64| {
        let finite = exact_flow(2, 100, rho).unwrap();
        let steady = steady_flow(2, rho).unwrap();
        (1.0 - finite / steady).abs()
    };
    let below = normalized_gap(0.3);
    let critical = normalized_gap(1.0 / 3.0);
    let above = normalized_gap(0.35);
    assert!(below < 0.05 && above < 0.05, "off-critical gaps {below:.4}, {above:.4}");
    assert!(critical > below && critical > above, "critical gap {critical:.4}");
}

/// The fraction 1/3 is representable only approximately; the exact-rational
/// path must still treat p/q inputs exactly.
#[test]
fn rational_path_is_exact_at_one_third() {
    let third = Ratio::new(BigInt::from(1), BigInt::from(3));
    let p = exact_block_prob_rational(2, 2, &third).unwrap();
    // P is a rational with denominator dividing 3^9 * 3
    let reconstructed: BigRational = fi_traffic::preimage::preimage_prob_sum_rational(2, 2, &third).unwrap();
    assert_eq!(p, reconstructed);
}
