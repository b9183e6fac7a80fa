//! Which initial windows evolve into a block of zeros, and how many there are.
//!
//! A binary string is *m-admissible* when the capital walk that gains 1 on
//! every `0` and loses `m` on every `1` stays strictly positive after each
//! prefix. The m-admissible strings of length `(n+1)(m+1)` are exactly the
//! n-step preimages of the all-zero block `0^(m+1)`: sites further left or
//! right cannot influence the block within n steps (the light cone spans `m`
//! sites per step on the left and one on the right).
//!
//! Everything here is validated against [`windowed_evolve`], a brute-force
//! oracle that runs the traffic rule on a finite segment and keeps only the
//! sites whose new value the segment fully determines.

use num::{BigRational, BigUint, One, Zero};
use thiserror::Error;

/// Largest window length accepted by the exhaustive operations.
pub const EXHAUSTIVE_GUARD: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreimageError {
    #[error("string must be nonempty")]
    Empty,
    #[error("string characters must be '0' or '1', got {0:?}")]
    InvalidBit(char),
    #[error("maximum speed must be at least 1")]
    InvalidMaxSpeed,
    #[error("density must lie in [0, 1]")]
    DensityOutOfRange,
    #[error("segment of {length} sites is too short for {steps} windowed steps at speed {m}")]
    SegmentTooShort { length: usize, m: u32, steps: u32 },
    #[error("an {steps}-step preimage window has {expected} sites, got {got}")]
    WrongWindowLength { expected: usize, got: usize, steps: u32 },
    #[error("window length {0} exceeds the exhaustive guard of {EXHAUSTIVE_GUARD} sites")]
    GuardExceeded(usize),
    #[error("a lattice path needs at least one segment")]
    EmptyPath,
}

fn parse_bits(s: &str) -> Result<Vec<bool>, PreimageError> {
    if s.is_empty() {
        return Err(PreimageError::Empty);
    }
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(PreimageError::InvalidBit(other)),
        })
        .collect()
}

fn check_speed(m: u32) -> Result<(), PreimageError> {
    if m < 1 {
        Err(PreimageError::InvalidMaxSpeed)
    } else {
        Ok(())
    }
}

/// Window length of an n-step preimage of `0^(m+1)`.
pub fn window_length(m: u32, n: u32) -> usize {
    (n as usize + 1) * (m as usize + 1)
}

/// Capital-walk admissibility: start at 0, add 1 per `0`, subtract `m` per
/// `1`; admissible iff the running total stays `> 0` after every prefix.
pub fn is_admissible(bits: &str, m: u32) -> Result<bool, PreimageError> {
    check_speed(m)?;
    let bits = parse_bits(bits)?;
    let admissible = admissible_bits(&bits, m);
    debug_assert_eq!(admissible, admissible_bits_by_fraction(&bits, m));
    Ok(admissible)
}

fn admissible_bits(bits: &[bool], m: u32) -> bool {
    let mut capital: i64 = 0;
    for &bit in bits {
        capital += if bit { -i64::from(m) } else { 1 };
        if capital <= 0 {
            return false;
        }
    }
    true
}

/// Equivalent prefix-fraction form: every prefix of length `k` holds fewer
/// than `k / (m+1)` ones. Agreement with the capital walk is asserted in the
/// tests.
fn admissible_bits_by_fraction(bits: &[bool], m: u32) -> bool {
    let mut ones: u64 = 0;
    for (k, &bit) in bits.iter().enumerate() {
        if bit {
            ones += 1;
        }
        // ones < (k+1)/(m+1), in integers
        if ones * (u64::from(m) + 1) >= k as u64 + 1 {
            return false;
        }
    }
    true
}

/// Number of m-admissible strings with `n0` zeros and `n1` ones, i.e. lattice
/// paths from the origin to `(n0, n1)` that stay strictly above `x = m y`:
/// `(n0 - m*n1) / (n0 + n1) * C(n0 + n1, n1)`, or 0 when `n0 <= m*n1`.
///
/// The quotient is always an integer; the exact division is asserted.
pub fn path_count(n0: u64, n1: u64, m: u32) -> Result<BigUint, PreimageError> {
    check_speed(m)?;
    if n0 + n1 == 0 {
        return Err(PreimageError::EmptyPath);
    }
    if n1 > 0 && n0 <= u64::from(m) * n1 {
        return Ok(BigUint::zero());
    }
    let excess = BigUint::from(n0 - u64::from(m) * n1);
    let product = excess * num_integer::binomial(BigUint::from(n0 + n1), BigUint::from(n1));
    let (count, remainder) = num_integer::div_rem(product, BigUint::from(n0 + n1));
    assert!(remainder.is_zero(), "path count formula must divide exactly");
    Ok(count)
}

/// Total number of n-step preimages of `0^(m+1)`, summed over the possible
/// zero counts (at least `m(n+1) + 1` zeros, at most the full window).
pub fn preimage_count(m: u32, n: u32) -> Result<BigUint, PreimageError> {
    check_speed(m)?;
    let p = window_length(m, n) as u64;
    let min_zeros = u64::from(m) * (u64::from(n) + 1) + 1;
    let mut total = BigUint::zero();
    for n0 in min_zeros..=p {
        total += path_count(n0, p - n0, m)?;
    }
    Ok(total)
}

/// Depth-first walk over all m-admissible strings of length `p`, pruned by
/// the capital walk, visiting them in lexicographic order.
fn walk_admissible<F: FnMut(&[u8])>(p: usize, m: u32, visit: &mut F) {
    let mut buf = Vec::with_capacity(p);
    descend(&mut buf, 0, p, i64::from(m), visit);
}

fn descend<F: FnMut(&[u8])>(buf: &mut Vec<u8>, capital: i64, p: usize, m: i64, visit: &mut F) {
    if buf.len() == p {
        visit(buf);
        return;
    }
    buf.push(b'0');
    descend(buf, capital + 1, p, m, visit);
    buf.pop();
    if capital - m > 0 {
        buf.push(b'1');
        descend(buf, capital - m, p, m, visit);
        buf.pop();
    }
}

/// Visit every n-step preimage of `0^(m+1)` in lexicographic order without
/// materializing the whole list.
pub fn for_each_preimage<F: FnMut(&str)>(m: u32, n: u32, mut visit: F) -> Result<(), PreimageError> {
    check_speed(m)?;
    let p = window_length(m, n);
    if p > EXHAUSTIVE_GUARD {
        return Err(PreimageError::GuardExceeded(p));
    }
    walk_admissible(p, m, &mut |bytes| {
        visit(std::str::from_utf8(bytes).expect("ascii 0/1 buffer"));
    });
    Ok(())
}

/// All n-step preimages of `0^(m+1)`, lexicographically sorted.
pub fn enumerate_preimages(m: u32, n: u32) -> Result<Vec<String>, PreimageError> {
    let mut out = Vec::new();
    for_each_preimage(m, n, |s| out.push(s.to_string()))?;
    Ok(out)
}

/// Golden-file rendering: a `# m=<m> n=<n>` header line followed by one
/// preimage per line.
pub fn render_golden(m: u32, n: u32) -> Result<String, PreimageError> {
    let mut out = format!("# m={m} n={n}\n");
    for_each_preimage(m, n, |s| {
        out.push_str(s);
        out.push('\n');
    })?;
    Ok(out)
}

/// Probability that a Bernoulli(`rho`) window is an n-step preimage of
/// `0^(m+1)`: the sum of `rho^ones * (1-rho)^zeros` over the enumerated
/// preimages, as an exact rational.
pub fn preimage_prob_sum_rational(
    m: u32,
    n: u32,
    rho: &BigRational,
) -> Result<BigRational, PreimageError> {
    if rho < &BigRational::zero() || rho > &BigRational::one() {
        return Err(PreimageError::DensityOutOfRange);
    }
    let p = window_length(m, n);
    // powers up to p, so each visited string costs one multiply and one add
    let mut rho_pow = Vec::with_capacity(p + 1);
    let mut com_pow = Vec::with_capacity(p + 1);
    rho_pow.push(BigRational::one());
    com_pow.push(BigRational::one());
    let complement = BigRational::one() - rho;
    for k in 1..=p {
        rho_pow.push(&rho_pow[k - 1] * rho);
        com_pow.push(&com_pow[k - 1] * &complement);
    }
    let mut sum = BigRational::zero();
    for_each_preimage(m, n, |s| {
        let ones = s.bytes().filter(|&b| b == b'1').count();
        sum += &rho_pow[ones] * &com_pow[p - ones];
    })?;
    Ok(sum)
}

/// Floating-point twin of [`preimage_prob_sum_rational`].
pub fn preimage_prob_sum(m: u32, n: u32, rho: f64) -> Result<f64, PreimageError> {
    if !rho.is_finite() || !(0.0..=1.0).contains(&rho) {
        return Err(PreimageError::DensityOutOfRange);
    }
    let p = window_length(m, n);
    let mut sum = 0.0;
    for_each_preimage(m, n, |s| {
        let ones = s.bytes().filter(|&b| b == b'1').count() as i32;
        sum += rho.powi(ones) * (1.0 - rho).powi(p as i32 - ones);
    })?;
    Ok(sum)
}

/// Evolve a finite segment under the traffic rule, keeping only sites whose
/// new value the segment determines: each step drops `m` sites on the left
/// and one on the right.
///
/// A car whose visible empty run reaches the segment's right edge moves
/// `min(run, m)`: if the run is at least `m` its speed is determined anyway,
/// and otherwise every possible landing site falls in the dropped margin.
pub fn windowed_evolve(bits: &str, m: u32, steps: u32) -> Result<String, PreimageError> {
    check_speed(m)?;
    let mut segment = parse_bits(bits)?;
    let consumed = (m as usize + 1) * steps as usize;
    if segment.len() <= consumed {
        return Err(PreimageError::SegmentTooShort {
            length: segment.len(),
            m,
            steps,
        });
    }
    for _ in 0..steps {
        segment = windowed_step(&segment, m as usize);
    }
    Ok(segment
        .iter()
        .map(|&b| if b { '1' } else { '0' })
        .collect())
}

fn windowed_step(segment: &[bool], m: usize) -> Vec<bool> {
    let p = segment.len();
    let mut moved = vec![false; p];
    for j in 0..p {
        if !segment[j] {
            continue;
        }
        let mut run = 0;
        while j + run + 1 < p && !segment[j + run + 1] {
            run += 1;
        }
        moved[j + run.min(m)] = true;
    }
    moved[m..p - 1].to_vec()
}

/// Oracle for the admissibility criterion: does this window of length
/// `(n+1)(m+1)` actually evolve to `0^(m+1)` in n windowed steps?
pub fn brute_force_is_preimage(bits: &str, m: u32, n: u32) -> Result<bool, PreimageError> {
    check_speed(m)?;
    let expected = window_length(m, n);
    let got = bits.chars().count();
    if got != expected {
        return Err(PreimageError::WrongWindowLength {
            expected,
            got,
            steps: n,
        });
    }
    let evolved = windowed_evolve(bits, m, n)?;
    Ok(evolved.bytes().all(|b| b == b'0'))
}
