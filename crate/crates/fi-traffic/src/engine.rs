//! Bit-packed ring configurations and the deterministic traffic update rule.
//!
//! Cars occupy sites of a periodic one-dimensional lattice, one bit per site.
//! Each time step every car advances simultaneously by `min(gap, m)` sites,
//! where `gap` counts the empty sites to the next car ahead and `m` is the
//! speed limit. The same dynamics is exposed twice: [`Configuration::step`]
//! moves cars directly, while [`Configuration::step_local`] rewrites every
//! site from its neighborhood `(s[i-m], ..., s[i], s[i+1])`. The two are
//! checked against each other exhaustively in the test suite; the car-based
//! form is the authoritative one.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Errors from configuration construction and ring statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("lattice length must be at least 1")]
    EmptyLattice,
    #[error("density must lie in [0, 1], got {0}")]
    DensityOutOfRange(f64),
    #[error("maximum speed must be at least 1")]
    InvalidMaxSpeed,
    #[error("configuration has no cars, velocities are undefined")]
    NoCars,
    #[error("site-local update needs at least m + 2 = {min} sites, got {got}")]
    LatticeTooShort { min: usize, got: usize },
    #[error("pattern must be nonempty")]
    EmptyPattern,
    #[error("pattern of length {pattern} does not fit a lattice of {length} sites")]
    PatternTooLong { pattern: usize, length: usize },
    #[error("sites must be '0' or '1', got {0:?}")]
    InvalidSite(char),
}

/// Model parameters: the maximum speed `m >= 1`.
///
/// `m = 1` reproduces elementary rule 184.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    max_speed: u32,
}

impl ModelParams {
    pub fn new(max_speed: u32) -> Result<Self, EngineError> {
        if max_speed < 1 {
            return Err(EngineError::InvalidMaxSpeed);
        }
        Ok(Self { max_speed })
    }

    pub fn max_speed(&self) -> u32 {
        self.max_speed
    }
}

/// How [`init_random`] places cars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Exactly `round(rho * L)` cars at uniformly random distinct sites.
    ExactCount,
    /// Each site occupied independently with probability `rho`.
    Bernoulli,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitMode::ExactCount => write!(f, "exact-count"),
            InitMode::Bernoulli => write!(f, "bernoulli"),
        }
    }
}

impl FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" | "exact-count" => Ok(InitMode::ExactCount),
            "bernoulli" => Ok(InitMode::Bernoulli),
            other => Err(format!("unknown init mode {other:?} (expected \"exact\" or \"bernoulli\")")),
        }
    }
}

/// Per-car velocities, in ring order of the cars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VelocityField {
    velocities: Vec<u32>,
}

impl VelocityField {
    pub fn as_slice(&self) -> &[u32] {
        &self.velocities
    }

    pub fn car_count(&self) -> usize {
        self.velocities.len()
    }

    /// Sum of all velocities (total displacement per step).
    pub fn total(&self) -> u64 {
        self.velocities.iter().map(|&v| u64::from(v)).sum()
    }

    /// Mean velocity over cars.
    pub fn mean(&self) -> f64 {
        self.total() as f64 / self.velocities.len() as f64
    }
}

/// A ring of `L` binary sites (1 = car), packed 64 sites per word.
///
/// Configurations are immutable values: every update produces a new one.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    words: Vec<u64>,
    len: usize,
}

impl Configuration {
    /// All-empty ring of `len` sites.
    pub fn empty(len: usize) -> Result<Self, EngineError> {
        if len == 0 {
            return Err(EngineError::EmptyLattice);
        }
        Ok(Self {
            words: vec![0; len.div_ceil(64)],
            len,
        })
    }

    /// Build from site values, leftmost value = site 0.
    pub fn from_bits<I>(bits: I) -> Result<Self, EngineError>
    where
        I: IntoIterator<Item = bool>,
    {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        if len == 0 {
            return Err(EngineError::EmptyLattice);
        }
        Ok(Self { words, len })
    }

    /// Number of sites on the ring.
    pub fn len(&self) -> usize {
        self.len
    }

    /// A ring always has at least one site.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Site value (true = car). `i` must be in `0..len`.
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    /// Number of cars (popcount over the packed words).
    pub fn car_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Car density `N / L`.
    pub fn density(&self) -> f64 {
        self.car_count() as f64 / self.len as f64
    }

    /// Positions of all cars in ascending site order.
    pub fn car_positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.car_count());
        for (idx, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                out.push(idx * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    /// One synchronous update: every car advances by `min(gap, m)`.
    ///
    /// Total on valid inputs; all-empty and all-full rings are fixed points.
    pub fn step(&self, params: &ModelParams) -> Configuration {
        let cars = self.car_positions();
        let n = cars.len();
        if n == 0 || n == self.len {
            return self.clone();
        }
        let m = params.max_speed() as usize;
        let l = self.len;
        let mut next = Configuration {
            words: vec![0; self.words.len()],
            len: l,
        };
        for (idx, &pos) in cars.iter().enumerate() {
            let ahead = cars[(idx + 1) % n];
            let gap = (ahead + l - pos - 1) % l;
            next.set((pos + gap.min(m)) % l);
        }
        next
    }

    /// One synchronous update computed site by site from the neighborhood
    /// `(s[i-m], ..., s[i], s[i+1])`.
    ///
    /// An occupied site keeps a car iff the site ahead is occupied. An empty
    /// site receives a car iff the nearest car within `m` sites behind it can
    /// land exactly here: it does so when that car sits `m` sites back (it
    /// moves at full speed) or when the site ahead is occupied (the gap ends
    /// here). Requires `L >= m + 2` so the neighborhood does not wrap onto
    /// itself.
    pub fn step_local(&self, params: &ModelParams) -> Result<Configuration, EngineError> {
        let m = params.max_speed() as usize;
        let l = self.len;
        if l < m + 2 {
            return Err(EngineError::LatticeTooShort { min: m + 2, got: l });
        }
        let mut next = Configuration {
            words: vec![0; self.words.len()],
            len: l,
        };
        for i in 0..l {
            let occupied = if self.get(i) {
                self.get((i + 1) % l)
            } else {
                let mut incoming = false;
                for k in 1..=m {
                    if self.get((i + l - k) % l) {
                        incoming = k == m || self.get((i + 1) % l);
                        break;
                    }
                }
                incoming
            };
            if occupied {
                next.set(i);
            }
        }
        Ok(next)
    }

    /// Velocity `min(gap, m)` of each car, in ring order.
    ///
    /// A lone car sees a gap of `L - 1`. Errors on a carless ring.
    pub fn velocities(&self, params: &ModelParams) -> Result<VelocityField, EngineError> {
        let cars = self.car_positions();
        if cars.is_empty() {
            return Err(EngineError::NoCars);
        }
        let m = params.max_speed();
        let l = self.len;
        let n = cars.len();
        let velocities = cars
            .iter()
            .enumerate()
            .map(|(idx, &pos)| {
                let ahead = cars[(idx + 1) % n];
                let gap = (ahead + l - pos - 1) % l;
                (gap as u64).min(u64::from(m)) as u32
            })
            .collect();
        Ok(VelocityField { velocities })
    }

    /// Average flow `(1/L) * sum of velocities`, which equals `rho * v_mean`.
    ///
    /// Extends continuously to 0 on a carless ring.
    pub fn flow(&self, params: &ModelParams) -> f64 {
        match self.velocities(params) {
            Ok(field) => field.total() as f64 / self.len as f64,
            Err(_) => 0.0,
        }
    }

    /// Flow as an exact rational, for identity checks.
    pub fn flow_rational(&self, params: &ModelParams) -> BigRational {
        match self.velocities(params) {
            Ok(field) => BigRational::new(BigInt::from(field.total()), BigInt::from(self.len as u64)),
            Err(_) => BigRational::zero(),
        }
    }

    /// Occurrences of `pattern` over all `L` ring start positions
    /// (overlapping, wrapping).
    pub fn block_count(&self, pattern: &str) -> Result<u64, EngineError> {
        let bits = parse_sites(pattern)?;
        if bits.is_empty() {
            return Err(EngineError::EmptyPattern);
        }
        if bits.len() > self.len {
            return Err(EngineError::PatternTooLong {
                pattern: bits.len(),
                length: self.len,
            });
        }
        let mut count = 0;
        for start in 0..self.len {
            if bits
                .iter()
                .enumerate()
                .all(|(j, &b)| self.get((start + j) % self.len) == b)
            {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Ring frequency of `pattern`: occurrences divided by `L`.
    pub fn block_frequency(&self, pattern: &str) -> Result<f64, EngineError> {
        Ok(self.block_count(pattern)? as f64 / self.len as f64)
    }

    /// Ring frequency as an exact rational.
    pub fn block_frequency_rational(&self, pattern: &str) -> Result<BigRational, EngineError> {
        Ok(BigRational::new(
            BigInt::from(self.block_count(pattern)?),
            BigInt::from(self.len as u64),
        ))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

impl FromStr for Configuration {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Configuration::from_bits(parse_sites(s)?)
    }
}

fn parse_sites(s: &str) -> Result<Vec<bool>, EngineError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(EngineError::InvalidSite(other)),
        })
        .collect()
}

/// Seeded random initial configuration.
///
/// The generator is ChaCha8 keyed with `seed_from_u64(seed)` on stream 0, so
/// identical `(length, density, seed, mode)` always reproduce the same
/// configuration, on any platform.
pub fn init_random(
    length: usize,
    density: f64,
    seed: u64,
    mode: InitMode,
) -> Result<Configuration, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_from_rng(length, density, mode, &mut rng)
}

/// Like [`init_random`] but drawing from a caller-provided generator; used by
/// ensembles, which hand each run its own ChaCha stream.
pub fn init_from_rng<R: Rng>(
    length: usize,
    density: f64,
    mode: InitMode,
    rng: &mut R,
) -> Result<Configuration, EngineError> {
    if length == 0 {
        return Err(EngineError::EmptyLattice);
    }
    if !density.is_finite() || !(0.0..=1.0).contains(&density) {
        return Err(EngineError::DensityOutOfRange(density));
    }
    let mut config = Configuration::empty(length)?;
    match mode {
        InitMode::ExactCount => {
            let cars = ((density * length as f64).round() as usize).min(length);
            for i in rand::seq::index::sample(rng, length, cars) {
                config.set(i);
            }
        }
        InitMode::Bernoulli => {
            for i in 0..length {
                if rng.random_bool(density) {
                    config.set(i);
                }
            }
        }
    }
    Ok(config)
}
