//! Deterministic maximum-speed traffic cellular automaton on a ring.
//!
//! Cars occupy sites of a periodic one-dimensional lattice and all move
//! simultaneously, each advancing by `min(gap, m)` sites per step, where
//! `gap` is the number of empty sites ahead and `m` the speed limit. At
//! `m = 1` this is elementary cellular automaton rule 184, the discrete-time
//! totally asymmetric exclusion process.
//!
//! Under random initial conditions the model's average flow is known in
//! closed form at every finite time, not just in the steady state, because
//! the flow per configuration equals `1 - rho - P(0^(m+1))` and the windows
//! that evolve into a block of zeros have a clean combinatorial structure
//! (lattice paths avoiding a line). This crate implements the dynamics, the
//! combinatorics, and the formulas, and cross-checks each against the
//! others:
//!
//! - [`engine`] — bit-packed ring configurations, the update rule in both
//!   car-based and site-local form, velocities, flow, block statistics.
//! - [`preimage`] — the admissibility predicate for windows that evolve into
//!   a zero block, lattice-path counting, exhaustive enumeration, and the
//!   windowed brute-force oracle everything is tested against.
//! - [`formula`] — interchangeable evaluators for the vacancy-block
//!   probability and the flow (finite sum, terminating hypergeometric
//!   series, erf asymptotics, steady-state limits), registered by name.
//! - [`harness`] — reproducible seeded simulations, parallel ensembles,
//!   density sweeps, and the CSV formats the command-line tool emits.

pub mod engine;
pub mod formula;
pub mod harness;
pub mod preimage;

pub use engine::{init_random, Configuration, EngineError, InitMode, ModelParams, VelocityField};
pub use formula::{formula_by_name, FlowFormula, FormulaError, FORMULAS};
pub use harness::{
    admissibility_census, density_grid, ensemble, flow_identity_residual, fundamental_diagram,
    run_series, DiagramTable, EnsembleStats, FlowSeries, HarnessError, PreimageCensus, RunSpec,
    SimSpec,
};
pub use preimage::PreimageError;
