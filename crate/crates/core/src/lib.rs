//! Sampling-based Lagrangian relaxation for constrained binary optimization.
//!
//! Inequality (and equality) constraints are moved into the objective as
//! multiplier-weighted linear terms; the multipliers are driven by projected
//! subgradient ascent, with the required expectation values estimated from
//! Boltzmann samples of the relaxed QUBO. The crate ships three sampler
//! backends (Metropolis MCMC, simulated quantum annealing, and an exact
//! enumeration oracle), a quadratic-knapsack instance generator with greedy
//! and exact baselines, a slack-variable penalty encoding for size
//! comparisons, and a reproducible benchmark harness.

pub mod error;
pub mod harness;
pub mod model;
pub mod qkp;
pub mod samplers;
pub mod seed;
pub mod slack;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    build_relaxed_qubo, Constraint, ConstrainedProblem, IsingProblem, QuboProblem, RelaxedQubo,
    Sense,
};
pub use qkp::QkpInstance;
pub use samplers::{Backend, SampleSet, SamplerConfig};
pub use solver::{
    kkt_report, solve, solve_naive, step_size, update_multipliers, KktReport, SolveResult,
    SolverConfig, SolverState, StepRule, StopReason,
};
