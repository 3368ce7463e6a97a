//! Projected subgradient ascent on the Lagrangian dual, with expectation
//! values estimated from Boltzmann samples of the relaxed QUBO.
//!
//! Per iteration: relax the constraints with the current multipliers, sample
//! the relaxed QUBO, estimate the objective and constraint expectations,
//! scan every sampled configuration for feasible incumbents, then take a
//! projected multiplier step. The step scale `tau` halves whenever the best
//! feasible solution has not improved for a window of iterations; the window
//! resets on improvement and on halving.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_relaxed_qubo, ConstrainedProblem, Sense};
use crate::samplers::{sample, sample_exact, Backend, ExactMode, SamplerConfig};
use crate::seed;

/// Which dual-value estimate drives the step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Numerator uses the plain sum of constraint violations,
    /// `f_ub - (<f_0> + sum_k (<F_k> - C_k))`.
    #[default]
    ViolationSum,
    /// Numerator uses the multiplier-weighted dual value,
    /// `f_ub - (<f_0> + sum_k mu_k (<F_k> - C_k))`.
    FisherDual,
}

/// Solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial step scale.
    pub tau_init: f64,
    /// Stop once `tau` falls below this threshold.
    pub tau_min: f64,
    /// Iteration cap.
    pub t_max: usize,
    /// Stop once the constraint-violation norm falls below this threshold.
    pub epsilon: f64,
    /// Iterations without improvement before `tau` halves.
    pub non_improve_window: usize,
    /// Initial multipliers; zeros when absent.
    pub mu_init: Option<Vec<f64>>,
    /// Upper bound on the objective, from a heuristic such as the greedy
    /// knapsack baseline. Required.
    pub upper_bound: Option<f64>,
    pub step_rule: StepRule,
    /// Wall-clock budget for one solve; no limit when absent.
    pub time_budget_secs: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau_init: 0.5,
            tau_min: 0.01,
            t_max: 50,
            epsilon: 0.001,
            non_improve_window: 10,
            mu_init: None,
            upper_bound: None,
            step_rule: StepRule::default(),
            time_budget_secs: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_init > 0.0 && self.tau_min > 0.0 && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(
                "tau_init, tau_min and epsilon must be positive".into(),
            ));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidConfig("t_max must be >= 1".into()));
        }
        if self.non_improve_window == 0 {
            return Err(Error::InvalidConfig(
                "non_improve_window must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_upper_bound(mut self, upper_bound: f64) -> Self {
        self.upper_bound = Some(upper_bound);
        self
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Iteration count reached `t_max`.
    TMax,
    /// Step scale fell below `tau_min`.
    TauMin,
    /// Constraint-violation norm fell below `epsilon`.
    Epsilon,
    /// Wall-clock budget exhausted.
    Timeout,
}

/// A feasible configuration and its objective value (offsets included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSolution {
    pub config: Vec<u8>,
    pub objective: f64,
}

/// One row of the solve history. `mu` is the multiplier vector used to build
/// the relaxed QUBO for this iteration; `tau` and `eta` are the values in
/// effect when the multiplier step was taken (`eta` is zero on rows where
/// the loop stopped before stepping).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub mu: Vec<f64>,
    pub eta: f64,
    pub tau: f64,
    pub objective_expectation: f64,
    pub constraint_expectations: Vec<f64>,
    pub violation_norm: f64,
    pub best_feasible_value: Option<f64>,
}

/// Mutable solver state; returned inside [`SolveResult`] with the full
/// per-iteration history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub mu: Vec<f64>,
    pub tau: f64,
    pub iteration: usize,
    pub best_feasible: Option<FeasibleSolution>,
    pub non_improve_count: usize,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub stop_reason: StopReason,
    pub state: SolverState,
}

impl SolveResult {
    pub fn best_feasible(&self) -> Option<&FeasibleSolution> {
        self.state.best_feasible.as_ref()
    }

    pub fn iterations(&self) -> usize {
        self.state.history.len()
    }
}

/// Step size `eta = tau * (f_ub - dual_estimate) / sum_k (<F_k> - C_k)^2`.
///
/// The default numerator follows the printed rule with an unweighted
/// violation sum; [`StepRule::FisherDual`] selects the multiplier-weighted
/// dual value instead. A vanished denominator (all expectations exactly on
/// their bounds) is reported as an error; callers treat it as the
/// violation-norm stopping condition.
#[allow(clippy::too_many_arguments)]
pub fn step_size(
    tau: f64,
    objective_expectation: f64,
    constraint_expectations: &[f64],
    mu: &[f64],
    bounds: &[f64],
    senses: &[Sense],
    upper_bound: f64,
    rule: StepRule,
) -> Result<f64> {
    let denom: f64 = constraint_expectations
        .iter()
        .zip(bounds.iter())
        .map(|(&f, &c)| (f - c).powi(2))
        .sum();
    if denom == 0.0 {
        return Err(Error::SubgradientVanished);
    }
    let penalty: f64 = match rule {
        StepRule::ViolationSum => constraint_expectations
            .iter()
            .zip(bounds.iter())
            .map(|(&f, &c)| f - c)
            .sum(),
        StepRule::FisherDual => constraint_expectations
            .iter()
            .zip(bounds.iter())
            .zip(mu.iter().zip(senses.iter()))
            .map(|((&f, &c), (&m, &sense))| match sense {
                Sense::LessEqual => m * (f - c),
                Sense::Equal => m * (c - f),
            })
            .sum(),
    };
    Ok(tau * (upper_bound - (objective_expectation + penalty)) / denom)
}

/// Multiplier update: `mu_k <- max(0, mu_k + eta (<F_k> - C_k))` for
/// inequality constraints, `nu_k <- nu_k + eta (C_k - <F_k>)` for equality
/// constraints (no projection).
pub fn update_multipliers(
    mu: &[f64],
    eta: f64,
    constraint_expectations: &[f64],
    bounds: &[f64],
    senses: &[Sense],
) -> Vec<f64> {
    mu.iter()
        .zip(constraint_expectations.iter())
        .zip(bounds.iter().zip(senses.iter()))
        .map(|((&m, &f), (&c, &sense))| match sense {
            Sense::LessEqual => (m + eta * (f - c)).max(0.0),
            Sense::Equal => m + eta * (c - f),
        })
        .collect()
}

/// Lagrangian dual value `<f_0> + sum_k mu_k (<F_k> - C_k)` (sign flipped
/// for equality constraints).
pub fn dual_value(
    objective_expectation: f64,
    mu: &[f64],
    constraint_expectations: &[f64],
    bounds: &[f64],
    senses: &[Sense],
) -> f64 {
    let mut v = objective_expectation;
    for (((&m, &f), &c), &sense) in mu
        .iter()
        .zip(constraint_expectations.iter())
        .zip(bounds.iter())
        .zip(senses.iter())
    {
        v += match sense {
            Sense::LessEqual => m * (f - c),
            Sense::Equal => m * (c - f),
        };
    }
    v
}

enum Expectations {
    /// Estimate expectations from a sample set.
    Sampled(Backend, SamplerConfig),
    /// Use the values at the exact minimizer of the relaxed QUBO.
    ExactArgmin,
}

/// Solve with a sampling backend. Requires `config.upper_bound`.
pub fn solve(
    problem: &ConstrainedProblem,
    backend: Backend,
    sampler: &SamplerConfig,
    config: &SolverConfig,
) -> Result<SolveResult> {
    sampler.validate()?;
    run_loop(
        problem,
        Expectations::Sampled(backend, sampler.clone()),
        config,
    )
}

/// Naive subgradient baseline: the same loop with expectations replaced by
/// the values at the exact minimizer of the relaxed QUBO. Enumeration-bound,
/// so limited to small problems.
pub fn solve_naive(problem: &ConstrainedProblem, config: &SolverConfig) -> Result<SolveResult> {
    run_loop(problem, Expectations::ExactArgmin, config)
}

fn run_loop(
    problem: &ConstrainedProblem,
    expectations: Expectations,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    let upper_bound = config.upper_bound.ok_or_else(|| {
        Error::InvalidConfig("upper_bound is required (e.g. from the greedy baseline)".into())
    })?;
    let k = problem.num_constraints();
    let bounds = problem.bounds();
    let senses = problem.senses();
    let mut mu = match &config.mu_init {
        Some(m) => {
            if m.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: m.len(),
                });
            }
            m.clone()
        }
        None => vec![0.0; k],
    };
    for (i, (&m, &sense)) in mu.iter().zip(senses.iter()).enumerate() {
        if sense == Sense::LessEqual && m < 0.0 {
            return Err(Error::NegativeMultiplier { index: i, value: m });
        }
    }

    let started = Instant::now();
    let budget = config.time_budget_secs.map(Duration::from_secs_f64);
    let mut tau = config.tau_init;
    let mut non_improve = 0usize;
    let mut best: Option<FeasibleSolution> = None;
    let mut history: Vec<IterationRecord> = Vec::with_capacity(config.t_max);
    let mut stop_reason = StopReason::TMax;

    for t in 1..=config.t_max {
        if budget.is_some_and(|b| started.elapsed() >= b) {
            stop_reason = StopReason::Timeout;
            break;
        }

        let relaxed = build_relaxed_qubo(problem, &mu)?;
        let (exp_objective, exp_constraints, improved) = match &expectations {
            Expectations::Sampled(backend, base_cfg) => {
                let mut cfg = base_cfg.clone();
                cfg.seed = seed::derive(base_cfg.seed, &[t as u64]);
                let samples = sample(&relaxed.qubo, *backend, &cfg)?;
                let exp_objective = samples.expectation(problem.objective())?;
                let exp_constraints: Vec<f64> = problem
                    .constraints()
                    .iter()
                    .map(|c| samples.expectation(&c.form))
                    .collect::<Result<_>>()?;
                let mut improved = false;
                for c in &samples.configs {
                    if problem.is_feasible(c)? {
                        let objective = problem.objective().energy(c)?;
                        if best.as_ref().map_or(true, |b| objective < b.objective) {
                            best = Some(FeasibleSolution {
                                config: c.clone(),
                                objective,
                            });
                            improved = true;
                        }
                    }
                }
                (exp_objective, exp_constraints, improved)
            }
            Expectations::ExactArgmin => {
                let cfg = SamplerConfig {
                    num_samples: 1,
                    ..SamplerConfig::default()
                };
                let point = sample_exact(&relaxed.qubo, &cfg, ExactMode::Argmin)?;
                let x = &point.configs[0];
                let exp_objective = problem.objective().energy(x)?;
                let exp_constraints = problem.constraint_values(x)?;
                let mut improved = false;
                if problem.is_feasible(x)?
                    && best.as_ref().map_or(true, |b| exp_objective < b.objective)
                {
                    best = Some(FeasibleSolution {
                        config: x.clone(),
                        objective: exp_objective,
                    });
                    improved = true;
                }
                (exp_objective, exp_constraints, improved)
            }
        };

        if improved {
            non_improve = 0;
        } else {
            non_improve += 1;
        }

        let violation_norm = exp_constraints
            .iter()
            .zip(bounds.iter())
            .map(|(&f, &c)| (f - c).powi(2))
            .sum::<f64>()
            .sqrt();

        let mut record = IterationRecord {
            t,
            mu: mu.clone(),
            eta: 0.0,
            tau,
            objective_expectation: exp_objective,
            constraint_expectations: exp_constraints.clone(),
            violation_norm,
            best_feasible_value: best.as_ref().map(|b| b.objective),
        };

        if violation_norm < config.epsilon {
            history.push(record);
            stop_reason = StopReason::Epsilon;
            break;
        }

        if non_improve >= config.non_improve_window {
            tau *= 0.5;
            non_improve = 0;
        }
        if tau < config.tau_min {
            record.tau = tau;
            history.push(record);
            stop_reason = StopReason::TauMin;
            break;
        }

        let eta = step_size(
            tau,
            exp_objective,
            &exp_constraints,
            &mu,
            &bounds,
            &senses,
            upper_bound,
            config.step_rule,
        )?
        .max(0.0); // a sampled dual estimate can exceed the heuristic bound

        record.tau = tau;
        record.eta = eta;
        history.push(record);

        mu = update_multipliers(&mu, eta, &exp_constraints, &bounds, &senses);
        debug_assert!(
            mu.iter()
                .zip(senses.iter())
                .all(|(&m, &s)| s == Sense::Equal || m >= 0.0),
            "projection violated"
        );
    }

    Ok(SolveResult {
        stop_reason,
        state: SolverState {
            mu,
            tau,
            iteration: history.len(),
            best_feasible: best,
            non_improve_count: non_improve,
            history,
        },
    })
}

/// Per-constraint optimality diagnostics at a solved state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktRow {
    pub multiplier: f64,
    pub multiplier_nonnegative: bool,
    /// Primal violation `max(0, <F_k> - C_k)`.
    pub violation: f64,
    /// Slack `xi_k = max(0, C_k - <F_k>)`.
    pub slack: f64,
    /// Complementary-slackness residual `|mu_k (xi_k - C_k + <F_k>)|`.
    pub complementary_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub rows: Vec<KktRow>,
}

/// Evaluate the KKT conditions at `expectations` (per-constraint `<F_k>`).
pub fn kkt_report(
    problem: &ConstrainedProblem,
    state: &SolverState,
    expectations: &[f64],
) -> Result<KktReport> {
    let k = problem.num_constraints();
    if expectations.len() != k || state.mu.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: expectations.len().max(state.mu.len()),
        });
    }
    let rows = problem
        .constraints()
        .iter()
        .zip(state.mu.iter().zip(expectations.iter()))
        .map(|(c, (&m, &f))| {
            let slack = (c.bound - f).max(0.0);
            KktRow {
                multiplier: m,
                multiplier_nonnegative: m >= 0.0,
                violation: (f - c.bound).max(0.0),
                slack,
                complementary_residual: (m * (slack - c.bound + f)).abs(),
            }
        })
        .collect();
    Ok(KktReport { rows })
}
