//! Approximate Boltzmann samplers for QUBO problems.
//!
//! Three interchangeable backends produce a [`SampleSet`] of `S` binary
//! configurations at inverse temperature `beta`: single-spin-flip Metropolis
//! chains, simulated quantum annealing over Trotter replicas, and an exact
//! enumeration backend for tests, oracles and the naive baseline. All
//! backends are deterministic for a fixed seed; chains run concurrently with
//! per-chain seeds derived from `(seed, chain index)`.

mod exact;
mod mcmc;
mod sqa;

pub use exact::{boltzmann_distribution, sample_exact, tv_distance, ExactMode, EXACT_MAX_VARS};
pub use mcmc::sample_mcmc;
pub use sqa::sample_sqa;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::QuboProblem;

/// Sampler parameters shared by all backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Inverse temperature of the target Boltzmann distribution.
    pub beta: f64,
    /// Number of samples `S` per call (one independent chain/run each).
    pub num_samples: usize,
    /// Metropolis sweeps per chain (MCMC) or annealing sweeps per run (SQA).
    pub sweeps: usize,
    /// Trotter slice count for SQA.
    pub trotter: usize,
    /// Transverse field at the start of an SQA run.
    pub gamma_start: f64,
    /// Transverse field at the end of an SQA run.
    pub gamma_end: f64,
    /// Base seed; all per-chain streams derive from it.
    pub seed: u64,
    /// Visit sites in random order instead of sequential index order.
    pub random_sweep_order: bool,
    /// SQA readout: lowest-energy slice instead of a uniformly random one.
    /// Breaks the Boltzmann-sampler interpretation; optimization use only.
    pub best_slice_readout: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            beta: 0.1,
            num_samples: 1000,
            sweeps: 1000,
            trotter: 2,
            gamma_start: 10.0,
            gamma_end: 0.1,
            seed: 0,
            random_sweep_order: false,
            best_slice_readout: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("num_samples must be >= 1".into()));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidConfig("sweeps must be >= 1".into()));
        }
        if self.trotter == 0 {
            return Err(Error::InvalidConfig("trotter must be >= 1".into()));
        }
        if !(self.gamma_start > 0.0 && self.gamma_end > 0.0) {
            return Err(Error::InvalidConfig(
                "transverse field schedule must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Sampling backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Mcmc,
    Sqa,
    /// Exact i.i.d. Boltzmann draws via enumeration (small `n` only).
    ExactBoltzmann,
}

/// Draw samples from `problem` with the selected backend.
pub fn sample(problem: &QuboProblem, backend: Backend, config: &SamplerConfig) -> Result<SampleSet> {
    match backend {
        Backend::Mcmc => sample_mcmc(problem, config),
        Backend::Sqa => sample_sqa(problem, config),
        Backend::ExactBoltzmann => sample_exact(problem, config, ExactMode::Boltzmann),
    }
}

/// Multiset of binary configurations with energies and multiplicities.
///
/// Distinct configurations appear once; `weights` counts occurrences and
/// sums to `S`. Energies are recomputed from the problem at construction,
/// so `energies[i]` always matches `problem.energy(&configs[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub configs: Vec<Vec<u8>>,
    pub energies: Vec<f64>,
    pub weights: Vec<u64>,
}

impl SampleSet {
    /// Aggregate raw per-chain states, preserving first-occurrence order.
    pub(crate) fn from_states(problem: &QuboProblem, states: Vec<Vec<u8>>) -> Result<SampleSet> {
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut configs = Vec::new();
        let mut weights: Vec<u64> = Vec::new();
        for state in states {
            match index.get(&state) {
                Some(&i) => weights[i] += 1,
                None => {
                    index.insert(state.clone(), configs.len());
                    configs.push(state);
                    weights.push(1);
                }
            }
        }
        let energies = configs
            .iter()
            .map(|c| problem.energy(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(SampleSet {
            configs,
            energies,
            weights,
        })
    }

    pub(crate) fn from_weighted(
        problem: &QuboProblem,
        weighted: Vec<(Vec<u8>, u64)>,
    ) -> Result<SampleSet> {
        let energies = weighted
            .iter()
            .map(|(c, _)| problem.energy(c))
            .collect::<Result<Vec<_>>>()?;
        let (configs, weights) = weighted.into_iter().unzip();
        Ok(SampleSet {
            configs,
            energies,
            weights,
        })
    }

    /// Total number of samples `S`.
    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Lowest sampled energy and its configuration.
    pub fn best(&self) -> Option<(&[u8], f64)> {
        self.energies
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &e)| (self.configs[i].as_slice(), e))
    }

    /// Weight-averaged value of a QUBO-shaped form over the samples.
    pub fn expectation(&self, form: &QuboProblem) -> Result<f64> {
        let mut acc = 0.0;
        for (config, &w) in self.configs.iter().zip(self.weights.iter()) {
            acc += w as f64 * form.energy(config)?;
        }
        Ok(acc / self.total_weight() as f64)
    }

    /// Empirical probability of each configuration.
    pub fn frequencies(&self) -> Vec<(Vec<u8>, f64)> {
        let total = self.total_weight() as f64;
        self.configs
            .iter()
            .zip(self.weights.iter())
            .map(|(c, &w)| (c.clone(), w as f64 / total))
            .collect()
    }
}
