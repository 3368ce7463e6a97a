//! Exact enumeration backend: i.i.d. Boltzmann draws or the exact minimizer.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::QuboProblem;
use crate::samplers::{SampleSet, SamplerConfig};

/// Enumeration bound for the exact backend.
pub const EXACT_MAX_VARS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactMode {
    /// `S` i.i.d. draws from the exact Boltzmann distribution at `beta`.
    Boltzmann,
    /// The single exact minimizer, carrying the full sample weight `S`.
    /// Energy ties break toward the lexicographically smallest configuration.
    Argmin,
}

pub fn sample_exact(
    problem: &QuboProblem,
    config: &SamplerConfig,
    mode: ExactMode,
) -> Result<SampleSet> {
    config.validate()?;
    let n = problem.n();
    if n > EXACT_MAX_VARS {
        return Err(Error::TooManyVariables {
            what: "exact sampler",
            max: EXACT_MAX_VARS,
            got: n,
        });
    }
    match mode {
        ExactMode::Argmin => {
            let (config_min, _) = argmin(problem);
            SampleSet::from_weighted(problem, vec![(config_min, config.num_samples as u64)])
        }
        ExactMode::Boltzmann => boltzmann_draws(problem, config),
    }
}

/// Exact minimizer with lexicographic tie-breaking.
pub(crate) fn argmin(problem: &QuboProblem) -> (Vec<u8>, f64) {
    let n = problem.n();
    let mut best_state: u32 = 0;
    let mut best_energy = f64::INFINITY;
    enumerate(problem, |state, energy| {
        if energy < best_energy
            || (energy == best_energy && lex_less(state, best_state, n))
        {
            best_energy = energy;
            best_state = state;
        }
    });
    // Recompute from scratch so the reported energy carries no enumeration
    // rounding drift.
    let config = unpack(best_state, n);
    let energy = problem.energy(&config).expect("dimension checked");
    (config, energy)
}

fn boltzmann_draws(problem: &QuboProblem, config: &SamplerConfig) -> Result<SampleSet> {
    let n = problem.n();
    let mut energies = vec![0.0f64; 1 << n];
    let mut min_energy = f64::INFINITY;
    enumerate(problem, |state, energy| {
        energies[state as usize] = energy;
        min_energy = min_energy.min(energy);
    });
    // Cumulative Boltzmann weights, shifted by the minimum for stability.
    let mut cumulative = energies;
    let mut acc = 0.0;
    for w in cumulative.iter_mut() {
        acc += (-config.beta * (*w - min_energy)).exp();
        *w = acc;
    }
    let total = acc;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counts: Vec<u64> = vec![0; cumulative.len()];
    for _ in 0..config.num_samples {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u);
        counts[idx.min(cumulative.len() - 1)] += 1;
    }
    let weighted: Vec<(Vec<u8>, u64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(state, &c)| (unpack(state as u32, n), c))
        .collect();
    SampleSet::from_weighted(problem, weighted)
}

/// Visit all `2^n` states with Gray-code incremental energy updates.
/// `state` encodes variable `i` in bit `i`. Integer-valued problems stay
/// exact; real-valued drift is bounded by the enumeration length.
pub(crate) fn enumerate(problem: &QuboProblem, mut visit: impl FnMut(u32, f64)) {
    let n = problem.n();
    debug_assert!(n <= EXACT_MAX_VARS);
    let mut config = vec![0u8; n];
    let mut energy = problem.offset();
    let mut state: u32 = 0;
    visit(state, energy);
    for k in 1u32..(1u32 << n) {
        let flip = k.trailing_zeros() as usize;
        energy += problem.flip_delta(&config, flip);
        config[flip] ^= 1;
        state ^= 1 << flip;
        visit(state, energy);
    }
}

pub(crate) fn unpack(state: u32, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((state >> i) & 1) as u8).collect()
}

/// Lexicographic order on the unpacked configuration vectors.
fn lex_less(a: u32, b: u32, n: usize) -> bool {
    for i in 0..n {
        let (ai, bi) = ((a >> i) & 1, (b >> i) & 1);
        if ai != bi {
            return ai < bi;
        }
    }
    false
}

/// Exact Boltzmann probabilities at `beta`, indexed like [`enumerate`].
/// Oracle helper for tests and validation.
pub fn boltzmann_distribution(problem: &QuboProblem, beta: f64) -> Vec<f64> {
    let n = problem.n();
    assert!(n <= EXACT_MAX_VARS);
    let mut energies = vec![0.0f64; 1 << n];
    let mut min_energy = f64::INFINITY;
    enumerate(problem, |state, energy| {
        energies[state as usize] = energy;
        min_energy = min_energy.min(energy);
    });
    let mut z = 0.0;
    for e in energies.iter_mut() {
        *e = (-beta * (*e - min_energy)).exp();
        z += *e;
    }
    for e in energies.iter_mut() {
        *e /= z;
    }
    energies
}

/// Total-variation distance between a sample set and exact probabilities
/// indexed like [`enumerate`]. Validation helper.
pub fn tv_distance(samples: &SampleSet, exact_probs: &[f64]) -> f64 {
    let total = samples.total_weight() as f64;
    let mut empirical = vec![0.0; exact_probs.len()];
    for (c, &w) in samples.configs.iter().zip(samples.weights.iter()) {
        let state: usize = c.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum();
        empirical[state] = w as f64 / total;
    }
    0.5 * exact_probs
        .iter()
        .zip(empirical.iter())
        .map(|(p, q)| (p - q).abs())
        .sum::<f64>()
}
