//! Single-spin-flip Metropolis chains at fixed inverse temperature.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::model::QuboProblem;
use crate::samplers::{SampleSet, SamplerConfig};
use crate::seed;

const CHAIN_STREAM: u64 = 0x4d43;

/// Draw `S` configurations from independent Metropolis chains.
///
/// Each chain starts from a uniformly random configuration, runs `sweeps`
/// full sweeps at inverse temperature `beta`, and records its final state.
/// Sites are visited in sequential index order unless `random_sweep_order`
/// is set, in which case each sweep visits `n` uniformly random sites.
pub fn sample_mcmc(problem: &QuboProblem, config: &SamplerConfig) -> Result<SampleSet> {
    config.validate()?;
    let states: Vec<Vec<u8>> = (0..config.num_samples)
        .into_par_iter()
        .map(|chain| run_chain(problem, config, chain as u64))
        .collect();
    SampleSet::from_states(problem, states)
}

fn run_chain(problem: &QuboProblem, config: &SamplerConfig, chain: u64) -> Vec<u8> {
    let n = problem.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, &[CHAIN_STREAM, chain]));
    let mut x: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
    for _ in 0..config.sweeps {
        for site in 0..n {
            let i = if config.random_sweep_order {
                rng.gen_range(0..n)
            } else {
                site
            };
            metropolis_flip(problem, config.beta, &mut x, i, &mut rng);
        }
    }
    x
}

#[inline]
fn metropolis_flip(
    problem: &QuboProblem,
    beta: f64,
    x: &mut [u8],
    i: usize,
    rng: &mut ChaCha8Rng,
) {
    let delta = problem.flip_delta(x, i);
    if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
        x[i] ^= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::exact::{boltzmann_distribution, tv_distance};

    #[test]
    fn zero_temperature_limit_descends_to_unique_minimum() {
        // Minimum at x = (0, 1): energy -2, all other configs >= 0.
        let q = QuboProblem::from_matrix(&[vec![1.0, 0.5], vec![0.5, -2.0]]).unwrap();
        let cfg = SamplerConfig {
            beta: 1e6,
            num_samples: 200,
            sweeps: 50,
            seed: 5,
            ..SamplerConfig::default()
        };
        let s = sample_mcmc(&q, &cfg).unwrap();
        assert_eq!(s.configs, vec![vec![0, 1]]);
        assert_eq!(s.total_weight(), 200);
    }

    #[test]
    fn same_seed_same_samples() {
        let mut q = QuboProblem::zeros(5).unwrap();
        q.set_coeff(0, 4, -0.9);
        q.set_coeff(2, 2, 0.4);
        let cfg = SamplerConfig {
            num_samples: 300,
            sweeps: 20,
            seed: 123,
            ..SamplerConfig::default()
        };
        let a = sample_mcmc(&q, &cfg).unwrap();
        let b = sample_mcmc(&q, &cfg).unwrap();
        assert_eq!(a, b);
        let other = sample_mcmc(&q, &cfg.clone().with_seed(124)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn one_variable_acceptance_matches_analytic_kernel_and_stationary_law() {
        // Two-state problem: E(0) = 0, E(1) = 1.
        let q = QuboProblem::from_linear(&[1.0]).unwrap();
        let beta: f64 = 0.7;
        let a = (-beta).exp();

        // One sweep from uniform init: P(1) = 0.5 * a (accept 0 -> 1)
        // since the reverse move 1 -> 0 is always accepted.
        let cfg = SamplerConfig {
            beta,
            num_samples: 200_000,
            sweeps: 1,
            seed: 31,
            ..SamplerConfig::default()
        };
        let s = sample_mcmc(&q, &cfg).unwrap();
        let p1 = s
            .frequencies()
            .iter()
            .find(|(c, _)| c == &vec![1])
            .map(|&(_, f)| f)
            .unwrap_or(0.0);
        let expected_kernel = 0.5 * a;
        assert!(
            (p1 - expected_kernel).abs() < 0.005,
            "one-sweep P(1) = {p1}, analytic {expected_kernel}"
        );

        // Long chains: stationary frequency a / (1 + a).
        let cfg = SamplerConfig {
            sweeps: 200,
            ..cfg
        };
        let s = sample_mcmc(&q, &cfg).unwrap();
        let p1 = s
            .frequencies()
            .iter()
            .find(|(c, _)| c == &vec![1])
            .map(|&(_, f)| f)
            .unwrap_or(0.0);
        let stationary = a / (1.0 + a);
        assert!(
            (p1 - stationary).abs() < 0.005,
            "stationary P(1) = {p1}, analytic {stationary}"
        );
    }

    #[test]
    fn tv_distance_to_boltzmann_is_non_increasing_in_sweeps_on_average() {
        let sweep_ladder = [1usize, 2, 4, 8, 16];
        let num_seeds = 20;
        let samples = 20_000;
        let beta = 0.5;
        let mut avg_tv = vec![0.0f64; sweep_ladder.len()];
        for seed_idx in 0..num_seeds {
            // A fresh 4-variable problem per seed, entries in [-2, 2].
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(777, &[seed_idx]));
            let mut q = QuboProblem::zeros(4).unwrap();
            for i in 0..4 {
                for j in i..4 {
                    q.set_coeff(i, j, rng.gen_range(-2.0..2.0));
                }
            }
            let exact = boltzmann_distribution(&q, beta);
            for (si, &sweeps) in sweep_ladder.iter().enumerate() {
                let cfg = SamplerConfig {
                    beta,
                    num_samples: samples,
                    sweeps,
                    seed: seed::derive(888, &[seed_idx, sweeps as u64]),
                    ..SamplerConfig::default()
                };
                let s = sample_mcmc(&q, &cfg).unwrap();
                avg_tv[si] += tv_distance(&s, &exact) / num_seeds as f64;
            }
        }
        for w in avg_tv.windows(2) {
            assert!(
                w[1] <= w[0] + 0.005,
                "average TV increased along sweep ladder: {avg_tv:?}"
            );
        }
        assert!(
            avg_tv[sweep_ladder.len() - 1] < avg_tv[0],
            "no net improvement: {avg_tv:?}"
        );
    }
}
