//! Simulated quantum annealing: path-integral Monte Carlo over Trotter
//! replicas of the Ising form, with a linearly decaying transverse field.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::model::{IsingProblem, QuboProblem};
use crate::samplers::{SampleSet, SamplerConfig};
use crate::seed;

const RUN_STREAM: u64 = 0x5351;

/// Draw `S` configurations from independent SQA runs.
///
/// Each run holds `trotter` replicas of the Ising form of `problem`,
/// coupled along the imaginary-time ring by the ferromagnetic strength
/// `J_perp(gamma) = -(P / (2 beta)) * ln tanh(beta gamma / P)`. Metropolis
/// updates are applied at effective inverse temperature `beta / P` while
/// `gamma` ramps linearly from `gamma_start` to `gamma_end` over the sweep
/// budget. One configuration is read out per run from a uniformly random
/// slice after the final sweep (or the lowest-energy slice when
/// `best_slice_readout` is set). Reported energies are classical QUBO
/// energies; the inter-slice coupling never leaks into them.
pub fn sample_sqa(problem: &QuboProblem, config: &SamplerConfig) -> Result<SampleSet> {
    config.validate()?;
    let ising = problem.to_ising();
    let states: Vec<Vec<u8>> = (0..config.num_samples)
        .into_par_iter()
        .map(|run| anneal_one(&ising, config, run as u64))
        .collect();
    SampleSet::from_states(problem, states)
}

fn anneal_one(ising: &IsingProblem, config: &SamplerConfig, run: u64) -> Vec<u8> {
    let n = ising.n();
    let slices = config.trotter;
    let beta_eff = config.beta / slices as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, &[RUN_STREAM, run]));
    let mut spins: Vec<Vec<i8>> = (0..slices)
        .map(|_| (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
        .collect();

    for sweep in 0..config.sweeps {
        let gamma = gamma_at(config, sweep);
        let j_perp = inter_slice_coupling(config.beta, slices, gamma);
        for p in 0..slices {
            let (prev, next) = (
                (p + slices - 1) % slices,
                (p + 1) % slices,
            );
            for site in 0..n {
                let i = if config.random_sweep_order {
                    rng.gen_range(0..n)
                } else {
                    site
                };
                let s = f64::from(spins[p][i]);
                let mut local = ising.field(i);
                let row = ising.coupling_row(i);
                for (j, &sj) in spins[p].iter().enumerate() {
                    if j != i {
                        local += row[j] * f64::from(sj);
                    }
                }
                let delta_classical = -2.0 * s * local;
                // Self-coupling around a length-1 ring is constant.
                let delta_perp = if slices == 1 {
                    0.0
                } else {
                    2.0 * j_perp * s * f64::from(spins[prev][i] + spins[next][i])
                };
                let delta = delta_classical + delta_perp;
                if delta <= 0.0 || rng.gen::<f64>() < (-beta_eff * delta).exp() {
                    spins[p][i] = -spins[p][i];
                }
            }
        }
    }

    let slice = if config.best_slice_readout {
        (0..slices)
            .min_by(|&a, &b| {
                let ea = ising.energy(&spins[a]).expect("slice dims");
                let eb = ising.energy(&spins[b]).expect("slice dims");
                ea.total_cmp(&eb)
            })
            .unwrap_or(0)
    } else {
        rng.gen_range(0..slices)
    };
    spins[slice].iter().map(|&s| u8::from(s > 0)).collect()
}

fn gamma_at(config: &SamplerConfig, sweep: usize) -> f64 {
    if config.sweeps <= 1 {
        return config.gamma_end;
    }
    let t = sweep as f64 / (config.sweeps - 1) as f64;
    config.gamma_start + (config.gamma_end - config.gamma_start) * t
}

/// `-(P / (2 beta)) * ln tanh(beta gamma / P)`, positive for any
/// positive argument.
fn inter_slice_coupling(beta: f64, slices: usize, gamma: f64) -> f64 {
    let p = slices as f64;
    -(p / (2.0 * beta)) * (beta * gamma / p).tanh().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::samplers::exact::{boltzmann_distribution, tv_distance};

    #[test]
    fn coupling_is_positive_and_grows_as_gamma_shrinks() {
        let weak = inter_slice_coupling(0.1, 2, 10.0);
        let strong = inter_slice_coupling(0.1, 2, 0.1);
        assert!(weak > 0.0);
        assert!(strong > weak);
    }

    #[test]
    fn annealed_single_variable_concentrates_on_minimum() {
        // Q = [[-1]]: minimum at x = 1.
        let q = QuboProblem::from_matrix(&[vec![-1.0]]).unwrap();
        let cfg = SamplerConfig {
            beta: 5.0,
            num_samples: 400,
            sweeps: 60,
            trotter: 2,
            gamma_start: 4.0,
            gamma_end: 0.01,
            seed: 3,
            ..SamplerConfig::default()
        };
        let s = sample_sqa(&q, &cfg).unwrap();
        let p1 = s
            .frequencies()
            .iter()
            .find(|(c, _)| c == &vec![1])
            .map(|&(_, f)| f)
            .unwrap_or(0.0);
        assert!(p1 > 0.95, "P(x=1) = {p1}");
    }

    #[test]
    fn same_seed_same_samples() {
        let mut q = QuboProblem::zeros(4).unwrap();
        q.set_coeff(1, 3, -0.8);
        q.set_coeff(0, 0, 0.3);
        let cfg = SamplerConfig {
            num_samples: 200,
            sweeps: 30,
            seed: 55,
            ..SamplerConfig::default()
        };
        let a = sample_sqa(&q, &cfg).unwrap();
        let b = sample_sqa(&q, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_zero_trotter() {
        let q = QuboProblem::zeros(2).unwrap();
        let cfg = SamplerConfig {
            trotter: 0,
            ..SamplerConfig::default()
        };
        assert!(matches!(
            sample_sqa(&q, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn recorded_energies_are_classical_qubo_energies() {
        let mut q = QuboProblem::zeros(4).unwrap();
        q.set_coeff(0, 1, 1.2);
        q.set_coeff(2, 2, -0.6);
        q.set_offset(0.5);
        let cfg = SamplerConfig {
            num_samples: 300,
            sweeps: 10,
            trotter: 3,
            seed: 7,
            ..SamplerConfig::default()
        };
        let s = sample_sqa(&q, &cfg).unwrap();
        assert_eq!(s.total_weight(), 300);
        for (c, &e) in s.configs.iter().zip(s.energies.iter()) {
            assert!(c.iter().all(|&b| b <= 1));
            assert!((q.energy(c).unwrap() - e).abs() <= 1e-9);
        }
    }

    #[test]
    fn approximates_boltzmann_on_small_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut q = QuboProblem::zeros(4).unwrap();
        for i in 0..4 {
            for j in i..4 {
                q.set_coeff(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let beta = 0.1;
        let cfg = SamplerConfig {
            beta,
            num_samples: 30_000,
            sweeps: 100,
            trotter: 2,
            gamma_start: 10.0,
            gamma_end: 0.1,
            seed: 19,
            ..SamplerConfig::default()
        };
        let s = sample_sqa(&q, &cfg).unwrap();
        let tv = tv_distance(&s, &boltzmann_distribution(&q, beta));
        assert!(tv < 0.05, "TV = {tv}");
    }
}
