//! Conventional slack-variable penalty QUBO for inequality constraints.
//!
//! Each constraint `F_k(x) <= C_k` becomes an equality `F_k(x) + z_k = C_k`
//! with an auxiliary integer `z_k in [0, C_k]` encoded in binary, then a
//! squared penalty `lambda (F_k(x) + z_k - C_k)^2`. The penalty couples every
//! pair of touched variables, which is the size cost the multiplier
//! relaxation avoids; `count_comparison` measures exactly that.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_relaxed_qubo, ConstrainedProblem, QuboProblem, Sense};
use crate::qkp::QkpInstance;

/// Binary slack encoding: `M_k = ceil(log2(C_k + 1))` bits per constraint,
/// power-of-two coefficients with the last one clipped so the encoded range
/// is exactly `[0, C_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackEncoding {
    pub bits_per_constraint: Vec<usize>,
    pub bit_coefficients: Vec<Vec<u64>>,
    pub penalty_weight: f64,
}

/// Slack-penalty QUBO over the original variables followed by the slack
/// bits of each constraint in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackQubo {
    pub qubo: QuboProblem,
    pub encoding: SlackEncoding,
}

/// Bit count and coefficients covering `[0, bound]` exactly.
pub fn slack_bits(bound: u64) -> (usize, Vec<u64>) {
    if bound == 0 {
        return (0, Vec::new());
    }
    let bits = 64 - bound.leading_zeros() as usize; // ceil(log2(bound + 1))
    let mut coefficients: Vec<u64> = (0..bits - 1).map(|m| 1u64 << m).collect();
    coefficients.push(bound - ((1u64 << (bits - 1)) - 1));
    (bits, coefficients)
}

/// Penalty QUBO `f_0(x) + lambda sum_k (F_k(x) + z_k(b) - C_k)^2` over
/// `n + sum_k M_k` binary variables.
///
/// Supports integer-valued linear `<=` constraints only; quadratic
/// constraint forms are rejected.
pub fn build_slack_qubo(problem: &ConstrainedProblem, penalty_weight: f64) -> Result<SlackQubo> {
    if !(penalty_weight > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "penalty weight must be positive, got {penalty_weight}"
        )));
    }
    let n = problem.n();

    // Validate and collect the linear coefficient vector of each constraint.
    let mut linear_forms: Vec<Vec<f64>> = Vec::with_capacity(problem.num_constraints());
    let mut encodings: Vec<(usize, Vec<u64>)> = Vec::with_capacity(problem.num_constraints());
    for (k, c) in problem.constraints().iter().enumerate() {
        if c.sense != Sense::LessEqual {
            return Err(Error::UnsupportedConstraint(format!(
                "constraint {k} is an equality; the slack encoding handles <= only"
            )));
        }
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && c.form.coeff(i, j) != 0.0 {
                    return Err(Error::UnsupportedConstraint(format!(
                        "constraint {k} has a quadratic term at ({i}, {j})"
                    )));
                }
            }
            let a = c.form.coeff(i, i);
            if a.fract() != 0.0 {
                return Err(Error::UnsupportedConstraint(format!(
                    "constraint {k} coefficient {a} is not integer-valued"
                )));
            }
            coeffs.push(a);
        }
        if c.bound < 0.0 || c.bound.fract() != 0.0 {
            return Err(Error::UnsupportedConstraint(format!(
                "constraint {k} bound {} is not a non-negative integer",
                c.bound
            )));
        }
        linear_forms.push(coeffs);
        encodings.push(slack_bits(c.bound as u64));
    }

    let total_slack: usize = encodings.iter().map(|(m, _)| *m).sum();
    let total = n + total_slack;
    let mut qubo = QuboProblem::zeros(total)?;

    // Objective terms over the original variables.
    for i in 0..n {
        for j in i..n {
            let v = problem.objective().coeff(i, j);
            if v != 0.0 {
                qubo.set_coeff(i, j, v);
            }
        }
    }
    qubo.set_offset(problem.objective().offset());

    // Penalty expansion per constraint: with g = sum_i a_i x_i
    // + sum_m d_m b_m - C and binary idempotence, g^2 contributes
    // lambda * (v_p^2 - 2 C v_p) on each variable's diagonal,
    // lambda * v_p v_q on every ordered pair, and lambda * C^2 to the offset.
    let mut slack_base = n;
    for (k, (coeffs, (bits, ds))) in linear_forms.iter().zip(encodings.iter()).enumerate() {
        let bound = problem.constraints()[k].bound;
        let mut vars: Vec<(usize, f64)> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        for (m, &d) in ds.iter().enumerate() {
            vars.push((slack_base + m, d as f64));
        }
        for (idx, &(p, vp)) in vars.iter().enumerate() {
            qubo.add_coeff(p, p, penalty_weight * (vp * vp - 2.0 * bound * vp));
            for &(q, vq) in vars.iter().skip(idx + 1) {
                qubo.add_coeff(p, q, penalty_weight * vp * vq);
            }
        }
        qubo.set_offset(qubo.offset() + penalty_weight * bound * bound);
        slack_base += bits;
    }

    Ok(SlackQubo {
        qubo,
        encoding: SlackEncoding {
            bits_per_constraint: encodings.iter().map(|(m, _)| *m).collect(),
            bit_coefficients: encodings.into_iter().map(|(_, d)| d).collect(),
            penalty_weight,
        },
    })
}

/// Default penalty weight for a knapsack instance: one more than the
/// largest diagonal profit. Term counting is insensitive to the choice.
pub fn default_penalty_weight(instance: &QkpInstance) -> f64 {
    let max_diag = (0..instance.n())
        .map(|i| instance.profit_entry(i, i))
        .max()
        .unwrap_or(0);
    1.0 + f64::from(max_diag)
}

/// Quadratic-term counts of the multiplier relaxation versus the
/// slack-variable penalty on the same instance.
pub fn count_comparison(instance: &QkpInstance) -> Result<(usize, usize)> {
    let problem = instance.to_constrained();
    // Any positive multiplier: the constraint is linear, so the relaxed
    // off-diagonal pattern is the objective's.
    let relaxed = build_relaxed_qubo(&problem, &[1.0])?;
    let om_terms = relaxed.qubo.count_quadratic_terms();
    let slack = build_slack_qubo(&problem, default_penalty_weight(instance))?;
    let slack_terms = slack.qubo.count_quadratic_terms();
    Ok((om_terms, slack_terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{all_configs, Constraint};
    use crate::qkp;

    #[test]
    fn slack_bits_cover_small_bounds_exactly() {
        assert_eq!(slack_bits(3), (2, vec![1, 2]));
        assert_eq!(slack_bits(50), (6, vec![1, 2, 4, 8, 16, 19]));
        assert_eq!(slack_bits(1), (1, vec![1]));
        assert_eq!(slack_bits(0), (0, vec![]));
    }

    #[test]
    fn slack_bits_reach_every_value_up_to_the_bound() {
        for bound in 1u64..=70 {
            let (bits, ds) = slack_bits(bound);
            let mut reachable = vec![false; bound as usize + 1];
            for mask in 0u64..(1 << bits) {
                let z: u64 = ds
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| mask >> m & 1 == 1)
                    .map(|(_, &d)| d)
                    .sum();
                assert!(z <= bound, "bound {bound}: overshoot {z}");
                reachable[z as usize] = true;
            }
            assert!(reachable.iter().all(|&r| r), "bound {bound} not covered");
        }
    }

    fn toy_problem() -> ConstrainedProblem {
        // maximize x0 + 3 x1 + 2 x2 (as minimization), 2 x0 + x1 + 3 x2 <= 3
        let objective = QuboProblem::from_linear(&[-1.0, -3.0, -2.0]).unwrap();
        let constraint = Constraint {
            form: QuboProblem::from_linear(&[2.0, 1.0, 3.0]).unwrap(),
            bound: 3.0,
            sense: Sense::LessEqual,
        };
        ConstrainedProblem::new(objective, vec![constraint]).unwrap()
    }

    #[test]
    fn slack_qubo_minimizer_is_feasible_optimum_for_large_penalty() {
        let problem = toy_problem();
        // lambda above the largest profit swing of any single violation.
        let slack = build_slack_qubo(&problem, 7.0).unwrap();
        let total = slack.qubo.n();
        assert_eq!(total, 3 + 2);
        let mut best: Option<(Vec<u8>, f64)> = None;
        for full in all_configs(total) {
            let e = slack.qubo.energy(&full).unwrap();
            if best.as_ref().map_or(true, |(_, b)| e < *b) {
                best = Some((full, e));
            }
        }
        let (full, energy) = best.unwrap();
        let x = &full[..3];
        // Feasible optimum of the original problem by direct scan.
        let mut expected: Option<(Vec<u8>, f64)> = None;
        for x in all_configs(3) {
            if problem.is_feasible(&x).unwrap() {
                let v = problem.objective().energy(&x).unwrap();
                if expected.as_ref().map_or(true, |(_, b)| v < *b) {
                    expected = Some((x, v));
                }
            }
        }
        let (x_star, v_star) = expected.unwrap();
        assert_eq!(x, x_star.as_slice());
        // At the minimizer the slack bits absorb the residual, so the
        // penalty term vanishes and the energy equals the objective.
        assert!((energy - v_star).abs() <= 1e-9, "energy {energy} vs {v_star}");
    }

    #[test]
    fn slack_qubo_rejects_quadratic_constraints() {
        let mut form = QuboProblem::zeros(2).unwrap();
        form.set_pair_coefficient(0, 1, 1.0);
        let problem = ConstrainedProblem::new(
            QuboProblem::zeros(2).unwrap(),
            vec![Constraint {
                form,
                bound: 1.0,
                sense: Sense::LessEqual,
            }],
        )
        .unwrap();
        assert!(matches!(
            build_slack_qubo(&problem, 1.0),
            Err(Error::UnsupportedConstraint(_))
        ));
    }

    #[test]
    fn slack_qubo_rejects_equality_constraints() {
        let problem = ConstrainedProblem::new(
            QuboProblem::zeros(2).unwrap(),
            vec![Constraint {
                form: QuboProblem::from_linear(&[1.0, 1.0]).unwrap(),
                bound: 1.0,
                sense: Sense::Equal,
            }],
        )
        .unwrap();
        assert!(matches!(
            build_slack_qubo(&problem, 1.0),
            Err(Error::UnsupportedConstraint(_))
        ));
    }

    #[test]
    fn knapsack_slack_formulation_has_expected_variable_and_term_counts() {
        let instance = qkp::generate(8, 1.0, 123).unwrap().with_capacity(50).unwrap();
        let slack = build_slack_qubo(&instance.to_constrained(), default_penalty_weight(&instance))
            .unwrap();
        assert_eq!(slack.qubo.n(), 8 + 6);
        assert_eq!(slack.qubo.count_quadratic_terms(), 91); // C(14, 2)
        let (om, sl) = count_comparison(&instance.with_capacity(50).unwrap()).unwrap();
        assert_eq!(om, 28); // C(8, 2) at full density
        assert_eq!(sl, 91);
    }

    #[test]
    fn slack_terms_dominate_om_terms_and_ignore_density() {
        let mut sparse_om_sum = 0.0;
        for seed in 0..30u64 {
            let dense = qkp::generate(8, 1.0, 600 + seed)
                .unwrap()
                .with_capacity(50)
                .unwrap();
            let sparse = qkp::generate(8, 0.2, 600 + seed)
                .unwrap()
                .with_capacity(50)
                .unwrap();
            let (om_dense, slack_dense) = count_comparison(&dense).unwrap();
            let (om_sparse, slack_sparse) = count_comparison(&sparse).unwrap();
            assert!(slack_dense >= om_dense);
            assert!(slack_sparse >= om_sparse);
            assert_eq!(slack_dense, slack_sparse, "slack count depends on density");
            sparse_om_sum += om_sparse as f64;
        }
        let mean_fraction = sparse_om_sum / 30.0 / 28.0;
        assert!(
            (mean_fraction - 0.2).abs() < 0.06,
            "mean sparse fraction {mean_fraction}"
        );
    }
}
