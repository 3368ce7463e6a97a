//! Quadratic knapsack instances: random generation, the greedy heuristic,
//! exact oracles, and the relative-error metric.
//!
//! An instance maximizes `x^T P x` subject to `w . x <= c`. The constrained
//! form used by the solver minimizes `-x^T P x`, so objective values are
//! negated profits throughout.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Constraint, ConstrainedProblem, QuboProblem, Sense};

/// Pure enumeration bound for the exact oracle.
pub const ENUMERATION_MAX_ITEMS: usize = 25;
/// Branch-and-bound extends the practical exact range to this size.
pub const EXACT_MAX_ITEMS: usize = 32;

/// A quadratic knapsack instance with a symmetric non-negative integer
/// profit matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QkpInstance {
    n: usize,
    profits: Vec<u32>,
    weights: Vec<u32>,
    capacity: u64,
    density: f64,
    seed: u64,
}

impl QkpInstance {
    pub fn new(
        n: usize,
        profits: Vec<u32>,
        weights: Vec<u32>,
        capacity: u64,
        density: f64,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("item count must be >= 1".into()));
        }
        if profits.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: profits.len(),
            });
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        for i in 0..n {
            if profits[i * n + i] == 0 {
                return Err(Error::InvalidConfig(format!(
                    "diagonal profit P[{i}][{i}] must be >= 1"
                )));
            }
            for j in 0..n {
                if profits[i * n + j] != profits[j * n + i] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        if weights.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig("weights must be positive".into()));
        }
        if capacity == 0 {
            return Err(Error::InvalidConfig("capacity must be positive".into()));
        }
        Ok(QkpInstance {
            n,
            profits,
            weights,
            capacity,
            density,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn profit_entry(&self, i: usize, j: usize) -> u32 {
        self.profits[i * self.n + j]
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Copy with the capacity replaced (e.g. to pin `c` for size studies).
    pub fn with_capacity(mut self, capacity: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("capacity must be positive".into()));
        }
        self.capacity = capacity;
        Ok(self)
    }

    /// Total profit `x^T P x` of a selection.
    pub fn profit(&self, config: &[u8]) -> Result<u64> {
        if config.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: config.len(),
            });
        }
        let mut total = 0u64;
        for i in 0..self.n {
            if config[i] == 0 {
                continue;
            }
            total += u64::from(self.profits[i * self.n + i]);
            for j in i + 1..self.n {
                if config[j] != 0 {
                    total += 2 * u64::from(self.profits[i * self.n + j]);
                }
            }
        }
        Ok(total)
    }

    pub fn weight(&self, config: &[u8]) -> Result<u64> {
        if config.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: config.len(),
            });
        }
        Ok(config
            .iter()
            .zip(self.weights.iter())
            .map(|(&x, &w)| u64::from(x) * u64::from(w))
            .sum())
    }

    pub fn is_feasible(&self, config: &[u8]) -> Result<bool> {
        Ok(self.weight(config)? <= self.capacity)
    }

    /// Minimization form: objective `-x^T P x`, one linear `<=` constraint.
    pub fn to_constrained(&self) -> ConstrainedProblem {
        let mut objective = QuboProblem::zeros(self.n).expect("n >= 1");
        for i in 0..self.n {
            for j in i..self.n {
                let p = self.profits[i * self.n + j];
                if p != 0 {
                    objective.set_coeff(i, j, -f64::from(p));
                }
            }
        }
        let weights: Vec<f64> = self.weights.iter().map(|&w| f64::from(w)).collect();
        let constraint = Constraint {
            form: QuboProblem::from_linear(&weights).expect("n >= 1"),
            bound: self.capacity as f64,
            sense: Sense::LessEqual,
        };
        ConstrainedProblem::new(objective, vec![constraint]).expect("one constraint")
    }

    /// Profit of item `i` against the selection `selected` (diagonal term
    /// plus both symmetric couplings to selected items, excluding `i`).
    fn contribution(&self, i: usize, selected: &[u8]) -> u64 {
        let mut total = u64::from(self.profits[i * self.n + i]);
        for (j, &s) in selected.iter().enumerate() {
            if s != 0 && j != i {
                total += 2 * u64::from(self.profits[i * self.n + j]);
            }
        }
        total
    }
}

/// Generate a random instance: diagonal profits uniform in `[1, 100]`, each
/// off-diagonal pair nonzero with probability `delta` (value uniform in
/// `[1, 100]`, mirrored), weights uniform in `[1, 50]`, capacity uniform in
/// `[50, sum(w)]`. Deterministic per seed.
pub fn generate(n: usize, delta: f64, seed: u64) -> Result<QkpInstance> {
    if n == 0 {
        return Err(Error::InvalidConfig("item count must be >= 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "density must be in (0, 1], got {delta}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profits = vec![0u32; n * n];
    for i in 0..n {
        profits[i * n + i] = rng.gen_range(1..=100);
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < delta {
                let v = rng.gen_range(1..=100);
                profits[i * n + j] = v;
                profits[j * n + i] = v;
            }
        }
    }
    let weights: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=50)).collect();
    let total_weight: u64 = weights.iter().map(|&w| u64::from(w)).sum();
    let low = 50u64.min(total_weight);
    if low < 50 {
        log::warn!(
            "sum of weights {total_weight} is below 50; capacity drawn from [{low}, {total_weight}]"
        );
    }
    let capacity = rng.gen_range(low..=total_weight);
    QkpInstance::new(n, profits, weights, capacity, delta, seed)
}

/// Greedy heuristic: start from all items selected; while over capacity,
/// remove the item with the smallest contribution-to-weight ratio
/// (contribution recomputed against the current selection); then scan the
/// removed items in decreasing ratio order and add back any that fit.
/// Ties break toward the lower index. Always returns a feasible selection.
pub fn greedy(instance: &QkpInstance) -> (Vec<u8>, u64) {
    let n = instance.n();
    let mut selected = vec![1u8; n];
    let mut weight: u64 = instance.weights().iter().map(|&w| u64::from(w)).sum();

    while weight > instance.capacity() {
        // Smallest ratio contribution/weight, compared exactly via
        // cross-multiplication.
        let mut worst: Option<(usize, u64, u64)> = None;
        for i in 0..n {
            if selected[i] == 0 {
                continue;
            }
            let contrib = instance.contribution(i, &selected);
            let w = u64::from(instance.weights()[i]);
            let better = match worst {
                None => true,
                Some((_, bc, bw)) => (contrib as u128) * (bw as u128) < (bc as u128) * (w as u128),
            };
            if better {
                worst = Some((i, contrib, w));
            }
        }
        match worst {
            Some((i, _, w)) => {
                selected[i] = 0;
                weight -= w;
            }
            None => break, // nothing selected; capacity smaller than any item
        }
    }

    // Fill phase: ratios against the post-removal selection, one pass in
    // decreasing order.
    let mut candidates: Vec<(usize, u64, u64)> = (0..n)
        .filter(|&i| selected[i] == 0)
        .map(|i| {
            (
                i,
                instance.contribution(i, &selected),
                u64::from(instance.weights()[i]),
            )
        })
        .collect();
    candidates.sort_by(|a, b| {
        let lhs = (b.1 as u128) * (a.2 as u128); // b.contrib / b.w vs a.contrib / a.w
        let rhs = (a.1 as u128) * (b.2 as u128);
        lhs.cmp(&rhs).then(a.0.cmp(&b.0))
    });
    for (i, _, w) in candidates {
        if weight + w <= instance.capacity() {
            selected[i] = 1;
            weight += w;
        }
    }

    let profit = instance.profit(&selected).expect("dimensions match");
    (selected, profit)
}

/// Certified optimum of an instance, or `OracleUnavailable` beyond the
/// branch-and-bound range. Profit ties break toward the lexicographically
/// smallest selection.
pub fn exact_solve(instance: &QkpInstance) -> Result<(Vec<u8>, u64)> {
    let n = instance.n();
    if n <= ENUMERATION_MAX_ITEMS {
        Ok(solve_enumeration(instance))
    } else if n <= EXACT_MAX_ITEMS {
        Ok(solve_branch_bound(instance))
    } else {
        Err(Error::OracleUnavailable { n })
    }
}

/// Exhaustive Gray-code enumeration. Exact for `n <= 25`.
pub fn solve_enumeration(instance: &QkpInstance) -> (Vec<u8>, u64) {
    let n = instance.n();
    assert!(n <= ENUMERATION_MAX_ITEMS);
    let mut config = vec![0u8; n];
    let mut profit: u64 = 0;
    let mut weight: u64 = 0;
    let mut best_config = vec![0u8; n];
    let mut best_profit: u64 = 0; // empty selection is always feasible
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        let contrib = instance.contribution(i, &config);
        let w = u64::from(instance.weights()[i]);
        if config[i] == 0 {
            config[i] = 1;
            profit += contrib;
            weight += w;
        } else {
            config[i] = 0;
            profit -= contrib;
            weight -= w;
        }
        if weight <= instance.capacity()
            && (profit > best_profit || (profit == best_profit && lex_less(&config, &best_config)))
        {
            best_profit = profit;
            best_config.copy_from_slice(&config);
        }
    }
    (best_config, best_profit)
}

fn lex_less(a: &[u8], b: &[u8]) -> bool {
    a < b
}

/// Depth-first branch and bound in index order, zero branch first, pruning
/// on a fractional-knapsack relaxation of optimistic marginal profits.
/// Visiting leaves in lexicographic order and replacing the incumbent only
/// on strict improvement makes the result the lexicographically smallest
/// optimum, matching [`solve_enumeration`].
pub fn solve_branch_bound(instance: &QkpInstance) -> (Vec<u8>, u64) {
    let n = instance.n();
    // Feasible warm start for pruning only; it never becomes the incumbent.
    let (_, warm_profit) = greedy(instance);
    let mut search = BranchBound {
        instance,
        config: vec![0u8; n],
        incumbent: None,
        warm_profit,
    };
    search.descend(0, 0, 0);
    // The warm-start leaf always records, so the incumbent is never empty.
    search.incumbent.unwrap_or((vec![0u8; n], 0))
}

struct BranchBound<'a> {
    instance: &'a QkpInstance,
    config: Vec<u8>,
    incumbent: Option<(Vec<u8>, u64)>,
    warm_profit: u64,
}

impl BranchBound<'_> {
    fn descend(&mut self, depth: usize, profit: u64, weight: u64) {
        let n = self.instance.n();
        if depth == n {
            let record = match &self.incumbent {
                None => profit >= self.warm_profit,
                Some((_, best)) => profit > *best,
            };
            if record {
                self.incumbent = Some((self.config.clone(), profit));
            }
            return;
        }
        let bound = profit + self.completion_bound(depth, weight);
        let prune = match &self.incumbent {
            None => bound < self.warm_profit,
            Some((_, best)) => bound <= *best,
        };
        if prune {
            return;
        }
        // Zero branch first: leaves are visited in lexicographic order.
        self.config[depth] = 0;
        self.descend(depth + 1, profit, weight);
        let w = u64::from(self.instance.weights()[depth]);
        if weight + w <= self.instance.capacity() {
            self.config[depth] = 1;
            let contrib = self.instance.contribution(depth, &self.config);
            self.descend(depth + 1, profit + contrib, weight + w);
        }
        self.config[depth] = 0;
    }

    /// Admissible bound on the profit any completion over items
    /// `depth..n` can add: optimistic densities (each undecided pair
    /// counted once per endpoint) into a fractional knapsack.
    fn completion_bound(&self, depth: usize, weight: u64) -> u64 {
        let n = self.instance.n();
        let remaining = self.instance.capacity() - weight;
        let mut items: Vec<(f64, u64, f64)> = Vec::with_capacity(n - depth); // (density, weight, optimistic profit)
        for i in depth..n {
            let mut optimistic = self.instance.contribution(i, &self.config) as f64;
            for j in depth..n {
                if j != i {
                    optimistic += f64::from(self.instance.profit_entry(i, j));
                }
            }
            let w = u64::from(self.instance.weights()[i]);
            items.push((optimistic / w as f64, w, optimistic));
        }
        items.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut cap = remaining as f64;
        let mut bound = 0.0;
        for (density, w, optimistic) in items {
            let w = w as f64;
            if w <= cap {
                bound += optimistic;
                cap -= w;
            } else {
                bound += density * cap;
                break;
            }
        }
        bound.ceil() as u64
    }
}

/// `|value - optimum| / |optimum|`. The caller maps "no feasible solution"
/// to a relative error of 1 before calling.
pub fn relative_error(value: f64, optimum: f64) -> Result<f64> {
    if optimum == 0.0 {
        return Err(Error::InvalidConfig(
            "relative error undefined for a zero optimum".into(),
        ));
    }
    Ok((value - optimum).abs() / optimum.abs())
}

// Serde representation: upper-triangular profit triplets only.
#[derive(Serialize, Deserialize)]
struct QkpJson {
    n: usize,
    delta: f64,
    seed: u64,
    profits: Vec<(usize, usize, u32)>,
    weights: Vec<u32>,
    capacity: u64,
}

impl Serialize for QkpInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut profits = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                let p = self.profits[i * self.n + j];
                if p != 0 {
                    profits.push((i, j, p));
                }
            }
        }
        QkpJson {
            n: self.n,
            delta: self.density,
            seed: self.seed,
            profits,
            weights: self.weights.clone(),
            capacity: self.capacity,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QkpInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = QkpJson::deserialize(deserializer)?;
        let mut profits = vec![0u32; raw.n * raw.n];
        for (i, j, p) in raw.profits {
            if i > j || j >= raw.n {
                return Err(serde::de::Error::custom(format!(
                    "profit triplet ({i}, {j}) out of range for n={}",
                    raw.n
                )));
            }
            profits[i * raw.n + j] = p;
            profits[j * raw.n + i] = p;
        }
        QkpInstance::new(raw.n, profits, raw.weights, raw.capacity, raw.delta, raw.seed)
            .map_err(serde::de::Error::custom)
    }
}
