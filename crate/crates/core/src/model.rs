//! Binary quadratic models: QUBO and Ising forms, constrained problems,
//! and the multiplier-relaxed objective.
//!
//! Energies follow the double-sum convention `E(x) = sum_ij Q[i][j] x_i x_j`
//! over a symmetric matrix `Q`, so an off-diagonal pair contributes twice.
//! Every model carries an explicit constant offset and reported energies
//! always include it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadratic model over binary variables `x in {0,1}^n`.
///
/// The diagonal holds linear terms, off-diagonal entries hold pairwise
/// couplings. The matrix is kept symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n: usize,
    coeffs: Vec<f64>,
    offset: f64,
}

impl QuboProblem {
    /// All-zero model with `n` variables.
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("variable count must be >= 1".into()));
        }
        Ok(QuboProblem {
            n,
            coeffs: vec![0.0; n * n],
            offset: 0.0,
        })
    }

    /// Build from a full square matrix; rejects asymmetric input.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut q = QuboProblem::zeros(n)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if rows[j][i] != v {
                    return Err(Error::NotSymmetric { i, j });
                }
                q.coeffs[i * n + j] = v;
            }
        }
        Ok(q)
    }

    /// Purely linear model: `coefficients` land on the diagonal.
    pub fn from_linear(coefficients: &[f64]) -> Result<Self> {
        let mut q = QuboProblem::zeros(coefficients.len())?;
        for (i, &c) in coefficients.iter().enumerate() {
            q.coeffs[i * q.n + i] = c;
        }
        Ok(q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * self.n + j]
    }

    /// Set `Q[i][j]` and its mirror entry.
    pub fn set_coeff(&mut self, i: usize, j: usize, value: f64) {
        self.coeffs[i * self.n + j] = value;
        self.coeffs[j * self.n + i] = value;
    }

    /// Add to `Q[i][j]` and its mirror entry.
    pub fn add_coeff(&mut self, i: usize, j: usize, value: f64) {
        self.coeffs[i * self.n + j] += value;
        if i != j {
            self.coeffs[j * self.n + i] += value;
        }
    }

    /// Set the total coefficient of the product `x_i x_j` (`i != j`), split
    /// symmetrically over the two mirror entries.
    pub fn set_pair_coefficient(&mut self, i: usize, j: usize, total: f64) {
        debug_assert_ne!(i, j);
        self.set_coeff(i, j, total / 2.0);
    }

    /// Row `i` of the coefficient matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.n..(i + 1) * self.n]
    }

    /// Accumulate `factor * other` into `self` (matrix and offset).
    pub fn add_scaled(&mut self, other: &QuboProblem, factor: f64) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += factor * b;
        }
        self.offset += factor * other.offset;
        Ok(())
    }

    /// Energy `sum_ij Q[i][j] x_i x_j + offset` of a binary configuration.
    pub fn energy(&self, config: &[u8]) -> Result<f64> {
        if config.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: config.len(),
            });
        }
        debug_assert!(config.iter().all(|&b| b <= 1));
        let mut e = self.offset;
        for i in 0..self.n {
            if config[i] == 0 {
                continue;
            }
            let row = self.row(i);
            e += row[i];
            for j in i + 1..self.n {
                if config[j] != 0 {
                    e += 2.0 * row[j];
                }
            }
        }
        Ok(e)
    }

    /// Energy change of flipping variable `i` in `config`.
    ///
    /// Does not validate inputs; this is the sampler hot path.
    #[inline]
    pub fn flip_delta(&self, config: &[u8], i: usize) -> f64 {
        let row = self.row(i);
        let mut local = 0.0;
        for (j, &xj) in config.iter().enumerate() {
            if xj != 0 && j != i {
                local += row[j];
            }
        }
        let sign = 1.0 - 2.0 * f64::from(config[i]);
        sign * (row[i] + 2.0 * local)
    }

    /// Number of unordered pairs `{i, j}`, `i != j`, with `Q[i][j] != 0`.
    pub fn count_quadratic_terms(&self) -> usize {
        let mut count = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.coeffs[i * self.n + j] != 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Upper-triangular nonzero triplets `(i, j, value)` with `i <= j`.
    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.coeffs[i * self.n + j];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        t
    }

    /// Rebuild from upper-triangular triplets; mirror entries are filled in.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], offset: f64) -> Result<Self> {
        let mut q = QuboProblem::zeros(n)?;
        q.offset = offset;
        for &(i, j, v) in triplets {
            if i > j || j >= n {
                return Err(Error::InvalidConfig(format!(
                    "triplet ({i}, {j}) out of range for n={n} (need i <= j < n)"
                )));
            }
            q.set_coeff(i, j, v);
        }
        Ok(q)
    }

    /// Ising form via `s_i = 2 x_i - 1`; energies are preserved exactly.
    pub fn to_ising(&self) -> IsingProblem {
        let n = self.n;
        let mut couplings = vec![0.0; n * n];
        let mut fields = vec![0.0; n];
        let mut offset = self.offset;
        for i in 0..n {
            let row = self.row(i);
            fields[i] = 0.5 * row.iter().sum::<f64>();
            offset += 0.25 * row.iter().sum::<f64>() + 0.25 * row[i];
            for j in i + 1..n {
                couplings[i * n + j] = 0.5 * row[j];
                couplings[j * n + i] = 0.5 * row[j];
            }
        }
        IsingProblem {
            n,
            couplings,
            fields,
            offset,
        }
    }
}

/// Ising model `E(s) = sum_{i<j} J[i][j] s_i s_j + sum_i h_i s_i + offset`
/// over spins `s in {-1,+1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n: usize,
    couplings: Vec<f64>,
    fields: Vec<f64>,
    offset: f64,
}

impl IsingProblem {
    pub fn new(couplings: &[Vec<f64>], fields: &[f64], offset: f64) -> Result<Self> {
        let n = fields.len();
        if couplings.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: couplings.len(),
            });
        }
        let mut flat = vec![0.0; n * n];
        for (i, row) in couplings.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j && v != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "Ising coupling diagonal must be zero (J[{i}][{i}] = {v})"
                    )));
                }
                if couplings[j][i] != v {
                    return Err(Error::NotSymmetric { i, j });
                }
                flat[i * n + j] = v;
            }
        }
        Ok(IsingProblem {
            n,
            couplings: flat,
            fields: fields.to_vec(),
            offset,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    pub fn field(&self, i: usize) -> f64 {
        self.fields[i]
    }

    pub fn coupling_row(&self, i: usize) -> &[f64] {
        &self.couplings[i * self.n..(i + 1) * self.n]
    }

    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: spins.len(),
            });
        }
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        let mut e = self.offset;
        for i in 0..self.n {
            let si = f64::from(spins[i]);
            e += self.fields[i] * si;
            let row = self.coupling_row(i);
            for j in i + 1..self.n {
                e += row[j] * si * f64::from(spins[j]);
            }
        }
        Ok(e)
    }

    /// QUBO form via `x_i = (s_i + 1) / 2`; inverse of [`QuboProblem::to_ising`].
    pub fn to_qubo(&self) -> QuboProblem {
        let n = self.n;
        let mut q = QuboProblem {
            n,
            coeffs: vec![0.0; n * n],
            offset: self.offset,
        };
        for i in 0..n {
            let row = self.coupling_row(i);
            let row_sum: f64 = row.iter().sum();
            q.coeffs[i * n + i] = 2.0 * self.fields[i] - 2.0 * row_sum;
            q.offset += 0.5 * row_sum - self.fields[i];
            for j in i + 1..n {
                q.coeffs[i * n + j] = 2.0 * row[j];
                q.coeffs[j * n + i] = 2.0 * row[j];
            }
        }
        q
    }
}

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "le")]
    LessEqual,
    #[serde(rename = "eq")]
    Equal,
}

/// One constraint `F(x) <= C` or `F(x) = C`, with `F` in QUBO shape
/// (diagonal = linear part), so quadratic constraints need no second
/// representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub form: QuboProblem,
    pub bound: f64,
    pub sense: Sense,
}

/// Minimization objective plus `K >= 1` constraints over the same variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedProblem {
    objective: QuboProblem,
    constraints: Vec<Constraint>,
}

/// Tolerance for feasibility checks on real-valued constraint functions.
pub const FEASIBILITY_TOL: f64 = 1e-9;

impl ConstrainedProblem {
    pub fn new(objective: QuboProblem, constraints: Vec<Constraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidConfig(
                "a constrained problem needs at least one constraint".into(),
            ));
        }
        for c in &constraints {
            if c.form.n() != objective.n() {
                return Err(Error::DimensionMismatch {
                    expected: objective.n(),
                    got: c.form.n(),
                });
            }
        }
        Ok(ConstrainedProblem {
            objective,
            constraints,
        })
    }

    pub fn n(&self) -> usize {
        self.objective.n()
    }

    pub fn objective(&self) -> &QuboProblem {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.bound).collect()
    }

    pub fn senses(&self) -> Vec<Sense> {
        self.constraints.iter().map(|c| c.sense).collect()
    }

    pub fn constraint_values(&self, config: &[u8]) -> Result<Vec<f64>> {
        self.constraints
            .iter()
            .map(|c| c.form.energy(config))
            .collect()
    }

    pub fn is_feasible(&self, config: &[u8]) -> Result<bool> {
        for c in &self.constraints {
            let v = c.form.energy(config)?;
            let ok = match c.sense {
                Sense::LessEqual => v <= c.bound + FEASIBILITY_TOL,
                Sense::Equal => (v - c.bound).abs() <= FEASIBILITY_TOL,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Multiplier-relaxed objective: the QUBO to sample from, plus the constant
/// that turns a sampled energy into a Lagrangian dual value.
#[derive(Debug, Clone)]
pub struct RelaxedQubo {
    /// Energy equals `f_0(x) + sum_k mu_k F_k(x)` for inequality constraints
    /// (`- nu_k F_k(x)` for equality constraints).
    pub qubo: QuboProblem,
    /// `- sum_k mu_k C_k` over inequality constraints, `+ sum_k nu_k C_k`
    /// over equality constraints. `energy + dual_shift` is the dual integrand.
    pub dual_shift: f64,
}

/// Move the constraints into the objective with multiplier weights.
///
/// Inequality multipliers must be non-negative; equality multipliers may
/// take any sign.
pub fn build_relaxed_qubo(problem: &ConstrainedProblem, mu: &[f64]) -> Result<RelaxedQubo> {
    if mu.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch {
            expected: problem.num_constraints(),
            got: mu.len(),
        });
    }
    let mut qubo = problem.objective().clone();
    let mut dual_shift = 0.0;
    for (k, (c, &m)) in problem.constraints().iter().zip(mu.iter()).enumerate() {
        match c.sense {
            Sense::LessEqual => {
                if m < 0.0 {
                    return Err(Error::NegativeMultiplier { index: k, value: m });
                }
                qubo.add_scaled(&c.form, m)?;
                dual_shift -= m * c.bound;
            }
            Sense::Equal => {
                qubo.add_scaled(&c.form, -m)?;
                dual_shift += m * c.bound;
            }
        }
    }
    Ok(RelaxedQubo { qubo, dual_shift })
}

// Serde representation: {"n": .., "q": [[i, j, value], ..], "offset": ..}
// with i <= j triplets only; an off-diagonal triplet stands for both mirror
// entries of the symmetric matrix.
#[derive(Serialize, Deserialize)]
struct QuboJson {
    n: usize,
    q: Vec<(usize, usize, f64)>,
    offset: f64,
}

impl Serialize for QuboProblem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        QuboJson {
            n: self.n,
            q: self.to_triplets(),
            offset: self.offset,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuboProblem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = QuboJson::deserialize(deserializer)?;
        QuboProblem::from_triplets(raw.n, &raw.q, raw.offset).map_err(serde::de::Error::custom)
    }
}

/// All binary configurations of length `n`, in lexicographic order.
/// Test and oracle helper; exponential in `n`.
pub fn all_configs(n: usize) -> impl Iterator<Item = Vec<u8>> {
    assert!(n <= 25, "all_configs is for small n");
    (0u32..1 << n).map(move |idx| (0..n).map(|i| ((idx >> (n - 1 - i)) & 1) as u8).collect())
}
