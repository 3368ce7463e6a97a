//! Batch experiment runner: knapsack benchmark grids over problem size and
//! density, with per-cell caching, deterministic seed derivation, and
//! CSV/JSON report emission.
//!
//! Determinism contract: `(plan, base_seed)` fully determines every byte of
//! `cells.csv`, `curves.csv`, `terms.csv`, `summary.json` and `summary.txt`.
//! Wall-clock measurements are emitted separately to `timings.csv`, which is
//! exempt from that contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qkp::{self, QkpInstance};
use crate::samplers::{Backend, SamplerConfig};
use crate::seed;
use crate::slack;
use crate::solver::{solve, solve_naive, SolveResult, SolverConfig, StopReason};

/// Output schema version stamped into every emitted row.
pub const SCHEMA_VERSION: u32 = 1;

/// Benchmark method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OmMcmc,
    OmSqa,
    /// Multiplier relaxation with the exact-Boltzmann sampler (small `n`).
    OmExact,
    Naive,
    Greedy,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::OmMcmc => "om_mcmc",
            Method::OmSqa => "om_sqa",
            Method::OmExact => "om_exact",
            Method::Naive => "naive",
            Method::Greedy => "greedy",
        }
    }

    fn backend(self) -> Option<Backend> {
        match self {
            Method::OmMcmc => Some(Backend::Mcmc),
            Method::OmSqa => Some(Backend::Sqa),
            Method::OmExact => Some(Backend::ExactBoltzmann),
            Method::Naive | Method::Greedy => None,
        }
    }
}

/// One method with its sampler and solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        let sampler = match method {
            // Reference sampler settings: MCMC S=1000, SQA S=500 with two
            // Trotter slices, beta = 0.1 for both.
            Method::OmSqa => SamplerConfig {
                num_samples: 500,
                trotter: 2,
                ..SamplerConfig::default()
            },
            _ => SamplerConfig::default(),
        };
        MethodSpec {
            method,
            sampler,
            solver: SolverConfig::default(),
        }
    }
}

/// A full experiment grid: sizes x densities x instances, run per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub sizes: Vec<usize>,
    pub densities: Vec<f64>,
    pub instances_per_cell: usize,
    pub methods: Vec<MethodSpec>,
    pub base_seed: u64,
    /// Per-solve wall-clock budget in seconds.
    #[serde(default = "default_solve_budget")]
    pub solve_budget_secs: f64,
}

fn default_solve_budget() -> f64 {
    60.0
}

impl ExperimentPlan {
    /// Desk-scale defaults: exact-oracle-certified sizes only.
    pub fn desk_default() -> Self {
        ExperimentPlan {
            sizes: vec![8, 16],
            densities: vec![0.2, 0.6, 1.0],
            instances_per_cell: 100,
            methods: vec![
                MethodSpec::new(Method::OmMcmc),
                MethodSpec::new(Method::OmSqa),
                MethodSpec::new(Method::Naive),
                MethodSpec::new(Method::Greedy),
            ],
            base_seed: 0,
            solve_budget_secs: default_solve_budget(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.densities.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidConfig(
                "plan needs non-empty sizes, densities and methods".into(),
            ));
        }
        if self.instances_per_cell == 0 {
            return Err(Error::InvalidConfig("instances_per_cell must be >= 1".into()));
        }
        Ok(())
    }

    /// Instance seed for `(n, density index, instance index)`; identical for
    /// every method so all methods consume the same instance set.
    pub fn instance_seed(&self, n: usize, delta_index: usize, instance: usize) -> u64 {
        seed::derive(
            self.base_seed,
            &[n as u64, delta_index as u64, instance as u64],
        )
    }

    /// Sampler seed for a method on one instance.
    pub fn method_seed(&self, n: usize, delta_index: usize, instance: usize, method: Method) -> u64 {
        seed::derive_labeled(self.instance_seed(n, delta_index, instance), method.name())
    }
}

/// Result of one method on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub best_profit: Option<u64>,
    pub iterations: usize,
    pub stop_reason: Option<StopReason>,
    /// Best feasible profit after each iteration (`None` until one exists);
    /// index 0 is the state before any sampling.
    pub profit_by_iteration: Vec<Option<u64>>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

/// All methods on one instance, plus the certified optimum when available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_seed: u64,
    pub optimum: Option<u64>,
    pub runs: Vec<MethodRun>,
}

/// One `(n, density)` cell of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub n: usize,
    pub delta: f64,
    pub delta_index: usize,
    pub instances: Vec<InstanceRecord>,
}

/// Aggregated statistics for one method in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n: usize,
    pub delta: f64,
    pub method: Method,
    pub instances: usize,
    pub mean_rel_error: f64,
    /// Sample standard deviation of the relative error over instances,
    /// divided by sqrt(instance count).
    pub std_error: f64,
    /// Fraction of instances whose best feasible profit equals the
    /// reference optimum.
    pub exact_rate: f64,
    pub mean_iterations: f64,
    /// False when the exact oracle was unavailable and errors are relative
    /// to the best profit any method found.
    pub certified: bool,
    pub failures: usize,
}

/// Mean best-so-far relative error at one iteration index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub delta: f64,
    pub method: Method,
    pub iteration: usize,
    pub mean_rel_error: f64,
}

/// Quadratic-term counts for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    pub om_terms: usize,
    pub slack_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub delta: f64,
    pub method: Method,
    pub mean_wall_ms: f64,
}

/// Aggregated experiment output. Everything here is deterministic in
/// `(plan, base_seed)` except `timings`, which is skipped on serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub cells: Vec<CellStats>,
    pub curves: Vec<CurvePoint>,
    pub terms: Vec<TermRow>,
    #[serde(skip)]
    pub timings: Vec<TimingRow>,
}

/// Run every cell of the plan, reusing cached cell files under `cache_dir`
/// when present (content-addressed by the plan's per-cell configuration).
pub fn run_plan(plan: &ExperimentPlan, cache_dir: Option<&Path>) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut cells = Vec::new();
    for &n in &plan.sizes {
        for (delta_index, &delta) in plan.densities.iter().enumerate() {
            let record = run_cell_cached(plan, n, delta_index, delta, cache_dir)?;
            cells.push(record);
        }
    }
    Ok(aggregate(plan, &cells))
}

/// The per-iteration error curves of a plan (greedy excluded: single shot).
pub fn iteration_curves(plan: &ExperimentPlan, cache_dir: Option<&Path>) -> Result<Vec<CurvePoint>> {
    Ok(run_plan(plan, cache_dir)?.curves)
}

/// Term-count comparison over the plan grid.
pub fn compare_terms(plan: &ExperimentPlan) -> Result<Vec<TermRow>> {
    plan.validate()?;
    let mut rows = Vec::new();
    for &n in &plan.sizes {
        for (delta_index, &delta) in plan.densities.iter().enumerate() {
            for instance in 0..plan.instances_per_cell {
                let inst_seed = plan.instance_seed(n, delta_index, instance);
                let inst = qkp::generate(n, delta, inst_seed)?;
                let (om_terms, slack_terms) = slack::count_comparison(&inst)?;
                rows.push(TermRow {
                    n,
                    delta,
                    seed: inst_seed,
                    om_terms,
                    slack_terms,
                });
            }
        }
    }
    Ok(rows)
}

fn cell_cache_key(plan: &ExperimentPlan, n: usize, delta_index: usize) -> String {
    #[derive(Serialize)]
    struct CellConfig<'a> {
        schema_version: u32,
        n: usize,
        delta_index: usize,
        delta: f64,
        instances_per_cell: usize,
        methods: &'a [MethodSpec],
        base_seed: u64,
        solve_budget_secs: f64,
    }
    let canonical = serde_json::to_string(&CellConfig {
        schema_version: SCHEMA_VERSION,
        n,
        delta_index,
        delta: plan.densities[delta_index],
        instances_per_cell: plan.instances_per_cell,
        methods: &plan.methods,
        base_seed: plan.base_seed,
        solve_budget_secs: plan.solve_budget_secs,
    })
    .expect("plan serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex_string(&hasher.finalize()[..16])
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn run_cell_cached(
    plan: &ExperimentPlan,
    n: usize,
    delta_index: usize,
    delta: f64,
    cache_dir: Option<&Path>,
) -> Result<CellRecord> {
    let cache_path = cache_dir.map(|dir| {
        dir.join(format!(
            "cell_{n}_{delta_index}_{}.json",
            cell_cache_key(plan, n, delta_index)
        ))
    });
    if let Some(path) = &cache_path {
        if path.exists() {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            let record: CellRecord = serde_json::from_str(&text)?;
            log::info!("cell n={n} delta={delta} loaded from cache");
            return Ok(record);
        }
    }
    let record = run_cell(plan, n, delta_index, delta)?;
    if let Some(path) = &cache_path {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
        fs::write(path, serde_json::to_string(&record)?)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(record)
}

fn run_cell(plan: &ExperimentPlan, n: usize, delta_index: usize, delta: f64) -> Result<CellRecord> {
    let instances: Vec<InstanceRecord> = (0..plan.instances_per_cell)
        .into_par_iter()
        .map(|instance| run_instance(plan, n, delta_index, delta, instance))
        .collect::<Result<_>>()?;
    Ok(CellRecord {
        n,
        delta,
        delta_index,
        instances,
    })
}

fn run_instance(
    plan: &ExperimentPlan,
    n: usize,
    delta_index: usize,
    delta: f64,
    instance: usize,
) -> Result<InstanceRecord> {
    let inst_seed = plan.instance_seed(n, delta_index, instance);
    let inst = qkp::generate(n, delta, inst_seed)?;
    let optimum = match qkp::exact_solve(&inst) {
        Ok((_, profit)) => Some(profit),
        Err(Error::OracleUnavailable { .. }) => None,
        Err(e) => return Err(e),
    };
    let runs = plan
        .methods
        .iter()
        .map(|spec| run_method(plan, &inst, n, delta_index, instance, spec))
        .collect();
    Ok(InstanceRecord {
        instance_seed: inst_seed,
        optimum,
        runs,
    })
}

fn run_method(
    plan: &ExperimentPlan,
    inst: &QkpInstance,
    n: usize,
    delta_index: usize,
    instance: usize,
    spec: &MethodSpec,
) -> MethodRun {
    let started = Instant::now();
    let outcome = (|| -> Result<MethodRun> {
        if spec.method == Method::Greedy {
            let (_, profit) = qkp::greedy(inst);
            return Ok(MethodRun {
                best_profit: Some(profit),
                iterations: 1,
                stop_reason: None,
                profit_by_iteration: vec![None, Some(profit)],
                wall_ms: 0.0,
                error: None,
            });
        }
        let problem = inst.to_constrained();
        let (_, greedy_profit) = qkp::greedy(inst);
        let mut solver_cfg = spec.solver.clone();
        solver_cfg.upper_bound = Some(
            solver_cfg
                .upper_bound
                .unwrap_or(-(greedy_profit as f64)),
        );
        solver_cfg.time_budget_secs = solver_cfg
            .time_budget_secs
            .or(Some(plan.solve_budget_secs));
        let result = match spec.method.backend() {
            Some(backend) => {
                let mut sampler_cfg = spec.sampler.clone();
                sampler_cfg.seed = plan.method_seed(n, delta_index, instance, spec.method);
                solve(&problem, backend, &sampler_cfg, &solver_cfg)?
            }
            None => solve_naive(&problem, &solver_cfg)?,
        };
        Ok(method_run_from_result(&result))
    })();
    match outcome {
        Ok(mut run) => {
            run.wall_ms = started.elapsed().as_secs_f64() * 1e3;
            run
        }
        Err(e) => MethodRun {
            best_profit: None,
            iterations: 0,
            stop_reason: None,
            profit_by_iteration: vec![None],
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            error: Some(e.to_string()),
        },
    }
}

fn method_run_from_result(result: &SolveResult) -> MethodRun {
    let mut profit_by_iteration = Vec::with_capacity(result.iterations() + 1);
    profit_by_iteration.push(None); // before any sampling
    for row in &result.state.history {
        profit_by_iteration.push(row.best_feasible_value.map(|v| (-v) as u64));
    }
    MethodRun {
        best_profit: result.best_feasible().map(|b| (-b.objective) as u64),
        iterations: result.iterations(),
        stop_reason: Some(result.stop_reason),
        profit_by_iteration,
        wall_ms: 0.0,
        error: None,
    }
}

fn aggregate(plan: &ExperimentPlan, cells: &[CellRecord]) -> ExperimentReport {
    let mut stats = Vec::new();
    let mut curves = Vec::new();
    let mut timings = Vec::new();
    for cell in cells {
        // Reference profit per instance: the certified optimum, or the best
        // profit any method found when the oracle is out of range.
        let references: Vec<Option<u64>> = cell
            .instances
            .iter()
            .map(|inst| {
                inst.optimum.or_else(|| {
                    inst.runs
                        .iter()
                        .filter_map(|r| r.best_profit)
                        .max()
                        .filter(|&p| p > 0)
                })
            })
            .collect();
        let certified = cell.instances.iter().all(|inst| inst.optimum.is_some());

        for (mi, spec) in plan.methods.iter().enumerate() {
            let mut errors = Vec::new();
            let mut exact = 0usize;
            let mut iter_sum = 0.0;
            let mut wall_sum = 0.0;
            let mut failures = 0usize;
            for (inst, reference) in cell.instances.iter().zip(references.iter()) {
                let run = &inst.runs[mi];
                if run.error.is_some() {
                    failures += 1;
                }
                let Some(reference) = *reference else {
                    continue;
                };
                let err = profit_error(run.best_profit, reference);
                if run.best_profit == Some(reference) {
                    exact += 1;
                }
                errors.push(err);
                iter_sum += run.iterations as f64;
                wall_sum += run.wall_ms;
            }
            let count = errors.len();
            let mean = if count == 0 {
                f64::NAN
            } else {
                errors.iter().sum::<f64>() / count as f64
            };
            let std_error = if count < 2 {
                0.0
            } else {
                let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                    / (count as f64 - 1.0);
                (var / count as f64).sqrt()
            };
            stats.push(CellStats {
                n: cell.n,
                delta: cell.delta,
                method: spec.method,
                instances: count,
                mean_rel_error: mean,
                std_error,
                exact_rate: if count == 0 {
                    0.0
                } else {
                    exact as f64 / count as f64
                },
                mean_iterations: if count == 0 {
                    0.0
                } else {
                    iter_sum / count as f64
                },
                certified,
                failures,
            });
            timings.push(TimingRow {
                n: cell.n,
                delta: cell.delta,
                method: spec.method,
                mean_wall_ms: if count == 0 { 0.0 } else { wall_sum / count as f64 },
            });

            // Per-iteration best-so-far curves; greedy is single-shot.
            if spec.method != Method::Greedy {
                let max_len = cell
                    .instances
                    .iter()
                    .map(|inst| inst.runs[mi].profit_by_iteration.len())
                    .max()
                    .unwrap_or(0);
                for t in 0..max_len {
                    let mut sum = 0.0;
                    let mut cnt = 0usize;
                    for (inst, reference) in cell.instances.iter().zip(references.iter()) {
                        let Some(reference) = *reference else {
                            continue;
                        };
                        let series = &inst.runs[mi].profit_by_iteration;
                        // Carry the final value forward for short runs.
                        let profit = match series.get(t) {
                            Some(p) => *p,
                            None => series.last().copied().flatten(),
                        };
                        sum += profit_error(profit, reference);
                        cnt += 1;
                    }
                    if cnt > 0 {
                        curves.push(CurvePoint {
                            n: cell.n,
                            delta: cell.delta,
                            method: spec.method,
                            iteration: t,
                            mean_rel_error: sum / cnt as f64,
                        });
                    }
                }
            }
        }
    }
    ExperimentReport {
        schema_version: SCHEMA_VERSION,
        cells: stats,
        curves,
        terms: Vec::new(),
        timings,
    }
}

/// Relative error of a profit against the reference, with the no-feasible
/// convention of 1.
fn profit_error(profit: Option<u64>, reference: u64) -> f64 {
    match profit {
        None => 1.0,
        Some(p) => qkp::relative_error(-(p as f64), -(reference as f64)).unwrap_or(1.0),
    }
}

/// Write the report files into `out_dir`; returns the paths written.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut written = Vec::new();

    let mut cells_csv =
        String::from("schema_version,n,delta,method,instances,mean_rel_error,std_error,exact_rate,mean_iterations,certified,failures\n");
    for c in &report.cells {
        cells_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            report.schema_version,
            c.n,
            c.delta,
            c.method.name(),
            c.instances,
            c.mean_rel_error,
            c.std_error,
            c.exact_rate,
            c.mean_iterations,
            c.certified,
            c.failures
        ));
    }
    written.push(write_text(out_dir.join("cells.csv"), &cells_csv)?);

    let mut curves_csv = String::from("schema_version,n,delta,method,iteration,mean_rel_error\n");
    for p in &report.curves {
        curves_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            report.schema_version,
            p.n,
            p.delta,
            p.method.name(),
            p.iteration,
            p.mean_rel_error
        ));
    }
    written.push(write_text(out_dir.join("curves.csv"), &curves_csv)?);

    if !report.terms.is_empty() {
        let mut terms_csv = String::from("schema_version,n,delta,seed,om_terms,slack_terms\n");
        for t in &report.terms {
            terms_csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                report.schema_version, t.n, t.delta, t.seed, t.om_terms, t.slack_terms
            ));
        }
        written.push(write_text(out_dir.join("terms.csv"), &terms_csv)?);
    }

    written.push(write_text(
        out_dir.join("summary.json"),
        &serde_json::to_string_pretty(report)?,
    )?);
    written.push(write_text(out_dir.join("summary.txt"), &summary_text(report))?);

    if !report.timings.is_empty() {
        let mut timings_csv = String::from("n,delta,method,mean_wall_ms\n");
        for t in &report.timings {
            timings_csv.push_str(&format!(
                "{},{},{},{}\n",
                t.n,
                t.delta,
                t.method.name(),
                t.mean_wall_ms
            ));
        }
        written.push(write_text(out_dir.join("timings.csv"), &timings_csv)?);
    }

    Ok(written)
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(path)
}

fn summary_text(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "n     delta  method    mean_rel_err  std_err   exact_rate  iters   certified\n",
    );
    for c in &report.cells {
        out.push_str(&format!(
            "{:<5} {:<6} {:<9} {:<13.6} {:<9.6} {:<11.3} {:<7.1} {}\n",
            c.n,
            c.delta,
            c.method.name(),
            c.mean_rel_error,
            c.std_error,
            c.exact_rate,
            c.mean_iterations,
            if c.certified { "yes" } else { "no" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn tiny_plan() -> ExperimentPlan {
        ExperimentPlan {
            sizes: vec![8],
            densities: vec![0.5],
            instances_per_cell: 6,
            methods: vec![
                MethodSpec {
                    method: Method::OmExact,
                    sampler: SamplerConfig {
                        num_samples: 100,
                        ..SamplerConfig::default()
                    },
                    solver: SolverConfig {
                        t_max: 10,
                        ..SolverConfig::default()
                    },
                },
                MethodSpec {
                    method: Method::Greedy,
                    sampler: SamplerConfig::default(),
                    solver: SolverConfig::default(),
                },
            ],
            base_seed: 7,
            solve_budget_secs: 60.0,
        }
    }

    #[test]
    fn greedy_only_plan_runs_quickly_and_aggregates() {
        let plan = ExperimentPlan {
            methods: vec![MethodSpec::new(Method::Greedy)],
            instances_per_cell: 10,
            ..tiny_plan()
        };
        let started = Instant::now();
        let report = run_plan(&plan, None).unwrap();
        assert!(started.elapsed().as_secs_f64() < 1.0);
        assert_eq!(report.cells.len(), 1);
        let cell = &report.cells[0];
        assert_eq!(cell.instances, 10);
        assert!(cell.certified);
        assert!(cell.exact_rate >= 0.0 && cell.exact_rate <= 1.0);
        assert!(report.curves.is_empty(), "greedy has no curves");
    }

    #[test]
    fn methods_share_identical_instances() {
        let plan_a = tiny_plan();
        let plan_b = ExperimentPlan {
            methods: vec![MethodSpec::new(Method::Greedy)],
            ..tiny_plan()
        };
        for i in 0..plan_a.instances_per_cell {
            assert_eq!(
                plan_a.instance_seed(8, 0, i),
                plan_b.instance_seed(8, 0, i)
            );
        }
        // Method-level sampler streams stay distinct.
        assert_ne!(
            plan_a.method_seed(8, 0, 0, Method::OmMcmc),
            plan_a.method_seed(8, 0, 0, Method::OmSqa)
        );
    }

    #[test]
    fn exact_rate_counts_zero_error_rows() {
        let plan = tiny_plan();
        let report = run_plan(&plan, None).unwrap();
        for cell in &report.cells {
            // exact_rate and mean error are consistent: an exact cell has
            // zero error contribution from those instances.
            assert!(cell.exact_rate >= 0.0 && cell.exact_rate <= 1.0);
            if (cell.exact_rate - 1.0).abs() < 1e-12 {
                assert!(cell.mean_rel_error <= 1e-12);
            }
        }
    }

    #[test]
    fn curves_start_at_one_and_never_increase() {
        let plan = tiny_plan();
        let report = run_plan(&plan, None).unwrap();
        let mut by_iter: Vec<(usize, f64)> = report
            .curves
            .iter()
            .filter(|p| p.method == Method::OmExact)
            .map(|p| (p.iteration, p.mean_rel_error))
            .collect();
        by_iter.sort_by_key(|&(t, _)| t);
        assert_eq!(by_iter[0].0, 0);
        assert_eq!(by_iter[0].1, 1.0, "error before any sampling is 1");
        for w in by_iter.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12, "curve increased: {by_iter:?}");
        }
    }

    #[test]
    fn rerun_hits_cache_and_is_byte_identical() {
        let plan = tiny_plan();
        let dir = tempdir().unwrap();
        let cache = dir.path().join("cache");
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");

        let report_a = run_plan(&plan, Some(&cache)).unwrap();
        emit_report(&report_a, &out_a).unwrap();
        let report_b = run_plan(&plan, Some(&cache)).unwrap();
        emit_report(&report_b, &out_b).unwrap();

        for file in ["cells.csv", "curves.csv", "summary.json", "summary.txt"] {
            let a = fs::read(out_a.join(file)).unwrap();
            let b = fs::read(out_b.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs");
        }
        // One cache file per cell.
        assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    }

    #[test]
    fn cache_key_tracks_method_configuration() {
        let plan = tiny_plan();
        let mut changed = tiny_plan();
        changed.methods[0].sampler.num_samples = 999;
        assert_ne!(cell_cache_key(&plan, 8, 0), cell_cache_key(&changed, 8, 0));
        assert_eq!(cell_cache_key(&plan, 8, 0), cell_cache_key(&tiny_plan(), 8, 0));
    }

    #[test]
    fn compare_terms_emits_one_row_per_instance() {
        let plan = ExperimentPlan {
            sizes: vec![8, 16],
            densities: vec![0.2, 1.0],
            instances_per_cell: 3,
            ..tiny_plan()
        };
        let rows = compare_terms(&plan).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        for row in &rows {
            assert!(row.slack_terms >= row.om_terms);
        }
    }

    #[test]
    fn emit_report_row_counts_match_schema_arithmetic() {
        let plan = tiny_plan();
        let mut report = run_plan(&plan, None).unwrap();
        report.terms = compare_terms(&ExperimentPlan {
            instances_per_cell: 2,
            ..tiny_plan()
        })
        .unwrap();
        let dir = tempdir().unwrap();
        let paths = emit_report(&report, dir.path()).unwrap();
        assert!(paths.iter().any(|p| p.ends_with("terms.csv")));
        let cells_lines = fs::read_to_string(dir.path().join("cells.csv"))
            .unwrap()
            .lines()
            .count();
        assert_eq!(cells_lines, 1 + report.cells.len());
        let curve_lines = fs::read_to_string(dir.path().join("curves.csv"))
            .unwrap()
            .lines()
            .count();
        assert_eq!(curve_lines, 1 + report.curves.len());
    }

    #[test]
    fn empty_report_emits_header_only_csv() {
        let report = ExperimentReport {
            schema_version: SCHEMA_VERSION,
            cells: vec![],
            curves: vec![],
            terms: vec![],
            timings: vec![],
        };
        let dir = tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();
        let cells = fs::read_to_string(dir.path().join("cells.csv")).unwrap();
        assert_eq!(cells.lines().count(), 1);
        assert!(cells.starts_with("schema_version,"));
    }

    #[test]
    fn report_round_trips_through_json() {
        let plan = tiny_plan();
        let report = run_plan(&plan, None).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        // Timings are exempt from the round trip (and from determinism).
        assert_eq!(report.cells, back.cells);
        assert_eq!(report.curves, back.curves);
        assert_eq!(report.terms, back.terms);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn method_failures_are_recorded_not_fatal() {
        // naive at n = 33 exceeds every exact backend.
        let plan = ExperimentPlan {
            sizes: vec![33],
            densities: vec![0.5],
            instances_per_cell: 2,
            methods: vec![MethodSpec::new(Method::Naive), MethodSpec::new(Method::Greedy)],
            base_seed: 3,
            solve_budget_secs: 60.0,
        };
        let report = run_plan(&plan, None).unwrap();
        let naive = report
            .cells
            .iter()
            .find(|c| c.method == Method::Naive)
            .unwrap();
        assert_eq!(naive.failures, 2);
        assert!(!naive.certified);
        let greedy = report
            .cells
            .iter()
            .find(|c| c.method == Method::Greedy)
            .unwrap();
        assert_eq!(greedy.failures, 0);
        // Uncertified reference: greedy's own profit, so its error is zero.
        assert!(greedy.mean_rel_error <= 1e-12);
    }
}
