//! Evaluation: per-cluster fitness, MSE, summary statistics, the
//! initialization-sensitivity protocol and the comparison table.

use serde::{Deserialize, Serialize};

use crate::baselines::{
    initial_assignments_from_centers, run_fcm, run_kernel_kmeans, run_kmeans, run_mkm,
    BaselineParams, GammaChoice,
};
use crate::distances::euclidean_sq_raw;
use crate::engine::run_vmkm;
use crate::error::{Error, Result};
use crate::model::{init_centers_random, ClusterState, Dataset, RunReport, VmkmParams};

/// Fitness of cluster `j`: the sum of squared Euclidean deviations of its
/// members from its centroid. Zero for empty clusters.
pub fn fitness(ds: &Dataset, state: &ClusterState, j: usize) -> Result<f64> {
    if j >= state.k() {
        return Err(Error::BadClusterIndex {
            index: j,
            k: state.k(),
        });
    }
    Ok(fitness_all(ds, state)[j])
}

/// Fitness of every cluster in one pass.
pub fn fitness_all(ds: &Dataset, state: &ClusterState) -> Vec<f64> {
    let mut totals = vec![0.0; state.k()];
    for (i, &a) in state.assignments().iter().enumerate() {
        totals[a] += euclidean_sq_raw(ds.element(i), &state.centroids()[a]);
    }
    totals
}

/// Mean squared error: the average squared Euclidean deviation of every
/// element from its assigned centroid, accumulated per element.
pub fn mse(ds: &Dataset, state: &ClusterState) -> f64 {
    let mut total = 0.0;
    for (i, &a) in state.assignments().iter().enumerate() {
        total += euclidean_sq_raw(ds.element(i), &state.centroids()[a]);
    }
    total / ds.n() as f64
}

/// Intra-cluster variance: fitness over member count; zero for empty
/// clusters.
pub fn cluster_variance(ds: &Dataset, state: &ClusterState, j: usize) -> Result<f64> {
    let f = fitness(ds, state, j)?;
    let count = state.counts()[j];
    if count == 0 {
        Ok(0.0)
    } else {
        Ok(f / count as f64)
    }
}

/// The algorithms the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Vmkm,
    KMeans,
    MovingKMeans,
    FuzzyCMeans,
    KernelKMeans,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Vmkm,
        Algorithm::KMeans,
        Algorithm::MovingKMeans,
        Algorithm::FuzzyCMeans,
        Algorithm::KernelKMeans,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Vmkm => "vmkm",
            Algorithm::KMeans => "km",
            Algorithm::MovingKMeans => "mkm",
            Algorithm::FuzzyCMeans => "fcm",
            Algorithm::KernelKMeans => "kernel",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vmkm" => Ok(Algorithm::Vmkm),
            "km" | "kmeans" => Ok(Algorithm::KMeans),
            "mkm" => Ok(Algorithm::MovingKMeans),
            "fcm" => Ok(Algorithm::FuzzyCMeans),
            "kernel" => Ok(Algorithm::KernelKMeans),
            other => Err(format!(
                "unknown algorithm {other:?}; supported: vmkm, km, mkm, fcm, kernel"
            )),
        }
    }
}

/// One configuration covering every algorithm, so a single trial can run all
/// of them from identical settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub seed: u64,
    pub alpha0: f64,
    pub max_iterations: usize,
    pub max_nested_iterations: usize,
    pub stall_fraction: f64,
    pub stall_consecutive: usize,
    pub covariance_epsilon: f64,
    pub strict_eq10: bool,
    pub tolerance: f64,
    pub fcm_fuzzifier: f64,
    pub rbf_gamma: GammaChoice,
    pub gram_cap: usize,
}

impl RunConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        let v = VmkmParams::new(k, seed);
        let b = BaselineParams::new(k, seed);
        RunConfig {
            k,
            seed,
            alpha0: v.alpha0,
            max_iterations: v.max_main_iterations,
            max_nested_iterations: v.max_nested_iterations,
            stall_fraction: v.stall_fraction,
            stall_consecutive: v.stall_consecutive,
            covariance_epsilon: v.covariance_epsilon,
            strict_eq10: false,
            tolerance: b.tolerance,
            fcm_fuzzifier: b.fcm_fuzzifier,
            rbf_gamma: b.rbf_gamma,
            gram_cap: b.gram_cap,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn vmkm_params(&self) -> VmkmParams {
        VmkmParams {
            k: self.k,
            alpha0: self.alpha0,
            max_main_iterations: self.max_iterations,
            stall_fraction: self.stall_fraction,
            stall_consecutive: self.stall_consecutive,
            max_nested_iterations: self.max_nested_iterations,
            covariance_epsilon: self.covariance_epsilon,
            seed: self.seed,
            strict_eq10: self.strict_eq10,
        }
    }

    pub fn baseline_params(&self) -> BaselineParams {
        BaselineParams {
            k: self.k,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            fcm_fuzzifier: self.fcm_fuzzifier,
            rbf_gamma: self.rbf_gamma,
            gram_cap: self.gram_cap,
            seed: self.seed,
        }
    }
}

/// Runs one algorithm from the given shared centers.
pub fn run_algorithm(
    algo: Algorithm,
    ds: &Dataset,
    centers: &[Vec<f64>],
    cfg: &RunConfig,
) -> Result<RunReport> {
    match algo {
        Algorithm::Vmkm => run_vmkm(ds, centers, &cfg.vmkm_params()),
        Algorithm::KMeans => run_kmeans(ds, centers, &cfg.baseline_params()),
        Algorithm::MovingKMeans => run_mkm(ds, centers, &cfg.baseline_params()),
        Algorithm::FuzzyCMeans => run_fcm(ds, centers, &cfg.baseline_params()),
        Algorithm::KernelKMeans => {
            let init = initial_assignments_from_centers(ds, centers);
            run_kernel_kmeans(ds, &init, &cfg.baseline_params())
        }
    }
}

/// Five-number summary plus mean and standard deviation (population form, so
/// a single observation has zero spread).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl SummaryStats {
    /// Sort-based summary; `None` for an empty slice. Quartiles are medians
    /// of the lower and upper halves, the overall median excluded when the
    /// count is odd.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let var = sorted.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let median = median_of(&sorted);
        let (q1, q3) = if n == 1 {
            (sorted[0], sorted[0])
        } else {
            (
                median_of(&sorted[..n / 2]),
                median_of(&sorted[n.div_ceil(2)..]),
            )
        };
        Some(SummaryStats {
            count: n,
            mean,
            std: var.sqrt(),
            min: sorted[0],
            q1,
            median,
            q3,
            max: sorted[n - 1],
        })
    }
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// One sensitivity trial: the shared centers and the final MSE every
/// algorithm reached from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTrial {
    pub trial_index: usize,
    pub seed: u64,
    pub initial_centers: Vec<Vec<f64>>,
    /// One entry per algorithm; `None` when that run failed.
    pub final_mse: Vec<Option<f64>>,
}

/// Outcome of the initialization-sensitivity protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub algorithms: Vec<Algorithm>,
    pub trials: Vec<SensitivityTrial>,
    /// Per-algorithm summary over the trials that succeeded.
    pub per_algorithm_summary: Vec<Option<SummaryStats>>,
}

impl SensitivityResult {
    /// MSE series for one algorithm across trials, skipping failures.
    pub fn series(&self, algo_index: usize) -> Vec<f64> {
        self.trials
            .iter()
            .filter_map(|t| t.final_mse[algo_index])
            .collect()
    }
}

/// Runs `trials` paired experiments: each trial draws one random center set
/// (element-sampled, seed `base_seed + t`) and starts every algorithm from
/// it, so differences are attributable to the algorithms rather than to
/// initialization luck. A failed run is recorded as absent without aborting
/// the other cells.
pub fn run_sensitivity(
    ds: &Dataset,
    algorithms: &[Algorithm],
    trials: usize,
    base_seed: u64,
    cfg: &RunConfig,
) -> Result<SensitivityResult> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    if algorithms.is_empty() {
        return Err(Error::InvalidParams(
            "at least one algorithm is required".into(),
        ));
    }
    let mut result_trials = Vec::with_capacity(trials);
    for t in 0..trials {
        let seed = base_seed.wrapping_add(t as u64);
        let centers = init_centers_random(ds, cfg.k, seed)?;
        let trial_cfg = cfg.clone().with_seed(seed);
        let final_mse = algorithms
            .iter()
            .map(|&algo| {
                run_algorithm(algo, ds, &centers, &trial_cfg)
                    .ok()
                    .map(|r| r.mse)
            })
            .collect();
        result_trials.push(SensitivityTrial {
            trial_index: t,
            seed,
            initial_centers: centers,
            final_mse,
        });
    }
    let per_algorithm_summary = (0..algorithms.len())
        .map(|a| {
            let series: Vec<f64> = result_trials
                .iter()
                .filter_map(|t| t.final_mse[a])
                .collect();
            SummaryStats::from_values(&series)
        })
        .collect();
    Ok(SensitivityResult {
        algorithms: algorithms.to_vec(),
        trials: result_trials,
        per_algorithm_summary,
    })
}

/// One row of the comparison table: a dataset with its per-algorithm mean
/// MSE cells and the index of the row minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub cells: Vec<Option<f64>>,
    pub min_index: Option<usize>,
}

/// Mean MSE per (dataset, algorithm), with the per-row minimum marked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub algorithms: Vec<Algorithm>,
    pub rows: Vec<ComparisonRow>,
}

/// Builds the comparison table from per-dataset, per-algorithm report lists;
/// an empty list marks the cell absent. Cells average the MSE of their runs.
pub fn build_comparison_table(
    algorithms: &[Algorithm],
    rows: &[(String, Vec<Vec<RunReport>>)],
) -> ComparisonTable {
    let table_rows = rows
        .iter()
        .map(|(dataset, cells)| {
            let cells: Vec<Option<f64>> = cells
                .iter()
                .map(|reports| {
                    if reports.is_empty() {
                        None
                    } else {
                        Some(reports.iter().map(|r| r.mse).sum::<f64>() / reports.len() as f64)
                    }
                })
                .collect();
            let min_index = row_minimum(&cells);
            ComparisonRow {
                dataset: dataset.clone(),
                cells,
                min_index,
            }
        })
        .collect();
    ComparisonTable {
        algorithms: algorithms.to_vec(),
        rows: table_rows,
    }
}

/// Index of the smallest present cell; absent cells are never minimal.
pub fn row_minimum(cells: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, cell) in cells.iter().enumerate() {
        if let Some(v) = cell {
            match best {
                Some(b) if cells[b].unwrap() <= *v => {}
                _ => best = Some(i),
            }
        }
    }
    best
}
