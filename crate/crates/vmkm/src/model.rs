//! Shared data model: datasets, cluster state, run parameters and reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distances::{estimate_cluster_covariance, euclidean_sq_raw, RegularizedCovariance};
use crate::error::{Error, Result};

/// Default diagonal regularization applied to cluster covariances.
pub const DEFAULT_COVARIANCE_EPSILON: f64 = 1e-6;

/// An immutable collection of `n` feature vectors of dimensionality `d`.
///
/// Elements are stored row-major; element ids are their positions `0..n`.
/// When the data came from an image, `image_shape` records `(height, width)`
/// and elements follow row-major pixel order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    d: usize,
    image_shape: Option<(usize, usize)>,
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer.
    pub fn from_flat(values: Vec<f64>, d: usize) -> Result<Self> {
        if values.is_empty() || d == 0 {
            return Err(Error::EmptyDataset);
        }
        if values.len() % d != 0 {
            return Err(Error::RaggedDimensions {
                index: values.len() / d,
                expected: d,
                found: values.len() % d,
            });
        }
        for (pos, &x) in values.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteValue {
                    index: pos / d,
                    component: pos % d,
                });
            }
        }
        let n = values.len() / d;
        Ok(Dataset {
            values,
            n,
            d,
            image_shape: None,
        })
    }

    /// Attaches an image shape; `height * width` must equal `n`.
    pub fn with_image_shape(mut self, height: usize, width: usize) -> Result<Self> {
        if height * width != self.n {
            return Err(Error::InvalidParams(format!(
                "image shape {height}x{width} does not cover {} elements",
                self.n
            )));
        }
        self.image_shape = Some((height, width));
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    pub fn element(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    /// Stable element ids, `0..n`.
    pub fn element_ids(&self) -> std::ops::Range<usize> {
        0..self.n
    }
}

/// Validates raw feature vectors into a [`Dataset`].
///
/// Rejects empty input, ragged rows and non-finite components.
pub fn validate_dataset(raw: &[Vec<f64>]) -> Result<Dataset> {
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = raw[0].len();
    if d == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut values = Vec::with_capacity(raw.len() * d);
    for (index, row) in raw.iter().enumerate() {
        if row.len() != d {
            return Err(Error::RaggedDimensions {
                index,
                expected: d,
                found: row.len(),
            });
        }
        for (component, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteValue { index, component });
            }
        }
        values.extend_from_slice(row);
    }
    Dataset::from_flat(values, d)
}

/// Draws `k` initial centers by sampling distinct dataset elements without
/// replacement; deterministic for a fixed seed.
pub fn init_centers_random(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::ZeroClusters);
    }
    if k > ds.n() {
        return Err(Error::KTooLarge { k, n: ds.n() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, ds.n(), k);
    Ok(picks.iter().map(|i| ds.element(i).to_vec()).collect())
}

/// Accepts caller-provided centers verbatim after checking dimensionality.
///
/// Out-of-range centers are deliberately allowed so that adversarial
/// initializations (e.g. every center outside the data range) can be studied.
pub fn init_centers_explicit(ds: &Dataset, centers: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if centers.is_empty() {
        return Err(Error::ZeroClusters);
    }
    for (index, c) in centers.iter().enumerate() {
        if c.len() != ds.d() {
            return Err(Error::DimensionMismatch {
                expected: ds.d(),
                found: c.len(),
            });
        }
        for (component, &x) in c.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteValue { index, component });
            }
        }
    }
    Ok(centers.to_vec())
}

/// Hard clustering state: centroids, assignments and per-cluster statistics.
///
/// Mutated only by the engine that owns the run; counts, variances and
/// covariances are always recomputable from the dataset, the assignments and
/// the centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    k: usize,
    centroids: Vec<Vec<f64>>,
    assignments: Vec<usize>,
    counts: Vec<usize>,
    variances: Vec<f64>,
    covariances: Vec<RegularizedCovariance>,
    covariance_epsilon: f64,
}

impl ClusterState {
    /// Builds a pristine state around validated centers; no element is
    /// assigned yet and every covariance starts as the identity.
    pub fn from_centers(ds: &Dataset, centers: &[Vec<f64>], epsilon: f64) -> Result<Self> {
        let centers = init_centers_explicit(ds, centers)?;
        let k = centers.len();
        Ok(ClusterState {
            k,
            centroids: centers,
            assignments: Vec::new(),
            counts: vec![0; k],
            variances: vec![0.0; k],
            covariances: vec![RegularizedCovariance::identity(ds.d()); k],
            covariance_epsilon: epsilon,
        })
    }

    /// Builds a state from explicit centroids and a total assignment.
    pub fn from_assignments(
        ds: &Dataset,
        centroids: Vec<Vec<f64>>,
        assignments: Vec<usize>,
        epsilon: f64,
    ) -> Result<Self> {
        let mut state = ClusterState::from_centers(ds, &centroids, epsilon)?;
        if assignments.len() != ds.n() {
            return Err(Error::DimensionMismatch {
                expected: ds.n(),
                found: assignments.len(),
            });
        }
        for &a in &assignments {
            if a >= state.k {
                return Err(Error::BadClusterIndex {
                    index: a,
                    k: state.k,
                });
            }
        }
        state.assignments = assignments;
        state.refresh_statistics(ds);
        Ok(state)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn covariances(&self) -> &[RegularizedCovariance] {
        &self.covariances
    }

    pub fn covariance_epsilon(&self) -> f64 {
        self.covariance_epsilon
    }

    /// Element ids currently assigned to cluster `j`, in ascending order.
    pub fn members_of(&self, j: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| (a == j).then_some(i))
            .collect()
    }

    pub(crate) fn set_assignment(&mut self, element: usize, cluster: usize) {
        self.assignments[element] = cluster;
    }

    pub(crate) fn set_assignments(&mut self, assignments: Vec<usize>) {
        self.assignments = assignments;
    }

    /// Recomputes centroids as member means; empty clusters keep their
    /// previous centroid. Returns whether any centroid moved.
    pub(crate) fn recompute_centroids(&mut self, ds: &Dataset) -> bool {
        let d = ds.d();
        let mut sums = vec![vec![0.0; d]; self.k];
        let mut counts = vec![0usize; self.k];
        for (i, &a) in self.assignments.iter().enumerate() {
            counts[a] += 1;
            for (acc, &x) in sums[a].iter_mut().zip(ds.element(i)) {
                *acc += x;
            }
        }
        let mut moved = false;
        for j in 0..self.k {
            if counts[j] == 0 {
                continue;
            }
            let mean: Vec<f64> = sums[j].iter().map(|&s| s / counts[j] as f64).collect();
            if mean != self.centroids[j] {
                moved = true;
                self.centroids[j] = mean;
            }
        }
        moved
    }

    /// Recomputes counts, variances and covariances from the current
    /// assignments and centroids.
    pub(crate) fn refresh_statistics(&mut self, ds: &Dataset) {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.k];
        for (i, &a) in self.assignments.iter().enumerate() {
            members[a].push(i);
        }
        for j in 0..self.k {
            self.counts[j] = members[j].len();
            if members[j].is_empty() {
                self.variances[j] = 0.0;
            } else {
                let fitness: f64 = members[j]
                    .iter()
                    .map(|&i| euclidean_sq_raw(ds.element(i), &self.centroids[j]))
                    .sum();
                self.variances[j] = fitness / members[j].len() as f64;
            }
            let rows: Vec<&[f64]> = members[j].iter().map(|&i| ds.element(i)).collect();
            self.covariances[j] =
                estimate_cluster_covariance(&rows, ds.d(), self.covariance_epsilon);
        }
    }
}

/// Parameters of a variance-based moving k-means run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmkmParams {
    /// Number of clusters.
    pub k: usize,
    /// Initial value of both transfer thresholds; must lie in (0, 1/3).
    pub alpha0: f64,
    /// Hard cap on main-loop iterations.
    pub max_main_iterations: usize,
    /// Stall threshold as a fraction of the dataset size.
    pub stall_fraction: f64,
    /// Consecutive low-transfer iterations that trigger a stall exit.
    pub stall_consecutive: usize,
    /// Safety cap on nested-loop iterations per main iteration.
    pub max_nested_iterations: usize,
    /// Diagonal regularization for cluster covariances.
    pub covariance_epsilon: f64,
    /// Seed recorded in the report; the engine itself is deterministic.
    pub seed: u64,
    /// Apply the main-loop threshold decay to alpha_a instead of alpha_b,
    /// reproducing the update exactly as printed rather than as intended.
    pub strict_eq10: bool,
}

impl VmkmParams {
    pub fn new(k: usize, seed: u64) -> Self {
        VmkmParams {
            k,
            alpha0: 0.30,
            max_main_iterations: 100,
            stall_fraction: 0.01,
            stall_consecutive: 3,
            max_nested_iterations: 500,
            covariance_epsilon: DEFAULT_COVARIANCE_EPSILON,
            seed,
            strict_eq10: false,
        }
    }

    pub fn with_alpha0(mut self, alpha0: f64) -> Self {
        self.alpha0 = alpha0;
        self
    }

    pub fn with_max_main_iterations(mut self, cap: usize) -> Self {
        self.max_main_iterations = cap;
        self
    }

    pub fn with_strict_eq10(mut self, strict: bool) -> Self {
        self.strict_eq10 = strict;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::ZeroClusters);
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0 / 3.0) {
            return Err(Error::InvalidParams(format!(
                "alpha0 must lie in (0, 1/3), got {}",
                self.alpha0
            )));
        }
        if !(self.stall_fraction > 0.0 && self.stall_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "stall_fraction must lie in (0, 1), got {}",
                self.stall_fraction
            )));
        }
        if self.max_main_iterations == 0
            || self.stall_consecutive == 0
            || self.max_nested_iterations == 0
        {
            return Err(Error::InvalidParams(
                "iteration caps must be at least 1".into(),
            ));
        }
        if !(self.covariance_epsilon > 0.0) {
            return Err(Error::InvalidParams(format!(
                "covariance_epsilon must be positive, got {}",
                self.covariance_epsilon
            )));
        }
        Ok(())
    }
}

/// The pair of decaying transfer thresholds.
///
/// Both start at `alpha0` and only ever shrink multiplicatively, so they stay
/// strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaState {
    alpha_a: f64,
    alpha_b: f64,
}

impl AlphaState {
    pub fn new(alpha0: f64) -> Self {
        AlphaState {
            alpha_a: alpha0,
            alpha_b: alpha0,
        }
    }

    pub fn alpha_a(&self) -> f64 {
        self.alpha_a
    }

    pub fn alpha_b(&self) -> f64 {
        self.alpha_b
    }

    /// Nested-loop decay: `alpha_a <- alpha_a - alpha_a / k`.
    pub fn decay_a(&mut self, k: usize) {
        self.alpha_a -= self.alpha_a / k as f64;
    }

    /// Main-loop reset of the nested threshold.
    pub fn reset_a(&mut self, alpha0: f64) {
        self.alpha_a = alpha0;
    }

    /// Main-loop decay: `alpha_b <- alpha_b - alpha_b / k`.
    pub fn decay_b(&mut self, k: usize) {
        self.alpha_b -= self.alpha_b / k as f64;
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    ConditionMet,
    MaxIterations,
    Stalled,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TerminationReason::ConditionMet => "condition_met",
            TerminationReason::MaxIterations => "max_iterations",
            TerminationReason::Stalled => "stalled",
        };
        f.write_str(s)
    }
}

/// Complete record of one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub final_state: ClusterState,
    pub mse: f64,
    pub fitness_per_cluster: Vec<f64>,
    pub main_iterations: usize,
    pub nested_iterations_total: usize,
    pub termination_reason: TerminationReason,
    pub transfers_per_iteration: Vec<usize>,
    pub seed_used: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_accepts_well_formed_input() {
        let ds = validate_dataset(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 1);
        assert_eq!(ds.element(1), &[2.0]);
    }

    #[test]
    fn validate_rejects_ragged_rows() {
        assert!(matches!(
            validate_dataset(&[vec![1.0], vec![2.0, 3.0]]),
            Err(Error::RaggedDimensions { index: 1, .. })
        ));
    }

    #[test]
    fn validate_rejects_non_finite() {
        assert!(matches!(
            validate_dataset(&[vec![f64::NAN]]),
            Err(Error::NonFiniteValue { .. })
        ));
        assert!(matches!(
            validate_dataset(&[vec![f64::INFINITY]]),
            Err(Error::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn validate_rejects_empty() {
        assert!(matches!(validate_dataset(&[]), Err(Error::EmptyDataset)));
        assert!(matches!(
            validate_dataset(&[vec![]]),
            Err(Error::EmptyDataset)
        ));
    }

    fn line_dataset(n: usize) -> Dataset {
        validate_dataset(&(0..n).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn random_centers_are_deterministic_for_a_seed() {
        let ds = line_dataset(100);
        let a = init_centers_random(&ds, 5, 7).unwrap();
        let b = init_centers_random(&ds, 5, 7).unwrap();
        assert_eq!(a, b);
        let c = init_centers_random(&ds, 5, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_centers_with_k_equal_n_cover_every_element() {
        let ds = line_dataset(12);
        let centers = init_centers_random(&ds, 12, 3).unwrap();
        let mut seen: Vec<f64> = centers.iter().map(|c| c[0]).collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..12).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn random_centers_reject_k_above_n() {
        let ds = line_dataset(3);
        assert!(matches!(
            init_centers_random(&ds, 5, 0),
            Err(Error::KTooLarge { k: 5, n: 3 })
        ));
    }

    #[test]
    fn explicit_centers_pass_through_adversarial_values() {
        let ds = line_dataset(10);
        let centers = vec![vec![200.0], vec![200.0], vec![200.0]];
        assert_eq!(init_centers_explicit(&ds, &centers).unwrap(), centers);
        assert_eq!(
            init_centers_explicit(&ds, &[vec![0.0]]).unwrap(),
            vec![vec![0.0]]
        );
    }

    #[test]
    fn explicit_centers_reject_bad_dimension() {
        let ds = line_dataset(4);
        assert!(matches!(
            init_centers_explicit(&ds, &[vec![1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn params_validation_enforces_alpha0_bound() {
        assert!(VmkmParams::new(3, 0).validate().is_ok());
        assert!(VmkmParams::new(3, 0).with_alpha0(0.5).validate().is_err());
        assert!(VmkmParams::new(3, 0)
            .with_alpha0(1.0 / 3.0)
            .validate()
            .is_err());
        assert!(VmkmParams::new(3, 0).with_alpha0(0.0).validate().is_err());
        assert!(VmkmParams::new(3, 0).with_alpha0(0.33).validate().is_ok());
    }

    #[test]
    fn state_statistics_match_assignments() {
        let ds = validate_dataset(&[vec![0.0], vec![2.0], vec![10.0], vec![12.0]]).unwrap();
        let state = ClusterState::from_assignments(
            &ds,
            vec![vec![1.0], vec![11.0]],
            vec![0, 0, 1, 1],
            DEFAULT_COVARIANCE_EPSILON,
        )
        .unwrap();
        assert_eq!(state.counts(), &[2, 2]);
        assert_eq!(state.variances(), &[1.0, 1.0]);
        assert_eq!(state.members_of(1), vec![2, 3]);
    }
}
