//! Comparison algorithms: plain k-means, classical moving k-means, fuzzy
//! c-means and RBF kernel k-means. All emit the same [`RunReport`] shape so
//! the evaluation harness treats algorithms uniformly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distances::euclidean_sq_raw;
use crate::engine::{
    assign_all_euclidean, build_report, nearest_center_euclidean, run_moving, LoopVariant,
};
use crate::error::{Error, Result};
use crate::model::{
    ClusterState, Dataset, RunReport, TerminationReason, VmkmParams, DEFAULT_COVARIANCE_EPSILON,
};

/// RBF kernel width: fixed, or derived from the median pairwise distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaChoice {
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for GammaChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaChoice::Auto);
        }
        s.parse::<f64>()
            .map(GammaChoice::Fixed)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

/// Parameters shared by the baseline algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    pub k: usize,
    pub max_iterations: usize,
    /// Convergence tolerance on the fuzzy membership change.
    pub tolerance: f64,
    /// Fuzzy c-means fuzzifier m, strictly above 1.
    pub fcm_fuzzifier: f64,
    pub rbf_gamma: GammaChoice,
    /// Kernel k-means refuses datasets whose Gram matrix would exceed this.
    pub gram_cap: usize,
    pub seed: u64,
}

impl BaselineParams {
    pub fn new(k: usize, seed: u64) -> Self {
        BaselineParams {
            k,
            max_iterations: 100,
            tolerance: 1e-4,
            fcm_fuzzifier: 2.0,
            rbf_gamma: GammaChoice::Auto,
            gram_cap: 20_000,
            seed,
        }
    }

    pub fn with_max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = cap;
        self
    }

    pub fn with_gamma(mut self, gamma: GammaChoice) -> Self {
        self.rbf_gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::ZeroClusters);
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.fcm_fuzzifier > 1.0) {
            return Err(Error::InvalidParams(format!(
                "fcm_fuzzifier must exceed 1, got {}",
                self.fcm_fuzzifier
            )));
        }
        if let GammaChoice::Fixed(g) = self.rbf_gamma {
            if g <= 0.0 || !g.is_finite() {
                return Err(Error::NonPositiveGamma(g));
            }
        }
        Ok(())
    }

    fn moving_params(&self) -> VmkmParams {
        VmkmParams::new(self.k, self.seed).with_max_main_iterations(self.max_iterations)
    }
}

fn check_centers(centers: &[Vec<f64>], k: usize) -> Result<()> {
    if centers.len() != k {
        return Err(Error::CenterCountMismatch {
            k,
            given: centers.len(),
        });
    }
    Ok(())
}

/// Lloyd's algorithm with squared Euclidean assignment. Empty clusters are
/// deliberately left unrepaired: they keep stale centroids, so dead centers
/// can and do occur.
pub fn run_kmeans(
    ds: &Dataset,
    initial_centers: &[Vec<f64>],
    params: &BaselineParams,
) -> Result<RunReport> {
    params.validate()?;
    check_centers(initial_centers, params.k)?;
    let mut state = ClusterState::from_centers(ds, initial_centers, DEFAULT_COVARIANCE_EPSILON)?;
    let mut transfers = Vec::new();
    let mut mains = 0;
    let mut reason = TerminationReason::MaxIterations;
    for _ in 0..params.max_iterations {
        let changed = assign_all_euclidean(ds, &mut state);
        if changed == 0 {
            reason = TerminationReason::ConditionMet;
            break;
        }
        mains += 1;
        transfers.push(changed);
        state.recompute_centroids(ds);
        state.refresh_statistics(ds);
    }
    Ok(build_report(
        ds,
        state,
        mains,
        0,
        reason,
        transfers,
        params.seed,
    ))
}

/// Classical moving k-means: Euclidean assignment plus the hyperplane
/// transfer from the largest to the smallest cluster, inside the same main
/// and nested loop skeleton as the variance-based engine.
pub fn run_mkm(
    ds: &Dataset,
    initial_centers: &[Vec<f64>],
    params: &BaselineParams,
) -> Result<RunReport> {
    params.validate()?;
    run_moving(ds, initial_centers, &params.moving_params(), LoopVariant::Mkm)
}

/// Fuzzy c-means with hard assignments in the final report, so the MSE stays
/// comparable across algorithms.
pub fn run_fcm(
    ds: &Dataset,
    initial_centers: &[Vec<f64>],
    params: &BaselineParams,
) -> Result<RunReport> {
    params.validate()?;
    check_centers(initial_centers, params.k)?;
    let mut centroids =
        crate::model::init_centers_explicit(ds, initial_centers)?;
    let m = params.fcm_fuzzifier;
    let mut memberships = membership_matrix(ds, &centroids, m);
    let mut hard = hard_assignments(&memberships);
    let mut transfers = Vec::new();
    let mut mains = 0;
    let mut reason = TerminationReason::MaxIterations;
    for _ in 0..params.max_iterations {
        update_fcm_centroids(ds, &memberships, m, &mut centroids);
        let next = membership_matrix(ds, &centroids, m);
        let delta = memberships
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| (x - y).abs()))
            .fold(0.0f64, f64::max);
        let next_hard = hard_assignments(&next);
        let changed = hard
            .iter()
            .zip(&next_hard)
            .filter(|(a, b)| a != b)
            .count();
        memberships = next;
        hard = next_hard;
        mains += 1;
        transfers.push(changed);
        if delta < params.tolerance {
            reason = TerminationReason::ConditionMet;
            break;
        }
    }
    let state = ClusterState::from_assignments(ds, centroids, hard, DEFAULT_COVARIANCE_EPSILON)?;
    Ok(build_report(
        ds,
        state,
        mains,
        0,
        reason,
        transfers,
        params.seed,
    ))
}

/// Membership row for every element; rows sum to one. An element sitting
/// exactly on a centroid gets full membership there (lowest index on ties).
pub(crate) fn membership_matrix(
    ds: &Dataset,
    centroids: &[Vec<f64>],
    fuzzifier: f64,
) -> Vec<Vec<f64>> {
    let k = centroids.len();
    let exponent = 1.0 / (fuzzifier - 1.0);
    let mut rows = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let v = ds.element(i);
        let dists: Vec<f64> = centroids.iter().map(|c| euclidean_sq_raw(v, c)).collect();
        let mut row = vec![0.0; k];
        if let Some(exact) = dists.iter().position(|&d| d == 0.0) {
            row[exact] = 1.0;
        } else {
            for j in 0..k {
                let total: f64 = dists.iter().map(|&d| (dists[j] / d).powf(exponent)).sum();
                row[j] = 1.0 / total;
            }
        }
        rows.push(row);
    }
    rows
}

fn hard_assignments(memberships: &[Vec<f64>]) -> Vec<usize> {
    memberships
        .iter()
        .map(|row| {
            let mut best = 0;
            for (j, &u) in row.iter().enumerate() {
                if u > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn update_fcm_centroids(
    ds: &Dataset,
    memberships: &[Vec<f64>],
    fuzzifier: f64,
    centroids: &mut [Vec<f64>],
) {
    let k = centroids.len();
    let d = ds.d();
    let mut numerators = vec![vec![0.0; d]; k];
    let mut denominators = vec![0.0; k];
    for (i, row) in memberships.iter().enumerate() {
        let v = ds.element(i);
        for j in 0..k {
            let w = row[j].powf(fuzzifier);
            denominators[j] += w;
            for (acc, &x) in numerators[j].iter_mut().zip(v) {
                *acc += w * x;
            }
        }
    }
    for j in 0..k {
        if denominators[j] > 0.0 {
            centroids[j] = numerators[j].iter().map(|&s| s / denominators[j]).collect();
        }
    }
}

/// Derives a hard partition from centers by one Euclidean assignment pass;
/// this is how shared random centers seed the kernel baseline.
pub fn initial_assignments_from_centers(ds: &Dataset, centers: &[Vec<f64>]) -> Vec<usize> {
    (0..ds.n())
        .map(|i| nearest_center_euclidean(ds.element(i), centers))
        .collect()
}

/// Kernel k-means on the RBF Gram matrix. Assignments move to the cluster
/// with the smallest feature-space distance via the kernel-trick expansion;
/// the reported MSE is computed in input space from input-space means.
pub fn run_kernel_kmeans(
    ds: &Dataset,
    initial_assignments: &[usize],
    params: &BaselineParams,
) -> Result<RunReport> {
    params.validate()?;
    let n = ds.n();
    let k = params.k;
    if n > params.gram_cap {
        return Err(Error::GramTooLarge {
            n,
            cap: params.gram_cap,
        });
    }
    if initial_assignments.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: initial_assignments.len(),
        });
    }
    for &a in initial_assignments {
        if a >= k {
            return Err(Error::BadClusterIndex { index: a, k });
        }
    }
    let gamma = match params.rbf_gamma {
        GammaChoice::Fixed(g) if g > 0.0 && g.is_finite() => g,
        GammaChoice::Fixed(g) => return Err(Error::NonPositiveGamma(g)),
        GammaChoice::Auto => auto_gamma(ds, params.seed),
    };

    // symmetric Gram matrix, stored dense
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        gram[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let kij = (-gamma * euclidean_sq_raw(ds.element(i), ds.element(j))).exp();
            gram[i * n + j] = kij;
            gram[j * n + i] = kij;
        }
    }

    let mut assignments = initial_assignments.to_vec();
    let mut centroids = input_space_means(ds, &assignments, k, None);
    let mut transfers = Vec::new();
    let mut mains = 0;
    let mut reason = TerminationReason::MaxIterations;
    for _ in 0..params.max_iterations {
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        // S1[i][c] = sum over j in c of K_ij; T3[c] = sum over i,j in c of K_ij
        let mut s1 = vec![0.0; n * k];
        for i in 0..n {
            let row = &gram[i * n..(i + 1) * n];
            let chunk = &mut s1[i * k..(i + 1) * k];
            for (j, &kij) in row.iter().enumerate() {
                chunk[assignments[j]] += kij;
            }
        }
        let mut t3 = vec![0.0; k];
        for i in 0..n {
            t3[assignments[i]] += s1[i * k + assignments[i]];
        }

        let mut changed = 0;
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mut best = assignments[i];
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                if counts[c] == 0 {
                    continue;
                }
                let nc = counts[c] as f64;
                let d = 1.0 - 2.0 * s1[i * k + c] / nc + t3[c] / (nc * nc);
                if d < best_d {
                    best_d = d;
                    best = c;
                } else if d == best_d && c < best {
                    best = c;
                }
            }
            if best != assignments[i] {
                changed += 1;
            }
            next.push(best);
        }
        assignments = next;
        centroids = input_space_means(ds, &assignments, k, Some(centroids));
        if changed == 0 {
            reason = TerminationReason::ConditionMet;
            break;
        }
        mains += 1;
        transfers.push(changed);
    }

    let state =
        ClusterState::from_assignments(ds, centroids, assignments, DEFAULT_COVARIANCE_EPSILON)?;
    Ok(build_report(
        ds,
        state,
        mains.max(1),
        0,
        reason,
        transfers,
        params.seed,
    ))
}

/// Input-space cluster means; empty clusters keep the previous mean, or the
/// dataset mean when there is none yet.
fn input_space_means(
    ds: &Dataset,
    assignments: &[usize],
    k: usize,
    previous: Option<Vec<Vec<f64>>>,
) -> Vec<Vec<f64>> {
    let d = ds.d();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (acc, &x) in sums[a].iter_mut().zip(ds.element(i)) {
            *acc += x;
        }
    }
    let fallback = || {
        let mut mean = vec![0.0; d];
        for v in ds.elements() {
            for (acc, &x) in mean.iter_mut().zip(v) {
                *acc += x;
            }
        }
        mean.iter().map(|&s| s / ds.n() as f64).collect::<Vec<_>>()
    };
    (0..k)
        .map(|j| {
            if counts[j] > 0 {
                sums[j].iter().map(|&s| s / counts[j] as f64).collect()
            } else if let Some(prev) = &previous {
                prev[j].clone()
            } else {
                fallback()
            }
        })
        .collect()
}

/// Median-heuristic kernel width: `1 / (2 * median pairwise squared
/// distance)` over a sample of at most 1000 elements.
fn auto_gamma(ds: &Dataset, seed: u64) -> f64 {
    let n = ds.n();
    let sample: Vec<usize> = if n <= 1000 {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picks: Vec<usize> = rand::seq::index::sample(&mut rng, n, 1000).into_vec();
        picks.sort_unstable();
        picks
    };
    let mut dists = Vec::with_capacity(sample.len() * (sample.len() - 1) / 2);
    for (a, &i) in sample.iter().enumerate() {
        for &j in &sample[a + 1..] {
            dists.push(euclidean_sq_raw(ds.element(i), ds.element(j)));
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        (dists[mid - 1] + dists[mid]) / 2.0
    } else {
        dists[mid]
    };
    if median > 0.0 {
        1.0 / (2.0 * median)
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_dataset;

    fn dataset(rows: &[f64]) -> Dataset {
        validate_dataset(&rows.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    fn blob_pair() -> Dataset {
        let mut rows = Vec::new();
        for i in 0..10 {
            rows.push(vec![0.0 + 0.01 * i as f64]);
        }
        for i in 0..10 {
            rows.push(vec![100.0 + 0.01 * i as f64]);
        }
        validate_dataset(&rows).unwrap()
    }

    #[test]
    fn kmeans_converges_on_separated_blobs() {
        let ds = blob_pair();
        let params = BaselineParams::new(2, 0);
        let report = run_kmeans(&ds, &[vec![0.0], vec![100.0]], &params).unwrap();
        assert_eq!(report.termination_reason, TerminationReason::ConditionMet);
        assert!(report.main_iterations <= 2);
        assert!((report.final_state.centroids()[0][0] - 0.045).abs() < 1e-12);
        assert!((report.final_state.centroids()[1][0] - 100.045).abs() < 1e-12);
    }

    #[test]
    fn kmeans_leaves_dead_centers_unrepaired() {
        let ds = dataset(&[0.0, 1.0, 50.0, 51.0, 100.0, 101.0]);
        let centers = vec![vec![200.0], vec![200.0], vec![200.0]];
        let report = run_kmeans(&ds, &centers, &BaselineParams::new(3, 0)).unwrap();
        let empties = report
            .final_state
            .counts()
            .iter()
            .filter(|&&c| c == 0)
            .count();
        assert!(empties >= 1);
        // stale centroids survive
        assert_eq!(report.final_state.centroids()[1], vec![200.0]);
    }

    #[test]
    fn kmeans_k1_takes_the_mean_in_one_iteration() {
        let ds = dataset(&[1.0, 2.0, 6.0]);
        let report = run_kmeans(&ds, &[vec![1.0]], &BaselineParams::new(1, 0)).unwrap();
        assert_eq!(report.main_iterations, 1);
        assert_eq!(report.final_state.centroids()[0], vec![3.0]);
    }

    #[test]
    fn mkm_terminates_immediately_for_k1() {
        let ds = dataset(&[1.0, 2.0, 3.0]);
        let report = run_mkm(&ds, &[vec![2.0]], &BaselineParams::new(1, 0)).unwrap();
        assert_eq!(report.main_iterations, 1);
        assert_eq!(report.termination_reason, TerminationReason::ConditionMet);
    }

    #[test]
    fn mkm_is_deterministic() {
        let ds = dataset(&[0.0, 0.5, 1.5, 7.0, 8.0, 9.5, 20.0]);
        let centers = vec![vec![0.0], vec![20.0]];
        let params = BaselineParams::new(2, 9);
        let a = run_mkm(&ds, &centers, &params).unwrap();
        let b = run_mkm(&ds, &centers, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fcm_full_membership_at_exact_centroid() {
        let ds = dataset(&[0.0, 10.0]);
        let rows = membership_matrix(&ds, &[vec![0.0], vec![10.0]], 2.0);
        assert_eq!(rows[0], vec![1.0, 0.0]);
        assert_eq!(rows[1], vec![0.0, 1.0]);
    }

    #[test]
    fn fcm_midpoint_memberships_are_half() {
        let ds = dataset(&[5.0]);
        let rows = membership_matrix(&ds, &[vec![0.0], vec![10.0]], 2.0);
        assert_eq!(rows[0], vec![0.5, 0.5]);
    }

    #[test]
    fn fcm_rows_sum_to_one() {
        let ds = dataset(&[0.3, 2.9, 4.1, 7.7, 9.2]);
        let rows = membership_matrix(&ds, &[vec![1.0], vec![5.0], vec![9.0]], 1.7);
        for row in rows {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fcm_hard_assignments_match_kmeans_from_converged_centroids() {
        let ds = blob_pair();
        let params = BaselineParams::new(2, 0);
        let report = run_fcm(&ds, &[vec![10.0], vec![90.0]], &params).unwrap();
        let centers = report.final_state.centroids().to_vec();
        let lloyd: Vec<usize> = initial_assignments_from_centers(&ds, &centers);
        assert_eq!(report.final_state.assignments(), lloyd.as_slice());
    }

    #[test]
    fn kernel_matches_plain_kmeans_for_tiny_gamma() {
        let ds = blob_pair();
        let centers = vec![vec![3.0], vec![80.0]];
        let init = initial_assignments_from_centers(&ds, &centers);
        let kernel = run_kernel_kmeans(
            &ds,
            &init,
            &BaselineParams::new(2, 0).with_gamma(GammaChoice::Fixed(1e-9)),
        )
        .unwrap();
        let lloyd = run_kmeans(&ds, &centers, &BaselineParams::new(2, 0)).unwrap();
        assert_eq!(
            kernel.final_state.assignments(),
            lloyd.final_state.assignments()
        );
    }

    #[test]
    fn kernel_separates_concentric_rings() {
        // two rings of radius 1 and 5; input-space k-means provably cannot
        // produce the ring partition (both ring means sit at the origin, so
        // one assignment step from them scatters the labels), while the RBF
        // kernel version recovers it from a mildly corrupted start
        let n_ring = 16;
        let mut rows = Vec::new();
        for i in 0..n_ring {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n_ring as f64;
            rows.push(vec![t.cos(), t.sin()]);
        }
        for i in 0..n_ring {
            let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n_ring as f64;
            rows.push(vec![5.0 * t.cos(), 5.0 * t.sin()]);
        }
        let ds = validate_dataset(&rows).unwrap();

        // the ring partition is not a fixed point of Lloyd's algorithm
        let ring_means = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let scattered = initial_assignments_from_centers(&ds, &ring_means);
        let true_rings: Vec<usize> = (0..2 * n_ring).map(|i| i / n_ring).collect();
        assert_ne!(scattered, true_rings);

        // corrupt two labels and let kernel k-means repair them
        let mut init = true_rings.clone();
        init[n_ring] = 0;
        init[n_ring + 3] = 0;
        let report = run_kernel_kmeans(
            &ds,
            &init,
            &BaselineParams::new(2, 0).with_gamma(GammaChoice::Fixed(1.0)),
        )
        .unwrap();
        let got = report.final_state.assignments();
        let direct = got == true_rings.as_slice();
        let flipped = got
            .iter()
            .zip(&true_rings)
            .all(|(&a, &b)| a == 1 - b);
        assert!(direct || flipped, "rings not separated: {got:?}");
    }

    #[test]
    fn kernel_rejects_oversized_gram() {
        let ds = blob_pair();
        let mut params = BaselineParams::new(2, 0);
        params.gram_cap = 10;
        let init = vec![0; ds.n()];
        assert!(matches!(
            run_kernel_kmeans(&ds, &init, &params),
            Err(Error::GramTooLarge { n: 20, cap: 10 })
        ));
    }

    #[test]
    fn kernel_rejects_non_positive_gamma() {
        let ds = blob_pair();
        let params = BaselineParams::new(2, 0).with_gamma(GammaChoice::Fixed(-1.0));
        let init = vec![0; ds.n()];
        assert!(matches!(
            run_kernel_kmeans(&ds, &init, &params),
            Err(Error::NonPositiveGamma(_))
        ));
    }

    #[test]
    fn auto_gamma_handles_constant_data() {
        let ds = dataset(&[4.0, 4.0, 4.0]);
        assert_eq!(auto_gamma(&ds, 0), 1.0);
    }

    #[test]
    fn gamma_choice_parses() {
        assert_eq!("auto".parse::<GammaChoice>().unwrap(), GammaChoice::Auto);
        assert_eq!(
            "0.5".parse::<GammaChoice>().unwrap(),
            GammaChoice::Fixed(0.5)
        );
        assert!("bogus".parse::<GammaChoice>().is_err());
    }
}
