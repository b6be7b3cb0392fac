//! The variance-based moving k-means engine.
//!
//! One main loop per run: Mahalanobis assignment, centroid update, then a
//! nested loop that moves poorly correlated elements out of the largest
//! cluster and feeds the smallest cluster from its neighbour until the
//! cluster fitnesses are comparable. Thresholds alpha_a (nested) and alpha_b
//! (main) decay multiplicatively; runs stop on the fitness condition, on a
//! transfer stall, or at the iteration cap.

use serde::{Deserialize, Serialize};

use crate::distances::{euclidean_sq_raw, mahalanobis_sq_raw};
use crate::error::{Error, Result};
use crate::metrics::fitness_all;
use crate::model::{
    AlphaState, ClusterState, Dataset, RunReport, TerminationReason, VmkmParams,
};

/// Which transfer rule moved an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferRule {
    /// Shed from the largest cluster: deviation at least twice the cluster
    /// variance.
    FromLargest,
    /// Fed to the smallest cluster from its neighbour: deviation at least the
    /// neighbour's variance.
    ToSmallest,
}

/// One element moved between clusters, with the quantities that justified it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferDecision {
    pub element_id: usize,
    pub from_cluster: usize,
    pub to_cluster: usize,
    /// Squared Euclidean deviation of the element from its source centroid.
    pub sigma_v: f64,
    /// Variance of the source cluster when the decision was made.
    pub sigma_c: f64,
    pub rule: TransferRule,
}

/// Outcome of one nested loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestedOutcome {
    pub iterations: usize,
    pub transfers: usize,
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Assigns every element to the cluster with minimum squared Mahalanobis
/// distance; ties go to the lowest cluster index. Returns how many
/// assignments changed (all of them on a pristine state).
pub fn assign_all(ds: &Dataset, state: &mut ClusterState) -> usize {
    assign_with(ds, state, |v, state| {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..state.k() {
            let d = mahalanobis_sq_raw(v, &state.centroids()[j], &state.covariances()[j].inverse);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    })
}

/// Squared-Euclidean variant used by the plain and moving k-means baselines.
pub(crate) fn assign_all_euclidean(ds: &Dataset, state: &mut ClusterState) -> usize {
    assign_with(ds, state, |v, state| {
        nearest_center_euclidean(v, state.centroids())
    })
}

fn assign_with<F>(ds: &Dataset, state: &mut ClusterState, nearest: F) -> usize
where
    F: Fn(&[f64], &ClusterState) -> usize,
{
    let previous = state.assignments().to_vec();
    let mut next = Vec::with_capacity(ds.n());
    let mut changed = 0;
    for i in 0..ds.n() {
        let best = nearest(ds.element(i), state);
        if previous.get(i) != Some(&best) {
            changed += 1;
        }
        next.push(best);
    }
    state.set_assignments(next);
    state.refresh_statistics(ds);
    changed
}

/// Index of the Euclidean-nearest center, ties to the lowest index.
pub fn nearest_center_euclidean(v: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = euclidean_sq_raw(v, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Recomputes each nonempty cluster's centroid as the mean of its members;
/// empty clusters keep their previous centroid. Statistics are refreshed.
/// Returns whether any centroid moved.
pub fn update_centroids(ds: &Dataset, state: &mut ClusterState) -> bool {
    let moved = state.recompute_centroids(ds);
    state.refresh_statistics(ds);
    moved
}

/// Moves every member of the largest-fitness cluster whose squared deviation
/// is at least twice the cluster variance to the Mahalanobis-nearest other
/// cluster. The member closest to the centroid always stays.
pub fn transfer_from_largest(ds: &Dataset, state: &mut ClusterState) -> Vec<TransferDecision> {
    if state.k() < 2 {
        return Vec::new();
    }
    let fitness = fitness_all(ds, state);
    let l = argmax(&fitness);
    let sigma_cl = state.variances()[l];
    if sigma_cl <= 0.0 {
        return Vec::new();
    }
    let members = state.members_of(l);
    let deviations: Vec<f64> = members
        .iter()
        .map(|&i| euclidean_sq_raw(ds.element(i), &state.centroids()[l]))
        .collect();
    let violators = select_violators(&members, &deviations, 2.0 * sigma_cl);
    if violators.is_empty() {
        return Vec::new();
    }

    let mut decisions = Vec::with_capacity(violators.len());
    for pos in violators {
        let element = members[pos];
        let v = ds.element(element);
        let mut dest = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..state.k() {
            if j == l {
                continue;
            }
            let d = mahalanobis_sq_raw(v, &state.centroids()[j], &state.covariances()[j].inverse);
            if d < best_d {
                best_d = d;
                dest = j;
            }
        }
        state.set_assignment(element, dest);
        decisions.push(TransferDecision {
            element_id: element,
            from_cluster: l,
            to_cluster: dest,
            sigma_v: deviations[pos],
            sigma_c: sigma_cl,
            rule: TransferRule::FromLargest,
        });
    }
    state.recompute_centroids(ds);
    state.refresh_statistics(ds);
    decisions
}

/// Feeds the smallest-fitness cluster: every member of its nearest donor
/// cluster whose squared deviation reaches the donor's variance moves over.
/// The donor is the closest cluster that can actually give something up (at
/// least two members and positive variance); the member closest to the donor
/// centroid always stays.
pub fn transfer_to_smallest(ds: &Dataset, state: &mut ClusterState) -> Vec<TransferDecision> {
    if state.k() < 2 {
        return Vec::new();
    }
    let fitness = fitness_all(ds, state);
    let s = argmin(&fitness);
    let mut donor = None;
    let mut donor_d = f64::INFINITY;
    for j in 0..state.k() {
        if j == s || state.counts()[j] < 2 || state.variances()[j] <= 0.0 {
            continue;
        }
        let d = euclidean_sq_raw(&state.centroids()[j], &state.centroids()[s]);
        if d < donor_d {
            donor_d = d;
            donor = Some(j);
        }
    }
    let Some(nb) = donor else {
        return Vec::new();
    };
    let sigma_cn = state.variances()[nb];
    let members = state.members_of(nb);
    let deviations: Vec<f64> = members
        .iter()
        .map(|&i| euclidean_sq_raw(ds.element(i), &state.centroids()[nb]))
        .collect();
    let violators = select_violators(&members, &deviations, sigma_cn);
    if violators.is_empty() {
        return Vec::new();
    }

    let mut decisions = Vec::with_capacity(violators.len());
    for pos in violators {
        let element = members[pos];
        state.set_assignment(element, s);
        decisions.push(TransferDecision {
            element_id: element,
            from_cluster: nb,
            to_cluster: s,
            sigma_v: deviations[pos],
            sigma_c: sigma_cn,
            rule: TransferRule::ToSmallest,
        });
    }
    state.recompute_centroids(ds);
    state.refresh_statistics(ds);
    decisions
}

/// Positions of members whose deviation reaches `threshold`. When every
/// member violates, the one closest to the centroid (lowest element id on
/// ties) is retained so the source cluster is never emptied.
fn select_violators(members: &[usize], deviations: &[f64], threshold: f64) -> Vec<usize> {
    let mut violators: Vec<usize> = (0..members.len())
        .filter(|&p| deviations[p] >= threshold)
        .collect();
    if violators.len() == members.len() && !violators.is_empty() {
        let mut keep = 0;
        for p in 1..members.len() {
            if deviations[p] < deviations[keep] {
                keep = p;
            }
        }
        violators.retain(|&p| p != keep);
    }
    violators
}

/// Runs the nested loop: transfer passes and centroid updates until the
/// smallest cluster's fitness exceeds `alpha_a` times the largest's, or the
/// iteration cap is reached.
pub fn nested_loop(
    ds: &Dataset,
    state: &mut ClusterState,
    alphas: &mut AlphaState,
    params: &VmkmParams,
) -> NestedOutcome {
    nested_with(ds, state, alphas, params, |ds, state, _s| {
        let from_l = transfer_from_largest(ds, state);
        let to_s = transfer_to_smallest(ds, state);
        from_l.len() + to_s.len()
    })
}

/// Moving k-means nested loop: the largest cluster donates the members that
/// lie on the smallest cluster's side of the hyperplane through its centroid.
pub(crate) fn mkm_nested_loop(
    ds: &Dataset,
    state: &mut ClusterState,
    alphas: &mut AlphaState,
    params: &VmkmParams,
) -> NestedOutcome {
    nested_with(ds, state, alphas, params, mkm_transfer)
}

fn nested_with<F>(
    ds: &Dataset,
    state: &mut ClusterState,
    alphas: &mut AlphaState,
    params: &VmkmParams,
    transfer: F,
) -> NestedOutcome
where
    F: Fn(&Dataset, &mut ClusterState, (usize, usize)) -> usize,
{
    let k = state.k();
    let mut iterations = 0;
    let mut transfers = 0;
    while iterations < params.max_nested_iterations {
        let fitness = fitness_all(ds, state);
        let s = argmin(&fitness);
        let l = argmax(&fitness);
        if fitness[s] > alphas.alpha_a() * fitness[l] {
            break;
        }
        let moved = transfer(ds, state, (s, l));
        let centroids_moved = update_centroids(ds, state);
        if k >= 2 {
            update_alpha_a(alphas, k);
        }
        iterations += 1;
        transfers += moved;
        // Fixed point: nothing moved and the minimum fitness is exactly zero,
        // so the exit condition can never hold and no later round can change
        // the state.
        if moved == 0 && !centroids_moved && fitness[s] == 0.0 {
            break;
        }
    }
    NestedOutcome {
        iterations,
        transfers,
    }
}

/// Nested-threshold decay: `alpha_a <- alpha_a - alpha_a / k`.
pub fn update_alpha_a(alphas: &mut AlphaState, k: usize) {
    debug_assert!(k >= 2);
    alphas.decay_a(k);
}

/// Members of the largest cluster on the smallest cluster's side of the
/// separating hyperplane move to the smallest cluster.
fn mkm_transfer(ds: &Dataset, state: &mut ClusterState, (s, l): (usize, usize)) -> usize {
    if s == l || state.counts()[l] == 0 {
        return 0;
    }
    let direction: Vec<f64> = state.centroids()[s]
        .iter()
        .zip(&state.centroids()[l])
        .map(|(&cs, &cl)| cs - cl)
        .collect();
    if direction.iter().all(|&x| x == 0.0) {
        return 0;
    }
    let members = state.members_of(l);
    let projections: Vec<f64> = members
        .iter()
        .map(|&i| {
            ds.element(i)
                .iter()
                .zip(&state.centroids()[l])
                .zip(&direction)
                .map(|((&v, &c), &dir)| (v - c) * dir)
                .sum()
        })
        .collect();
    let mut movers: Vec<usize> = (0..members.len())
        .filter(|&p| projections[p] > 0.0)
        .collect();
    if movers.len() == members.len() && !movers.is_empty() {
        let mut keep = 0;
        for p in 1..members.len() {
            if projections[p] < projections[keep] {
                keep = p;
            }
        }
        movers.retain(|&p| p != keep);
    }
    let moved = movers.len();
    for p in movers {
        state.set_assignment(members[p], s);
    }
    if moved > 0 {
        state.recompute_centroids(ds);
        state.refresh_statistics(ds);
    }
    moved
}

pub(crate) enum LoopVariant {
    Vmkm,
    Mkm,
}

/// Shared main loop for the variance-based and classical moving k-means.
pub(crate) fn run_moving(
    ds: &Dataset,
    initial_centers: &[Vec<f64>],
    params: &VmkmParams,
    variant: LoopVariant,
) -> Result<RunReport> {
    params.validate()?;
    if initial_centers.len() != params.k {
        return Err(Error::CenterCountMismatch {
            k: params.k,
            given: initial_centers.len(),
        });
    }
    let mut state = ClusterState::from_centers(ds, initial_centers, params.covariance_epsilon)?;
    let k = params.k;
    let mut alphas = AlphaState::new(params.alpha0);
    let mut transfers_per_iteration = Vec::new();
    let mut nested_total = 0;
    let mut main_iterations = 0;
    let mut reason = TerminationReason::MaxIterations;

    for _ in 0..params.max_main_iterations {
        let changed = match variant {
            LoopVariant::Vmkm => assign_all(ds, &mut state),
            LoopVariant::Mkm => assign_all_euclidean(ds, &mut state),
        };
        update_centroids(ds, &mut state);
        let nested = match variant {
            LoopVariant::Vmkm => nested_loop(ds, &mut state, &mut alphas, params),
            LoopVariant::Mkm => mkm_nested_loop(ds, &mut state, &mut alphas, params),
        };
        nested_total += nested.iterations;
        transfers_per_iteration.push(changed + nested.transfers);
        main_iterations += 1;

        let fitness = fitness_all(ds, &state);
        let s = argmin(&fitness);
        let l = argmax(&fitness);
        if fitness[s] > alphas.alpha_b() * fitness[l] {
            reason = TerminationReason::ConditionMet;
            break;
        }
        if is_stalled(&transfers_per_iteration, params, ds.n()) {
            reason = TerminationReason::Stalled;
            break;
        }
        alphas.reset_a(params.alpha0);
        if k >= 2 {
            if params.strict_eq10 {
                update_alpha_a(&mut alphas, k);
            } else {
                alphas.decay_b(k);
            }
        }
    }

    Ok(build_report(
        ds,
        state,
        main_iterations,
        nested_total,
        reason,
        transfers_per_iteration,
        params.seed,
    ))
}

fn is_stalled(log: &[usize], params: &VmkmParams, n: usize) -> bool {
    let window = params.stall_consecutive;
    log.len() >= window
        && log[log.len() - window..]
            .iter()
            .all(|&t| (t as f64) < params.stall_fraction * n as f64)
}

/// Assembles a report from a finished state. The MSE is accumulated per
/// element so it provides an independent route to the per-cluster fitness sum.
pub(crate) fn build_report(
    ds: &Dataset,
    state: ClusterState,
    main_iterations: usize,
    nested_iterations_total: usize,
    termination_reason: TerminationReason,
    transfers_per_iteration: Vec<usize>,
    seed_used: u64,
) -> RunReport {
    let fitness_per_cluster = fitness_all(ds, &state);
    let mse = crate::metrics::mse(ds, &state);
    RunReport {
        final_state: state,
        mse,
        fitness_per_cluster,
        main_iterations,
        nested_iterations_total,
        termination_reason,
        transfers_per_iteration,
        seed_used,
    }
}

/// Runs variance-based moving k-means from the given centers.
pub fn run_vmkm(
    ds: &Dataset,
    initial_centers: &[Vec<f64>],
    params: &VmkmParams,
) -> Result<RunReport> {
    run_moving(ds, initial_centers, params, LoopVariant::Vmkm)
}
