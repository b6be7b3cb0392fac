//! Distance metrics and per-cluster covariance estimation.
//!
//! The squared Mahalanobis distance drives cluster assignment; squared
//! Euclidean distance drives fitness and the transfer thresholds; the RBF
//! kernel backs the kernel k-means baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symmetric positive definite covariance matrix with its cached inverse.
///
/// Regularization adds `epsilon * trace / d + 1e-12` to the diagonal, which
/// keeps the matrix invertible even when a cluster collapses onto a point or
/// a lower-dimensional subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedCovariance {
    pub matrix: Vec<Vec<f64>>,
    pub inverse: Vec<Vec<f64>>,
    pub epsilon_applied: f64,
}

impl RegularizedCovariance {
    /// The d-dimensional identity, used for empty and singleton clusters.
    pub fn identity(dim: usize) -> Self {
        let eye = identity_matrix(dim);
        RegularizedCovariance {
            matrix: eye.clone(),
            inverse: eye,
            epsilon_applied: 0.0,
        }
    }

    /// Regularizes a symmetric matrix and caches its inverse.
    pub fn from_matrix(matrix: Vec<Vec<f64>>, epsilon: f64) -> Self {
        let dim = matrix.len();
        if dim == 0 {
            return RegularizedCovariance::identity(0);
        }
        let trace: f64 = (0..dim).map(|i| matrix[i][i]).sum();
        let mut ridge = epsilon * trace / dim as f64 + 1e-12;
        // The sample covariance is positive semidefinite, so any positive
        // ridge makes it definite; escalate only if rounding defeats the
        // factorization.
        for _ in 0..32 {
            let mut reg = matrix.clone();
            for i in 0..dim {
                reg[i][i] += ridge;
            }
            if let Some(inverse) = invert_spd(&reg) {
                if inverse_residual(&reg, &inverse) < 1e-6 {
                    return RegularizedCovariance {
                        matrix: reg,
                        inverse,
                        epsilon_applied: ridge,
                    };
                }
            }
            ridge = (ridge * 10.0).max(1e-12);
        }
        RegularizedCovariance::identity(dim)
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }
}

/// Sample covariance (divisor `n`) of the members, regularized; identity for
/// fewer than two members.
pub fn estimate_cluster_covariance(
    members: &[&[f64]],
    dim: usize,
    epsilon: f64,
) -> RegularizedCovariance {
    if members.len() < 2 {
        return RegularizedCovariance::identity(dim);
    }
    let n = members.len() as f64;
    let mut mean = vec![0.0; dim];
    for m in members {
        for (acc, &x) in mean.iter_mut().zip(m.iter()) {
            *acc += x;
        }
    }
    for acc in &mut mean {
        *acc /= n;
    }
    let mut cov = vec![vec![0.0; dim]; dim];
    for m in members {
        for a in 0..dim {
            let da = m[a] - mean[a];
            for b in a..dim {
                cov[a][b] += da * (m[b] - mean[b]);
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            cov[a][b] /= n;
            cov[b][a] = cov[a][b];
        }
    }
    RegularizedCovariance::from_matrix(cov, epsilon)
}

/// Squared Mahalanobis distance `(v - c)^T S^-1 (v - c)`.
pub fn mahalanobis_sq(v: &[f64], c: &[f64], cov: &RegularizedCovariance) -> Result<f64> {
    if v.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: c.len(),
        });
    }
    if cov.dim() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: cov.dim(),
        });
    }
    Ok(mahalanobis_sq_raw(v, c, &cov.inverse))
}

pub(crate) fn mahalanobis_sq_raw(v: &[f64], c: &[f64], inverse: &[Vec<f64>]) -> f64 {
    let dim = v.len();
    let mut total = 0.0;
    for a in 0..dim {
        let da = v[a] - c[a];
        let mut row = 0.0;
        for b in 0..dim {
            row += inverse[a][b] * (v[b] - c[b]);
        }
        total += da * row;
    }
    total.max(0.0)
}

/// Squared Euclidean distance.
pub fn euclidean_sq(v: &[f64], c: &[f64]) -> Result<f64> {
    if v.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: c.len(),
        });
    }
    Ok(euclidean_sq_raw(v, c))
}

pub(crate) fn euclidean_sq_raw(v: &[f64], c: &[f64]) -> f64 {
    v.iter()
        .zip(c.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum()
}

/// RBF kernel `exp(-gamma * ||u - v||^2)`, in (0, 1].
pub fn rbf_kernel(u: &[f64], v: &[f64], gamma: f64) -> Result<f64> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::NonPositiveGamma(gamma));
    }
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok((-gamma * euclidean_sq_raw(u, v)).exp())
}

fn identity_matrix(dim: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        m[i][i] = 1.0;
    }
    m
}

/// Inverts a symmetric positive definite matrix via Cholesky factorization.
/// Returns `None` when the matrix is not numerically positive definite.
fn invert_spd(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let dim = m.len();
    // Lower-triangular factor L with m = L L^T.
    let mut l = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = m[i][j];
            for t in 0..j {
                sum -= l[i][t] * l[j][t];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // Invert L by forward substitution, then S^-1 = L^-T L^-1.
    let mut linv = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        linv[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut sum = 0.0;
            for t in j..i {
                sum -= l[i][t] * linv[t][j];
            }
            linv[i][j] = sum / l[i][i];
        }
    }
    let mut inv = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = 0.0;
            for t in i.max(j)..dim {
                sum += linv[t][i] * linv[t][j];
            }
            inv[i][j] = sum;
            inv[j][i] = sum;
        }
    }
    Some(inv)
}

/// Max-norm deviation of `m * inv` from the identity.
fn inverse_residual(m: &[Vec<f64>], inv: &[Vec<f64>]) -> f64 {
    let dim = m.len();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut prod = 0.0;
            for t in 0..dim {
                prod += m[i][t] * inv[t][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod - target).abs());
        }
    }
    worst
}
