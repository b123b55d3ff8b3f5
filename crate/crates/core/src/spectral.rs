//! Singular values and Euclidean distances to low-rank matrix sets.
//!
//! Rationals are converted to doubles only at this boundary; everything
//! upstream stays exact. The SVD is a one-sided Jacobi on the thinner
//! orientation, which is plenty accurate for the matrix sizes in scope
//! (nothing here exceeds 32 in either dimension).

use crate::dataset::BoundaryDistribution;
use crate::flatten::{flatten, FlattenError, RatMatrix};
use crate::tree::{internal_edge_splits, EdgeSplit, PhyloTree};
use thiserror::Error;

/// Relative gap below which the closest-rank-k minimizer is flagged as
/// non-unique (sigma_k too close to sigma_{k+1}).
pub const NONUNIQUE_GAP_REL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("non-finite entry at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("rank {k} out of range for a {rows}x{cols} matrix")]
    BadRank { k: usize, rows: usize, cols: usize },
    #[error("split {0} is not an internal edge of the tree")]
    SplitNotInTree(EdgeSplit),
    #[error(transparent)]
    Flatten(#[from] FlattenError),
}

/// Singular values (descending) and the squared distance to the rank-2 set.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub singular_values: Vec<f64>,
    pub dist_sq_rank2: f64,
    /// sigma_2 and sigma_3 nearly coincide: the nearest rank-2 matrix is not
    /// unique and the distance should be read with care.
    pub nonunique_minimizer: bool,
}

/// Per-split squared distances and their maximum, the lower bound for the
/// distance to the tree's variety.
#[derive(Debug, Clone)]
pub struct DistanceEstimate {
    pub per_split: Vec<(EdgeSplit, f64)>,
    pub lower_bound: f64,
    pub nonunique_minimizer: bool,
}

/// Descending singular values of a dense matrix, all min(rows, cols) of them.
pub fn singular_values(matrix: &[Vec<f64>]) -> Result<Vec<f64>, SpectralError> {
    let rows = matrix.len();
    let cols = matrix.first().map(Vec::len).unwrap_or(0);
    for (i, row) in matrix.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(SpectralError::NonFinite { row: i, column: j });
            }
        }
    }
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    // One-sided Jacobi orthogonalizes columns; work with the orientation
    // that has no more columns than rows.
    let transpose = cols > rows;
    let (m, k) = if transpose { (cols, rows) } else { (rows, cols) };
    let mut a = vec![0.0f64; m * k];
    for i in 0..rows {
        for j in 0..cols {
            let (r, c) = if transpose { (j, i) } else { (i, j) };
            a[c * m + r] = matrix[i][j];
        }
    }

    let eps = f64::EPSILON;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..k {
            for q in p + 1..k {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let x = a[p * m + i];
                    let y = a[q * m + i];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(f64::MIN_POSITIVE));
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = a[p * m + i];
                    let y = a[q * m + i];
                    a[p * m + i] = c * x - s * y;
                    a[q * m + i] = s * x + c * y;
                }
            }
        }
        if off <= 1e-15 {
            break;
        }
    }

    let mut sigmas: Vec<f64> = (0..k)
        .map(|j| (0..m).map(|i| a[j * m + i] * a[j * m + i]).sum::<f64>().sqrt())
        .collect();
    sigmas.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(sigmas)
}

pub fn singular_values_rat(matrix: &RatMatrix) -> Result<Vec<f64>, SpectralError> {
    singular_values(&matrix.to_f64())
}

/// Squared Euclidean (Frobenius) distance to the set of rank <= k matrices:
/// the tail sum sigma_{k+1}^2 + ... by the closest-low-rank-matrix theorem.
pub fn eckart_young_dist_sq(matrix: &[Vec<f64>], k: usize) -> Result<f64, SpectralError> {
    let rows = matrix.len();
    let cols = matrix.first().map(Vec::len).unwrap_or(0);
    if k > rows.min(cols) {
        return Err(SpectralError::BadRank { k, rows, cols });
    }
    let sigmas = singular_values(matrix)?;
    Ok(sigmas.iter().skip(k).map(|s| s * s).sum())
}

/// Full spectral summary of one matrix with the rank-2 distance.
pub fn spectral_result(matrix: &[Vec<f64>]) -> Result<SpectralResult, SpectralError> {
    let sigmas = singular_values(matrix)?;
    let dist_sq_rank2: f64 = sigmas.iter().skip(2).map(|s| s * s).sum();
    let nonunique_minimizer = match (sigmas.first(), sigmas.get(1), sigmas.get(2)) {
        (Some(&s1), Some(&s2), Some(&s3)) => (s2 - s3).abs() < NONUNIQUE_GAP_REL * s1,
        _ => false,
    };
    Ok(SpectralResult { singular_values: sigmas, dist_sq_rank2, nonunique_minimizer })
}

/// Per-split rank-2 distances of the tree's flattenings and their maximum.
/// With only the distinguishing splits passed, the maximum is the
/// conditional lower bound used to compare candidates.
pub fn tree_distance_estimate(
    dist: &BoundaryDistribution,
    tree: &PhyloTree,
    splits: &[EdgeSplit],
) -> Result<DistanceEstimate, SpectralError> {
    let tree_splits = internal_edge_splits(tree).map_err(FlattenError::Tree)?;
    for s in splits {
        if !tree_splits.contains(s) {
            return Err(SpectralError::SplitNotInTree(*s));
        }
    }
    distance_over_splits(dist, splits)
}

pub fn distance_over_splits(
    dist: &BoundaryDistribution,
    splits: &[EdgeSplit],
) -> Result<DistanceEstimate, SpectralError> {
    let mut per_split = Vec::with_capacity(splits.len());
    let mut lower_bound = 0.0f64;
    let mut nonunique = false;
    for split in splits {
        let f = flatten(dist, split)?;
        let r = spectral_result(&f.matrix.to_f64())?;
        nonunique |= r.nonunique_minimizer;
        lower_bound = lower_bound.max(r.dist_sq_rank2);
        per_split.push((*split, r.dist_sq_rank2));
    }
    Ok(DistanceEstimate { per_split, lower_bound, nonunique_minimizer: nonunique })
}
