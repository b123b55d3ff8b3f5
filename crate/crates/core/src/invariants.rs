//! Evaluation of the rank-test generators: all 3x3 minors of edge
//! flattenings, aggregated into exact l-infinity / l-1 scores per tree.
//!
//! Everything here is exact rational arithmetic. Minor enumeration may be
//! partitioned across workers; max and sum over nonnegative rationals are
//! associative and commutative, so results are independent of partitioning.

use crate::dataset::BoundaryDistribution;
use crate::flatten::{flatten, FlattenError, RatMatrix};
use crate::rational::Rat;
use crate::tree::{internal_edge_splits, EdgeSplit, PhyloTree};
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error("split {0} is not an internal edge of the tree")]
    SplitNotInTree(EdgeSplit),
    #[error(transparent)]
    Flatten(#[from] FlattenError),
}

/// Exact minor norms of one matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorNorms {
    pub linf: Rat,
    pub l1: Rat,
    pub minor_count: u64,
}

/// Per-split breakdown of a tree-level score.
#[derive(Debug, Clone)]
pub struct SplitScore {
    pub split: EdgeSplit,
    pub linf: Rat,
    pub l1: Rat,
    pub minor_count: u64,
    /// Fewer than three rows or columns: no 3x3 minors exist, and the zero
    /// score must not be read as model fit.
    pub degenerate: bool,
}

/// Tree-level invariant score: max of per-split maxima and sum of per-split
/// sums over the supplied flattenings.
#[derive(Debug, Clone)]
pub struct InvariantScore {
    pub linf: Rat,
    pub l1: Rat,
    pub minor_count: u64,
    pub per_split: Vec<SplitScore>,
}

impl InvariantScore {
    pub fn has_degenerate_split(&self) -> bool {
        self.per_split.iter().any(|s| s.degenerate)
    }
}

fn choose3(n: usize) -> u64 {
    if n < 3 {
        0
    } else {
        let n = n as u64;
        n * (n - 1) * (n - 2) / 6
    }
}

/// |det| over every 3x3 minor: linf is the maximum, l1 the sum. Matrices
/// with fewer than three rows or columns have no minors and score (0, 0).
pub fn minor_norms(matrix: &RatMatrix) -> MinorNorms {
    let rows = matrix.rows();
    let cols = matrix.cols();
    let minor_count = choose3(rows) * choose3(cols);
    if minor_count == 0 {
        return MinorNorms { linf: Rat::zero(), l1: Rat::zero(), minor_count };
    }

    let row_triples: Vec<(usize, usize, usize)> = triples(rows);
    let col_triples: Vec<(usize, usize, usize)> = triples(cols);

    let (linf, l1) = row_triples
        .par_iter()
        .map(|&(r0, r1, r2)| {
            let mut local_max = Rat::zero();
            let mut local_sum = Rat::zero();
            for &(c0, c1, c2) in &col_triples {
                let det = det3(matrix, (r0, r1, r2), (c0, c1, c2)).abs();
                if det > local_max {
                    local_max = det.clone();
                }
                local_sum += det;
            }
            (local_max, local_sum)
        })
        .reduce(
            || (Rat::zero(), Rat::zero()),
            |(max_a, sum_a), (max_b, sum_b)| (max_a.max(max_b), sum_a + sum_b),
        );

    MinorNorms { linf, l1, minor_count }
}

fn triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(choose3(n) as usize);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push((a, b, c));
            }
        }
    }
    out
}

/// 3x3 determinant by cofactor expansion; no pivoting needed at this size.
fn det3(m: &RatMatrix, r: (usize, usize, usize), c: (usize, usize, usize)) -> Rat {
    let e = |i: usize, j: usize| m.get(i, j);
    let m00 = e(r.0, c.0);
    let m01 = e(r.0, c.1);
    let m02 = e(r.0, c.2);
    let m10 = e(r.1, c.0);
    let m11 = e(r.1, c.1);
    let m12 = e(r.1, c.2);
    let m20 = e(r.2, c.0);
    let m21 = e(r.2, c.1);
    let m22 = e(r.2, c.2);
    m00 * (m11 * m22 - m12 * m21) - m01 * (m10 * m22 - m12 * m20)
        + m02 * (m10 * m21 - m11 * m20)
}

/// Score a tree against a distribution over the given splits (normally the
/// distinguishing splits; pass all internal splits for an unconditional
/// score). Splits must be edges of the tree.
pub fn tree_invariant_score(
    dist: &BoundaryDistribution,
    tree: &PhyloTree,
    splits: &[EdgeSplit],
) -> Result<InvariantScore, InvariantError> {
    let tree_splits = internal_edge_splits(tree).map_err(FlattenError::Tree)?;
    for s in splits {
        if !tree_splits.contains(s) {
            return Err(InvariantError::SplitNotInTree(*s));
        }
    }
    score_splits(dist, splits)
}

/// Score over explicit splits without tree membership checks (used when the
/// caller already derived the split list from the tree set).
pub fn score_splits(
    dist: &BoundaryDistribution,
    splits: &[EdgeSplit],
) -> Result<InvariantScore, InvariantError> {
    let mut per_split = Vec::with_capacity(splits.len());
    let mut linf = Rat::zero();
    let mut l1 = Rat::zero();
    let mut minor_count = 0;
    for split in splits {
        let f = flatten(dist, split)?;
        let norms = minor_norms(&f.matrix);
        if norms.linf > linf {
            linf = norms.linf.clone();
        }
        l1 += &norms.l1;
        minor_count += norms.minor_count;
        per_split.push(SplitScore {
            split: *split,
            degenerate: norms.minor_count == 0,
            linf: norms.linf,
            l1: norms.l1,
            minor_count: norms.minor_count,
        });
    }
    Ok(InvariantScore { linf, l1, minor_count, per_split })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BoundaryDistribution;
    use crate::rational::{rat, rat_int};
    use std::collections::BTreeMap;

    #[test]
    fn minors_of_rank_two_matrix_vanish() {
        // Outer-product structure: rank 2.
        let rows: Vec<Vec<Rat>> = (0..4)
            .map(|i| {
                (0..5)
                    .map(|j| rat(i as i64 + 1, 1) * rat(j as i64 + 1, 3) + rat(i as i64, 7))
                    .collect()
            })
            .collect();
        let m = RatMatrix::from_rows(rows).unwrap();
        assert_eq!(m.rank(), 2);
        let norms = minor_norms(&m);
        assert!(norms.linf.is_zero());
        assert!(norms.l1.is_zero());
        assert_eq!(norms.minor_count, 4 * 10);
    }

    #[test]
    fn small_matrices_have_no_minors() {
        let m = RatMatrix::zeros(2, 5);
        let norms = minor_norms(&m);
        assert_eq!(norms.minor_count, 0);
        assert!(norms.linf.is_zero() && norms.l1.is_zero());
    }

    #[test]
    fn identity_block_minor() {
        let mut m = RatMatrix::zeros(3, 3);
        m.set(0, 0, rat_int(1));
        m.set(1, 1, rat_int(2));
        m.set(2, 2, rat_int(3));
        let norms = minor_norms(&m);
        assert_eq!(norms.linf, rat_int(6));
        assert_eq!(norms.l1, rat_int(6));
        assert_eq!(norms.minor_count, 1);
    }

    #[test]
    fn l1_dominates_linf_and_scales_cubically() {
        let mut m = RatMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                m.set(i, j, rat((i * 4 + j * j) as i64 + 1, 7));
            }
        }
        let norms = minor_norms(&m);
        assert!(norms.linf <= norms.l1);

        let mut scaled = RatMatrix::zeros(4, 4);
        let c = rat(3, 2);
        for i in 0..4 {
            for j in 0..4 {
                scaled.set(i, j, m.get(i, j) * &c);
            }
        }
        let scaled_norms = minor_norms(&scaled);
        let c3 = &c * &c * &c;
        assert_eq!(scaled_norms.linf, norms.linf * &c3);
        assert_eq!(scaled_norms.l1, norms.l1 * &c3);
    }

    #[test]
    fn empty_split_list_scores_zero() {
        let d = BoundaryDistribution::from_entries(
            4,
            BTreeMap::from([(0b0000u64, rat_int(1))]),
        )
        .unwrap();
        let tree = PhyloTree::parse_newick("((a,b),(c,d))").unwrap();
        let score = tree_invariant_score(&d, &tree, &[]).unwrap();
        assert!(score.linf.is_zero() && score.l1.is_zero());
        assert_eq!(score.minor_count, 0);
    }

    #[test]
    fn split_not_in_tree_is_rejected() {
        let d = BoundaryDistribution::from_entries(
            4,
            BTreeMap::from([(0b0000u64, rat_int(1))]),
        )
        .unwrap();
        let tree = PhyloTree::parse_newick("((a,b),(c,d))").unwrap();
        let foreign = EdgeSplit::from_indices(&[0, 2], 4);
        assert!(matches!(
            tree_invariant_score(&d, &tree, &[foreign]),
            Err(InvariantError::SplitNotInTree(_))
        ));
    }
}
