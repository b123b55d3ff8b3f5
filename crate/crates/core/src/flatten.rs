//! Flattenings: reshaping the boundary tensor into a matrix along an edge
//! bipartition, plus the split bookkeeping that decides which flattenings
//! can tell a set of candidate trees apart.
//!
//! Row index = bits of side-A leaves in ascending leaf order, big-endian;
//! column index likewise for side B. The printed matrices in the source
//! material use per-case orderings, but minor norms and singular values are
//! invariant under row/column permutations, so one fixed convention is safe.

use crate::dataset::BoundaryDistribution;
use crate::rational::{format_rational, parse_rational, Rat, RationalParseError};
use crate::tree::{common_leaf_set, internal_edge_splits, EdgeSplit, PhyloTree, TreeError};
use num_traits::Zero;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlattenError {
    #[error("split covers {split} leaves but the distribution has {dist}")]
    LeafCountMismatch { split: usize, dist: usize },
    #[error("matrix rows have inconsistent lengths (row {row})")]
    RaggedMatrix { row: usize },
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rational parse error at row {row}, column {column}: {source}")]
    BadEntry {
        row: usize,
        column: usize,
        #[source]
        source: RationalParseError,
    },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Dense row-major matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn from_rows(rows_data: Vec<Vec<Rat>>) -> Result<Self, FlattenError> {
        let rows = rows_data.len();
        let cols = rows_data.first().map(Vec::len).ok_or(FlattenError::EmptyMatrix)?;
        if cols == 0 {
            return Err(FlattenError::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(rows * cols);
        for (i, row) in rows_data.into_iter().enumerate() {
            if row.len() != cols {
                return Err(FlattenError::RaggedMatrix { row: i + 1 });
            }
            data.extend(row);
        }
        Ok(RatMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rat {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Rat) {
        self.data[r * self.cols + c] = value;
    }

    pub fn entries(&self) -> impl Iterator<Item = &Rat> {
        self.data.iter()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| crate::rational::to_f64(self.get(r, c))).collect())
            .collect()
    }

    /// Exact rank by fraction-free Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<Rat>> = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c).clone()).collect())
            .collect();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..self.cols {
            let pivot = (row..self.rows).find(|&r| !m[r][col].is_zero());
            let Some(p) = pivot else { continue };
            m.swap(row, p);
            for r in row + 1..self.rows {
                if m[r][col].is_zero() {
                    continue;
                }
                let factor = &m[r][col] / &m[row][col];
                for c in col..self.cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] = &m[r][c] - &delta;
                }
            }
            rank += 1;
            row += 1;
            if row == self.rows {
                break;
            }
        }
        rank
    }

    /// TSV body, entries as `p/q`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    out.push('\t');
                }
                out.push_str(&format_rational(self.get(r, c)));
            }
            out.push('\n');
        }
        out
    }

    /// Parse a TSV/whitespace matrix of rationals or decimal literals;
    /// decimals are taken exactly as printed. `#` lines are comments.
    pub fn parse_tsv(text: &str) -> Result<Self, FlattenError> {
        let mut rows_data = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for (col, token) in line.split(['\t', ' ']).filter(|t| !t.is_empty()).enumerate() {
                let value = parse_rational(token).map_err(|source| FlattenError::BadEntry {
                    row: rows_data.len() + 1,
                    column: col + 1,
                    source,
                })?;
                row.push(value);
            }
            rows_data.push(row);
        }
        Self::from_rows(rows_data)
    }

    pub fn load(path: &Path) -> Result<Self, FlattenError> {
        let text = std::fs::read_to_string(path).map_err(|source| FlattenError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_tsv(&text)
    }
}

/// The flattening of a boundary distribution along one edge bipartition.
#[derive(Debug, Clone)]
pub struct Flattening {
    pub split: EdgeSplit,
    pub matrix: RatMatrix,
}

/// Reshape the tensor into the 2^r x 2^(n-r) matrix of the split. Every
/// tensor entry lands in exactly one cell.
pub fn flatten(
    dist: &BoundaryDistribution,
    split: &EdgeSplit,
) -> Result<Flattening, FlattenError> {
    let n = dist.n_leaves();
    if split.n_leaves() != n {
        return Err(FlattenError::LeafCountMismatch { split: split.n_leaves(), dist: n });
    }
    let side_a = split.side_a();
    let side_b = split.side_b();
    let mut matrix = RatMatrix::zeros(1 << side_a.len(), 1 << side_b.len());
    for (&pattern, value) in dist.entries() {
        let mut u = 0usize;
        for &leaf in &side_a {
            u = u << 1 | ((pattern >> (n - 1 - leaf)) & 1) as usize;
        }
        let mut v = 0usize;
        for &leaf in &side_b {
            v = v << 1 | ((pattern >> (n - 1 - leaf)) & 1) as usize;
        }
        matrix.set(u, v, value.clone());
    }
    Ok(Flattening { split: *split, matrix })
}

/// Marginal distribution of side-A patterns (row sums of the flattening).
pub fn side_a_marginal(flattening: &Flattening) -> Vec<Rat> {
    (0..flattening.matrix.rows())
        .map(|r| {
            (0..flattening.matrix.cols())
                .fold(Rat::zero(), |acc, c| acc + flattening.matrix.get(r, c))
        })
        .collect()
}

/// For each tree, its internal splits minus those common to every candidate.
/// Trees must share one leaf set; identical candidates keep nothing.
pub fn distinguishing_splits(
    trees: &[PhyloTree],
) -> Result<Vec<Vec<EdgeSplit>>, FlattenError> {
    common_leaf_set(trees)?;
    let per_tree: Vec<Vec<EdgeSplit>> = trees
        .iter()
        .map(internal_edge_splits)
        .collect::<Result<_, _>>()?;
    let mut shared: BTreeSet<EdgeSplit> = per_tree[0].iter().copied().collect();
    for splits in &per_tree[1..] {
        let s: BTreeSet<EdgeSplit> = splits.iter().copied().collect();
        shared = shared.intersection(&s).copied().collect();
    }
    Ok(per_tree
        .into_iter()
        .map(|splits| splits.into_iter().filter(|s| !shared.contains(s)).collect())
        .collect())
}

/// Render the flattening with pattern-labelled header comments.
pub fn flattening_to_tsv(flattening: &Flattening, names: &[String]) -> String {
    let mut out = String::new();
    writeln!(out, "# split: {}", flattening.split.describe(names)).unwrap();
    out.push_str(&flattening.matrix.to_tsv());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BoundaryDistribution;
    use crate::rational::{rat, rat_int};
    use std::collections::BTreeMap;

    fn dist(n: usize, entries: &[(u64, (i64, i64))]) -> BoundaryDistribution {
        let map: BTreeMap<u64, Rat> =
            entries.iter().map(|&(p, (a, b))| (p, rat(a, b))).collect();
        BoundaryDistribution::from_entries(n, map).unwrap()
    }

    #[test]
    fn point_mass_flattens_to_corner() {
        let d = dist(3, &[(0, (1, 1))]);
        let split = EdgeSplit::from_indices(&[0], 3);
        let f = flatten(&d, &split).unwrap();
        assert_eq!(f.matrix.rows(), 2);
        assert_eq!(f.matrix.cols(), 4);
        assert_eq!(f.matrix.get(0, 0), &rat_int(1));
        let total: Rat = f.matrix.entries().cloned().sum();
        assert_eq!(total, rat_int(1));
    }

    #[test]
    fn big_endian_ascending_convention() {
        // Pattern 0b10110 over 5 leaves; split {0,2}|{1,3,4}.
        let d = dist(5, &[(0b10110, (1, 1))]);
        let split = EdgeSplit::from_indices(&[0, 2], 5);
        let f = flatten(&d, &split).unwrap();
        // side A = leaves (0,2) -> bits (1,1) -> row 3; side B = (1,3,4) -> (0,1,0) -> col 2.
        assert_eq!(f.matrix.get(3, 2), &rat_int(1));
    }

    #[test]
    fn row_sums_are_side_a_marginal() {
        let d = dist(4, &[(0b0000, (1, 4)), (0b0101, (1, 4)), (0b1100, (1, 2))]);
        let split = EdgeSplit::from_indices(&[0, 1], 4);
        let f = flatten(&d, &split).unwrap();
        let marginal = side_a_marginal(&f);
        assert_eq!(marginal[0], rat(1, 4)); // 0000
        assert_eq!(marginal[1], rat(1, 4)); // 0101 has side bits 01
        assert_eq!(marginal[3], rat(1, 2)); // 1100
        assert_eq!(marginal[2], rat_int(0));
    }

    #[test]
    fn entry_multiset_is_preserved() {
        let d = dist(4, &[(0b0011, (1, 3)), (0b0110, (1, 3)), (0b1111, (1, 3))]);
        for side in [&[0usize][..], &[0, 1], &[0, 2], &[0, 1, 2]] {
            let split = EdgeSplit::from_indices(side, 4);
            let f = flatten(&d, &split).unwrap();
            let mut nonzero: Vec<Rat> =
                f.matrix.entries().filter(|e| !e.is_zero()).cloned().collect();
            nonzero.sort();
            assert_eq!(nonzero, vec![rat(1, 3), rat(1, 3), rat(1, 3)]);
        }
    }

    #[test]
    fn leaf_mismatch_is_rejected() {
        let d = dist(3, &[(0, (1, 1))]);
        let split = EdgeSplit::from_indices(&[0], 4);
        assert!(matches!(
            flatten(&d, &split),
            Err(FlattenError::LeafCountMismatch { .. })
        ));
    }

    #[test]
    fn rank_of_rational_matrix() {
        let m = RatMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(2), rat_int(3)],
            vec![rat_int(2), rat_int(4), rat_int(6)],
            vec![rat_int(0), rat_int(1), rat_int(1)],
        ])
        .unwrap();
        assert_eq!(m.rank(), 2);
        assert_eq!(RatMatrix::zeros(3, 4).rank(), 0);
    }

    #[test]
    fn matrix_tsv_parses_decimals_exactly() {
        let m = RatMatrix::parse_tsv("# comment\n0.2\t0.0121\n1/2\t0\n").unwrap();
        assert_eq!(m.get(0, 0), &rat(1, 5));
        assert_eq!(m.get(0, 1), &rat(121, 10000));
        assert_eq!(m.get(1, 0), &rat(1, 2));
        let round = RatMatrix::parse_tsv(&m.to_tsv()).unwrap();
        assert_eq!(round, m);
    }

    #[test]
    fn matrix_tsv_rejects_ragged_and_garbage() {
        assert!(matches!(
            RatMatrix::parse_tsv("1\t2\n3\n"),
            Err(FlattenError::RaggedMatrix { .. })
        ));
        assert!(matches!(
            RatMatrix::parse_tsv("1\tx\n"),
            Err(FlattenError::BadEntry { .. })
        ));
        assert!(RatMatrix::parse_tsv("").is_err());
    }

    #[test]
    fn distinguishing_splits_singleton_and_disjoint() {
        use crate::tree::PhyloTree;
        let t1 = PhyloTree::parse_newick("((a,b),(c,(d,e)))").unwrap();
        let only = distinguishing_splits(std::slice::from_ref(&t1)).unwrap();
        assert!(only[0].is_empty());

        // Two 5-leaf caterpillars with disjoint internal split sets.
        let order: Vec<String> =
            ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        let u = PhyloTree::parse_newick("((a,b),(c,(d,e)))")
            .unwrap()
            .reindexed(&order)
            .unwrap();
        let v = PhyloTree::parse_newick("((a,c),(e,(b,d)))")
            .unwrap()
            .reindexed(&order)
            .unwrap();
        let splits = distinguishing_splits(&[u.clone(), v.clone()]).unwrap();
        assert_eq!(splits[0], internal_edge_splits(&u).unwrap());
        assert_eq!(splits[1], internal_edge_splits(&v).unwrap());
    }

    #[test]
    fn distinguishing_splits_requires_common_leaves() {
        let u = PhyloTree::parse_newick("((a,b),(c,d))").unwrap();
        let v = PhyloTree::parse_newick("((a,b),(c,e))").unwrap();
        assert!(distinguishing_splits(&[u, v]).is_err());
    }
}
