//! Candidate-tree scoring and deterministic verdicts.
//!
//! Exact-rational comparisons decide the l-infinity and l-1 winners; the
//! distance criterion compares floats with an explicit indifference band.
//! The report never declares a "correct" tree, only per-criterion minima,
//! ties, and whether the criteria agree.

use crate::dataset::BoundaryDistribution;
use crate::flatten::{distinguishing_splits, FlattenError};
use crate::invariants::{score_splits, InvariantError, InvariantScore};
use crate::rational::{format_decimal, format_rational};
use crate::spectral::{distance_over_splits, DistanceEstimate, SpectralError};
use crate::tree::{common_leaf_set, internal_edge_splits, EdgeSplit, PhyloTree, TreeError};
use serde::Serialize;
use thiserror::Error;

/// Distances closer than this are reported as tied.
pub const DISTANCE_TIE_BAND: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("empty candidate list")]
    NoCandidates,
    #[error("candidate trees and distribution disagree on the leaf set")]
    LeafMismatch,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Flatten(#[from] FlattenError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Linf,
    L1,
    Dist,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Linf, Criterion::L1, Criterion::Dist];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Linf => "linf",
            Criterion::L1 => "l1",
            Criterion::Dist => "dist",
        }
    }

    pub fn parse(s: &str) -> Option<Criterion> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linf" | "l-inf" | "max" => Some(Criterion::Linf),
            "l1" => Some(Criterion::L1),
            "dist" | "distance" => Some(Criterion::Dist),
            _ => None,
        }
    }
}

/// Per-tree scores on every requested criterion.
#[derive(Debug, Clone)]
pub struct CandidateScore {
    pub newick: String,
    pub invariant: InvariantScore,
    pub distance: DistanceEstimate,
    pub splits_used: Vec<EdgeSplit>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub digest: String,
    pub n_languages: usize,
    pub n_variables: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RankingReport {
    pub dataset: DatasetInfo,
    pub criteria: Vec<Criterion>,
    pub conditional: bool,
    pub candidates: Vec<CandidateScore>,
    /// Winner per criterion: canonical Newick of the minimal candidate.
    pub winners: Vec<(Criterion, String)>,
    pub agreement: String,
}

impl RankingReport {
    pub fn winner(&self, criterion: Criterion) -> Option<&str> {
        self.winners
            .iter()
            .find(|(c, _)| *c == criterion)
            .map(|(_, w)| w.as_str())
    }
}

/// Score every candidate and pick the per-criterion minima. `conditional`
/// restricts each tree to its distinguishing splits; otherwise all internal
/// splits count. Ties are broken by canonical Newick order and flagged.
pub fn rank(
    dist: &BoundaryDistribution,
    trees: &[PhyloTree],
    criteria: &[Criterion],
    conditional: bool,
    n_variables: Option<u64>,
) -> Result<RankingReport, RankingError> {
    if trees.is_empty() {
        return Err(RankingError::NoCandidates);
    }
    let leaves = common_leaf_set(trees).map_err(|_| RankingError::LeafMismatch)?;
    if leaves.len() != dist.n_leaves() {
        return Err(RankingError::LeafMismatch);
    }

    let split_sets: Vec<Vec<EdgeSplit>> = if conditional {
        distinguishing_splits(trees)?
    } else {
        trees
            .iter()
            .map(internal_edge_splits)
            .collect::<Result<_, TreeError>>()?
    };

    let mut candidates = Vec::with_capacity(trees.len());
    for (tree, splits) in trees.iter().zip(&split_sets) {
        let invariant = score_splits(dist, splits)?;
        let distance = distance_over_splits(dist, splits)?;
        let mut flags = Vec::new();
        if invariant.has_degenerate_split() {
            flags.push("degenerate-flattening".to_string());
        }
        if distance.nonunique_minimizer {
            flags.push("nonunique-minimizer".to_string());
        }
        if splits.is_empty() {
            flags.push("no-distinguishing-splits".to_string());
        }
        candidates.push(CandidateScore {
            newick: tree.write_newick(),
            invariant,
            distance,
            splits_used: splits.clone(),
            flags,
        });
    }

    let mut winners = Vec::new();
    for &criterion in criteria {
        let tied: Vec<usize> = match criterion {
            Criterion::Linf => argmin_exact(&candidates, |c| &c.invariant.linf),
            Criterion::L1 => argmin_exact(&candidates, |c| &c.invariant.l1),
            Criterion::Dist => argmin_float(&candidates, |c| c.distance.lower_bound),
        };
        let winner = tied
            .iter()
            .map(|&i| candidates[i].newick.clone())
            .min()
            .expect("nonempty candidates");
        if tied.len() > 1 {
            for &i in &tied {
                candidates[i].flags.push(format!("tie:{}", criterion.name()));
            }
        }
        winners.push((criterion, winner));
    }

    let agreement = if winners.is_empty() {
        "no criteria requested".to_string()
    } else if winners.windows(2).all(|w| w[0].1 == w[1].1) {
        "consistent".to_string()
    } else {
        let detail: Vec<String> = winners
            .iter()
            .map(|(c, w)| format!("{} selects {}", c.name(), w))
            .collect();
        format!("criteria disagree: {}", detail.join("; "))
    };

    Ok(RankingReport {
        dataset: DatasetInfo {
            digest: dist.digest(),
            n_languages: dist.n_leaves(),
            n_variables,
        },
        criteria: criteria.to_vec(),
        conditional,
        candidates,
        winners,
        agreement,
    })
}

fn argmin_exact<'a, F>(candidates: &'a [CandidateScore], key: F) -> Vec<usize>
where
    F: Fn(&'a CandidateScore) -> &'a crate::rational::Rat,
{
    let best = candidates.iter().map(|c| key(c)).min().expect("nonempty");
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| key(c) == best)
        .map(|(i, _)| i)
        .collect()
}

fn argmin_float<F>(candidates: &[CandidateScore], key: F) -> Vec<usize>
where
    F: Fn(&CandidateScore) -> f64,
{
    let best = candidates.iter().map(|c| key(c)).fold(f64::INFINITY, f64::min);
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| key(c) <= best + DISTANCE_TIE_BAND)
        .map(|(i, _)| i)
        .collect()
}

/// JSON rendering of a report. Rationals appear as `p/q` strings with a
/// 5-significant-digit decimal companion; floats are emitted in full.
pub fn report_to_json(report: &RankingReport) -> serde_json::Value {
    use serde_json::json;
    let candidates: Vec<serde_json::Value> = report
        .candidates
        .iter()
        .map(|c| {
            json!({
                "newick": c.newick,
                "linf": format_rational(&c.invariant.linf),
                "linf_decimal": format_decimal(&c.invariant.linf),
                "l1": format_rational(&c.invariant.l1),
                "l1_decimal": format_decimal(&c.invariant.l1),
                "dist_sq_lb": c.distance.lower_bound,
                "minor_count": c.invariant.minor_count,
                "splits": c.splits_used.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                "per_split": c.invariant.per_split.iter().map(|s| json!({
                    "split": s.split.to_string(),
                    "linf": format_rational(&s.linf),
                    "l1": format_rational(&s.l1),
                    "degenerate": s.degenerate,
                })).collect::<Vec<_>>(),
                "per_split_dist_sq": c.distance.per_split.iter().map(|(s, d)| json!({
                    "split": s.to_string(),
                    "dist_sq": d,
                })).collect::<Vec<_>>(),
                "flags": c.flags,
            })
        })
        .collect();
    let winners: serde_json::Map<String, serde_json::Value> = report
        .winners
        .iter()
        .map(|(c, w)| (c.name().to_string(), json!(w)))
        .collect();
    json!({
        "dataset": {
            "digest": report.dataset.digest,
            "n_languages": report.dataset.n_languages,
            "n_variables": report.dataset.n_variables,
        },
        "conditional": report.conditional,
        "candidates": candidates,
        "winners": winners,
        "agreement": report.agreement,
    })
}

/// Plain-text table rendering; the JSON form is authoritative.
pub fn report_to_table(report: &RankingReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(
        out,
        "dataset digest {} ({} languages, {} variables)",
        &report.dataset.digest[..16],
        report.dataset.n_languages,
        report
            .dataset
            .n_variables
            .map(|n| n.to_string())
            .unwrap_or_else(|| "?".to_string()),
    )
    .unwrap();
    writeln!(out, "{:<44} {:>22} {:>22} {:>12}  flags", "tree", "linf", "l1", "dist^2")
        .unwrap();
    for c in &report.candidates {
        writeln!(
            out,
            "{:<44} {:>22} {:>22} {:>12}  {}",
            c.newick,
            format!(
                "{} ({})",
                format_rational(&c.invariant.linf),
                format_decimal(&c.invariant.linf)
            ),
            format!(
                "{} ({})",
                format_rational(&c.invariant.l1),
                format_decimal(&c.invariant.l1)
            ),
            format!("{:.4e}", c.distance.lower_bound),
            c.flags.join(","),
        )
        .unwrap();
    }
    for (criterion, winner) in &report.winners {
        writeln!(out, "winner[{}] = {}", criterion.name(), winner).unwrap();
    }
    writeln!(out, "agreement: {}", report.agreement).unwrap();
    out
}
