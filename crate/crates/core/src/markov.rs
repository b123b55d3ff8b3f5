//! The general two-state Markov model on a rooted tree: exact evaluation of
//! the boundary map, model-level grafting, and seeded sampling.
//!
//! The root carries a distribution (pi, 1-pi) over states (0, 1); every edge
//! carries a symmetric bistochastic transition [[1-p, p], [p, 1-p]] keyed by
//! the child endpoint. Distributions that arise this way have every
//! flattening along a tree edge of rank at most two, which is what the
//! invariants module tests against.

use crate::dataset::{BoundaryDistribution, DatasetError, PatternCounts};
use crate::rational::{format_rational, parse_rational, to_f64, Rat, RationalParseError};
use crate::tree::{PhyloTree, TreeError};
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

/// Identifier of the sampling generator, recorded in reports for
/// reproducibility.
pub const RNG_ALGORITHM: &str = "chacha20";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("edge parameter for `{0}` missing")]
    MissingEdge(String),
    #[error("parameter {value} for `{key}` is outside [0, 1]")]
    OutOfRange { key: String, value: String },
    #[error("model file has unknown edge key `{0}`")]
    UnknownEdge(String),
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("model tree has {0} leaves; the pattern space cap is 16")]
    TooManyLeaves(usize),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid model file: {0}")]
    BadFile(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Rational(#[from] RationalParseError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Root distribution plus one flip probability per edge of the rooted tree.
#[derive(Debug, Clone)]
pub struct TreeMarkovModel {
    tree: PhyloTree,
    /// P(state 0 at the root).
    pi: Rat,
    /// Flip probability of the edge above each non-root node, indexed by
    /// node id.
    edge_flip: BTreeMap<usize, Rat>,
}

fn check_unit_interval(value: &Rat, key: &str) -> Result<(), ModelError> {
    if value < &Rat::zero() || value > &Rat::one() {
        return Err(ModelError::OutOfRange {
            key: key.to_string(),
            value: format_rational(value),
        });
    }
    Ok(())
}

impl TreeMarkovModel {
    /// Build from per-edge parameters keyed by the canonical clade text of
    /// each edge's child endpoint (leaf name for pendant edges).
    pub fn new(
        tree: PhyloTree,
        pi: Rat,
        edges_by_clade: &BTreeMap<String, Rat>,
    ) -> Result<Self, ModelError> {
        check_unit_interval(&pi, "pi")?;
        let mut edge_flip = BTreeMap::new();
        let clade_keys = tree.clade_keys();
        for (clade, node) in &clade_keys {
            let p = edges_by_clade
                .get(clade)
                .ok_or_else(|| ModelError::MissingEdge(clade.clone()))?;
            check_unit_interval(p, clade)?;
            edge_flip.insert(*node, p.clone());
        }
        let known: std::collections::BTreeSet<&String> =
            clade_keys.iter().map(|(c, _)| c).collect();
        for key in edges_by_clade.keys() {
            if !known.contains(key) {
                return Err(ModelError::UnknownEdge(key.clone()));
            }
        }
        Ok(TreeMarkovModel { tree, pi, edge_flip })
    }

    pub(crate) fn from_node_params(
        tree: PhyloTree,
        pi: Rat,
        edge_flip: BTreeMap<usize, Rat>,
    ) -> Self {
        TreeMarkovModel { tree, pi, edge_flip }
    }

    pub fn tree(&self) -> &PhyloTree {
        &self.tree
    }

    pub fn pi(&self) -> &Rat {
        &self.pi
    }

    pub fn edge_flip(&self, node: usize) -> &Rat {
        &self.edge_flip[&node]
    }

    /// Parameters keyed by clade text, the external representation.
    pub fn edges_by_clade(&self) -> BTreeMap<String, Rat> {
        self.tree
            .clade_keys()
            .into_iter()
            .map(|(clade, node)| (clade, self.edge_flip[&node].clone()))
            .collect()
    }
}

/// Exact boundary distribution of the model: dynamic programming over the
/// tree, equivalent to the sum over all internal-state histories.
pub fn boundary_map(model: &TreeMarkovModel) -> Result<BoundaryDistribution, ModelError> {
    let n = model.tree.n_leaves();
    if n > crate::dataset::MAX_PATTERN_LEAVES {
        return Err(ModelError::TooManyLeaves(n));
    }

    // For node v: table over (pattern restricted to leaves below v) x state
    // of v, of the probability of that pattern given the state.
    struct Sub {
        leaves: Vec<usize>,
        /// index = pattern over `leaves` (big-endian in listed order)
        table: Vec<[Rat; 2]>,
    }

    fn walk(model: &TreeMarkovModel, node: usize) -> Sub {
        let tree = &model.tree;
        if let Some(name) = tree.node_name(node) {
            let leaf = tree.leaf_index(name).expect("leaf in order");
            return Sub {
                leaves: vec![leaf],
                table: vec![[Rat::one(), Rat::zero()], [Rat::zero(), Rat::one()]],
            };
        }
        let mut acc: Option<Sub> = None;
        for &child in tree.children_of(node) {
            let sub = walk(model, child);
            // Transition across the child edge.
            let p = model.edge_flip(child);
            let stay = Rat::one() - p;
            let transformed: Vec<[Rat; 2]> = sub
                .table
                .iter()
                .map(|t| {
                    [
                        &stay * &t[0] + p * &t[1],
                        p * &t[0] + &stay * &t[1],
                    ]
                })
                .collect();
            let sub = Sub { leaves: sub.leaves, table: transformed };
            acc = Some(match acc {
                None => sub,
                Some(left) => {
                    let mut leaves = left.leaves.clone();
                    leaves.extend(&sub.leaves);
                    let right_size = sub.table.len();
                    let mut table =
                        Vec::with_capacity(left.table.len() * right_size);
                    for lt in &left.table {
                        for rt in &sub.table {
                            table.push([&lt[0] * &rt[0], &lt[1] * &rt[1]]);
                        }
                    }
                    Sub { leaves, table }
                }
            });
        }
        acc.expect("internal node has children")
    }

    let root_sub = walk(model, model.tree.root_id());
    let pi0 = model.pi.clone();
    let pi1 = Rat::one() - &pi0;
    let mut entries: BTreeMap<u64, Rat> = BTreeMap::new();
    for (local_pattern, probs) in root_sub.table.iter().enumerate() {
        let value = &pi0 * &probs[0] + &pi1 * &probs[1];
        if value.is_zero() {
            continue;
        }
        // Scatter local bits (over root_sub.leaves order) into global
        // big-endian positions.
        let width = root_sub.leaves.len();
        let mut pattern = 0u64;
        for (slot, &leaf) in root_sub.leaves.iter().enumerate() {
            let bit = (local_pattern >> (width - 1 - slot)) & 1;
            pattern |= (bit as u64) << (n - 1 - leaf);
        }
        *entries.entry(pattern).or_insert_with(Rat::zero) += value;
    }
    Ok(BoundaryDistribution::from_entries(n, entries)?)
}

/// Composition of two symmetric flip channels in series.
pub fn compose_flips(p: &Rat, q: &Rat) -> Rat {
    p + q - Rat::from_integer(2.into()) * p * q
}

/// Graft two models at a shared leaf. The glued edge takes the product
/// transition (flip p' + p'' - 2 p' p''), every other edge keeps its
/// parameter, and the result keeps the first model's root and pi. The
/// second model's root distribution plays no further role.
pub fn graft_models(
    m1: &TreeMarkovModel,
    m2: &TreeMarkovModel,
    shared_leaf: &str,
) -> Result<TreeMarkovModel, ModelError> {
    // Adjacency with undirected edges carrying flip parameters. Vertices
    // are (tree_id, node_id); symmetric channels make orientation free.
    type V = (u8, usize);
    let mut adjacency: BTreeMap<V, Vec<(V, Rat)>> = BTreeMap::new();
    let mut names: BTreeMap<V, String> = BTreeMap::new();
    for (tid, model) in [(0u8, m1), (1u8, m2)] {
        let tree = model.tree();
        for node in 0..tree.node_count() {
            if let Some(name) = tree.node_name(node) {
                names.insert((tid, node), name.to_string());
            }
            if let Some(parent) = tree.parent_of(node) {
                let p = model.edge_flip(node).clone();
                adjacency.entry((tid, node)).or_default().push(((tid, parent), p.clone()));
                adjacency.entry((tid, parent)).or_default().push(((tid, node), p));
            } else {
                adjacency.entry((tid, node)).or_default();
            }
        }
    }

    let find_leaf = |tid: u8, model: &TreeMarkovModel| -> Result<V, ModelError> {
        let tree = model.tree();
        (0..tree.node_count())
            .find(|&i| tree.node_name(i) == Some(shared_leaf))
            .map(|i| (tid, i))
            .ok_or_else(|| ModelError::Tree(TreeError::MissingLeaf(shared_leaf.to_string())))
    };
    let l1 = find_leaf(0, m1)?;
    let l2 = find_leaf(1, m2)?;
    for name in m1.tree().leaf_names() {
        if name != shared_leaf && m2.tree().leaf_index(name).is_some() {
            return Err(ModelError::Tree(TreeError::NameCollision(name.clone())));
        }
    }

    // Detach the two shared-leaf vertices and fuse their pendant edges.
    let mut remove_leaf = |leaf: V| -> (V, Rat) {
        let (neighbor, p) = adjacency[&leaf][0].clone();
        adjacency.remove(&leaf);
        let list = adjacency.get_mut(&neighbor).unwrap();
        list.retain(|(v, _)| *v != leaf);
        (neighbor, p)
    };
    let (u, p1) = remove_leaf(l1);
    let (v, p2) = remove_leaf(l2);
    let glued = compose_flips(&p1, &p2);
    adjacency.get_mut(&u).unwrap().push((v, glued.clone()));
    adjacency.get_mut(&v).unwrap().push((u, glued));

    // Suppress unnamed degree-2 vertices other than the root of m1.
    let result_root: V = (0, m1.tree().root_id());
    loop {
        let candidate = adjacency
            .iter()
            .find(|(vertex, list)| {
                **vertex != result_root && !names.contains_key(*vertex) && list.len() == 2
            })
            .map(|(vertex, _)| *vertex);
        let Some(mid) = candidate else { break };
        let list = adjacency.remove(&mid).unwrap();
        let ((a, pa), (b, pb)) = (list[0].clone(), list[1].clone());
        let fused = compose_flips(&pa, &pb);
        let la = adjacency.get_mut(&a).unwrap();
        la.retain(|(x, _)| *x != mid);
        la.push((b, fused.clone()));
        let lb = adjacency.get_mut(&b).unwrap();
        lb.retain(|(x, _)| *x != mid);
        lb.push((a, fused));
    }

    // Rebuild a rooted tree from the adjacency, rooted at m1's root.
    let mut order: Vec<String> = m1
        .tree()
        .leaf_names()
        .iter()
        .filter(|n| n.as_str() != shared_leaf)
        .cloned()
        .collect();
    order.extend(
        m2.tree().leaf_names().iter().filter(|n| n.as_str() != shared_leaf).cloned(),
    );
    let mut tree = PhyloTree::new_empty(order);
    let mut edge_flip = BTreeMap::new();

    fn build(
        adjacency: &BTreeMap<(u8, usize), Vec<((u8, usize), Rat)>>,
        names: &BTreeMap<(u8, usize), String>,
        vertex: (u8, usize),
        from: Option<(u8, usize)>,
        tree: &mut PhyloTree,
        edge_flip: &mut BTreeMap<usize, Rat>,
    ) -> usize {
        let id = tree.push_node(names.get(&vertex).cloned());
        for (next, p) in &adjacency[&vertex] {
            if Some(*next) == from {
                continue;
            }
            let child = build(adjacency, names, *next, Some(vertex), tree, edge_flip);
            tree.attach(id, child);
            edge_flip.insert(child, p.clone());
        }
        id
    }
    let root = build(&adjacency, &names, result_root, None, &mut tree, &mut edge_flip);
    tree.root = root;
    Ok(TreeMarkovModel::from_node_params(tree, m1.pi.clone(), edge_flip))
}

/// N independent draws from the model's boundary distribution, reproducible
/// from the seed (ChaCha20 keyed by it).
pub fn sample_patterns(
    model: &TreeMarkovModel,
    count: u64,
    seed: u64,
) -> Result<PatternCounts, ModelError> {
    if count == 0 {
        return Err(ModelError::EmptySample);
    }
    let n = model.tree.n_leaves();
    if n > crate::dataset::MAX_PATTERN_LEAVES {
        return Err(ModelError::TooManyLeaves(n));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let pi0 = to_f64(&model.pi);
    let flips: BTreeMap<usize, f64> =
        model.edge_flip.iter().map(|(&k, v)| (k, to_f64(v))).collect();

    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..count {
        let mut pattern = 0u64;
        let mut stack = vec![(model.tree.root_id(), u8::from(rng.gen::<f64>() >= pi0))];
        while let Some((node, state)) = stack.pop() {
            if let Some(name) = model.tree.node_name(node) {
                let leaf = model.tree.leaf_index(name).unwrap();
                pattern |= (state as u64) << (n - 1 - leaf);
                continue;
            }
            for &child in model.tree.children_of(node) {
                let flip = rng.gen::<f64>() < flips[&child];
                stack.push((child, state ^ u8::from(flip)));
            }
        }
        *counts.entry(pattern).or_insert(0) += 1;
    }
    Ok(PatternCounts { n_leaves: n, counts, total: count })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    tree: String,
    pi: String,
    edges: BTreeMap<String, String>,
}

/// Serialize to the JSON model format: Newick tree, pi, and per-edge
/// parameters keyed by the child clade of each edge.
pub fn model_to_json(model: &TreeMarkovModel) -> String {
    let file = ModelFile {
        tree: model.tree.write_newick(),
        pi: format_rational(&model.pi),
        edges: model
            .edges_by_clade()
            .into_iter()
            .map(|(k, v)| (k, format_rational(&v)))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<TreeMarkovModel, ModelError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| ModelError::BadFile(e.to_string()))?;
    let tree = PhyloTree::parse_newick(&file.tree)?;
    let pi = parse_rational(&file.pi)?;
    let mut edges = BTreeMap::new();
    for (k, v) in file.edges {
        edges.insert(k, parse_rational(&v)?);
    }
    TreeMarkovModel::new(tree, pi, &edges)
}

pub fn load_model(path: &Path) -> Result<TreeMarkovModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    model_from_json(&text)
}

/// Brute-force boundary map: explicit sum over all internal-vertex state
/// assignments. Exponential; retained as the independent cross-check for
/// the dynamic program.
pub fn boundary_map_naive(model: &TreeMarkovModel) -> Result<BoundaryDistribution, ModelError> {
    let tree = &model.tree;
    let n = tree.n_leaves();
    if n > 10 {
        return Err(ModelError::TooManyLeaves(n));
    }
    let internal: Vec<usize> =
        (0..tree.node_count()).filter(|&i| tree.node_name(i).is_none()).collect();
    let mut entries: BTreeMap<u64, Rat> = BTreeMap::new();
    for leaf_pattern in 0u64..(1 << n) {
        let mut total = Rat::zero();
        for assignment in 0u64..(1 << internal.len()) {
            let state = |node: usize| -> u8 {
                match tree.node_name(node) {
                    Some(name) => {
                        let leaf = tree.leaf_index(name).unwrap();
                        ((leaf_pattern >> (n - 1 - leaf)) & 1) as u8
                    }
                    None => {
                        let slot = internal.iter().position(|&v| v == node).unwrap();
                        ((assignment >> slot) & 1) as u8
                    }
                }
            };
            let mut term = if state(tree.root_id()) == 0 {
                model.pi.clone()
            } else {
                Rat::one() - &model.pi
            };
            for node in 0..tree.node_count() {
                if let Some(parent) = tree.parent_of(node) {
                    let p = model.edge_flip(node);
                    term *= if state(parent) == state(node) {
                        Rat::one() - p
                    } else {
                        p.clone()
                    };
                }
            }
            total += term;
        }
        if !total.is_zero() {
            entries.insert(leaf_pattern, total);
        }
    }
    Ok(BoundaryDistribution::from_entries(n, entries)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn model(newick: &str, pi: (i64, i64), edges: &[(&str, (i64, i64))]) -> TreeMarkovModel {
        let tree = PhyloTree::parse_newick(newick).unwrap();
        let map: BTreeMap<String, Rat> =
            edges.iter().map(|&(k, (a, b))| (k.to_string(), rat(a, b))).collect();
        TreeMarkovModel::new(tree, rat(pi.0, pi.1), &map).unwrap()
    }

    #[test]
    fn identity_transitions_put_mass_on_constant_patterns() {
        let m = model(
            "((A,B),C)",
            (1, 3),
            &[("A", (0, 1)), ("B", (0, 1)), ("C", (0, 1)), ("(A,B)", (0, 1))],
        );
        let d = boundary_map(&m).unwrap();
        assert_eq!(d.get(0b000), rat(1, 3));
        assert_eq!(d.get(0b111), rat(2, 3));
        assert!(d.is_normalized());
    }

    #[test]
    fn complete_mixing_is_uniform() {
        let m = model(
            "((A,B),C)",
            (1, 2),
            &[("A", (1, 2)), ("B", (1, 2)), ("C", (1, 2)), ("(A,B)", (1, 2))],
        );
        let d = boundary_map(&m).unwrap();
        for p in 0..8u64 {
            assert_eq!(d.get(p), rat(1, 8));
        }
    }

    #[test]
    fn dp_matches_naive_enumeration() {
        // Trifurcating-root four-leaf tree with five edges, as in the
        // smallest nontrivial parameter count.
        let m = model(
            "(A,B,(C,D))",
            (1, 3),
            &[
                ("A", (1, 5)),
                ("B", (1, 7)),
                ("C", (2, 7)),
                ("D", (1, 11)),
                ("(C,D)", (3, 11)),
            ],
        );
        let dp = boundary_map(&m).unwrap();
        let naive = boundary_map_naive(&m).unwrap();
        assert_eq!(dp, naive);
        assert!(dp.is_normalized());
    }

    #[test]
    fn missing_or_out_of_range_edges_rejected() {
        let tree = PhyloTree::parse_newick("((A,B),C)").unwrap();
        let mut edges = BTreeMap::new();
        edges.insert("A".to_string(), rat(1, 2));
        assert!(matches!(
            TreeMarkovModel::new(tree.clone(), rat(1, 2), &edges),
            Err(ModelError::MissingEdge(_))
        ));
        let mut edges = BTreeMap::new();
        for k in ["A", "B", "C", "(A,B)"] {
            edges.insert(k.to_string(), rat(1, 2));
        }
        edges.insert("A".to_string(), rat(3, 2));
        assert!(matches!(
            TreeMarkovModel::new(tree.clone(), rat(1, 2), &edges),
            Err(ModelError::OutOfRange { .. })
        ));
        let mut edges = BTreeMap::new();
        for k in ["A", "B", "C", "(A,B)", "bogus"] {
            edges.insert(k.to_string(), rat(1, 2));
        }
        assert!(matches!(
            TreeMarkovModel::new(tree, rat(1, 2), &edges),
            Err(ModelError::UnknownEdge(_))
        ));
    }

    #[test]
    fn compose_flip_identities() {
        assert_eq!(compose_flips(&rat(0, 1), &rat(3, 7)), rat(3, 7));
        assert_eq!(compose_flips(&rat(1, 2), &rat(1, 5)), rat(1, 2));
        assert_eq!(compose_flips(&rat(1, 2), &rat(1, 2)), rat(1, 2));
    }

    #[test]
    fn graft_composes_the_glued_edge() {
        let m1 = model(
            "((a,b),s)",
            (1, 3),
            &[("a", (1, 5)), ("b", (1, 7)), ("s", (1, 4)), ("(a,b)", (2, 7))],
        );
        let m2 = model(
            "((c,d),s)",
            (1, 2),
            &[("c", (1, 11)), ("d", (2, 11)), ("s", (1, 3)), ("(c,d)", (3, 11))],
        );
        let g = graft_models(&m1, &m2, "s").unwrap();
        assert_eq!(g.tree().n_leaves(), 4);
        assert_eq!(g.pi(), &rat(1, 3));
        // The grafted tree matches the tree-level graft.
        let tg = crate::tree::graft(m1.tree(), m2.tree(), "s").unwrap();
        assert_eq!(g.tree().unrooted_topology(), tg.unrooted_topology());
        // Glued edge: s-edge of m1 (1/4) composed with s-edge of m2 (1/3),
        // then m2's suppressed binary root composes with (c,d)'s 3/11.
        let glued = compose_flips(&compose_flips(&rat(1, 4), &rat(1, 3)), &rat(3, 11));
        let edges = g.edges_by_clade();
        assert_eq!(edges["(c,d)"], glued);
        assert_eq!(edges["a"], rat(1, 5));
        assert_eq!(edges["(a,b)"], rat(2, 7));
    }

    #[test]
    fn graft_marginal_consistency() {
        // Marginalizing the grafted boundary map onto m1's leaves with the
        // shared leaf replaced by a p=0 leaf of m2 equals m1's boundary map
        // with the shared edge extended by m2's pendant parameter chain.
        let m1 = model(
            "((a,b),s)",
            (2, 5),
            &[("a", (1, 5)), ("b", (1, 7)), ("s", (1, 4)), ("(a,b)", (2, 7))],
        );
        let m2 = model(
            "((s,x),y)",
            (1, 2),
            &[("s", (1, 3)), ("x", (0, 1)), ("y", (1, 6)), ("(s,x)", (0, 1))],
        );
        let g = graft_models(&m1, &m2, "s").unwrap();
        let gd = boundary_map(&g).unwrap();
        // Marginal onto (a, b, x): sum out y.
        let order = g.tree().leaf_names().to_vec();
        let idx = |name: &str| order.iter().position(|n| n == name).unwrap();
        let n = order.len();
        let mut marginal: BTreeMap<u64, Rat> = BTreeMap::new();
        for (&p, v) in gd.entries() {
            let bit = |leaf: usize| (p >> (n - 1 - leaf)) & 1;
            let key = bit(idx("a")) << 2 | bit(idx("b")) << 1 | bit(idx("x"));
            *marginal.entry(key).or_insert_with(Rat::zero) += v;
        }
        // Extended m1: shared leaf renamed x, edge = s-chain of m2 up to x.
        // Path s->attach->x has flips 1/3 then 0, composed with m1's 1/4.
        let extended = model(
            "((a,b),x)",
            (2, 5),
            &[
                ("a", (1, 5)),
                ("b", (1, 7)),
                ("x", (1, 2)),
                ("(a,b)", (2, 7)),
            ],
        );
        // Replace the placeholder x parameter with the composed value.
        let mut edges = extended.edges_by_clade();
        edges.insert("x".to_string(), compose_flips(&rat(1, 4), &rat(1, 3)));
        let extended =
            TreeMarkovModel::new(extended.tree().clone(), rat(2, 5), &edges).unwrap();
        let ed = boundary_map(&extended).unwrap();
        for p in 0..8u64 {
            let got = marginal.get(&p).cloned().unwrap_or_else(Rat::zero);
            assert_eq!(got, ed.get(p), "pattern {p:03b}");
        }
    }

    #[test]
    fn sampling_is_reproducible_and_consistent() {
        let m = model(
            "((A,B),(C,D))",
            (1, 3),
            &[
                ("A", (1, 5)),
                ("B", (1, 7)),
                ("C", (2, 7)),
                ("D", (1, 11)),
                ("(A,B)", (3, 11)),
                ("(C,D)", (1, 13)),
            ],
        );
        let s1 = sample_patterns(&m, 2000, 42).unwrap();
        let s2 = sample_patterns(&m, 2000, 42).unwrap();
        assert_eq!(s1, s2);
        let s3 = sample_patterns(&m, 2000, 43).unwrap();
        assert_ne!(s1, s3);
        assert_eq!(s1.total, 2000);
        assert_eq!(s1.counts.values().sum::<u64>(), 2000);
    }

    #[test]
    fn single_draw_from_deterministic_model() {
        let m = model(
            "((A,B),C)",
            (1, 1),
            &[("A", (0, 1)), ("B", (0, 1)), ("C", (0, 1)), ("(A,B)", (0, 1))],
        );
        let s = sample_patterns(&m, 1, 7).unwrap();
        assert_eq!(s.counts, BTreeMap::from([(0b000u64, 1)]));
        assert!(matches!(sample_patterns(&m, 0, 7), Err(ModelError::EmptySample)));
    }

    #[test]
    fn sampled_frequencies_approach_the_exact_map() {
        let m = model(
            "((A,B),(C,D))",
            (1, 3),
            &[
                ("A", (1, 5)),
                ("B", (1, 7)),
                ("C", (2, 7)),
                ("D", (1, 11)),
                ("(A,B)", (3, 11)),
                ("(C,D)", (1, 13)),
            ],
        );
        let exact = boundary_map(&m).unwrap();
        let sampled = sample_patterns(&m, 100_000, 20240601).unwrap();
        let total = sampled.total as f64;
        let mut tv = 0.0f64;
        for p in 0..16u64 {
            let emp = *sampled.counts.get(&p).unwrap_or(&0) as f64 / total;
            tv += (emp - to_f64(&exact.get(p))).abs();
        }
        tv /= 2.0;
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn model_json_round_trip() {
        let m = model(
            "((A,B),C)",
            (1, 3),
            &[("A", (1, 5)), ("B", (1, 7)), ("C", (2, 7)), ("(A,B)", (3, 11))],
        );
        let text = model_to_json(&m);
        let back = model_from_json(&text).unwrap();
        assert_eq!(back.pi(), m.pi());
        assert_eq!(back.edges_by_clade(), m.edges_by_clade());
        assert_eq!(boundary_map(&back).unwrap(), boundary_map(&m).unwrap());
        assert!(model_from_json("{\"broken\":").is_err());
    }
}
