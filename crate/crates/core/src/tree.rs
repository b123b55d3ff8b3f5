//! Rooted leaf-labeled trees: Newick parsing and canonical emission, edge
//! bipartitions, multifurcation resolution, unrooted canonicalization,
//! exhaustive topology enumeration, grafting, and the ancient-pair move.
//!
//! Leaf indices come from the tree's leaf ordering (first appearance in the
//! Newick text by default, or an explicit analysis ordering via [`PhyloTree::reindexed`]).
//! Two rooted trees are the same unrooted topology iff their internal split
//! sets agree; root position is invisible to everything downstream.

use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

pub const MAX_ENUM_LEAVES: usize = 8;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("newick syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("duplicate leaf name `{0}`")]
    DuplicateLeaf(String),
    #[error("empty newick input")]
    EmptyInput,
    #[error("tree is not binary")]
    NotBinary,
    #[error("operation requires at least {required} leaves, tree has {actual}")]
    TooFewLeaves { required: usize, actual: usize },
    #[error("leaf count {0} out of range 3..={MAX_ENUM_LEAVES} for enumeration")]
    EnumerationRange(usize),
    #[error("leaf `{0}` not found")]
    MissingLeaf(String),
    #[error("leaf name collision on `{0}` between grafted trees")]
    NameCollision(String),
    #[error("ancient pair ({0}, {1}) is not a cherry in the input tree")]
    AncientPairNotCherry(String, String),
    #[error("ancient cherry ({0}, {1}) is not adjacent to the root in any binary resolution")]
    AncientCherryNotRootAdjacent(String, String),
    #[error("leaf ordering does not match the tree's leaf set (expected {expected} names, problem with `{name}`)")]
    LeafOrderMismatch { expected: usize, name: String },
    #[error("trees do not share a common leaf set")]
    LeafSetMismatch,
}

/// A labelled leaf together with its position in the analysis ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafLabel {
    pub name: String,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub(crate) parent: Option<usize>,
    pub(crate) children: Vec<usize>,
    /// Leaf name; `None` for internal nodes.
    pub(crate) name: Option<String>,
}

/// Rooted leaf-labeled tree, possibly multifurcating.
#[derive(Debug, Clone)]
pub struct PhyloTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) root: usize,
    /// index -> leaf name
    pub(crate) leaf_order: Vec<String>,
}

/// A leaf bipartition induced by an edge. `side_a` is the side containing
/// leaf 0; both sides are stored as bitmasks over leaf indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeSplit {
    mask_a: u64,
    n_leaves: usize,
}

impl EdgeSplit {
    /// Normalize so that side A contains leaf 0.
    pub fn new(mask: u64, n_leaves: usize) -> Self {
        assert!(n_leaves <= 64);
        let full = Self::full_mask(n_leaves);
        debug_assert_eq!(mask & !full, 0);
        let mask_a = if mask & 1 != 0 { mask } else { full & !mask };
        EdgeSplit { mask_a, n_leaves }
    }

    pub fn from_indices(side: &[usize], n_leaves: usize) -> Self {
        let mut mask = 0u64;
        for &i in side {
            assert!(i < n_leaves);
            mask |= 1 << i;
        }
        Self::new(mask, n_leaves)
    }

    fn full_mask(n_leaves: usize) -> u64 {
        if n_leaves == 64 {
            u64::MAX
        } else {
            (1u64 << n_leaves) - 1
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn mask_a(&self) -> u64 {
        self.mask_a
    }

    pub fn mask_b(&self) -> u64 {
        Self::full_mask(self.n_leaves) & !self.mask_a
    }

    pub fn side_a(&self) -> Vec<usize> {
        (0..self.n_leaves).filter(|i| self.mask_a >> i & 1 == 1).collect()
    }

    pub fn side_b(&self) -> Vec<usize> {
        (0..self.n_leaves).filter(|i| self.mask_a >> i & 1 == 0).collect()
    }

    pub fn size_a(&self) -> usize {
        self.mask_a.count_ones() as usize
    }

    pub fn size_b(&self) -> usize {
        self.n_leaves - self.size_a()
    }

    /// True when both sides have at least two leaves.
    pub fn is_internal(&self) -> bool {
        self.size_a() >= 2 && self.size_b() >= 2
    }

    pub fn describe(&self, names: &[String]) -> String {
        let side = |ix: Vec<usize>| {
            ix.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(",")
        };
        format!("{{{}}}|{{{}}}", side(self.side_a()), side(self.side_b()))
    }
}

impl fmt::Display for EdgeSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_side = |ix: Vec<usize>| {
            ix.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
        };
        write!(f, "{{{}}}|{{{}}}", fmt_side(self.side_a()), fmt_side(self.side_b()))
    }
}

/// Canonical unrooted form: the set of internal splits. Equal iff the two
/// rooted trees differ only by a root shift.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnrootedTopology {
    n_leaves: usize,
    canonical_splits: BTreeSet<EdgeSplit>,
}

impl UnrootedTopology {
    pub fn splits(&self) -> &BTreeSet<EdgeSplit> {
        &self.canonical_splits
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }
}

impl PhyloTree {
    /// Parse a Newick/bracket expression. Leaf names may contain ASCII
    /// alphanumerics plus `_ - .`; a trailing semicolon is optional.
    /// Leaf indices are assigned by first appearance.
    pub fn parse_newick(text: &str) -> Result<Self, TreeError> {
        let trimmed = text.trim();
        let body = trimmed.strip_suffix(';').unwrap_or(trimmed).trim_end();
        if body.is_empty() {
            return Err(TreeError::EmptyInput);
        }
        let bytes = body.as_bytes();
        let mut tree = PhyloTree { nodes: Vec::new(), root: 0, leaf_order: Vec::new() };
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut pos = 0usize;
        let root = tree.parse_subtree(bytes, &mut pos, &mut seen)?;
        if pos != bytes.len() {
            return Err(TreeError::Syntax {
                offset: pos,
                message: format!("unexpected trailing input `{}`", &body[pos..]),
            });
        }
        tree.root = root;
        Ok(tree)
    }

    fn parse_subtree(
        &mut self,
        bytes: &[u8],
        pos: &mut usize,
        seen: &mut BTreeSet<String>,
    ) -> Result<usize, TreeError> {
        if *pos >= bytes.len() {
            return Err(TreeError::Syntax { offset: *pos, message: "unexpected end of input".into() });
        }
        if bytes[*pos] == b'(' {
            *pos += 1;
            let node = self.push_node(None);
            loop {
                let child = self.parse_subtree(bytes, pos, seen)?;
                self.nodes[child].parent = Some(node);
                self.nodes[node].children.push(child);
                match bytes.get(*pos) {
                    Some(b',') => {
                        *pos += 1;
                    }
                    Some(b')') => {
                        *pos += 1;
                        break;
                    }
                    Some(&c) => {
                        return Err(TreeError::Syntax {
                            offset: *pos,
                            message: format!("expected `,` or `)`, found `{}`", c as char),
                        })
                    }
                    None => {
                        return Err(TreeError::Syntax { offset: *pos, message: "unclosed `(`".into() })
                    }
                }
            }
            if self.nodes[node].children.len() < 2 {
                return Err(TreeError::Syntax {
                    offset: *pos,
                    message: "internal node needs at least two children".into(),
                });
            }
            Ok(node)
        } else {
            let start = *pos;
            while *pos < bytes.len() {
                let c = bytes[*pos];
                if c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.' {
                    *pos += 1;
                } else {
                    break;
                }
            }
            if *pos == start {
                return Err(TreeError::Syntax {
                    offset: start,
                    message: format!("expected leaf name, found `{}`", bytes[start] as char),
                });
            }
            let name = std::str::from_utf8(&bytes[start..*pos]).unwrap().to_string();
            if !seen.insert(name.clone()) {
                return Err(TreeError::DuplicateLeaf(name));
            }
            self.leaf_order.push(name.clone());
            Ok(self.push_node(Some(name)))
        }
    }

    pub(crate) fn push_node(&mut self, name: Option<String>) -> usize {
        self.nodes.push(Node { parent: None, children: Vec::new(), name });
        self.nodes.len() - 1
    }

    pub(crate) fn new_empty(leaf_order: Vec<String>) -> PhyloTree {
        PhyloTree { nodes: Vec::new(), root: 0, leaf_order }
    }

    pub(crate) fn attach(&mut self, parent: usize, child: usize) {
        self.nodes[parent].children.push(child);
        self.nodes[child].parent = Some(parent);
    }

    pub fn parent_of(&self, node: usize) -> Option<usize> {
        self.nodes[node].parent
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_order.len()
    }

    pub fn leaf_names(&self) -> &[String] {
        &self.leaf_order
    }

    pub fn leaf_labels(&self) -> Vec<LeafLabel> {
        self.leaf_order
            .iter()
            .enumerate()
            .map(|(index, name)| LeafLabel { name: name.clone(), index })
            .collect()
    }

    pub fn leaf_index(&self, name: &str) -> Option<usize> {
        self.leaf_order.iter().position(|n| n == name)
    }

    /// Same tree with leaf indices taken from an explicit analysis ordering.
    /// The ordering must be a permutation of the tree's leaf names.
    pub fn reindexed(&self, order: &[String]) -> Result<Self, TreeError> {
        if order.len() != self.leaf_order.len() {
            return Err(TreeError::LeafOrderMismatch {
                expected: self.leaf_order.len(),
                name: order
                    .iter()
                    .find(|n| !self.leaf_order.contains(n))
                    .cloned()
                    .unwrap_or_else(|| format!("{} names supplied", order.len())),
            });
        }
        let have: BTreeSet<&String> = self.leaf_order.iter().collect();
        for name in order {
            if !have.contains(name) {
                return Err(TreeError::LeafOrderMismatch {
                    expected: self.leaf_order.len(),
                    name: name.clone(),
                });
            }
        }
        let mut out = self.clone();
        out.leaf_order = order.to_vec();
        Ok(out)
    }

    /// Smallest leaf index under each node; drives the canonical child order.
    fn min_leaf_below(&self, node: usize, memo: &mut Vec<Option<usize>>) -> usize {
        if let Some(v) = memo[node] {
            return v;
        }
        let v = match &self.nodes[node].name {
            Some(name) => self.leaf_index(name).expect("leaf name in order"),
            None => self.nodes[node]
                .children
                .clone()
                .into_iter()
                .map(|c| self.min_leaf_below(c, memo))
                .min()
                .expect("internal node has children"),
        };
        memo[node] = Some(v);
        v
    }

    /// Deterministic Newick text: children ordered by smallest contained
    /// leaf index, no branch lengths, no trailing semicolon.
    pub fn write_newick(&self) -> String {
        let mut memo = vec![None; self.nodes.len()];
        let mut out = String::new();
        self.write_node(self.root, &mut memo, &mut out);
        out
    }

    fn write_node(&self, node: usize, memo: &mut Vec<Option<usize>>, out: &mut String) {
        match &self.nodes[node].name {
            Some(name) => out.push_str(name),
            None => {
                let mut kids = self.nodes[node].children.clone();
                kids.sort_by_key(|&c| self.min_leaf_below(c, memo));
                out.push('(');
                for (i, c) in kids.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.write_node(*c, memo, out);
                }
                out.push(')');
            }
        }
    }

    fn leaf_mask_below(&self, node: usize, memo: &mut Vec<Option<u64>>) -> u64 {
        if let Some(v) = memo[node] {
            return v;
        }
        let v = match &self.nodes[node].name {
            Some(name) => 1u64 << self.leaf_index(name).expect("leaf name in order"),
            None => self.nodes[node]
                .children
                .clone()
                .into_iter()
                .map(|c| self.leaf_mask_below(c, memo))
                .fold(0, |a, b| a | b),
        };
        memo[node] = Some(v);
        v
    }

    /// True when every non-root internal node has exactly two children and
    /// the root has two or three (a rooted representation of an unrooted
    /// binary tree).
    pub fn is_binary(&self) -> bool {
        self.nodes.iter().enumerate().all(|(i, node)| {
            node.name.is_some()
                || if i == self.root {
                    (2..=3).contains(&node.children.len())
                } else {
                    node.children.len() == 2
                }
        })
    }

    /// True when every internal node, including the root, has exactly two
    /// children.
    pub fn is_rooted_binary(&self) -> bool {
        self.nodes
            .iter()
            .all(|node| node.name.is_some() || node.children.len() == 2)
    }

    /// The set of all splits induced by edges (internal and pendant),
    /// normalized and deduplicated. Root position is invisible here.
    fn all_splits(&self) -> BTreeSet<EdgeSplit> {
        let n = self.n_leaves();
        let mut memo = vec![None; self.nodes.len()];
        let mut set = BTreeSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if i == self.root {
                continue;
            }
            let below = self.leaf_mask_below(i, &mut memo);
            let _ = node;
            set.insert(EdgeSplit::new(below, n));
        }
        set
    }

    /// Canonical unrooted form: the internal splits only.
    pub fn unrooted_topology(&self) -> UnrootedTopology {
        let canonical_splits = self
            .all_splits()
            .into_iter()
            .filter(|s| s.is_internal())
            .collect();
        UnrootedTopology { n_leaves: self.n_leaves(), canonical_splits }
    }

    /// Clade below each node rendered as canonical Newick; used to key
    /// per-edge model parameters by the child endpoint of the edge.
    pub fn clade_keys(&self) -> Vec<(String, usize)> {
        let mut memo = vec![None; self.nodes.len()];
        let mut out = Vec::new();
        for i in 0..self.nodes.len() {
            if i == self.root {
                continue;
            }
            let mut text = String::new();
            self.write_node(i, &mut memo, &mut text);
            out.push((text, i));
        }
        out.sort();
        out
    }

    pub fn root_id(&self) -> usize {
        self.root
    }

    pub fn children_of(&self, node: usize) -> &[usize] {
        &self.nodes[node].children
    }

    pub fn node_name(&self, node: usize) -> Option<&str> {
        self.nodes[node].name.as_deref()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Rebuild into a fresh arena (used after structural edits).
    fn compact(&self) -> PhyloTree {
        fn copy(src: &PhyloTree, node: usize, dst: &mut PhyloTree) -> usize {
            let id = dst.push_node(src.nodes[node].name.clone());
            for &c in &src.nodes[node].children {
                let cc = copy(src, c, dst);
                dst.nodes[cc].parent = Some(id);
                dst.nodes[id].children.push(cc);
            }
            id
        }
        let mut out = PhyloTree { nodes: Vec::new(), root: 0, leaf_order: self.leaf_order.clone() };
        out.root = copy(self, self.root, &mut out);
        out
    }
}

/// One split per internal edge of a binary tree (root degree 2 or 3) with at
/// least four leaves; a rooted binary tree on `n` leaves yields `n - 3`
/// splits of the underlying unrooted tree.
pub fn internal_edge_splits(tree: &PhyloTree) -> Result<Vec<EdgeSplit>, TreeError> {
    if !tree.is_binary() {
        return Err(TreeError::NotBinary);
    }
    if tree.n_leaves() < 4 {
        return Err(TreeError::TooFewLeaves { required: 4, actual: tree.n_leaves() });
    }
    Ok(tree.unrooted_topology().canonical_splits.into_iter().collect())
}

/// All ways to refine multifurcations into rooted binary trees, deduplicated
/// by unrooted topology. An already rooted-binary tree resolves to itself.
pub fn resolve_multifurcations(tree: &PhyloTree) -> Vec<PhyloTree> {
    // Rooted binary shapes over an ordered list of subtree slots. Enumerated
    // by root bipartition with the first slot pinned to side one, then
    // recursively; each shape appears exactly once.
    #[derive(Clone)]
    enum Shape {
        Slot(usize),
        Join(Box<Shape>, Box<Shape>),
    }

    fn shapes(slots: &[usize]) -> Vec<Shape> {
        if slots.len() == 1 {
            return vec![Shape::Slot(slots[0])];
        }
        let first = slots[0];
        let rest = &slots[1..];
        let mut out = Vec::new();
        // Iterate subsets of `rest` that join `first` on side one; the
        // complement must be nonempty.
        let m = rest.len();
        for bits in 0..(1u32 << m) - 1 {
            let mut side1 = vec![first];
            let mut side2 = Vec::new();
            for (j, slot) in rest.iter().enumerate() {
                if bits >> j & 1 == 1 {
                    side1.push(*slot);
                } else {
                    side2.push(*slot);
                }
            }
            for s1 in shapes(&side1) {
                for s2 in shapes(&side2) {
                    out.push(Shape::Join(Box::new(s1.clone()), Box::new(s2)));
                }
            }
        }
        out
    }

    fn build(tree: &mut PhyloTree, shape: &Shape, resolved_children: &[usize]) -> usize {
        match shape {
            Shape::Slot(i) => resolved_children[*i],
            Shape::Join(a, b) => {
                let left = build(tree, a, resolved_children);
                let right = build(tree, b, resolved_children);
                let node = tree.push_node(None);
                tree.nodes[left].parent = Some(node);
                tree.nodes[right].parent = Some(node);
                tree.nodes[node].children = vec![left, right];
                node
            }
        }
    }

    // Recursively resolve a node: the cross product of child resolutions and
    // shapes for this node's child list.
    fn resolve_node(src: &PhyloTree, node: usize, dst: &mut PhyloTree) -> Vec<usize> {
        if let Some(name) = &src.nodes[node].name {
            return vec![{
                let id = dst.push_node(Some(name.clone()));
                id
            }];
        }
        let child_alternatives: Vec<Vec<usize>> = src.nodes[node]
            .children
            .iter()
            .map(|&c| resolve_node(src, c, dst))
            .collect();
        let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
        for alts in &child_alternatives {
            let mut next = Vec::new();
            for combo in &combos {
                for &alt in alts {
                    let mut c = combo.clone();
                    // Re-clone subtree per combination so arenas stay tree-shaped.
                    c.push(alt);
                    next.push(c);
                }
            }
            combos = next;
        }
        let slot_ids: Vec<usize> = (0..src.nodes[node].children.len()).collect();
        let node_shapes = if slot_ids.len() == 2 {
            vec![Shape::Join(Box::new(Shape::Slot(0)), Box::new(Shape::Slot(1)))]
        } else {
            shapes(&slot_ids)
        };
        let mut out = Vec::new();
        for combo in &combos {
            for shape in &node_shapes {
                // Deep-copy the child subtrees for this instance.
                let fresh: Vec<usize> = combo.iter().map(|&c| copy_subtree(dst, c)).collect();
                out.push(build(dst, shape, &fresh));
            }
        }
        out
    }

    fn copy_subtree(tree: &mut PhyloTree, node: usize) -> usize {
        let name = tree.nodes[node].name.clone();
        let children = tree.nodes[node].children.clone();
        let id = tree.push_node(name);
        for c in children {
            let cc = copy_subtree(tree, c);
            tree.nodes[cc].parent = Some(id);
            tree.nodes[id].children.push(cc);
        }
        id
    }

    let mut scratch =
        PhyloTree { nodes: Vec::new(), root: 0, leaf_order: tree.leaf_order.clone() };
    let roots = resolve_node(tree, tree.root, &mut scratch);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for root in roots {
        let mut candidate = scratch.clone();
        candidate.root = root;
        let candidate = candidate.compact();
        if seen.insert(candidate.unrooted_topology()) {
            out.push(candidate);
        }
    }
    out
}

/// Every unrooted binary topology on the given leaves, each exactly once,
/// as canonical rooted representatives. Count is (2n-5)!!.
pub fn enumerate_unrooted_binary(leaves: &[String]) -> Result<Vec<PhyloTree>, TreeError> {
    let n = leaves.len();
    if !(3..=MAX_ENUM_LEAVES).contains(&n) {
        return Err(TreeError::EnumerationRange(n));
    }
    let mut names = BTreeSet::new();
    for name in leaves {
        if !names.insert(name.clone()) {
            return Err(TreeError::DuplicateLeaf(name.clone()));
        }
    }

    // Grow by inserting leaf k into every edge of each tree on k-1 leaves.
    // Trees are rooted at the pendant edge of leaf 0: root = (leaf0, rest).
    fn start(leaves: &[String]) -> PhyloTree {
        let mut t = PhyloTree { nodes: Vec::new(), root: 0, leaf_order: leaves.to_vec() };
        let root = t.push_node(None);
        let l0 = t.push_node(Some(leaves[0].clone()));
        let inner = t.push_node(None);
        let l1 = t.push_node(Some(leaves[1].clone()));
        let l2 = t.push_node(Some(leaves[2].clone()));
        t.root = root;
        t.nodes[root].children = vec![l0, inner];
        t.nodes[inner].children = vec![l1, l2];
        t.nodes[l0].parent = Some(root);
        t.nodes[inner].parent = Some(root);
        t.nodes[l1].parent = Some(inner);
        t.nodes[l2].parent = Some(inner);
        t
    }

    fn edges_in_order(tree: &PhyloTree) -> Vec<usize> {
        // Every edge of the unrooted tree corresponds to one non-root node
        // except leaf 0 (its pendant edge is carried by the root's other child).
        fn dfs(tree: &PhyloTree, node: usize, out: &mut Vec<usize>) {
            for &c in &tree.nodes[node].children {
                if tree.nodes[c].name.as_deref() != Some(&tree.leaf_order[0]) {
                    out.push(c);
                }
                dfs(tree, c, out);
            }
        }
        let mut out = Vec::new();
        dfs(tree, tree.root, &mut out);
        out
    }

    let mut trees = vec![start(leaves)];
    for k in 3..n {
        let mut next = Vec::new();
        for t in &trees {
            for edge_child in edges_in_order(t) {
                let mut nt = t.clone();
                let parent = nt.nodes[edge_child].parent.expect("non-root node");
                let mid = nt.push_node(None);
                let leaf = nt.push_node(Some(leaves[k].clone()));
                let slot = nt.nodes[parent]
                    .children
                    .iter()
                    .position(|&c| c == edge_child)
                    .expect("child slot");
                nt.nodes[parent].children[slot] = mid;
                nt.nodes[mid].parent = Some(parent);
                nt.nodes[mid].children = vec![edge_child, leaf];
                nt.nodes[edge_child].parent = Some(mid);
                nt.nodes[leaf].parent = Some(mid);
                next.push(nt);
            }
        }
        trees = next;
    }
    Ok(trees)
}

/// Graft `t2` onto `t1` at a shared leaf: the shared leaf disappears from
/// both and its two pendant edges fuse into one internal edge. The result
/// keeps `t1`'s root and has n + m - 2 leaves.
pub fn graft(t1: &PhyloTree, t2: &PhyloTree, shared_leaf: &str) -> Result<PhyloTree, TreeError> {
    if t1.leaf_index(shared_leaf).is_none() || t2.leaf_index(shared_leaf).is_none() {
        return Err(TreeError::MissingLeaf(shared_leaf.to_string()));
    }
    for name in t1.leaf_names() {
        if name != shared_leaf && t2.leaf_index(name).is_some() {
            return Err(TreeError::NameCollision(name.clone()));
        }
    }
    if t1.n_leaves() < 2 || t2.n_leaves() < 2 {
        return Err(TreeError::TooFewLeaves {
            required: 2,
            actual: t1.n_leaves().min(t2.n_leaves()),
        });
    }

    // Re-root t2 at the attachment node (the shared leaf's parent), drop the
    // shared leaf, and suppress any degree-2 nodes this creates.
    let hung = reroot_at_leaf_parent_without_leaf(t2, shared_leaf);

    let mut out = t1.compact();
    let leaf_node = (0..out.nodes.len())
        .find(|&i| out.nodes[i].name.as_deref() == Some(shared_leaf))
        .expect("shared leaf present");
    let sub_root = splice(&mut out, &hung, hung.root);
    let parent = out.nodes[leaf_node].parent;
    match parent {
        Some(p) => {
            let slot = out.nodes[p].children.iter().position(|&c| c == leaf_node).unwrap();
            out.nodes[p].children[slot] = sub_root;
            out.nodes[sub_root].parent = Some(p);
        }
        None => {
            // t1 is a bare leaf; the graft is just t2 re-hung.
            out.root = sub_root;
        }
    }
    let mut order: Vec<String> =
        t1.leaf_names().iter().filter(|n| n.as_str() != shared_leaf).cloned().collect();
    order.extend(t2.leaf_names().iter().filter(|n| n.as_str() != shared_leaf).cloned());
    out.leaf_order = order;
    Ok(out.compact())
}

/// Copy `src`'s subtree into `dst`, returning the new root id.
fn splice(dst: &mut PhyloTree, src: &PhyloTree, node: usize) -> usize {
    let id = dst.push_node(src.nodes[node].name.clone());
    for &c in &src.nodes[node].children {
        let cc = splice(dst, src, c);
        dst.nodes[cc].parent = Some(id);
        dst.nodes[id].children.push(cc);
    }
    id
}

/// Re-root `tree` at the parent of `leaf`, remove `leaf`, and suppress the
/// degree-2 nodes this creates. The result is the subtree that `graft` hangs
/// in place of the shared leaf.
fn reroot_at_leaf_parent_without_leaf(tree: &PhyloTree, leaf: &str) -> PhyloTree {
    let mut t = tree.compact();
    let leaf_node = (0..t.nodes.len())
        .find(|&i| t.nodes[i].name.as_deref() == Some(leaf))
        .expect("leaf present");
    let attach = t.nodes[leaf_node].parent.expect("leaf has a parent");

    // Reverse parent pointers along attach -> ... -> old root.
    let mut path = vec![attach];
    while let Some(p) = t.nodes[*path.last().unwrap()].parent {
        path.push(p);
    }
    for w in path.windows(2) {
        let (child, parent) = (w[0], w[1]);
        let slot = t.nodes[parent].children.iter().position(|&c| c == child).unwrap();
        t.nodes[parent].children.remove(slot);
        t.nodes[child].children.push(parent);
        t.nodes[parent].parent = Some(child);
    }
    t.nodes[attach].parent = None;
    t.root = attach;

    // Drop the shared leaf.
    let slot = t.nodes[attach].children.iter().position(|&c| c == leaf_node).unwrap();
    t.nodes[attach].children.remove(slot);

    // Suppress degree-2 internal nodes (single-child, named none) below root.
    fn suppress(t: &mut PhyloTree, node: usize) {
        let children = t.nodes[node].children.clone();
        for c in children {
            suppress(t, c);
        }
        if t.nodes[node].name.is_none() && t.nodes[node].children.len() == 1 {
            if let Some(p) = t.nodes[node].parent {
                let only = t.nodes[node].children[0];
                let slot = t.nodes[p].children.iter().position(|&c| c == node).unwrap();
                t.nodes[p].children[slot] = only;
                t.nodes[only].parent = Some(p);
                t.nodes[node].children.clear();
            }
        }
    }
    let root = t.root;
    suppress(&mut t, root);
    // A single-child root is also suppressed.
    while t.nodes[t.root].name.is_none() && t.nodes[t.root].children.len() == 1 {
        let only = t.nodes[t.root].children[0];
        t.nodes[only].parent = None;
        t.root = only;
    }
    let mut order: Vec<String> =
        tree.leaf_names().iter().filter(|n| n.as_str() != leaf).cloned().collect();
    std::mem::swap(&mut t.leaf_order, &mut order);
    t.compact()
}

/// The ancient-pair topological move: for each binary resolution in which
/// the pair is a root-adjacent cherry, detach the two ancient leaves and
/// re-attach each directly above one of the two subtrees of the remaining
/// root, in both assignments. Outputs are deduplicated by unrooted topology.
pub fn ancient_pair_resolutions(
    tree: &PhyloTree,
    ancient: (&str, &str),
) -> Result<Vec<PhyloTree>, TreeError> {
    let (a1, a2) = ancient;
    let cherry_exists = (0..tree.nodes.len()).any(|i| {
        let kids = &tree.nodes[i].children;
        kids.len() == 2 && {
            let names: BTreeSet<_> =
                kids.iter().filter_map(|&c| tree.nodes[c].name.as_deref()).collect();
            names == BTreeSet::from([a1, a2])
        }
    });
    if !cherry_exists {
        return Err(TreeError::AncientPairNotCherry(a1.to_string(), a2.to_string()));
    }

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut any_root_adjacent = false;
    for resolved in resolve_multifurcations(tree) {
        let root_kids = resolved.nodes[resolved.root].children.clone();
        if root_kids.len() != 2 {
            continue;
        }
        let cherry_slot = root_kids.iter().position(|&c| {
            let kids = &resolved.nodes[c].children;
            kids.len() == 2 && {
                let names: BTreeSet<_> =
                    kids.iter().filter_map(|&k| resolved.nodes[k].name.as_deref()).collect();
                names == BTreeSet::from([a1, a2])
            }
        });
        let Some(cherry_slot) = cherry_slot else { continue };
        let other = root_kids[1 - cherry_slot];
        if resolved.nodes[other].children.len() != 2 {
            continue;
        }
        any_root_adjacent = true;
        let s1 = resolved.nodes[other].children[0];
        let s2 = resolved.nodes[other].children[1];
        for (x, y) in [(a1, a2), (a2, a1)] {
            let mut t = PhyloTree {
                nodes: Vec::new(),
                root: 0,
                leaf_order: tree.leaf_order.clone(),
            };
            let root = t.push_node(None);
            t.root = root;
            let left_sub = splice(&mut t, &resolved, s1);
            let left_leaf = t.push_node(Some(x.to_string()));
            let left = t.push_node(None);
            t.nodes[left].children = vec![left_sub, left_leaf];
            t.nodes[left_sub].parent = Some(left);
            t.nodes[left_leaf].parent = Some(left);
            let right_sub = splice(&mut t, &resolved, s2);
            let right_leaf = t.push_node(Some(y.to_string()));
            let right = t.push_node(None);
            t.nodes[right].children = vec![right_sub, right_leaf];
            t.nodes[right_sub].parent = Some(right);
            t.nodes[right_leaf].parent = Some(right);
            t.nodes[root].children = vec![left, right];
            t.nodes[left].parent = Some(root);
            t.nodes[right].parent = Some(root);
            let t = t.compact();
            if seen.insert(t.unrooted_topology()) {
                out.push(t);
            }
        }
    }
    if !any_root_adjacent {
        return Err(TreeError::AncientCherryNotRootAdjacent(a1.to_string(), a2.to_string()));
    }
    Ok(out)
}

/// Group trees by unrooted topology, keeping the first representative of
/// each class in input order.
pub fn dedup_by_topology(trees: &[PhyloTree]) -> Vec<PhyloTree> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for t in trees {
        if seen.insert(t.unrooted_topology()) {
            out.push(t.clone());
        }
    }
    out
}

/// (2n-5)!!, the number of unrooted binary topologies on n labeled leaves.
pub fn double_factorial_topology_count(n_leaves: usize) -> u64 {
    if n_leaves < 3 {
        return 1;
    }
    let mut k = 2 * n_leaves as u64 - 5;
    let mut acc = 1u64;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

/// Shared-leaf-set check used by multi-tree operations.
pub fn common_leaf_set(trees: &[PhyloTree]) -> Result<Vec<String>, TreeError> {
    let first = trees.first().ok_or(TreeError::LeafSetMismatch)?;
    let reference: BTreeSet<&String> = first.leaf_names().iter().collect();
    for t in &trees[1..] {
        let s: BTreeSet<&String> = t.leaf_names().iter().collect();
        if s != reference {
            return Err(TreeError::LeafSetMismatch);
        }
    }
    Ok(first.leaf_names().to_vec())
}
