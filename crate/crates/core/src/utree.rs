//! Unfolding trees of snapshot nodes, their canonical signatures and
//! tree trajectories over the timestamps of a CDG.
//!
//! Two routes produce signatures. [`unfolding_tree`] materializes the tree and
//! [`signature`] serializes it; this is exponential in the depth and meant for
//! small depths. [`tree_ids`] computes interned ids for every node at once by
//! refining bottom-up, one level per depth. [`TreeInterner::intern_tree`]
//! maps a materialized tree into the same id space, so both routes can be
//! compared id for id.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::cdg::{Attr, Cdg, NodeId, Snapshot};
use crate::indexed::IndexedGraph;
use crate::wl::{check_compatible, WlError};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum UnfoldingTree {
    Empty,
    Node {
        attr: Attr,
        children: Vec<(Attr, UnfoldingTree)>,
    },
}

impl UnfoldingTree {
    pub fn is_empty(&self) -> bool {
        matches!(self, UnfoldingTree::Empty)
    }

    pub fn depth(&self) -> usize {
        match self {
            UnfoldingTree::Empty => 0,
            UnfoldingTree::Node { children, .. } => children
                .iter()
                .map(|(_, c)| c.depth() + 1)
                .max()
                .unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            UnfoldingTree::Empty => 0,
            UnfoldingTree::Node { children, .. } => {
                1 + children.iter().map(|(_, c)| c.size()).sum::<usize>()
            }
        }
    }
}

/// Depth-`d` unfolding tree of `v` in `s`. Walks may revisit nodes.
pub fn unfolding_tree(s: &Snapshot, v: &NodeId, d: usize) -> UnfoldingTree {
    let Some(attr) = s.node_attr(v) else {
        return UnfoldingTree::Empty;
    };
    let children = if d == 0 {
        Vec::new()
    } else {
        s.neighbors(v)
            .into_iter()
            .map(|(u, a)| (a, unfolding_tree(s, &u, d - 1)))
            .collect()
    };
    UnfoldingTree::Node {
        attr: attr.clone(),
        children,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeSignature(pub Vec<u8>);

const SIG_EMPTY: u8 = 0;
const SIG_NODE: u8 = 1;

/// Canonical byte encoding. Children are sorted by edge attribute bytes, then
/// child signature, so the encoding ignores child order.
pub fn signature(t: &UnfoldingTree) -> TreeSignature {
    let mut out = Vec::new();
    write_signature(t, &mut out);
    TreeSignature(out)
}

fn write_signature(t: &UnfoldingTree, out: &mut Vec<u8>) {
    match t {
        UnfoldingTree::Empty => out.push(SIG_EMPTY),
        UnfoldingTree::Node { attr, children } => {
            out.push(SIG_NODE);
            attr.write_canonical(out);
            let mut parts: Vec<(Vec<u8>, Vec<u8>)> = children
                .iter()
                .map(|(a, c)| {
                    let mut ab = Vec::new();
                    a.write_canonical(&mut ab);
                    (ab, signature(c).0)
                })
                .collect();
            parts.sort();
            out.extend_from_slice(&(parts.len() as u32).to_be_bytes());
            for (ab, cb) in parts {
                out.extend_from_slice(&ab);
                out.extend_from_slice(&(cb.len() as u32).to_be_bytes());
                out.extend_from_slice(&cb);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct TreeId(pub u32);

impl TreeId {
    pub const EMPTY: TreeId = TreeId(0);
}

/// Hash-consing table for trees: a tree is keyed by its root attribute and the
/// sorted multiset of (edge attribute, child id). Id 0 is the empty tree.
#[derive(Clone, Debug)]
pub struct TreeInterner {
    ids: HashMap<Vec<u8>, TreeId>,
    next: u32,
}

impl Default for TreeInterner {
    fn default() -> Self {
        TreeInterner {
            ids: HashMap::new(),
            next: 1,
        }
    }
}

impl TreeInterner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn intern_node(&mut self, attr: &Attr, mut children: Vec<(&Attr, TreeId)>) -> TreeId {
        children.sort();
        let mut key = Vec::new();
        attr.write_canonical(&mut key);
        key.extend_from_slice(&(children.len() as u32).to_be_bytes());
        for (a, c) in children {
            a.write_canonical(&mut key);
            key.extend_from_slice(&c.0.to_be_bytes());
        }
        let next = &mut self.next;
        *self.ids.entry(key).or_insert_with(|| {
            let id = TreeId(*next);
            *next += 1;
            id
        })
    }

    pub fn intern_tree(&mut self, t: &UnfoldingTree) -> TreeId {
        match t {
            UnfoldingTree::Empty => TreeId::EMPTY,
            UnfoldingTree::Node { attr, children } => {
                let kids: Vec<(&Attr, TreeId)> = children
                    .iter()
                    .map(|(a, c)| (a, self.intern_tree(c)))
                    .collect();
                self.intern_node(attr, kids)
            }
        }
    }
}

/// Tree ids of every slot of `g` at depths `0..=max_depth`; `result[d][i]`
/// is the id of the depth-`d` tree rooted at slot `i`.
pub fn tree_ids(
    g: &IndexedGraph,
    max_depth: usize,
    interner: &mut TreeInterner,
) -> Vec<Vec<TreeId>> {
    let mut levels: Vec<Vec<TreeId>> = Vec::with_capacity(max_depth + 1);
    for d in 0..=max_depth {
        let level = (0..g.len())
            .map(|i| match g.attr(i) {
                None => TreeId::EMPTY,
                Some(a) => {
                    let kids = if d == 0 {
                        Vec::new()
                    } else {
                        let prev = &levels[d - 1];
                        g.neighbors(i).iter().map(|(u, e)| (e, prev[*u])).collect()
                    };
                    interner.intern_node(a, kids)
                }
            })
            .collect();
        levels.push(level);
    }
    levels
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum UtreeError {
    #[error("depth bound needs n >= 2 for disconnected graphs, got {0}")]
    InvalidBound(usize),
    #[error("trajectory lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("trajectory depths differ: {0} vs {1}")]
    DepthMismatch(usize, usize),
    #[error(transparent)]
    Wl(#[from] WlError),
}

/// Tree depth at which equality of infinite unfolding trees is decided for
/// graphs with at most `n` nodes.
pub fn depth_bound(n: usize, both_disconnected: bool) -> Result<usize, UtreeError> {
    let n = n.max(1);
    if both_disconnected {
        if n < 2 {
            return Err(UtreeError::InvalidBound(n));
        }
        Ok(2 * n - 3)
    } else {
        Ok(2 * n - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutDepth {
    Fixed(usize),
    /// `depth_bound` of the largest node universe among the compared CDGs.
    Auto,
}

impl CutDepth {
    pub fn resolve(self, cdgs: &[Cdg]) -> usize {
        match self {
            CutDepth::Fixed(d) => d,
            CutDepth::Auto => {
                let n = cdgs.iter().map(|g| g.universe().len()).max().unwrap_or(1);
                2 * n.max(1) - 1
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TreeTrajectory {
    pub depth: usize,
    pub trees: Vec<TreeId>,
}

impl TreeTrajectory {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Tree trajectories of every universe node of every CDG, from one shared
/// interner so ids are comparable across the inputs.
pub fn cut_trajectories(
    cdgs: &[Cdg],
    depth: CutDepth,
) -> Result<Vec<BTreeMap<NodeId, TreeTrajectory>>, UtreeError> {
    let mut interner = TreeInterner::new();
    cut_trajectories_with(cdgs, depth, &mut interner)
}

pub fn cut_trajectories_with(
    cdgs: &[Cdg],
    depth: CutDepth,
    interner: &mut TreeInterner,
) -> Result<Vec<BTreeMap<NodeId, TreeTrajectory>>, UtreeError> {
    check_compatible(cdgs)?;
    let d = depth.resolve(cdgs);
    let count = cdgs.first().map_or(0, Cdg::timestamp_count);
    let snaps: Vec<Vec<Snapshot>> = cdgs.iter().map(Cdg::snapshots).collect();
    let mut entries: Vec<Vec<Vec<TreeId>>> = cdgs
        .iter()
        .map(|g| vec![Vec::with_capacity(count); g.universe().len()])
        .collect();
    for t in 0..count {
        let parts: Vec<(&Snapshot, &BTreeSet<NodeId>)> = cdgs
            .iter()
            .zip(&snaps)
            .map(|(g, s)| (&s[t], g.universe()))
            .collect();
        let joint = IndexedGraph::from_parts(&parts);
        let ids = tree_ids(&joint, d, interner)
            .pop()
            .expect("at least depth 0");
        for (p, per_node) in entries.iter_mut().enumerate() {
            for (k, slot) in joint.part(p).enumerate() {
                per_node[k].push(ids[slot]);
            }
        }
    }
    Ok(cdgs
        .iter()
        .zip(entries)
        .map(|(g, per_node)| {
            g.universe()
                .iter()
                .cloned()
                .zip(
                    per_node
                        .into_iter()
                        .map(|trees| TreeTrajectory { depth: d, trees }),
                )
                .collect()
        })
        .collect())
}

pub fn node_cut_equivalent(a: &TreeTrajectory, b: &TreeTrajectory) -> Result<bool, UtreeError> {
    if a.len() != b.len() {
        return Err(UtreeError::LengthMismatch(a.len(), b.len()));
    }
    if a.depth != b.depth {
        return Err(UtreeError::DepthMismatch(a.depth, b.depth));
    }
    Ok(a.trees == b.trees)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CutVerdict {
    Equivalent(BTreeMap<NodeId, NodeId>),
    NotEquivalent,
}

impl CutVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, CutVerdict::Equivalent(_))
    }
}

/// Matches nodes with equal trajectories. Succeeds iff the trajectory
/// multisets agree; the bijection pairs nodes of each class in id order.
pub fn match_trajectories(
    a: &BTreeMap<NodeId, TreeTrajectory>,
    b: &BTreeMap<NodeId, TreeTrajectory>,
) -> CutVerdict {
    if a.len() != b.len() {
        return CutVerdict::NotEquivalent;
    }
    let mut classes: BTreeMap<&TreeTrajectory, Vec<&NodeId>> = BTreeMap::new();
    for (v, tr) in b {
        classes.entry(tr).or_default().push(v);
    }
    for list in classes.values_mut() {
        list.reverse();
    }
    let mut map = BTreeMap::new();
    for (v, tr) in a {
        match classes.get_mut(tr).and_then(Vec::pop) {
            Some(w) => {
                map.insert(v.clone(), w.clone());
            }
            None => return CutVerdict::NotEquivalent,
        }
    }
    CutVerdict::Equivalent(map)
}

pub fn graph_cut_equivalent(g1: &Cdg, g2: &Cdg, depth: CutDepth) -> Result<CutVerdict, UtreeError> {
    let trajs = cut_trajectories(&[g1.clone(), g2.clone()], depth)?;
    Ok(match_trajectories(&trajs[0], &trajs[1]))
}
