//! Exhaustive isomorphism search for small CDGs.
//!
//! A single node bijection over the node universes is searched; at every
//! timestamp its restriction must preserve presence, adjacency and
//! attributes. In [`AttributeMode::Renaming`] attributes may be renamed per
//! timestamp: the relation `{(a, phi(a))}` induced by the node map over node
//! and edge attributes must then be a bijection.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::cdg::{Attr, Cdg, EdgeKey, NodeId, Snapshot};

/// Largest node universe the search accepts.
pub const MAX_BRUTE_FORCE_NODES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttributeMode {
    Identity,
    Renaming,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum IsoError {
    #[error("node universe of {0} exceeds the brute-force limit of {MAX_BRUTE_FORCE_NODES}")]
    TooLarge(usize),
    #[error("timestamp counts differ: {0} vs {1}")]
    TimestampCountMismatch(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsoVerdict {
    Isomorphic(BTreeMap<NodeId, NodeId>),
    NotIsomorphic,
}

impl IsoVerdict {
    pub fn is_isomorphic(&self) -> bool {
        matches!(self, IsoVerdict::Isomorphic(_))
    }

    pub fn witness(&self) -> Option<&BTreeMap<NodeId, NodeId>> {
        match self {
            IsoVerdict::Isomorphic(m) => Some(m),
            IsoVerdict::NotIsomorphic => None,
        }
    }
}

struct Side {
    ids: Vec<NodeId>,
    snaps: Vec<Snapshot>,
}

impl Side {
    fn new(g: &Cdg) -> Self {
        Side {
            ids: g.universe().iter().cloned().collect(),
            snaps: g.snapshots(),
        }
    }
}

pub fn brute_force_isomorphic(
    g1: &Cdg,
    g2: &Cdg,
    mode: AttributeMode,
) -> Result<IsoVerdict, IsoError> {
    for g in [g1, g2] {
        if g.universe().len() > MAX_BRUTE_FORCE_NODES {
            return Err(IsoError::TooLarge(g.universe().len()));
        }
    }
    if g1.timestamp_count() != g2.timestamp_count() {
        return Err(IsoError::TimestampCountMismatch(
            g1.timestamp_count(),
            g2.timestamp_count(),
        ));
    }
    if g1.universe().len() != g2.universe().len() {
        return Ok(IsoVerdict::NotIsomorphic);
    }
    let a = Side::new(g1);
    let b = Side::new(g2);
    let n = a.ids.len();
    let mut assignment: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    if search(&a, &b, mode, &mut assignment, &mut used) {
        let map = assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| (a.ids[i].clone(), b.ids[j].clone()))
            .collect();
        Ok(IsoVerdict::Isomorphic(map))
    } else {
        Ok(IsoVerdict::NotIsomorphic)
    }
}

fn search(
    a: &Side,
    b: &Side,
    mode: AttributeMode,
    assignment: &mut Vec<usize>,
    used: &mut [bool],
) -> bool {
    let i = assignment.len();
    if i == a.ids.len() {
        let map: BTreeMap<NodeId, NodeId> = assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| (a.ids[i].clone(), b.ids[j].clone()))
            .collect();
        return mode == AttributeMode::Identity
            || all_renamings_bijective(&a.snaps, &b.snaps, &map);
    }
    for j in 0..b.ids.len() {
        if used[j] || !partial_ok(a, b, mode, assignment, i, j) {
            continue;
        }
        used[j] = true;
        assignment.push(j);
        if search(a, b, mode, assignment, used) {
            return true;
        }
        assignment.pop();
        used[j] = false;
    }
    false
}

/// Checks the constraints that involve the new pair `i -> j` and already
/// mapped nodes.
fn partial_ok(
    a: &Side,
    b: &Side,
    mode: AttributeMode,
    assignment: &[usize],
    i: usize,
    j: usize,
) -> bool {
    let (u, u2) = (&a.ids[i], &b.ids[j]);
    for (s1, s2) in a.snaps.iter().zip(&b.snaps) {
        let (x, y) = (s1.node_attr(u), s2.node_attr(u2));
        match (x, y) {
            (None, None) => continue,
            (Some(x), Some(y)) => {
                if mode == AttributeMode::Identity && x != y {
                    return false;
                }
            }
            _ => return false,
        }
        for (k, &l) in assignment.iter().enumerate() {
            let e1 = EdgeKey::new(u.clone(), a.ids[k].clone()).ok();
            let e2 = EdgeKey::new(u2.clone(), b.ids[l].clone()).ok();
            let w1 = e1.as_ref().and_then(|e| s1.edge_attr(e));
            let w2 = e2.as_ref().and_then(|e| s2.edge_attr(e));
            match (w1, w2) {
                (None, None) => {}
                (Some(w1), Some(w2)) => {
                    if mode == AttributeMode::Identity && w1 != w2 {
                        return false;
                    }
                }
                _ => return false,
            }
        }
    }
    true
}

fn all_renamings_bijective(
    s1: &[Snapshot],
    s2: &[Snapshot],
    map: &BTreeMap<NodeId, NodeId>,
) -> bool {
    s1.iter()
        .zip(s2)
        .all(|(x, y)| induced_renaming(x, y, map).is_some())
}

/// The attribute renaming induced by `map` at one timestamp, if it is a
/// well-defined bijection on the attributes in use.
fn induced_renaming(
    s1: &Snapshot,
    s2: &Snapshot,
    map: &BTreeMap<NodeId, NodeId>,
) -> Option<HashMap<Attr, Attr>> {
    let mut fwd: HashMap<Attr, Attr> = HashMap::new();
    let mut bwd: HashMap<Attr, Attr> = HashMap::new();
    let mut relate = |x: &Attr, y: &Attr| -> bool {
        let f = fwd.entry(x.clone()).or_insert_with(|| y.clone()) == y;
        let b = bwd.entry(y.clone()).or_insert_with(|| x.clone()) == x;
        f && b
    };
    for (v, a) in s1.nodes() {
        let b = s2.node_attr(map.get(v)?)?;
        if !relate(a, b) {
            return None;
        }
    }
    for (e, a) in s1.edges() {
        let (u, v) = e.endpoints();
        let e2 = EdgeKey::new(map.get(u)?.clone(), map.get(v)?.clone()).ok()?;
        let b = s2.edge_attr(&e2)?;
        if !relate(a, b) {
            return None;
        }
    }
    Some(fwd)
}

/// Checks that `map` is an isomorphism witness from `g1` to `g2`.
pub fn is_isomorphism_witness(
    g1: &Cdg,
    g2: &Cdg,
    map: &BTreeMap<NodeId, NodeId>,
    mode: AttributeMode,
) -> bool {
    if g1.timestamp_count() != g2.timestamp_count() || g1.universe().len() != g2.universe().len() {
        return false;
    }
    if map.len() != g1.universe().len()
        || !g1
            .universe()
            .iter()
            .all(|v| map.get(v).is_some_and(|w| g2.universe().contains(w)))
    {
        return false;
    }
    let mut images: Vec<&NodeId> = map.values().collect();
    images.sort();
    images.dedup();
    if images.len() != map.len() {
        return false;
    }
    for (s1, s2) in g1.snapshots().iter().zip(g2.snapshots().iter()) {
        if s1.node_count() != s2.node_count() || s1.edges().len() != s2.edges().len() {
            return false;
        }
        for (v, a) in s1.nodes() {
            match s2.node_attr(&map[v]) {
                Some(b) if mode == AttributeMode::Renaming || a == b => {}
                _ => return false,
            }
        }
        for (e, a) in s1.edges() {
            let (u, v) = e.endpoints();
            let Ok(e2) = EdgeKey::new(map[u].clone(), map[v].clone()) else {
                return false;
            };
            match s2.edge_attr(&e2) {
                Some(b) if mode == AttributeMode::Renaming || a == b => {}
                _ => return false,
            }
        }
        if mode == AttributeMode::Renaming && induced_renaming(s1, s2, map).is_none() {
            return false;
        }
    }
    true
}
