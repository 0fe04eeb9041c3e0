//! Dense index over the disjoint union of one or more snapshots.

use std::collections::{BTreeMap, BTreeSet};

use crate::cdg::{Attr, NodeId, Snapshot};

/// Disjoint union of snapshots with nodes numbered `0..len()`.
///
/// Slots follow the order of `parts`, and within a part the sorted node
/// universe. Universe nodes absent from their snapshot keep a slot with no
/// attribute and no neighbors.
#[derive(Clone, Debug)]
pub struct IndexedGraph {
    keys: Vec<(usize, NodeId)>,
    attrs: Vec<Option<Attr>>,
    adj: Vec<Vec<(usize, Attr)>>,
    part_ranges: Vec<std::ops::Range<usize>>,
}

impl IndexedGraph {
    pub fn from_parts(parts: &[(&Snapshot, &BTreeSet<NodeId>)]) -> Self {
        let mut keys = Vec::new();
        let mut attrs = Vec::new();
        let mut adj = Vec::new();
        let mut part_ranges = Vec::with_capacity(parts.len());
        for (p, (snap, universe)) in parts.iter().enumerate() {
            let base = keys.len();
            let mut local = BTreeMap::new();
            // nodes of the snapshot outside the universe still get a slot
            let all: BTreeSet<&NodeId> = universe.iter().chain(snap.nodes().keys()).collect();
            for (i, v) in all.into_iter().enumerate() {
                local.insert(v.clone(), base + i);
                keys.push((p, v.clone()));
                attrs.push(snap.node_attr(v).cloned());
                adj.push(Vec::new());
            }
            for (edge, a) in snap.edges() {
                let (u, v) = edge.endpoints();
                let (iu, iv) = (local[u], local[v]);
                adj[iu].push((iv, a.clone()));
                adj[iv].push((iu, a.clone()));
            }
            for list in &mut adj[base..] {
                list.sort_by_key(|x| x.0);
            }
            part_ranges.push(base..keys.len());
        }
        IndexedGraph {
            keys,
            attrs,
            adj,
            part_ranges,
        }
    }

    pub fn single(snap: &Snapshot, universe: &BTreeSet<NodeId>) -> Self {
        Self::from_parts(&[(snap, universe)])
    }

    /// Index over exactly the nodes present in each snapshot.
    pub fn present_only(snaps: &[&Snapshot]) -> Self {
        let universes: Vec<BTreeSet<NodeId>> = snaps
            .iter()
            .map(|s| s.nodes().keys().cloned().collect())
            .collect();
        let parts: Vec<(&Snapshot, &BTreeSet<NodeId>)> =
            snaps.iter().copied().zip(universes.iter()).collect();
        Self::from_parts(&parts)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, i: usize) -> &(usize, NodeId) {
        &self.keys[i]
    }

    pub fn attr(&self, i: usize) -> Option<&Attr> {
        self.attrs[i].as_ref()
    }

    pub fn is_present(&self, i: usize) -> bool {
        self.attrs[i].is_some()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, Attr)] {
        &self.adj[i]
    }

    pub fn part(&self, p: usize) -> std::ops::Range<usize> {
        self.part_ranges[p].clone()
    }

    pub fn part_count(&self) -> usize {
        self.part_ranges.len()
    }

    pub fn present_count(&self) -> usize {
        self.attrs.iter().filter(|a| a.is_some()).count()
    }
}
