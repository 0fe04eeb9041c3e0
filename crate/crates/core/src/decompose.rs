//! Connected components of snapshots and matching of components between
//! two snapshots by their stable colors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::cdg::{NodeId, Snapshot};
use crate::indexed::IndexedGraph;
use crate::wl::{stable_colors, ColorDictionary, ColorId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentPartition {
    /// Components ordered by their smallest node id.
    pub components: Vec<BTreeSet<NodeId>>,
    pub index: BTreeMap<NodeId, usize>,
}

impl ComponentPartition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(BTreeSet::len).collect()
    }
}

pub fn components(s: &Snapshot) -> ComponentPartition {
    let mut index: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut comps = Vec::new();
    // nodes are visited in id order, so each component is found from its
    // smallest member
    for v in s.nodes().keys() {
        if index.contains_key(v) {
            continue;
        }
        let c = comps.len();
        let mut members = BTreeSet::new();
        let mut queue = VecDeque::from([v.clone()]);
        index.insert(v.clone(), c);
        while let Some(x) = queue.pop_front() {
            for (u, _) in s.neighbors(&x) {
                if !index.contains_key(&u) {
                    index.insert(u.clone(), c);
                    queue.push_back(u);
                }
            }
            members.insert(x);
        }
        comps.push(members);
    }
    ComponentPartition {
        components: comps,
        index,
    }
}

/// True iff the snapshot has at least two components. The empty snapshot
/// counts as connected.
pub fn is_disconnected(s: &Snapshot) -> bool {
    components(s).len() >= 2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentGroup {
    /// Sorted stable colors shared by the group's components (with
    /// multiplicity at component level, without at class level).
    pub colors: Vec<ColorId>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub left_nodes: usize,
    pub right_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentMatch {
    pub left: ComponentPartition,
    pub right: ComponentPartition,
    /// Components grouped by their set of stable colors.
    pub class_groups: Vec<ComponentGroup>,
    /// Every color class covers the same number of nodes on both sides.
    pub class_level: bool,
    /// Components grouped by their multiset of stable colors.
    pub component_groups: Vec<ComponentGroup>,
    /// Every component multiset occurs equally often on both sides.
    pub component_level: bool,
    /// Component pairing (left index, right index) when `component_level`.
    pub matching: Option<Vec<(usize, usize)>>,
}

fn group(
    parts: [&ComponentPartition; 2],
    colors: [&BTreeMap<NodeId, ColorId>; 2],
    with_multiplicity: bool,
) -> Vec<ComponentGroup> {
    let mut groups: BTreeMap<Vec<ColorId>, ComponentGroup> = BTreeMap::new();
    for side in 0..2 {
        for (ci, comp) in parts[side].components.iter().enumerate() {
            let mut key: Vec<ColorId> = comp.iter().map(|v| colors[side][v]).collect();
            key.sort();
            if !with_multiplicity {
                key.dedup();
            }
            let g = groups.entry(key.clone()).or_insert_with(|| ComponentGroup {
                colors: key,
                left: vec![],
                right: vec![],
                left_nodes: 0,
                right_nodes: 0,
            });
            if side == 0 {
                g.left.push(ci);
                g.left_nodes += comp.len();
            } else {
                g.right.push(ci);
                g.right_nodes += comp.len();
            }
        }
    }
    groups.into_values().collect()
}

/// Groups the components of `s1` and `s2` by their stable colors, computed
/// jointly on the disjoint union of both snapshots with `dict`.
pub fn match_components(
    s1: &Snapshot,
    s2: &Snapshot,
    dict: &mut ColorDictionary,
) -> ComponentMatch {
    let joint = IndexedGraph::present_only(&[s1, s2]);
    let (stable, _) = stable_colors(&joint, dict);
    let colors: Vec<BTreeMap<NodeId, ColorId>> = (0..2)
        .map(|p| {
            joint
                .part(p)
                .map(|i| (joint.key(i).1.clone(), stable[i]))
                .collect()
        })
        .collect();
    let left = components(s1);
    let right = components(s2);
    let class_groups = group([&left, &right], [&colors[0], &colors[1]], false);
    let class_level = class_groups.iter().all(|g| g.left_nodes == g.right_nodes);
    let component_groups = group([&left, &right], [&colors[0], &colors[1]], true);
    let component_level = component_groups
        .iter()
        .all(|g| g.left.len() == g.right.len());
    let matching = component_level.then(|| {
        let mut m: Vec<(usize, usize)> = component_groups
            .iter()
            .flat_map(|g| g.left.iter().copied().zip(g.right.iter().copied()))
            .collect();
        m.sort();
        m
    });
    ComponentMatch {
        left,
        right,
        class_groups,
        class_level,
        component_groups,
        component_level,
        matching,
    }
}
