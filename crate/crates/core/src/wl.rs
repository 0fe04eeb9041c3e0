//! Attributed 1-WL color refinement and the continuous-time 1-WL test.
//!
//! Injective hashing is realized as a canonical byte encoding of the hash
//! input followed by a dictionary lookup. One [`ColorDictionary`] is shared
//! by every graph, timestamp and iteration of a comparison session, so equal
//! ids always mean equal inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::cdg::{Cdg, NodeId, Snapshot};
use crate::indexed::IndexedGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ColorId(pub u32);

impl ColorId {
    /// The color of nodes that do not exist at a timestamp.
    pub const BOTTOM: ColorId = ColorId(0);

    pub fn is_bottom(self) -> bool {
        self == Self::BOTTOM
    }
}

const TAG_ATTR: u8 = 1;
const TAG_REFINE: u8 = 2;

/// Append-only map from canonical byte strings to compact color ids.
/// Id 0 is reserved for the non-existence color and never handed out.
#[derive(Clone, Debug)]
pub struct ColorDictionary {
    ids: HashMap<Vec<u8>, ColorId>,
    next: u32,
}

impl Default for ColorDictionary {
    fn default() -> Self {
        ColorDictionary {
            ids: HashMap::new(),
            next: 1,
        }
    }
}

impl ColorDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, key: Vec<u8>) -> ColorId {
        let next = &mut self.next;
        *self.ids.entry(key).or_insert_with(|| {
            let id = ColorId(*next);
            *next += 1;
            id
        })
    }

    pub fn get(&self, key: &[u8]) -> Option<ColorId> {
        self.ids.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Color per node of one snapshot at one iteration.
pub type Coloring = BTreeMap<NodeId, ColorId>;

/// Stable color per timestamp for one node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ColorTrajectory(pub Vec<ColorId>);

impl ColorTrajectory {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, end: usize) -> &[ColorId] {
        &self.0[..=end]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Depth {
    Fixed(usize),
    Stable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GraphEquivalenceMode {
    #[default]
    Bijection,
    Existence,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WlError {
    #[error("attribute dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("timestamp counts differ: {0} vs {1}")]
    TimestampMismatch(usize, usize),
    #[error("trajectory lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

pub(crate) fn init_colors(g: &IndexedGraph, dict: &mut ColorDictionary) -> Vec<ColorId> {
    (0..g.len())
        .map(|i| match g.attr(i) {
            Some(a) => {
                let mut key = vec![TAG_ATTR];
                a.write_canonical(&mut key);
                dict.intern(key)
            }
            None => ColorId::BOTTOM,
        })
        .collect()
}

pub(crate) fn refine_colors(
    g: &IndexedGraph,
    prev: &[ColorId],
    dict: &mut ColorDictionary,
) -> Vec<ColorId> {
    (0..g.len())
        .map(|i| {
            if !g.is_present(i) {
                return ColorId::BOTTOM;
            }
            let mut msgs: Vec<(&crate::cdg::Attr, ColorId)> =
                g.neighbors(i).iter().map(|(u, a)| (a, prev[*u])).collect();
            msgs.sort();
            let mut key = vec![TAG_REFINE];
            key.extend_from_slice(&prev[i].0.to_be_bytes());
            key.extend_from_slice(&(msgs.len() as u32).to_be_bytes());
            for (a, c) in msgs {
                a.write_canonical(&mut key);
                key.extend_from_slice(&c.0.to_be_bytes());
            }
            dict.intern(key)
        })
        .collect()
}

/// True iff `a` and `b` induce the same partition of the index set.
pub fn same_partition<T: Eq + std::hash::Hash + Copy, U: Eq + std::hash::Hash + Copy>(
    a: &[T],
    b: &[U],
) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: HashMap<T, U> = HashMap::new();
    let mut bwd: HashMap<U, T> = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *bwd.entry(y).or_insert(x) == x)
}

/// True iff the partition of `fine` refines (or equals) that of `coarse`.
pub fn refines<T: Eq + std::hash::Hash + Copy, U: Eq + std::hash::Hash + Copy>(
    fine: &[T],
    coarse: &[U],
) -> bool {
    let mut map: HashMap<T, U> = HashMap::new();
    fine.len() == coarse.len()
        && fine
            .iter()
            .zip(coarse)
            .all(|(&x, &y)| *map.entry(x).or_insert(y) == y)
}

/// First index pair on which the two labelings disagree about equality.
pub fn first_disagreement<A: Eq, B: Eq>(a: &[A], b: &[B]) -> Option<(usize, usize)> {
    (0..a.len())
        .flat_map(|i| (i + 1..a.len()).map(move |j| (i, j)))
        .find(|&(i, j)| (a[i] == a[j]) != (b[i] == b[j]))
}

/// Refines until the partition repeats. Returns the coloring at which the
/// repetition was detected and its iteration index.
pub(crate) fn stable_colors(g: &IndexedGraph, dict: &mut ColorDictionary) -> (Vec<ColorId>, usize) {
    let mut prev = init_colors(g, dict);
    let mut j = 0;
    loop {
        let next = refine_colors(g, &prev, dict);
        j += 1;
        if same_partition(&prev, &next) {
            return (next, j);
        }
        prev = next;
    }
}

pub(crate) fn colors_at(
    g: &IndexedGraph,
    depth: Depth,
    dict: &mut ColorDictionary,
) -> (Vec<ColorId>, usize) {
    match depth {
        Depth::Stable => stable_colors(g, dict),
        Depth::Fixed(j) => {
            let mut c = init_colors(g, dict);
            for _ in 0..j {
                c = refine_colors(g, &c, dict);
            }
            (c, j)
        }
    }
}

fn to_coloring(g: &IndexedGraph, colors: &[ColorId]) -> Coloring {
    (0..g.len())
        .map(|i| (g.key(i).1.clone(), colors[i]))
        .collect()
}

/// Iteration 0: attribute colors, with the non-existence color for universe
/// nodes absent from `s`.
pub fn awl_init(s: &Snapshot, universe: &BTreeSet<NodeId>, dict: &mut ColorDictionary) -> Coloring {
    let g = IndexedGraph::single(s, universe);
    to_coloring(&g, &init_colors(&g, dict))
}

/// One refinement round. Nodes missing from `prev` are treated as absent
/// from the universe.
pub fn awl_step(s: &Snapshot, prev: &Coloring, dict: &mut ColorDictionary) -> Coloring {
    let universe: BTreeSet<NodeId> = prev.keys().cloned().collect();
    let g = IndexedGraph::single(s, &universe);
    let prev: Vec<ColorId> = (0..g.len())
        .map(|i| prev.get(&g.key(i).1).copied().unwrap_or(ColorId::BOTTOM))
        .collect();
    to_coloring(&g, &refine_colors(&g, &prev, dict))
}

pub fn awl_stable(
    s: &Snapshot,
    universe: &BTreeSet<NodeId>,
    dict: &mut ColorDictionary,
) -> (Coloring, usize) {
    let g = IndexedGraph::single(s, universe);
    let (c, j) = stable_colors(&g, dict);
    (to_coloring(&g, &c), j)
}

/// Output of a 1-CWL run over several CDGs.
#[derive(Clone, Debug)]
pub struct CwlOutput {
    /// Per input CDG, the color trajectory of every universe node.
    pub trajectories: Vec<BTreeMap<NodeId, ColorTrajectory>>,
    /// Iteration index used at each timestamp.
    pub iterations: Vec<usize>,
}

pub(crate) fn check_compatible(cdgs: &[Cdg]) -> Result<(), WlError> {
    if let Some(first) = cdgs.first() {
        for g in &cdgs[1..] {
            if g.dim() != first.dim() {
                return Err(WlError::DimensionMismatch(first.dim(), g.dim()));
            }
            if g.timestamp_count() != first.timestamp_count() {
                return Err(WlError::TimestampMismatch(
                    first.timestamp_count(),
                    g.timestamp_count(),
                ));
            }
        }
    }
    Ok(())
}

/// Runs the continuous-time 1-WL test jointly over `cdgs` with a fresh
/// dictionary.
pub fn cwl(cdgs: &[Cdg], depth: Depth) -> Result<CwlOutput, WlError> {
    let mut dict = ColorDictionary::new();
    cwl_with(cdgs, depth, &mut dict)
}

/// Like [`cwl`], drawing colors from a caller-owned dictionary.
///
/// At every timestamp the snapshots of all CDGs are refined together as one
/// disjoint union, so colors are comparable across the inputs.
pub fn cwl_with(
    cdgs: &[Cdg],
    depth: Depth,
    dict: &mut ColorDictionary,
) -> Result<CwlOutput, WlError> {
    check_compatible(cdgs)?;
    let count = cdgs.first().map_or(0, Cdg::timestamp_count);
    let snaps: Vec<Vec<Snapshot>> = cdgs.iter().map(Cdg::snapshots).collect();
    let mut entries: Vec<Vec<Vec<ColorId>>> = cdgs
        .iter()
        .map(|g| vec![Vec::with_capacity(count); g.universe().len()])
        .collect();
    let mut iterations = Vec::with_capacity(count);
    for t in 0..count {
        let parts: Vec<(&Snapshot, &BTreeSet<NodeId>)> = cdgs
            .iter()
            .zip(&snaps)
            .map(|(g, s)| (&s[t], g.universe()))
            .collect();
        let joint = IndexedGraph::from_parts(&parts);
        let (colors, j) = colors_at(&joint, depth, dict);
        iterations.push(j);
        for (p, per_node) in entries.iter_mut().enumerate() {
            for (k, slot) in joint.part(p).enumerate() {
                per_node[k].push(colors[slot]);
            }
        }
    }
    let trajectories = cdgs
        .iter()
        .zip(entries)
        .map(|(g, per_node)| {
            g.universe()
                .iter()
                .cloned()
                .zip(per_node.into_iter().map(ColorTrajectory))
                .collect()
        })
        .collect();
    Ok(CwlOutput {
        trajectories,
        iterations,
    })
}

pub fn node_cwl_equivalent(a: &ColorTrajectory, b: &ColorTrajectory) -> Result<bool, WlError> {
    if a.len() != b.len() {
        return Err(WlError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a == b)
}

/// Compares the trajectory collections of two graphs from one shared run.
pub fn trajectories_equivalent(
    a: &BTreeMap<NodeId, ColorTrajectory>,
    b: &BTreeMap<NodeId, ColorTrajectory>,
    mode: GraphEquivalenceMode,
) -> bool {
    match mode {
        GraphEquivalenceMode::Bijection => {
            let mut x: Vec<&ColorTrajectory> = a.values().collect();
            let mut y: Vec<&ColorTrajectory> = b.values().collect();
            x.sort();
            y.sort();
            x == y
        }
        GraphEquivalenceMode::Existence => {
            let x: BTreeSet<&ColorTrajectory> = a.values().collect();
            let y: BTreeSet<&ColorTrajectory> = b.values().collect();
            x == y
        }
    }
}

pub fn graph_cwl_equivalent(
    g1: &Cdg,
    g2: &Cdg,
    mode: GraphEquivalenceMode,
) -> Result<bool, WlError> {
    let out = cwl(&[g1.clone(), g2.clone()], Depth::Stable)?;
    Ok(trajectories_equivalent(
        &out.trajectories[0],
        &out.trajectories[1],
        mode,
    ))
}

/// First timestamp index at which the stable color histograms of two
/// graphs from one shared run differ.
pub fn first_distinguishing_timestamp(
    a: &BTreeMap<NodeId, ColorTrajectory>,
    b: &BTreeMap<NodeId, ColorTrajectory>,
) -> Option<usize> {
    let len = a
        .values()
        .chain(b.values())
        .map(ColorTrajectory::len)
        .max()
        .unwrap_or(0);
    (0..len).find(|&t| color_histogram(a, t) != color_histogram(b, t))
}

/// Count of non-bottom colors at timestamp index `t`.
pub fn color_histogram(
    trajs: &BTreeMap<NodeId, ColorTrajectory>,
    t: usize,
) -> BTreeMap<ColorId, usize> {
    let mut h = BTreeMap::new();
    for tr in trajs.values() {
        if let Some(&c) = tr.0.get(t) {
            if !c.is_bottom() {
                *h.entry(c).or_insert(0) += 1;
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::{Attr, EdgeKey, Event, EventKind, Item, StartGraph, Timestamp};

    fn attr(x: f64) -> Attr {
        Attr::new(vec![x]).unwrap()
    }

    fn static_graph(n: usize, edges: &[(usize, usize)]) -> Cdg {
        let mut g = StartGraph::new();
        for i in 0..n {
            g.add_node(NodeId::new(format!("v{i}")), attr(1.0)).unwrap();
        }
        for &(u, v) in edges {
            let key =
                EdgeKey::new(NodeId::new(format!("v{u}")), NodeId::new(format!("v{v}"))).unwrap();
            g.add_edge(key, attr(1.0)).unwrap();
        }
        Cdg::new(1, g, vec![]).unwrap()
    }

    fn snapshot(g: &Cdg) -> Snapshot {
        g.replay_index(0).unwrap()
    }

    fn cells(c: &Coloring) -> usize {
        c.values().collect::<BTreeSet<_>>().len()
    }

    #[test]
    fn init_constant_attributes() {
        let g = static_graph(3, &[(0, 1)]);
        let mut dict = ColorDictionary::new();
        let c = awl_init(&snapshot(&g), g.universe(), &mut dict);
        assert_eq!(cells(&c), 1);
        assert!(c.values().all(|c| !c.is_bottom()));
    }

    #[test]
    fn init_absent_node_is_bottom() {
        let g = static_graph(2, &[]);
        let mut universe = g.universe().clone();
        universe.insert(NodeId::from("ghost"));
        let mut dict = ColorDictionary::new();
        let c = awl_init(&snapshot(&g), &universe, &mut dict);
        assert_eq!(c[&NodeId::from("ghost")], ColorId::BOTTOM);
    }

    #[test]
    fn init_shared_dictionary_is_consistent() {
        let g = static_graph(2, &[]);
        let h = static_graph(3, &[(0, 1)]);
        let mut dict = ColorDictionary::new();
        let a = awl_init(&snapshot(&g), g.universe(), &mut dict);
        let b = awl_init(&snapshot(&h), h.universe(), &mut dict);
        assert_eq!(a[&NodeId::from("v0")], b[&NodeId::from("v2")]);
    }

    #[test]
    fn isolated_nodes_share_step_color() {
        let g = static_graph(3, &[]);
        let mut dict = ColorDictionary::new();
        let s = snapshot(&g);
        let c0 = awl_init(&s, g.universe(), &mut dict);
        let c1 = awl_step(&s, &c0, &mut dict);
        assert_eq!(cells(&c1), 1);
        assert_ne!(c1[&NodeId::from("v0")], c0[&NodeId::from("v0")]);
    }

    #[test]
    fn path_center_differs() {
        let g = static_graph(3, &[(0, 1), (1, 2)]);
        let mut dict = ColorDictionary::new();
        let s = snapshot(&g);
        let c1 = awl_step(&s, &awl_init(&s, g.universe(), &mut dict), &mut dict);
        let (a, b, c) = (
            c1[&NodeId::from("v0")],
            c1[&NodeId::from("v1")],
            c1[&NodeId::from("v2")],
        );
        assert_eq!(a, c);
        assert_ne!(a, b);
    }

    #[test]
    fn star_and_complete_graph_cells() {
        let star = static_graph(4, &[(0, 1), (0, 2), (0, 3)]);
        let mut dict = ColorDictionary::new();
        let (c, j) = awl_stable(&snapshot(&star), star.universe(), &mut dict);
        assert_eq!(cells(&c), 2);
        assert!(j <= star.universe().len());
        let k5 = static_graph(
            5,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 3),
                (2, 4),
                (3, 4),
            ],
        );
        let (c, _) = awl_stable(&snapshot(&k5), k5.universe(), &mut dict);
        assert_eq!(cells(&c), 1);
    }

    #[test]
    fn single_node_stabilizes_immediately() {
        let g = static_graph(1, &[]);
        let mut dict = ColorDictionary::new();
        let (c, j) = awl_stable(&snapshot(&g), g.universe(), &mut dict);
        assert_eq!(c.len(), 1);
        assert!(j <= 1);
    }

    #[test]
    fn blind_spot_colorings_agree_every_iteration() {
        let tt = static_graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        let c6 = static_graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        for j in 0..8 {
            let out = cwl(&[tt.clone(), c6.clone()], Depth::Fixed(j)).unwrap();
            let all: BTreeSet<ColorId> = out
                .trajectories
                .iter()
                .flat_map(|m| m.values().map(|t| t.0[0]))
                .collect();
            assert_eq!(all.len(), 1, "iteration {j}");
        }
        assert!(graph_cwl_equivalent(&tt, &c6, GraphEquivalenceMode::Bijection).unwrap());
        assert!(graph_cwl_equivalent(&tt, &c6, GraphEquivalenceMode::Existence).unwrap());
    }

    #[test]
    fn single_node_trajectory() {
        let g = static_graph(1, &[]);
        let out = cwl(&[g], Depth::Stable).unwrap();
        let tr = &out.trajectories[0][&NodeId::from("v0")];
        assert_eq!(tr.len(), 1);
        assert!(!tr.0[0].is_bottom());
    }

    #[test]
    fn late_node_starts_bottom() {
        let mut s = StartGraph::new();
        s.add_node(NodeId::from("a"), attr(1.0)).unwrap();
        let ev = Event::new(
            Timestamp::new(1.0).unwrap(),
            Item::Node(NodeId::from("b")),
            EventKind::Add(attr(1.0)),
        );
        let g = Cdg::new(1, s, vec![ev]).unwrap();
        let out = cwl(&[g], Depth::Stable).unwrap();
        let tr = &out.trajectories[0][&NodeId::from("b")];
        assert_eq!(tr.0.len(), 2);
        assert!(tr.0[0].is_bottom());
        assert!(!tr.0[1].is_bottom());
    }

    #[test]
    fn attribute_change_is_detected_at_its_timestamp() {
        let base = static_graph(3, &[(0, 1), (1, 2)]);
        let mk = |x: f64| {
            let ev = vec![
                Event::new(
                    Timestamp::new(1.0).unwrap(),
                    Item::Node(NodeId::from("v0")),
                    EventKind::AttrChange(attr(1.0)),
                ),
                Event::new(
                    Timestamp::new(2.0).unwrap(),
                    Item::Node(NodeId::from("v1")),
                    EventKind::AttrChange(attr(x)),
                ),
            ];
            Cdg::new(1, base.start().clone(), ev).unwrap()
        };
        let (g, h) = (mk(1.0), mk(7.0));
        assert!(!graph_cwl_equivalent(&g, &h, GraphEquivalenceMode::Bijection).unwrap());
        let out = cwl(&[g, h], Depth::Stable).unwrap();
        assert_eq!(
            first_distinguishing_timestamp(&out.trajectories[0], &out.trajectories[1]),
            Some(2)
        );
    }

    #[test]
    fn node_equivalence_and_errors() {
        let a = ColorTrajectory(vec![ColorId(1), ColorId(2)]);
        let b = ColorTrajectory(vec![ColorId(1), ColorId(3)]);
        assert!(node_cwl_equivalent(&a, &a).unwrap());
        assert!(!node_cwl_equivalent(&a, &b).unwrap());
        assert_eq!(
            node_cwl_equivalent(&a, &ColorTrajectory(vec![ColorId(1)])),
            Err(WlError::LengthMismatch(2, 1))
        );
    }

    #[test]
    fn star_leaves_are_equivalent() {
        let star = static_graph(4, &[(0, 1), (0, 2), (0, 3)]);
        let out = cwl(&[star], Depth::Stable).unwrap();
        let m = &out.trajectories[0];
        assert!(node_cwl_equivalent(&m[&NodeId::from("v1")], &m[&NodeId::from("v3")]).unwrap());
        assert!(!node_cwl_equivalent(&m[&NodeId::from("v0")], &m[&NodeId::from("v3")]).unwrap());
    }

    #[test]
    fn existence_mode_ignores_multiplicity() {
        let one = static_graph(1, &[]);
        let two = static_graph(2, &[]);
        assert!(!graph_cwl_equivalent(&one, &two, GraphEquivalenceMode::Bijection).unwrap());
        assert!(graph_cwl_equivalent(&one, &two, GraphEquivalenceMode::Existence).unwrap());
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let g = static_graph(1, &[]);
        let mut s = StartGraph::new();
        s.add_node(NodeId::from("a"), Attr::new(vec![1.0, 2.0]).unwrap())
            .unwrap();
        let h = Cdg::new(2, s, vec![]).unwrap();
        assert_eq!(
            cwl(&[g.clone(), h], Depth::Stable).unwrap_err(),
            WlError::DimensionMismatch(1, 2)
        );
        let ev = Event::new(
            Timestamp::new(1.0).unwrap(),
            Item::Node(NodeId::from("v0")),
            EventKind::Delete,
        );
        let k = Cdg::new(1, g.start().clone(), vec![ev]).unwrap();
        assert_eq!(
            cwl(&[g, k], Depth::Stable).unwrap_err(),
            WlError::TimestampMismatch(1, 2)
        );
    }

    #[test]
    fn partition_helpers() {
        assert!(same_partition(&[1, 1, 2], &[5, 5, 9]));
        assert!(!same_partition(&[1, 1, 2], &[5, 6, 9]));
        assert!(refines(&[1, 2, 3], &[7, 7, 8]));
        assert!(!refines(&[1, 1, 3], &[7, 8, 8]));
    }
}
