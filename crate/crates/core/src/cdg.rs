//! Event-sourced continuous-time dynamic graphs.
//!
//! A [`Cdg`] is a start graph plus a strictly time-ordered list of events.
//! The start graph lives at time `0.0` and every event carries its own
//! timestamp, so a CDG with `k` events has `k + 1` timestamps. Snapshots
//! are materialized by replaying events up to and including a timestamp.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Time of the start graph.
pub const START_TIME: f64 = 0.0;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite, non-negative point in time.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(transparent)]
pub struct Timestamp(f64);

impl Timestamp {
    pub fn new(value: f64) -> Result<Self, CdgError> {
        if value.is_finite() && value >= 0.0 {
            Ok(Timestamp(value))
        } else {
            Err(CdgError::InvalidTimestamp(value))
        }
    }

    pub fn start() -> Self {
        Timestamp(START_TIME)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Timestamp {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Timestamp {}

impl Hash for Timestamp {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Attribute vector shared by nodes and edges.
///
/// Equality, ordering and hashing are on the exact bit patterns of the
/// components, so `0.0` and `-0.0` are different attributes.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct Attr(Vec<f64>);

impl Attr {
    pub fn new(components: Vec<f64>) -> Result<Self, CdgError> {
        if components.is_empty() {
            return Err(CdgError::EmptyAttribute);
        }
        if let Some(&bad) = components.iter().find(|c| !c.is_finite()) {
            return Err(CdgError::NonFiniteAttribute(bad));
        }
        Ok(Attr(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Length-prefixed big-endian bit patterns.
    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.0.len() as u32).to_be_bytes());
        for c in &self.0 {
            out.extend_from_slice(&c.to_bits().to_be_bytes());
        }
    }

    fn bits(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().map(|c| c.to_bits())
    }
}

impl PartialEq for Attr {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.bits().eq(other.bits())
    }
}

impl Eq for Attr {}

impl Hash for Attr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.len().hash(state);
        for b in self.bits() {
            b.hash(state);
        }
    }
}

impl PartialOrd for Attr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Attr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.bits().cmp(other.bits()))
    }
}

/// Unordered pair of distinct node ids, stored with the smaller id first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    lo: NodeId,
    hi: NodeId,
}

impl EdgeKey {
    pub fn new(u: NodeId, v: NodeId) -> Result<Self, CdgError> {
        match u.cmp(&v) {
            Ordering::Less => Ok(EdgeKey { lo: u, hi: v }),
            Ordering::Greater => Ok(EdgeKey { lo: v, hi: u }),
            Ordering::Equal => Err(CdgError::SelfLoop(u)),
        }
    }

    pub fn endpoints(&self) -> (&NodeId, &NodeId) {
        (&self.lo, &self.hi)
    }

    pub fn contains(&self, v: &NodeId) -> bool {
        &self.lo == v || &self.hi == v
    }

    /// The endpoint opposite to `v`, if `v` is an endpoint.
    pub fn other(&self, v: &NodeId) -> Option<&NodeId> {
        if &self.lo == v {
            Some(&self.hi)
        } else if &self.hi == v {
            Some(&self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.lo, self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Item {
    Node(NodeId),
    Edge(EdgeKey),
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Node(v) => write!(f, "node {v}"),
            Item::Edge(e) => write!(f, "edge {e}"),
        }
    }
}

/// What happens to an item. Deletions carry no attribute.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Add(Attr),
    Delete,
    AttrChange(Attr),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub time: Timestamp,
    pub item: Item,
    pub kind: EventKind,
}

impl Event {
    pub fn new(time: Timestamp, item: Item, kind: EventKind) -> Self {
        Event { time, item, kind }
    }

    pub fn attribute(&self) -> Option<&Attr> {
        match &self.kind {
            EventKind::Add(a) | EventKind::AttrChange(a) => Some(a),
            EventKind::Delete => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ApplyError {
    #[error("{0} already present")]
    AddExisting(Item),
    #[error("cannot delete missing {0}")]
    DeleteMissing(Item),
    #[error("cannot change attribute of missing {0}")]
    AttrChangeMissing(Item),
    #[error("edge {edge}: endpoint {endpoint} missing")]
    EdgeEndpointMissing { edge: EdgeKey, endpoint: NodeId },
    #[error("event time {next} does not exceed previous time {prev}")]
    NonIncreasingTime { prev: Timestamp, next: Timestamp },
    #[error("attribute has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CdgError {
    #[error("timestamp {0} is not a finite non-negative number")]
    InvalidTimestamp(f64),
    #[error("attribute vectors must have at least one component")]
    EmptyAttribute,
    #[error("attribute component {0} is not finite")]
    NonFiniteAttribute(f64),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("invalid event stream: {}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("{count} nodes exceed the bound of {bound}")]
    NodeBound { count: usize, bound: usize },
    #[error("timestamp {0} is not a timestamp of this CDG")]
    UnknownTimestamp(Timestamp),
    #[error("timestamp index {index} out of range for {count} timestamps")]
    UnknownTimestampIndex { index: usize, count: usize },
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// One validation finding. `event` is `None` for problems in the start graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub event: Option<usize>,
    pub error: ApplyError,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.event {
            Some(i) => write!(f, "event {i}: {}", self.error),
            None => write!(f, "start graph: {}", self.error),
        }
    }
}

/// Nodes and edges of the graph before any event.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StartGraph {
    nodes: BTreeMap<NodeId, Attr>,
    edges: BTreeMap<EdgeKey, Attr>,
}

impl StartGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId, attr: Attr) -> Result<(), ApplyError> {
        if self.nodes.contains_key(&id) {
            return Err(ApplyError::AddExisting(Item::Node(id)));
        }
        self.nodes.insert(id, attr);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: EdgeKey, attr: Attr) -> Result<(), ApplyError> {
        let (u, v) = edge.endpoints();
        for endpoint in [u, v] {
            if !self.nodes.contains_key(endpoint) {
                return Err(ApplyError::EdgeEndpointMissing {
                    endpoint: endpoint.clone(),
                    edge: edge.clone(),
                });
            }
        }
        if self.edges.contains_key(&edge) {
            return Err(ApplyError::AddExisting(Item::Edge(edge)));
        }
        self.edges.insert(edge, attr);
        Ok(())
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, Attr> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<EdgeKey, Attr> {
        &self.edges
    }
}

/// The current graph at one timestamp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    time: Timestamp,
    nodes: BTreeMap<NodeId, Attr>,
    edges: BTreeMap<EdgeKey, Attr>,
}

impl Snapshot {
    pub fn from_start(start: &StartGraph) -> Self {
        Snapshot {
            time: Timestamp::start(),
            nodes: start.nodes.clone(),
            edges: start.edges.clone(),
        }
    }

    /// Builds a snapshot directly; fails on dangling edge endpoints.
    pub fn from_parts(
        time: Timestamp,
        nodes: BTreeMap<NodeId, Attr>,
        edges: BTreeMap<EdgeKey, Attr>,
    ) -> Result<Self, ApplyError> {
        for edge in edges.keys() {
            let (u, v) = edge.endpoints();
            for endpoint in [u, v] {
                if !nodes.contains_key(endpoint) {
                    return Err(ApplyError::EdgeEndpointMissing {
                        edge: edge.clone(),
                        endpoint: endpoint.clone(),
                    });
                }
            }
        }
        Ok(Snapshot { time, nodes, edges })
    }

    pub fn time(&self) -> Timestamp {
        self.time
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, Attr> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<EdgeKey, Attr> {
        &self.edges
    }

    pub fn contains_node(&self, v: &NodeId) -> bool {
        self.nodes.contains_key(v)
    }

    pub fn node_attr(&self, v: &NodeId) -> Option<&Attr> {
        self.nodes.get(v)
    }

    pub fn edge_attr(&self, e: &EdgeKey) -> Option<&Attr> {
        self.edges.get(e)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Neighbors of `v` with the attribute of the connecting edge, ordered by
    /// neighbor id. Empty when `v` is not in the snapshot.
    pub fn neighbors(&self, v: &NodeId) -> Vec<(NodeId, Attr)> {
        let mut out: Vec<(NodeId, Attr)> = self
            .edges
            .iter()
            .filter_map(|(e, a)| e.other(v).map(|u| (u.clone(), a.clone())))
            .collect();
        out.sort();
        out
    }

    fn apply_in_place(&mut self, e: &Event) -> Result<(), ApplyError> {
        if e.time <= self.time {
            return Err(ApplyError::NonIncreasingTime {
                prev: self.time,
                next: e.time,
            });
        }
        match (&e.item, &e.kind) {
            (Item::Node(v), EventKind::Add(a)) => {
                if self.nodes.contains_key(v) {
                    return Err(ApplyError::AddExisting(e.item.clone()));
                }
                self.nodes.insert(v.clone(), a.clone());
            }
            (Item::Node(v), EventKind::Delete) => {
                if self.nodes.remove(v).is_none() {
                    return Err(ApplyError::DeleteMissing(e.item.clone()));
                }
                // incident edges go with the node
                self.edges.retain(|k, _| !k.contains(v));
            }
            (Item::Node(v), EventKind::AttrChange(a)) => match self.nodes.get_mut(v) {
                Some(slot) => *slot = a.clone(),
                None => return Err(ApplyError::AttrChangeMissing(e.item.clone())),
            },
            (Item::Edge(k), EventKind::Add(a)) => {
                let (u, v) = k.endpoints();
                for endpoint in [u, v] {
                    if !self.nodes.contains_key(endpoint) {
                        return Err(ApplyError::EdgeEndpointMissing {
                            edge: k.clone(),
                            endpoint: endpoint.clone(),
                        });
                    }
                }
                if self.edges.contains_key(k) {
                    return Err(ApplyError::AddExisting(e.item.clone()));
                }
                self.edges.insert(k.clone(), a.clone());
            }
            (Item::Edge(k), EventKind::Delete) => {
                if self.edges.remove(k).is_none() {
                    return Err(ApplyError::DeleteMissing(e.item.clone()));
                }
            }
            (Item::Edge(k), EventKind::AttrChange(a)) => match self.edges.get_mut(k) {
                Some(slot) => *slot = a.clone(),
                None => return Err(ApplyError::AttrChangeMissing(e.item.clone())),
            },
        }
        self.time = e.time;
        Ok(())
    }
}

/// Applies one event to a snapshot, returning the successor snapshot.
pub fn apply_event(s: &Snapshot, e: &Event) -> Result<Snapshot, ApplyError> {
    let mut next = s.clone();
    next.apply_in_place(e)?;
    Ok(next)
}

/// Checks a start graph and event stream. Returns one diagnostic per
/// violation; an empty list means the stream replays cleanly.
///
/// An event that fails to apply is skipped and replay continues, so later
/// events are judged against the state without it.
pub fn validate(dim: usize, start: &StartGraph, events: &[Event]) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let check_dim = |event: Option<usize>, attr: &Attr, diags: &mut Vec<Diagnostic>| {
        if attr.dim() != dim {
            diags.push(Diagnostic {
                event,
                error: ApplyError::DimensionMismatch {
                    expected: dim,
                    found: attr.dim(),
                },
            });
        }
    };
    for attr in start.nodes.values().chain(start.edges.values()) {
        check_dim(None, attr, &mut diags);
    }
    let mut snap = Snapshot::from_start(start);
    for (i, e) in events.iter().enumerate() {
        if let Some(a) = e.attribute() {
            check_dim(Some(i), a, &mut diags);
        }
        if let Err(error) = snap.apply_in_place(e) {
            diags.push(Diagnostic {
                event: Some(i),
                error,
            });
            // keep time monotone so one bad timestamp is reported once
            if e.time > snap.time {
                snap.time = e.time;
            }
        }
    }
    diags
}

/// A validated continuous-time dynamic graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cdg {
    dim: usize,
    start: StartGraph,
    events: Vec<Event>,
    universe: BTreeSet<NodeId>,
}

impl Cdg {
    pub fn new(dim: usize, start: StartGraph, events: Vec<Event>) -> Result<Self, CdgError> {
        let diags = validate(dim, &start, &events);
        if !diags.is_empty() {
            return Err(CdgError::Invalid(diags));
        }
        let mut universe: BTreeSet<NodeId> = start.nodes.keys().cloned().collect();
        for e in &events {
            if let (Item::Node(v), EventKind::Add(_)) = (&e.item, &e.kind) {
                universe.insert(v.clone());
            }
        }
        Ok(Cdg {
            dim,
            start,
            events,
            universe,
        })
    }

    /// Like [`Cdg::new`], additionally enforcing `|V| <= bound` on the node universe.
    pub fn with_node_bound(
        dim: usize,
        start: StartGraph,
        events: Vec<Event>,
        bound: usize,
    ) -> Result<Self, CdgError> {
        let cdg = Self::new(dim, start, events)?;
        if cdg.universe.len() > bound {
            return Err(CdgError::NodeBound {
                count: cdg.universe.len(),
                bound,
            });
        }
        Ok(cdg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> &StartGraph {
        &self.start
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Every node id that exists at some timestamp.
    pub fn universe(&self) -> &BTreeSet<NodeId> {
        &self.universe
    }

    pub fn timestamp_count(&self) -> usize {
        self.events.len() + 1
    }

    pub fn timestamps(&self) -> Vec<Timestamp> {
        std::iter::once(Timestamp::start())
            .chain(self.events.iter().map(|e| e.time))
            .collect()
    }

    pub fn timestamp_index(&self, t: Timestamp) -> Option<usize> {
        if t == Timestamp::start() {
            return Some(0);
        }
        self.events
            .binary_search_by(|e| e.time.cmp(&t))
            .ok()
            .map(|i| i + 1)
    }

    /// Snapshot at `t`, with every event at or before `t` applied.
    pub fn replay(&self, t: Timestamp) -> Result<Snapshot, CdgError> {
        let index = self
            .timestamp_index(t)
            .ok_or(CdgError::UnknownTimestamp(t))?;
        self.replay_index(index)
    }

    /// Snapshot after the first `index` events.
    pub fn replay_index(&self, index: usize) -> Result<Snapshot, CdgError> {
        if index >= self.timestamp_count() {
            return Err(CdgError::UnknownTimestampIndex {
                index,
                count: self.timestamp_count(),
            });
        }
        let mut snap = Snapshot::from_start(&self.start);
        for e in &self.events[..index] {
            snap.apply_in_place(e)
                .expect("validated event stream replays cleanly");
        }
        Ok(snap)
    }

    /// All snapshots in timestamp order, computed incrementally.
    pub fn snapshots(&self) -> Vec<Snapshot> {
        let mut out = Vec::with_capacity(self.timestamp_count());
        let mut snap = Snapshot::from_start(&self.start);
        out.push(snap.clone());
        for e in &self.events {
            snap.apply_in_place(e)
                .expect("validated event stream replays cleanly");
            out.push(snap.clone());
        }
        out
    }

    /// Renames nodes through `map`; ids missing from the map are kept.
    pub fn relabel(&self, map: &BTreeMap<NodeId, NodeId>) -> Result<Cdg, CdgError> {
        let rename = |v: &NodeId| map.get(v).cloned().unwrap_or_else(|| v.clone());
        let rename_edge = |k: &EdgeKey| {
            let (u, v) = k.endpoints();
            EdgeKey::new(rename(u), rename(v))
        };
        let mut start = StartGraph::new();
        for (v, a) in &self.start.nodes {
            start.nodes.insert(rename(v), a.clone());
        }
        for (k, a) in &self.start.edges {
            start.edges.insert(rename_edge(k)?, a.clone());
        }
        let events = self
            .events
            .iter()
            .map(|e| {
                let item = match &e.item {
                    Item::Node(v) => Item::Node(rename(v)),
                    Item::Edge(k) => Item::Edge(rename_edge(k)?),
                };
                Ok(Event::new(e.time, item, e.kind.clone()))
            })
            .collect::<Result<Vec<_>, CdgError>>()?;
        Cdg::new(self.dim, start, events)
    }

    /// Rewrites every node and edge attribute through `f`.
    pub fn map_attrs(&self, mut f: impl FnMut(&Attr) -> Attr) -> Result<Cdg, CdgError> {
        let mut start = StartGraph::new();
        for (v, a) in &self.start.nodes {
            start.nodes.insert(v.clone(), f(a));
        }
        for (k, a) in &self.start.edges {
            start.edges.insert(k.clone(), f(a));
        }
        let events = self
            .events
            .iter()
            .map(|e| {
                let kind = match &e.kind {
                    EventKind::Add(a) => EventKind::Add(f(a)),
                    EventKind::AttrChange(a) => EventKind::AttrChange(f(a)),
                    EventKind::Delete => EventKind::Delete,
                };
                Event::new(e.time, e.item.clone(), kind)
            })
            .collect();
        let dim = start
            .nodes
            .values()
            .next()
            .map(Attr::dim)
            .unwrap_or(self.dim);
        Cdg::new(dim, start, events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(v: &[f64]) -> Attr {
        Attr::new(v.to_vec()).unwrap()
    }

    fn t(v: f64) -> Timestamp {
        Timestamp::new(v).unwrap()
    }

    fn node(s: &str) -> NodeId {
        NodeId::from(s)
    }

    fn edge(u: &str, v: &str) -> EdgeKey {
        EdgeKey::new(node(u), node(v)).unwrap()
    }

    fn start_a() -> StartGraph {
        let mut g = StartGraph::new();
        g.add_node(node("a"), attr(&[0.0])).unwrap();
        g
    }

    #[test]
    fn empty_event_list_is_valid() {
        assert!(validate(1, &start_a(), &[]).is_empty());
    }

    #[test]
    fn re_adding_present_node_is_diagnosed() {
        let events = vec![Event::new(
            t(1.0),
            Item::Node(node("a")),
            EventKind::Add(attr(&[1.0])),
        )];
        let diags = validate(1, &start_a(), &events);
        assert_eq!(
            diags,
            vec![Diagnostic {
                event: Some(0),
                error: ApplyError::AddExisting(Item::Node(node("a"))),
            }]
        );
    }

    #[test]
    fn dangling_edge_endpoint_is_diagnosed() {
        let events = vec![Event::new(
            t(1.0),
            Item::Edge(edge("a", "b")),
            EventKind::Add(attr(&[1.0])),
        )];
        let diags = validate(1, &start_a(), &events);
        assert_eq!(diags.len(), 1);
        assert_eq!(
            diags[0].error,
            ApplyError::EdgeEndpointMissing {
                edge: edge("a", "b"),
                endpoint: node("b"),
            }
        );
    }

    #[test]
    fn simultaneous_events_rejected() {
        let events = vec![
            Event::new(t(1.0), Item::Node(node("b")), EventKind::Add(attr(&[1.0]))),
            Event::new(t(1.0), Item::Node(node("c")), EventKind::Add(attr(&[1.0]))),
        ];
        let diags = validate(1, &start_a(), &events);
        assert_eq!(diags.len(), 1);
        assert!(matches!(
            diags[0].error,
            ApplyError::NonIncreasingTime { .. }
        ));
        // an event at the start time is also simultaneous
        let events = vec![Event::new(
            t(0.0),
            Item::Node(node("b")),
            EventKind::Add(attr(&[1.0])),
        )];
        assert_eq!(validate(1, &start_a(), &events).len(), 1);
    }

    #[test]
    fn dimension_mismatch_is_diagnosed() {
        let events = vec![Event::new(
            t(1.0),
            Item::Node(node("b")),
            EventKind::Add(attr(&[1.0, 2.0])),
        )];
        let diags = validate(1, &start_a(), &events);
        assert!(matches!(
            diags[0].error,
            ApplyError::DimensionMismatch {
                expected: 1,
                found: 2
            }
        ));
    }

    #[test]
    fn add_edge_event() {
        let mut nodes = BTreeMap::new();
        nodes.insert(node("a"), attr(&[0.0]));
        nodes.insert(node("b"), attr(&[0.0]));
        let s = Snapshot::from_parts(t(0.0), nodes, BTreeMap::new()).unwrap();
        let e = Event::new(
            t(1.0),
            Item::Edge(edge("a", "b")),
            EventKind::Add(attr(&[1.0])),
        );
        let next = apply_event(&s, &e).unwrap();
        assert_eq!(next.time(), t(1.0));
        assert_eq!(next.edge_attr(&edge("b", "a")), Some(&attr(&[1.0])));
        assert_eq!(next.node_count(), 2);
    }

    #[test]
    fn node_deletion_cascades_to_edges() {
        let mut nodes = BTreeMap::new();
        nodes.insert(node("a"), attr(&[0.0]));
        nodes.insert(node("b"), attr(&[0.0]));
        let mut edges = BTreeMap::new();
        edges.insert(edge("a", "b"), attr(&[1.0]));
        let s = Snapshot::from_parts(t(0.0), nodes, edges).unwrap();
        let e = Event::new(t(2.0), Item::Node(node("a")), EventKind::Delete);
        let next = apply_event(&s, &e).unwrap();
        assert_eq!(next.nodes().keys().collect::<Vec<_>>(), vec![&node("b")]);
        assert!(next.edges().is_empty());
    }

    #[test]
    fn attr_change_overwrites() {
        let s = Snapshot::from_start(&start_a());
        let e = Event::new(
            t(1.0),
            Item::Node(node("a")),
            EventKind::AttrChange(attr(&[2.5])),
        );
        let next = apply_event(&s, &e).unwrap();
        assert_eq!(next.node_attr(&node("a")), Some(&attr(&[2.5])));
    }

    #[test]
    fn apply_error_cases() {
        let s = Snapshot::from_start(&start_a());
        let del = Event::new(t(1.0), Item::Node(node("z")), EventKind::Delete);
        assert!(matches!(
            apply_event(&s, &del),
            Err(ApplyError::DeleteMissing(_))
        ));
        let ch = Event::new(
            t(1.0),
            Item::Edge(edge("a", "z")),
            EventKind::AttrChange(attr(&[1.0])),
        );
        assert!(matches!(
            apply_event(&s, &ch),
            Err(ApplyError::AttrChangeMissing(_))
        ));
        let past = Event::new(t(0.0), Item::Node(node("b")), EventKind::Add(attr(&[1.0])));
        assert!(matches!(
            apply_event(&s, &past),
            Err(ApplyError::NonIncreasingTime { .. })
        ));
    }

    #[test]
    fn self_loops_rejected() {
        assert_eq!(
            EdgeKey::new(node("a"), node("a")),
            Err(CdgError::SelfLoop(node("a")))
        );
    }

    #[test]
    fn replay_identity_without_events() {
        let g = Cdg::new(1, start_a(), vec![]).unwrap();
        assert_eq!(g.timestamps(), vec![t(0.0)]);
        let s = g.replay(t(0.0)).unwrap();
        assert_eq!(s, Snapshot::from_start(&start_a()));
        assert!(matches!(
            g.replay(t(3.0)),
            Err(CdgError::UnknownTimestamp(_))
        ));
    }

    #[test]
    fn add_then_delete_keeps_node_in_universe() {
        let events = vec![
            Event::new(t(1.0), Item::Node(node("c")), EventKind::Add(attr(&[1.0]))),
            Event::new(t(2.0), Item::Node(node("c")), EventKind::Delete),
        ];
        let g = Cdg::new(1, start_a(), events).unwrap();
        let last = g.replay(t(2.0)).unwrap();
        assert!(!last.contains_node(&node("c")));
        assert!(g.universe().contains(&node("c")));
        // inclusive replay: the event at t=1 is visible at t=1
        assert!(g.replay(t(1.0)).unwrap().contains_node(&node("c")));
    }

    #[test]
    fn readding_deleted_node_is_legal() {
        let events = vec![
            Event::new(t(1.0), Item::Node(node("a")), EventKind::Delete),
            Event::new(t(2.0), Item::Node(node("a")), EventKind::Add(attr(&[3.0]))),
        ];
        let g = Cdg::new(1, start_a(), events).unwrap();
        assert_eq!(g.universe().len(), 1);
        assert_eq!(
            g.replay_index(2).unwrap().node_attr(&node("a")),
            Some(&attr(&[3.0]))
        );
    }

    #[test]
    fn node_bound_enforced() {
        let events = vec![Event::new(
            t(1.0),
            Item::Node(node("b")),
            EventKind::Add(attr(&[1.0])),
        )];
        let err = Cdg::with_node_bound(1, start_a(), events, 1).unwrap_err();
        assert_eq!(err, CdgError::NodeBound { count: 2, bound: 1 });
    }

    #[test]
    fn neighbors_conventions() {
        let mut g = StartGraph::new();
        for v in ["a", "b", "c", "d"] {
            g.add_node(node(v), attr(&[0.0])).unwrap();
        }
        g.add_edge(edge("a", "b"), attr(&[1.0])).unwrap();
        g.add_edge(edge("c", "a"), attr(&[1.0])).unwrap();
        g.add_edge(edge("b", "c"), attr(&[1.0])).unwrap();
        let s = Snapshot::from_start(&g);
        assert_eq!(
            s.neighbors(&node("a")),
            vec![(node("b"), attr(&[1.0])), (node("c"), attr(&[1.0]))]
        );
        assert!(s.neighbors(&node("d")).is_empty());
        assert!(s.neighbors(&node("zz")).is_empty());
    }

    #[test]
    fn attr_equality_is_bitwise() {
        assert_ne!(attr(&[0.0]), attr(&[-0.0]));
        assert_eq!(attr(&[0.1 + 0.2]), attr(&[0.1 + 0.2]));
        assert!(Attr::new(vec![f64::NAN]).is_err());
        assert!(Attr::new(vec![]).is_err());
    }
}
