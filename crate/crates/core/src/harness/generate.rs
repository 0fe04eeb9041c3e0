//! Seeded random CDGs that are valid by construction.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdg::{
    apply_event, Attr, Cdg, EdgeKey, Event, EventKind, Item, NodeId, Snapshot, StartGraph,
    Timestamp,
};
use crate::decompose::is_disconnected;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventProbabilities {
    pub add_node: f64,
    pub delete_node: f64,
    pub add_edge: f64,
    pub delete_edge: f64,
    pub attr_change: f64,
}

impl Default for EventProbabilities {
    fn default() -> Self {
        EventProbabilities {
            add_node: 0.2,
            delete_node: 0.15,
            add_edge: 0.3,
            delete_edge: 0.15,
            attr_change: 0.2,
        }
    }
}

impl EventProbabilities {
    fn weights(&self) -> [f64; 5] {
        [
            self.add_node,
            self.delete_node,
            self.add_edge,
            self.delete_edge,
            self.attr_change,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Bound on the node universe.
    pub max_nodes: usize,
    /// Number of events, so the CDG has `events + 1` timestamps.
    pub events: usize,
    pub dim: usize,
    /// Number of distinct attribute vectors drawn from.
    pub alphabet: usize,
    pub probabilities: EventProbabilities,
    pub edge_density: f64,
    /// Keep at least two components in every snapshot.
    pub disconnected: bool,
    /// Allow deleted nodes to be added again.
    pub allow_readd: bool,
    pub max_retries: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            max_nodes: 6,
            events: 4,
            dim: 1,
            alphabet: 3,
            probabilities: EventProbabilities::default(),
            edge_density: 0.4,
            disconnected: false,
            allow_readd: true,
            max_retries: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GenerateError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("no valid CDG found within {0} attempts")]
    GenerationExhausted(usize),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |m: &str| Err(GenerateError::InvalidConfig(m.to_owned()));
        let w = self.probabilities.weights();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0)
            || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("event probabilities must be non-negative and sum to 1");
        }
        if self.max_nodes == 0 || self.dim == 0 || self.alphabet == 0 {
            return bad("max_nodes, dim and alphabet must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.edge_density) {
            return bad("edge density must lie in [0, 1]");
        }
        if self.disconnected && self.max_nodes < 2 {
            return bad("a disconnected CDG needs at least 2 nodes");
        }
        Ok(())
    }

    /// The attribute vectors drawn from; entry `i` starts with `i + 1`.
    pub fn alphabet_vectors(&self) -> Vec<Attr> {
        (0..self.alphabet)
            .map(|i| {
                let v = (0..self.dim)
                    .map(|c| (i + 1) as f64 + 0.25 * ((i * (c + 1)) % 3) as f64)
                    .collect();
                Attr::new(v).expect("finite, non-empty")
            })
            .collect()
    }
}

pub fn node_name(i: usize) -> NodeId {
    NodeId::new(format!("n{i}"))
}

fn start_graph(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng, alphabet: &[Attr]) -> StartGraph {
    let lo = if cfg.disconnected { 2 } else { 1 };
    let k = rng.random_range(lo..=cfg.max_nodes);
    let mut g = StartGraph::new();
    let ids: Vec<NodeId> = (0..k).map(node_name).collect();
    for v in &ids {
        g.add_node(v.clone(), alphabet.choose(rng).expect("non-empty").clone())
            .expect("fresh id");
    }
    for i in 0..k {
        for j in i + 1..k {
            if rng.random_bool(cfg.edge_density) {
                let key = EdgeKey::new(ids[i].clone(), ids[j].clone()).expect("distinct");
                g.add_edge(key, alphabet.choose(rng).expect("non-empty").clone())
                    .expect("fresh edge");
            }
        }
    }
    g
}

/// Removes edges until the start graph has at least two components.
fn split_start(g: &mut StartGraph, rng: &mut ChaCha8Rng) {
    while !is_disconnected(&Snapshot::from_start(g)) && !g.edges().is_empty() {
        let edges: Vec<EdgeKey> = g.edges().keys().cloned().collect();
        let e = edges.choose(rng).expect("non-empty").clone();
        let mut next = StartGraph::new();
        for (v, a) in g.nodes() {
            next.add_node(v.clone(), a.clone()).expect("copy");
        }
        for (k, a) in g.edges() {
            if *k != e {
                next.add_edge(k.clone(), a.clone()).expect("copy");
            }
        }
        *g = next;
    }
}

fn candidates(
    cfg: &GeneratorConfig,
    s: &Snapshot,
    ever: &[bool],
    alphabet: &[Attr],
) -> [Vec<(Item, EventKind)>; 5] {
    let present: Vec<usize> = (0..cfg.max_nodes)
        .filter(|&i| s.contains_node(&node_name(i)))
        .collect();
    let mut add_node = Vec::new();
    for i in 0..cfg.max_nodes {
        if !s.contains_node(&node_name(i)) && (cfg.allow_readd || !ever[i]) {
            for a in alphabet {
                add_node.push((Item::Node(node_name(i)), EventKind::Add(a.clone())));
            }
        }
    }
    let delete_node = present
        .iter()
        .map(|&i| (Item::Node(node_name(i)), EventKind::Delete))
        .collect();
    let mut add_edge = Vec::new();
    for (x, &i) in present.iter().enumerate() {
        for &j in &present[x + 1..] {
            let key = EdgeKey::new(node_name(i), node_name(j)).expect("distinct");
            if s.edge_attr(&key).is_none() {
                for a in alphabet {
                    add_edge.push((Item::Edge(key.clone()), EventKind::Add(a.clone())));
                }
            }
        }
    }
    let delete_edge = s
        .edges()
        .keys()
        .map(|k| (Item::Edge(k.clone()), EventKind::Delete))
        .collect();
    let mut attr_change = Vec::new();
    let items = s
        .nodes()
        .iter()
        .map(|(v, a)| (Item::Node(v.clone()), a))
        .chain(s.edges().iter().map(|(k, a)| (Item::Edge(k.clone()), a)));
    for (item, current) in items {
        let others: Vec<&Attr> = alphabet.iter().filter(|a| *a != current).collect();
        let pool: Vec<&Attr> = if others.is_empty() {
            alphabet.iter().collect()
        } else {
            others
        };
        for a in pool {
            attr_change.push((item.clone(), EventKind::AttrChange(a.clone())));
        }
    }
    [add_node, delete_node, add_edge, delete_edge, attr_change]
}

fn attempt(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Option<Cdg> {
    let alphabet = cfg.alphabet_vectors();
    let mut start = start_graph(cfg, rng, &alphabet);
    if cfg.disconnected {
        split_start(&mut start, rng);
        if !is_disconnected(&Snapshot::from_start(&start)) {
            return None;
        }
    }
    let mut s = Snapshot::from_start(&start);
    let mut ever: Vec<bool> = (0..cfg.max_nodes)
        .map(|i| s.contains_node(&node_name(i)))
        .collect();
    let weights = cfg.probabilities.weights();
    let mut events = Vec::with_capacity(cfg.events);
    let mut t = 0.0;
    for _ in 0..cfg.events {
        t += rng.random_range(0.1..1.0);
        let time = Timestamp::new(t).expect("positive");
        let mut groups = candidates(cfg, &s, &ever, &alphabet);
        if cfg.disconnected {
            for g in &mut groups {
                g.retain(|(item, kind)| {
                    let e = Event::new(time, item.clone(), kind.clone());
                    apply_event(&s, &e).is_ok_and(|next| is_disconnected(&next))
                });
            }
        }
        let total: f64 = groups
            .iter()
            .zip(weights)
            .filter(|(g, _)| !g.is_empty())
            .map(|(_, w)| w)
            .sum();
        if total <= 0.0 {
            return None;
        }
        let mut x = rng.random_range(0.0..total);
        let mut chosen = None;
        for (g, w) in groups.iter().zip(weights) {
            if g.is_empty() || w <= 0.0 {
                continue;
            }
            chosen = Some(g);
            if x < w {
                break;
            }
            x -= w;
        }
        let group = chosen?;
        let (item, kind) = group.choose(rng).expect("non-empty").clone();
        let e = Event::new(time, item, kind);
        s = apply_event(&s, &e).expect("candidates are applicable");
        if let Item::Node(v) = &e.item {
            let i: usize = v.as_str()[1..].parse().expect("generated id");
            ever[i] = true;
        }
        events.push(e);
    }
    Some(
        Cdg::with_node_bound(cfg.dim, start, events, cfg.max_nodes).expect("valid by construction"),
    )
}

/// Draws one CDG. Identical configurations give identical CDGs.
pub fn generate(cfg: &GeneratorConfig) -> Result<Cdg, GenerateError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.max_retries.max(1) {
        if let Some(g) = attempt(cfg, &mut rng) {
            return Ok(g);
        }
    }
    Err(GenerateError::GenerationExhausted(cfg.max_retries.max(1)))
}

/// Random node bijection of `g`'s universe onto the generator's id pool.
pub fn random_bijection(g: &Cdg, pool: usize, rng: &mut ChaCha8Rng) -> BTreeMap<NodeId, NodeId> {
    let mut targets: Vec<NodeId> = (0..pool.max(g.universe().len())).map(node_name).collect();
    targets.shuffle(rng);
    g.universe().iter().cloned().zip(targets).collect()
}

/// An isomorphic copy of a generated CDG: node ids permuted and, if
/// `rename_attrs`, attribute vectors permuted consistently.
#[derive(Clone, Debug)]
pub struct IsomorphicPair {
    pub first: Cdg,
    pub second: Cdg,
    pub bijection: BTreeMap<NodeId, NodeId>,
    pub renaming: Option<BTreeMap<Attr, Attr>>,
}

pub fn generate_isomorphic_pair(
    cfg: &GeneratorConfig,
    perm_seed: u64,
    rename_attrs: bool,
) -> Result<IsomorphicPair, GenerateError> {
    let first = generate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
    let bijection = random_bijection(&first, cfg.max_nodes, &mut rng);
    let relabeled = first
        .relabel(&bijection)
        .expect("bijection preserves validity");
    let (second, renaming) = if rename_attrs {
        let alphabet = cfg.alphabet_vectors();
        let mut shuffled = alphabet.clone();
        shuffled.shuffle(&mut rng);
        let map: BTreeMap<Attr, Attr> = alphabet.into_iter().zip(shuffled).collect();
        let renamed = relabeled
            .map_attrs(|a| map[a].clone())
            .expect("renaming preserves validity");
        (renamed, Some(map))
    } else {
        (relabeled, None)
    };
    Ok(IsomorphicPair {
        first,
        second,
        bijection,
        renaming,
    })
}

/// A copy of `g` with one attribute (start node, start edge or event)
/// replaced by a different alphabet entry, when such a change exists.
pub fn perturb(g: &Cdg, alphabet: &[Attr], rng: &mut ChaCha8Rng) -> Cdg {
    let start_nodes = g.start().nodes().len();
    let start_edges = g.start().edges().len();
    let attr_events: Vec<usize> = (0..g.events().len())
        .filter(|&i| g.events()[i].attribute().is_some())
        .collect();
    let slots = start_nodes + start_edges + attr_events.len();
    if slots == 0 || alphabet.len() < 2 {
        return g.clone();
    }
    let pick = rng.random_range(0..slots);
    let replace = |a: &Attr, rng: &mut ChaCha8Rng| -> Attr {
        let others: Vec<&Attr> = alphabet.iter().filter(|x| *x != a).collect();
        (*others.choose(rng).expect("alphabet has another entry")).clone()
    };
    let mut start = StartGraph::new();
    for (i, (v, a)) in g.start().nodes().iter().enumerate() {
        let a = if i == pick {
            replace(a, rng)
        } else {
            a.clone()
        };
        start.add_node(v.clone(), a).expect("copy");
    }
    for (i, (k, a)) in g.start().edges().iter().enumerate() {
        let a = if start_nodes + i == pick {
            replace(a, rng)
        } else {
            a.clone()
        };
        start.add_edge(k.clone(), a).expect("copy");
    }
    let mut events = g.events().to_vec();
    if pick >= start_nodes + start_edges {
        let e = &mut events[attr_events[pick - start_nodes - start_edges]];
        e.kind = match &e.kind {
            EventKind::Add(a) => EventKind::Add(replace(a, rng)),
            EventKind::AttrChange(a) => EventKind::AttrChange(replace(a, rng)),
            EventKind::Delete => unreachable!("filtered to attributed events"),
        };
    }
    Cdg::new(g.dim(), start, events).expect("attribute changes keep validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::components;
    use crate::io::to_jsonl;
    use crate::iso::{brute_force_isomorphic, is_isomorphism_witness, AttributeMode};

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig {
            seed: 42,
            ..Default::default()
        };
        assert_eq!(
            to_jsonl(&generate(&cfg).unwrap()),
            to_jsonl(&generate(&cfg).unwrap())
        );
    }

    #[test]
    fn single_node_no_events() {
        let cfg = GeneratorConfig {
            max_nodes: 1,
            events: 0,
            ..Default::default()
        };
        let g = generate(&cfg).unwrap();
        assert_eq!(g.universe().len(), 1);
        assert_eq!(g.timestamp_count(), 1);
    }

    #[test]
    fn disconnected_flag_holds_everywhere() {
        for seed in 0..30 {
            let cfg = GeneratorConfig {
                seed,
                disconnected: true,
                edge_density: 0.7,
                ..Default::default()
            };
            let g = generate(&cfg).unwrap();
            for s in g.snapshots() {
                assert!(components(&s).len() >= 2, "seed {seed}");
            }
        }
    }

    #[test]
    fn no_readd_when_disabled() {
        for seed in 0..30 {
            let cfg = GeneratorConfig {
                seed,
                events: 8,
                allow_readd: false,
                ..Default::default()
            };
            let g = generate(&cfg).unwrap();
            let mut gone = std::collections::BTreeSet::new();
            for e in g.events() {
                if let Item::Node(v) = &e.item {
                    match e.kind {
                        EventKind::Delete => {
                            gone.insert(v.clone());
                        }
                        EventKind::Add(_) => assert!(!gone.contains(v)),
                        EventKind::AttrChange(_) => {}
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = GeneratorConfig::default();
        cfg.probabilities.add_node = 0.9;
        assert!(matches!(
            generate(&cfg),
            Err(GenerateError::InvalidConfig(_))
        ));
        let cfg = GeneratorConfig {
            max_nodes: 1,
            disconnected: true,
            ..Default::default()
        };
        assert!(matches!(
            generate(&cfg),
            Err(GenerateError::InvalidConfig(_))
        ));
    }

    #[test]
    fn exhaustion_reported() {
        // two nodes, forced apart, and only edge additions allowed
        let cfg = GeneratorConfig {
            max_nodes: 2,
            events: 1,
            disconnected: true,
            probabilities: EventProbabilities {
                add_node: 0.0,
                delete_node: 0.0,
                add_edge: 1.0,
                delete_edge: 0.0,
                attr_change: 0.0,
            },
            max_retries: 5,
            ..Default::default()
        };
        assert_eq!(
            generate(&cfg).unwrap_err(),
            GenerateError::GenerationExhausted(5)
        );
    }

    #[test]
    fn isomorphic_pairs_verify() {
        for seed in 0..10 {
            let cfg = GeneratorConfig {
                seed,
                ..Default::default()
            };
            let p = generate_isomorphic_pair(&cfg, seed + 100, false).unwrap();
            assert!(is_isomorphism_witness(
                &p.first,
                &p.second,
                &p.bijection,
                AttributeMode::Identity
            ));
            let r = generate_isomorphic_pair(&cfg, seed + 100, true).unwrap();
            assert!(
                brute_force_isomorphic(&r.first, &r.second, AttributeMode::Renaming)
                    .unwrap()
                    .is_isomorphic()
            );
        }
    }

    #[test]
    fn identity_permutation_is_equal() {
        let g = generate(&GeneratorConfig::default()).unwrap();
        let id: BTreeMap<NodeId, NodeId> = g
            .universe()
            .iter()
            .map(|v| (v.clone(), v.clone()))
            .collect();
        assert_eq!(g.relabel(&id).unwrap(), g);
    }
}
