//! Training targets defined per (timestamp, node) and checked to depend only
//! on the node's tree trajectory up to that timestamp.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CgnnError;
use crate::cdg::{Cdg, NodeId};
use crate::utree::{cut_trajectories_with, CutDepth, TreeId, TreeInterner};

/// Target description as read from JSON. Graphs are referenced by their
/// position in the corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSpec {
    Constant {
        value: Vec<f64>,
    },
    /// 1 on the tree-trajectory prefix class of (`graph`, `node`, `t_index`),
    /// 0 elsewhere.
    Indicator {
        graph: usize,
        node: NodeId,
        t_index: usize,
    },
    Table {
        entries: Vec<TableEntry>,
        default: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub graph: usize,
    pub node: NodeId,
    pub t_index: usize,
    pub value: Vec<f64>,
}

/// Tree-trajectory prefixes of every (graph, timestamp, node slot), from one
/// interner so that equal prefixes compare equal across graphs.
#[derive(Clone, Debug)]
pub struct PrefixTable {
    pub depth: usize,
    /// `[graph][t][slot]`
    pub prefixes: Vec<Vec<Vec<Vec<TreeId>>>>,
    pub nodes: Vec<Vec<NodeId>>,
}

impl PrefixTable {
    /// Trees at depth `2N - 1` with `N` the largest universe in the corpus.
    pub fn new(corpus: &[Cdg]) -> Self {
        let depth = CutDepth::Auto.resolve(corpus);
        let mut interner = TreeInterner::new();
        let mut prefixes = Vec::with_capacity(corpus.len());
        let mut nodes = Vec::with_capacity(corpus.len());
        for g in corpus {
            let trajs = cut_trajectories_with(
                std::slice::from_ref(g),
                CutDepth::Fixed(depth),
                &mut interner,
            )
            .expect("a single CDG is always compatible")
            .pop()
            .expect("one trajectory map");
            let per_t = (0..g.timestamp_count())
                .map(|t| trajs.values().map(|tr| tr.trees[..=t].to_vec()).collect())
                .collect();
            prefixes.push(per_t);
            nodes.push(trajs.into_keys().collect());
        }
        PrefixTable {
            depth,
            prefixes,
            nodes,
        }
    }

    pub fn slot(&self, graph: usize, node: &NodeId) -> Option<usize> {
        self.nodes.get(graph)?.binary_search(node).ok()
    }

    /// Number of present (graph, timestamp, node) rows per prefix class.
    pub fn class_sizes(&self) -> HashMap<&[TreeId], usize> {
        let mut sizes = HashMap::new();
        for g in &self.prefixes {
            for t in g {
                for p in t {
                    if p.last() != Some(&TreeId::EMPTY) {
                        *sizes.entry(p.as_slice()).or_insert(0) += 1;
                    }
                }
            }
        }
        sizes
    }
}

/// Target values per graph, timestamp and node slot; `None` for absent
/// nodes, which carry no target.
#[derive(Clone, Debug, PartialEq)]
pub struct CdynTarget {
    pub output_dim: usize,
    pub values: Vec<Vec<Vec<Option<Vec<f64>>>>>,
}

impl CdynTarget {
    pub fn build(corpus: &[Cdg], spec: &TargetSpec) -> Result<Self, CgnnError> {
        Self::build_with(&PrefixTable::new(corpus), spec)
    }

    pub fn build_with(table: &PrefixTable, spec: &TargetSpec) -> Result<Self, CgnnError> {
        let locate = |graph: usize, node: &NodeId, t: usize| -> Result<usize, CgnnError> {
            let slot = table.slot(graph, node).ok_or_else(|| {
                CgnnError::InvalidTarget(format!("graph {graph} has no node {node}"))
            })?;
            if t >= table.prefixes[graph].len() {
                return Err(CgnnError::InvalidTarget(format!(
                    "graph {graph} has no timestamp index {t}"
                )));
            }
            Ok(slot)
        };
        let mut explicit: HashMap<(usize, usize, usize), &Vec<f64>> = HashMap::new();
        let (output_dim, default): (usize, Vec<f64>) = match spec {
            TargetSpec::Constant { value } => (value.len(), value.clone()),
            TargetSpec::Indicator { .. } => (1, vec![0.0]),
            TargetSpec::Table { entries, default } => {
                for e in entries {
                    if e.value.len() != default.len() {
                        return Err(CgnnError::InvalidTarget(
                            "table values differ in length".into(),
                        ));
                    }
                    let slot = locate(e.graph, &e.node, e.t_index)?;
                    explicit.insert((e.graph, e.t_index, slot), &e.value);
                }
                (default.len(), default.clone())
            }
        };
        if output_dim == 0 {
            return Err(CgnnError::InvalidTarget("empty target vector".into()));
        }
        let class: Option<&[TreeId]> = match spec {
            TargetSpec::Indicator {
                graph,
                node,
                t_index,
            } => {
                let slot = locate(*graph, node, *t_index)?;
                let p = &table.prefixes[*graph][*t_index][slot];
                if p.last() == Some(&TreeId::EMPTY) {
                    return Err(CgnnError::InvalidTarget(format!(
                        "node {node} is absent at t_index {t_index}"
                    )));
                }
                Some(p)
            }
            _ => None,
        };
        let mut values = Vec::with_capacity(table.prefixes.len());
        let mut seen: HashMap<&[TreeId], (usize, usize, &Vec<f64>)> = HashMap::new();
        for (gi, per_t) in table.prefixes.iter().enumerate() {
            let mut rows_t = Vec::with_capacity(per_t.len());
            for (t, per_slot) in per_t.iter().enumerate() {
                let mut rows = Vec::with_capacity(per_slot.len());
                for (slot, p) in per_slot.iter().enumerate() {
                    if p.last() == Some(&TreeId::EMPTY) {
                        rows.push(None);
                        continue;
                    }
                    let v = match class {
                        Some(c) => vec![if p.as_slice() == c { 1.0 } else { 0.0 }],
                        None => explicit
                            .get(&(gi, t, slot))
                            .map_or_else(|| default.clone(), |v| (*v).clone()),
                    };
                    rows.push(Some(v));
                }
                rows_t.push(rows);
            }
            values.push(rows_t);
        }
        // equal prefixes must carry equal values
        for (gi, per_t) in table.prefixes.iter().enumerate() {
            for (t, per_slot) in per_t.iter().enumerate() {
                for (slot, p) in per_slot.iter().enumerate() {
                    let Some(v) = values[gi][t][slot].as_ref() else {
                        continue;
                    };
                    match seen.get(p.as_slice()) {
                        Some(&(g0, s0, v0))
                            if v0
                                .iter()
                                .map(|x| x.to_bits())
                                .ne(v.iter().map(|x| x.to_bits())) =>
                        {
                            return Err(CgnnError::TargetNotCutRespecting {
                                graph_a: g0,
                                node_a: table.nodes[g0][s0].to_string(),
                                graph_b: gi,
                                node_b: table.nodes[gi][slot].to_string(),
                                t_index: t,
                            });
                        }
                        Some(_) => {}
                        None => {
                            seen.insert(p.as_slice(), (gi, slot, v));
                        }
                    }
                }
            }
        }
        Ok(CdynTarget { output_dim, values })
    }

    pub fn rows(&self) -> usize {
        self.values
            .iter()
            .flatten()
            .flatten()
            .filter(|v| v.is_some())
            .count()
    }

    /// Population variance of the target entries over all present rows.
    pub fn variance(&self) -> f64 {
        let xs: Vec<f64> = self
            .values
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .flatten()
            .copied()
            .collect();
        if xs.is_empty() {
            return 0.0;
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::{Attr, EdgeKey, StartGraph};

    fn star() -> Cdg {
        let mut s = StartGraph::new();
        let a = Attr::new(vec![1.0]).unwrap();
        for v in ["c", "x", "y"] {
            s.add_node(NodeId::from(v), a.clone()).unwrap();
        }
        for v in ["x", "y"] {
            s.add_edge(
                EdgeKey::new(NodeId::from("c"), NodeId::from(v)).unwrap(),
                a.clone(),
            )
            .unwrap();
        }
        Cdg::new(1, s, vec![]).unwrap()
    }

    #[test]
    fn constant_target() {
        let t = CdynTarget::build(&[star()], &TargetSpec::Constant { value: vec![0.5] }).unwrap();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.variance(), 0.0);
    }

    #[test]
    fn indicator_marks_class() {
        let spec = TargetSpec::Indicator {
            graph: 0,
            node: NodeId::from("x"),
            t_index: 0,
        };
        let t = CdynTarget::build(&[star()], &spec).unwrap();
        assert_eq!(
            t.values[0][0],
            vec![Some(vec![0.0]), Some(vec![1.0]), Some(vec![1.0])]
        );
    }

    #[test]
    fn separating_equal_prefixes_is_rejected() {
        let spec = TargetSpec::Table {
            entries: vec![TableEntry {
                graph: 0,
                node: NodeId::from("x"),
                t_index: 0,
                value: vec![1.0],
            }],
            default: vec![0.0],
        };
        assert!(matches!(
            CdynTarget::build(&[star()], &spec),
            Err(CgnnError::TargetNotCutRespecting { .. })
        ));
    }

    #[test]
    fn respecting_table_accepted() {
        let entries = ["x", "y"]
            .iter()
            .map(|v| TableEntry {
                graph: 0,
                node: NodeId::from(*v),
                t_index: 0,
                value: vec![2.0],
            })
            .collect();
        let t = CdynTarget::build(
            &[star(), star()],
            &TargetSpec::Table {
                entries,
                default: vec![0.0],
            },
        );
        // the second copy of the star leaves its leaves at the default
        assert!(matches!(t, Err(CgnnError::TargetNotCutRespecting { .. })));
        let entries = ["x", "y"]
            .iter()
            .map(|v| TableEntry {
                graph: 0,
                node: NodeId::from(*v),
                t_index: 0,
                value: vec![2.0],
            })
            .collect();
        assert!(CdynTarget::build(
            &[star()],
            &TargetSpec::Table {
                entries,
                default: vec![0.0]
            }
        )
        .is_ok());
    }

    #[test]
    fn target_json() {
        let spec: TargetSpec =
            serde_json::from_str(r#"{"kind":"indicator","graph":0,"node":"x","t_index":0}"#)
                .unwrap();
        assert!(matches!(spec, TargetSpec::Indicator { .. }));
    }
}
