//! Corpus-wide checks relating tree trajectories, color trajectories and
//! tree depth bounds.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::cdg::{Cdg, NodeId, Snapshot};
use crate::decompose::is_disconnected;
use crate::indexed::IndexedGraph;
use crate::utree::{
    cut_trajectories_with, depth_bound, tree_ids, CutDepth, TreeId, TreeInterner, UtreeError,
};
use crate::wl::{cwl_with, first_disagreement, same_partition, ColorDictionary, ColorId, Depth};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("pair {pair}: {nodes} nodes exceed the bound {bound}")]
    NodeBound {
        pair: usize,
        nodes: usize,
        bound: usize,
    },
    #[error("pair {pair}: {source}")]
    Utree {
        pair: usize,
        #[source]
        source: UtreeError,
    },
}

/// A node on one side of a pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SideNode {
    pub side: usize,
    pub node: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CutCwlMismatch {
    pub pair: usize,
    pub t_index: usize,
    pub u: SideNode,
    pub v: SideNode,
    pub cut_equal: bool,
    pub cwl_equal: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CutCwlReport {
    pub pairs_checked: usize,
    pub snapshots_checked: usize,
    pub node_pairs_checked: u64,
    pub mismatches: Vec<CutCwlMismatch>,
}

impl CutCwlReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn side_nodes(g1: &Cdg, g2: &Cdg) -> Vec<SideNode> {
    let left = g1.universe().iter().map(|v| SideNode {
        side: 0,
        node: v.clone(),
    });
    let right = g2.universe().iter().map(|v| SideNode {
        side: 1,
        node: v.clone(),
    });
    left.chain(right).collect()
}

/// Checks one pair: at every timestamp, the partition of all nodes of both
/// CDGs by tree at `depth` equals the partition by stable color.
pub fn check_cut_cwl_pair(
    pair: usize,
    g1: &Cdg,
    g2: &Cdg,
    depth: CutDepth,
) -> Result<CutCwlReport, VerifyError> {
    let both = [g1.clone(), g2.clone()];
    let mut dict = ColorDictionary::new();
    let colors = cwl_with(&both, Depth::Stable, &mut dict).map_err(|e| VerifyError::Utree {
        pair,
        source: e.into(),
    })?;
    let trees = cut_trajectories_with(&both, depth, &mut TreeInterner::new())
        .map_err(|source| VerifyError::Utree { pair, source })?;
    let nodes = side_nodes(g1, g2);
    let count = g1.timestamp_count();
    let n = nodes.len() as u64;
    let mut report = CutCwlReport {
        pairs_checked: 1,
        snapshots_checked: count,
        node_pairs_checked: count as u64 * n * n.saturating_sub(1) / 2,
        mismatches: vec![],
    };
    for t in 0..count {
        let c: Vec<ColorId> = nodes
            .iter()
            .map(|x| colors.trajectories[x.side][&x.node].0[t])
            .collect();
        let k: Vec<TreeId> = nodes
            .iter()
            .map(|x| trees[x.side][&x.node].trees[t])
            .collect();
        if !same_partition(&c, &k) {
            let (i, j) = first_disagreement(&c, &k).expect("partitions differ");
            report.mismatches.push(CutCwlMismatch {
                pair,
                t_index: t,
                u: nodes[i].clone(),
                v: nodes[j].clone(),
                cut_equal: k[i] == k[j],
                cwl_equal: c[i] == c[j],
            });
        }
    }
    Ok(report)
}

pub fn verify_cut_cwl_correspondence(
    pairs: &[(Cdg, Cdg)],
    depth: CutDepth,
) -> Result<CutCwlReport, VerifyError> {
    use rayon::prelude::*;
    let parts: Vec<CutCwlReport> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| check_cut_cwl_pair(i, a, b, depth))
        .collect::<Result<_, _>>()?;
    let mut total = CutCwlReport::default();
    for r in parts {
        total.pairs_checked += r.pairs_checked;
        total.snapshots_checked += r.snapshots_checked;
        total.node_pairs_checked += r.node_pairs_checked;
        total.mismatches.extend(r.mismatches);
    }
    total.mismatches.sort();
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// 2N-1 with N the corpus node bound.
    Global,
    /// 2N-1 with N the larger present node count of the two snapshots.
    Snapshot,
    /// 2N-3 with the corpus node bound, both snapshots disconnected.
    GlobalDisconnected,
    /// 2N-3 with the snapshot node count, both snapshots disconnected.
    SnapshotDisconnected,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DepthViolation {
    pub pair: usize,
    pub t_index: usize,
    pub kind: BoundKind,
    pub bound: usize,
    pub diverging_depth: usize,
    pub u: SideNode,
    pub v: SideNode,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DepthBoundReport {
    pub pairs_checked: usize,
    pub snapshots_checked: usize,
    pub disconnected_snapshots: usize,
    pub violations: Vec<DepthViolation>,
}

impl DepthBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks one pair: node pairs with equal trees at each applicable bound
/// stay equal at the next two depths.
pub fn check_depth_bound_pair(
    pair: usize,
    g1: &Cdg,
    g2: &Cdg,
    n_bound: usize,
) -> Result<DepthBoundReport, VerifyError> {
    for g in [g1, g2] {
        if g.universe().len() > n_bound {
            return Err(VerifyError::NodeBound {
                pair,
                nodes: g.universe().len(),
                bound: n_bound,
            });
        }
    }
    if g1.timestamp_count() != g2.timestamp_count() {
        return Err(VerifyError::Utree {
            pair,
            source: UtreeError::Wl(crate::wl::WlError::TimestampMismatch(
                g1.timestamp_count(),
                g2.timestamp_count(),
            )),
        });
    }
    let nodes = side_nodes(g1, g2);
    let (s1, s2) = (g1.snapshots(), g2.snapshots());
    let mut report = DepthBoundReport {
        pairs_checked: 1,
        ..Default::default()
    };
    let mut interner = TreeInterner::new();
    for t in 0..g1.timestamp_count() {
        let parts: [(&Snapshot, &BTreeSet<NodeId>); 2] =
            [(&s1[t], g1.universe()), (&s2[t], g2.universe())];
        let joint = IndexedGraph::from_parts(&parts);
        let local = s1[t].node_count().max(s2[t].node_count()).max(1);
        let disconnected = is_disconnected(&s1[t]) && is_disconnected(&s2[t]);
        let mut bounds = vec![
            (
                BoundKind::Global,
                depth_bound(n_bound, false).expect("connected bound"),
            ),
            (
                BoundKind::Snapshot,
                depth_bound(local, false).expect("connected bound"),
            ),
        ];
        if disconnected {
            report.disconnected_snapshots += 1;
            bounds.push((
                BoundKind::GlobalDisconnected,
                depth_bound(n_bound, true).expect("n >= 2"),
            ));
            bounds.push((
                BoundKind::SnapshotDisconnected,
                depth_bound(local, true).expect("n >= 2"),
            ));
        }
        let max_depth = bounds.iter().map(|b| b.1).max().unwrap_or(0) + 2;
        let levels = tree_ids(&joint, max_depth, &mut interner);
        // joint slots are ordered as side 0 universe then side 1 universe, like `nodes`
        debug_assert_eq!(joint.len(), nodes.len());
        for (kind, bound) in bounds {
            for deeper in [bound + 1, bound + 2] {
                if let Some((i, j)) = first_disagreement(&levels[bound], &levels[deeper]) {
                    report.violations.push(DepthViolation {
                        pair,
                        t_index: t,
                        kind,
                        bound,
                        diverging_depth: deeper,
                        u: nodes[i].clone(),
                        v: nodes[j].clone(),
                    });
                    break;
                }
            }
        }
        report.snapshots_checked += 1;
    }
    Ok(report)
}

pub fn verify_depth_bound(
    pairs: &[(Cdg, Cdg)],
    n_bound: usize,
) -> Result<DepthBoundReport, VerifyError> {
    use rayon::prelude::*;
    let parts: Vec<DepthBoundReport> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| check_depth_bound_pair(i, a, b, n_bound))
        .collect::<Result<_, _>>()?;
    let mut total = DepthBoundReport::default();
    for r in parts {
        total.pairs_checked += r.pairs_checked;
        total.snapshots_checked += r.snapshots_checked;
        total.disconnected_snapshots += r.disconnected_snapshots;
        total.violations.extend(r.violations);
    }
    total.violations.sort();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::{Attr, EdgeKey, StartGraph};

    fn cycles(prefix: &str, sizes: &[usize]) -> Cdg {
        let mut g = StartGraph::new();
        let a = Attr::new(vec![1.0]).unwrap();
        let mut k = 0;
        for &n in sizes {
            for i in 0..n {
                g.add_node(NodeId::new(format!("{prefix}{}", k + i)), a.clone())
                    .unwrap();
            }
            for i in 0..n {
                let key = EdgeKey::new(
                    NodeId::new(format!("{prefix}{}", k + i)),
                    NodeId::new(format!("{prefix}{}", k + (i + 1) % n)),
                );
                g.add_edge(key.unwrap(), a.clone()).unwrap();
            }
            k += n;
        }
        Cdg::new(1, g, vec![]).unwrap()
    }

    fn single() -> Cdg {
        let mut g = StartGraph::new();
        g.add_node(NodeId::from("a"), Attr::new(vec![1.0]).unwrap())
            .unwrap();
        Cdg::new(1, g, vec![]).unwrap()
    }

    #[test]
    fn trivial_corpus() {
        let r = verify_cut_cwl_correspondence(&[(single(), single())], CutDepth::Auto).unwrap();
        assert_eq!(r.pairs_checked, 1);
        assert!(r.passed());
        let d = verify_depth_bound(&[(single(), single())], 1).unwrap();
        assert!(d.passed());
    }

    #[test]
    fn blind_spot_pair_agrees() {
        let pairs = [(cycles("v", &[3, 3]), cycles("w", &[6]))];
        let r = verify_cut_cwl_correspondence(&pairs, CutDepth::Auto).unwrap();
        assert!(r.passed());
        let d = verify_depth_bound(&pairs, 6).unwrap();
        assert!(d.passed());
        assert_eq!(d.disconnected_snapshots, 0);
        let pairs = [(cycles("v", &[3, 3]), cycles("w", &[3, 3]))];
        let d = verify_depth_bound(&pairs, 6).unwrap();
        assert_eq!(d.disconnected_snapshots, 1);
        assert!(d.passed());
    }

    #[test]
    fn too_shallow_depth_is_reported() {
        // a path of 5 needs depth 2 to separate its inner nodes
        let mut g = StartGraph::new();
        let a = Attr::new(vec![1.0]).unwrap();
        for i in 0..5 {
            g.add_node(NodeId::new(format!("p{i}")), a.clone()).unwrap();
        }
        for i in 1..5 {
            g.add_edge(
                EdgeKey::new(
                    NodeId::new(format!("p{}", i - 1)),
                    NodeId::new(format!("p{i}")),
                )
                .unwrap(),
                a.clone(),
            )
            .unwrap();
        }
        let p = Cdg::new(1, g, vec![]).unwrap();
        let r = verify_cut_cwl_correspondence(&[(p.clone(), p)], CutDepth::Fixed(1)).unwrap();
        assert!(!r.passed());
        let m = &r.mismatches[0];
        assert!(m.cut_equal && !m.cwl_equal);
    }

    #[test]
    fn node_bound_enforced() {
        assert!(matches!(
            verify_depth_bound(&[(cycles("v", &[3]), single())], 2),
            Err(VerifyError::NodeBound { nodes: 3, .. })
        ));
    }
}
