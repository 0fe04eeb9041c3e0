//! Compares the node partitions induced by the continuous-time 1-WL test,
//! the symbolic model and randomly initialized numeric models.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::Serialize;

use super::model::NumericModel;
use super::symbolic::symbolic_forward;
use super::{CgnnError, ModelConfig, SgnnConfig, TemporalMode};
use crate::cdg::Cdg;
use crate::verify::SideNode;
use crate::wl::{cwl_with, first_disagreement, refines, same_partition, ColorDictionary, Depth};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpressivityConfig {
    pub seeds: Vec<u64>,
    /// Layer count; `2N - 1` for the pair's largest universe when `None`.
    pub layers: Option<usize>,
    pub hidden: usize,
    pub state: usize,
}

impl Default for ExpressivityConfig {
    fn default() -> Self {
        ExpressivityConfig {
            seeds: (0..5).collect(),
            layers: None,
            hidden: 8,
            state: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ViolationKind {
    /// Symbolic states and color trajectories induce different partitions.
    SymbolicDiffers,
    /// Numeric states separate two nodes with equal color trajectories.
    NumericRefines { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ExpressivityViolation {
    pub pair: usize,
    pub t_index: usize,
    pub kind: ViolationKind,
    pub u: SideNode,
    pub v: SideNode,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExpressivityReport {
    pub pairs_checked: usize,
    pub prefixes_checked: usize,
    /// Pairs on which the symbolic partition equals the color partition at
    /// every prefix.
    pub symbolic_exact: usize,
    pub numeric_runs: usize,
    pub violations: Vec<ExpressivityViolation>,
}

impl ExpressivityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Dense labels of prefix keys: equal keys get equal labels.
fn labels<K: Hash + Eq>(keys: &[K]) -> Vec<usize> {
    let mut ids: HashMap<&K, usize> = HashMap::new();
    keys.iter()
        .map(|k| {
            let n = ids.len();
            *ids.entry(k).or_insert(n)
        })
        .collect()
}

/// Per timestamp, labels of the trajectory prefixes `entries[node][0..=t]`.
fn prefix_labels<E: Hash + Eq + Clone>(entries: &[Vec<E>], count: usize) -> Vec<Vec<usize>> {
    (0..count)
        .map(|t| {
            let keys: Vec<&[E]> = entries.iter().map(|e| &e[..=t]).collect();
            labels(&keys)
        })
        .collect()
}

fn check_pair(
    pair: usize,
    g1: &Cdg,
    g2: &Cdg,
    cfg: &ExpressivityConfig,
) -> Result<ExpressivityReport, CgnnError> {
    let both = [g1.clone(), g2.clone()];
    let mut dict = ColorDictionary::new();
    let colors = cwl_with(&both, Depth::Stable, &mut dict)
        .map_err(|e| CgnnError::InvalidConfig(e.to_string()))?;
    let count = g1.timestamp_count();
    let n = g1.universe().len().max(g2.universe().len());
    let layers = cfg.layers.unwrap_or_else(|| SgnnConfig::default_layers(n));
    let nodes: Vec<SideNode> = both
        .iter()
        .enumerate()
        .flat_map(|(side, g)| {
            g.universe().iter().map(move |v| SideNode {
                side,
                node: v.clone(),
            })
        })
        .collect();

    let cwl_entries: Vec<Vec<u32>> = nodes
        .iter()
        .map(|x| {
            colors.trajectories[x.side][&x.node]
                .0
                .iter()
                .map(|c| c.0)
                .collect()
        })
        .collect();
    let cwl = prefix_labels(&cwl_entries, count);

    let mut report = ExpressivityReport {
        pairs_checked: 1,
        prefixes_checked: count,
        ..Default::default()
    };

    let mut sym_dict = ColorDictionary::new();
    let sym: Vec<_> = both
        .iter()
        .map(|g| symbolic_forward(g, layers, &mut sym_dict))
        .collect();
    let sym_entries: Vec<Vec<u32>> = both
        .iter()
        .enumerate()
        .flat_map(|(side, g)| (0..g.universe().len()).map(move |slot| (side, slot)))
        .map(|(side, slot)| sym[side].states.iter().map(|row| row[slot].0).collect())
        .collect();
    let symp = prefix_labels(&sym_entries, count);
    let mut exact = true;
    for t in 0..count {
        if !same_partition(&cwl[t], &symp[t]) {
            exact = false;
            let (i, j) = first_disagreement(&cwl[t], &symp[t]).expect("partitions differ");
            report.violations.push(ExpressivityViolation {
                pair,
                t_index: t,
                kind: ViolationKind::SymbolicDiffers,
                u: nodes[i].clone(),
                v: nodes[j].clone(),
            });
        }
    }
    report.symbolic_exact = usize::from(exact);

    let intervals = count.saturating_sub(1).max(1);
    let mut mc = ModelConfig::numeric(g1.dim(), layers, intervals, TemporalMode::PerInterval);
    mc.sgnn.hidden = cfg.hidden;
    mc.temporal.state = cfg.state;
    let model = NumericModel::new(mc)?;
    for &seed in &cfg.seeds {
        let p = model.init_params(seed);
        let outs = both
            .iter()
            .map(|g| model.forward(&p, g))
            .collect::<Result<Vec<_>, _>>()?;
        let entries: Vec<Vec<Option<Vec<u64>>>> = both
            .iter()
            .enumerate()
            .flat_map(|(side, g)| (0..g.universe().len()).map(move |slot| (side, slot)))
            .map(|(side, slot)| {
                outs[side]
                    .states
                    .iter()
                    .map(|row| {
                        row[slot]
                            .as_ref()
                            .map(|q| q.iter().map(|x| x.to_bits()).collect())
                    })
                    .collect()
            })
            .collect();
        let nump = prefix_labels(&entries, count);
        for t in 0..count {
            if !refines(&cwl[t], &nump[t]) {
                let (i, j) = first_disagreement(&cwl[t], &nump[t]).expect("partitions differ");
                report.violations.push(ExpressivityViolation {
                    pair,
                    t_index: t,
                    kind: ViolationKind::NumericRefines { seed },
                    u: nodes[i].clone(),
                    v: nodes[j].clone(),
                });
            }
        }
        report.numeric_runs += 1;
    }
    Ok(report)
}

/// Runs the three-way partition comparison on every pair. Numeric models use
/// per-interval recurrent blocks, which see the order of events but not
/// their times, like the color test.
pub fn expressivity_check(
    pairs: &[(Cdg, Cdg)],
    cfg: &ExpressivityConfig,
) -> Result<ExpressivityReport, CgnnError> {
    let parts = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| check_pair(i, a, b, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = ExpressivityReport::default();
    for r in parts {
        total.pairs_checked += r.pairs_checked;
        total.prefixes_checked += r.prefixes_checked;
        total.symbolic_exact += r.symbolic_exact;
        total.numeric_runs += r.numeric_runs;
        total.violations.extend(r.violations);
    }
    total.violations.sort();
    Ok(total)
}
