//! Symbolic model: every layer and the recurrent update intern their exact
//! inputs in a color dictionary.

use std::collections::BTreeSet;

use crate::cdg::{Cdg, NodeId, Snapshot};
use crate::indexed::IndexedGraph;
use crate::wl::{init_colors, refine_colors, ColorDictionary, ColorId, Coloring};

const TAG_STATE_START: u8 = 3;
const TAG_STATE_STEP: u8 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicOutput {
    pub nodes: Vec<NodeId>,
    /// Embedding after the last layer, per timestamp and node slot.
    pub hidden: Vec<Vec<ColorId>>,
    /// Recurrent state per timestamp and node slot; bottom for absent nodes.
    pub states: Vec<Vec<ColorId>>,
    /// Readout: the state id as a number, 0 for absent nodes.
    pub outputs: Vec<Vec<f64>>,
}

fn layer_colors(g: &IndexedGraph, layers: usize, dict: &mut ColorDictionary) -> Vec<ColorId> {
    let mut c = init_colors(g, dict);
    for _ in 0..layers {
        c = refine_colors(g, &c, dict);
    }
    c
}

/// `layers` rounds of color refinement on one snapshot.
pub fn sgnn_forward_symbolic(
    s: &Snapshot,
    universe: &BTreeSet<NodeId>,
    layers: usize,
    dict: &mut ColorDictionary,
) -> Coloring {
    let g = IndexedGraph::single(s, universe);
    let c = layer_colors(&g, layers, dict);
    (0..g.len()).map(|i| g.key(i).1.clone()).zip(c).collect()
}

fn state_start(h: ColorId, dict: &mut ColorDictionary) -> ColorId {
    let mut key = vec![TAG_STATE_START];
    key.extend_from_slice(&h.0.to_be_bytes());
    dict.intern(key)
}

fn state_step(q: ColorId, h: ColorId, dict: &mut ColorDictionary) -> ColorId {
    let mut key = vec![TAG_STATE_STEP];
    key.extend_from_slice(&q.0.to_be_bytes());
    key.extend_from_slice(&h.0.to_be_bytes());
    dict.intern(key)
}

/// Runs the symbolic model over every timestamp of `g`. Graphs compared
/// with each other must share `dict`.
pub fn symbolic_forward(g: &Cdg, layers: usize, dict: &mut ColorDictionary) -> SymbolicOutput {
    let nodes: Vec<NodeId> = g.universe().iter().cloned().collect();
    let mut hidden = Vec::with_capacity(g.timestamp_count());
    let mut states: Vec<Vec<ColorId>> = Vec::with_capacity(g.timestamp_count());
    for s in g.snapshots() {
        let ig = IndexedGraph::single(&s, g.universe());
        let h = layer_colors(&ig, layers, dict);
        let q: Vec<ColorId> = h
            .iter()
            .enumerate()
            .map(|(i, &hi)| {
                if hi.is_bottom() {
                    return ColorId::BOTTOM;
                }
                match states.last().map(|prev| prev[i]) {
                    Some(prev) if !prev.is_bottom() => state_step(prev, hi, dict),
                    _ => state_start(hi, dict),
                }
            })
            .collect();
        hidden.push(h);
        states.push(q);
    }
    let outputs = states
        .iter()
        .map(|row| row.iter().map(|c| f64::from(c.0)).collect())
        .collect();
    SymbolicOutput {
        nodes,
        hidden,
        states,
        outputs,
    }
}
