//! Numeric continuous-time message-passing model: an SGNN layer stack per
//! snapshot, a recurrent state update between snapshots and a node-level
//! readout, with exact reverse-mode gradients.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nn::{Activation, Dense, Mlp, MlpTrace, ParamLayout, TensorSpec};
use super::{CgnnError, ModelConfig, TemporalMode};
use crate::cdg::{Cdg, NodeId, Snapshot};
use crate::indexed::IndexedGraph;

/// A CDG replayed once and indexed for repeated forward passes.
#[derive(Clone, Debug)]
pub struct PreparedCdg {
    pub nodes: Vec<NodeId>,
    pub graphs: Vec<IndexedGraph>,
    /// `t_i - t_{i-1}` per timestamp, 0 at the start time.
    pub gaps: Vec<f64>,
}

impl PreparedCdg {
    pub fn new(g: &Cdg) -> Self {
        let snaps = g.snapshots();
        let times = g.timestamps();
        let graphs: Vec<IndexedGraph> = snaps
            .iter()
            .map(|s| IndexedGraph::single(s, g.universe()))
            .collect();
        let nodes = g.universe().iter().cloned().collect();
        let gaps = (0..times.len())
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    times[i].value() - times[i - 1].value()
                }
            })
            .collect();
        PreparedCdg {
            nodes,
            graphs,
            gaps,
        }
    }

    pub fn timestamp_count(&self) -> usize {
        self.graphs.len()
    }

    pub fn slot(&self, v: &NodeId) -> Option<usize> {
        self.nodes.binary_search(v).ok()
    }
}

/// States, hidden embeddings and readout outputs per timestamp and node
/// slot. `None` marks a node that does not exist at that timestamp; its
/// output row is all zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericOutput {
    pub nodes: Vec<NodeId>,
    pub hidden: Vec<Vec<Option<Vec<f64>>>>,
    pub states: Vec<Vec<Option<Vec<f64>>>>,
    pub outputs: Vec<Vec<Vec<f64>>>,
}

struct LayerTrace {
    /// per target node: (source slot, message MLP trace)
    messages: Vec<Vec<(usize, MlpTrace)>>,
    comb: Vec<Option<MlpTrace>>,
}

struct SnapshotTrace {
    layers: Vec<LayerTrace>,
    /// layer outputs, index 0 holds the attributes
    hidden: Vec<Vec<Option<Vec<f64>>>>,
    adapter: Vec<Option<(Vec<f64>, Vec<f64>)>>,
    /// (cell index, input, state) when the recurrent cell fired
    cell: Vec<Option<(usize, Vec<f64>, Vec<f64>)>>,
    states: Vec<Option<Vec<f64>>>,
    readout: Vec<Option<MlpTrace>>,
}

#[derive(Clone, Debug)]
pub struct NumericModel {
    config: ModelConfig,
    layout: ParamLayout,
    layers: Vec<(Mlp, Mlp)>,
    adapter: Option<Dense>,
    cells: Vec<Dense>,
    readout: Mlp,
}

/// Parameters with their shapes, as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub config: ModelConfig,
    pub tensors: Vec<SavedTensor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

fn sum_sorted(messages: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut order: Vec<&Vec<f64>> = messages.iter().collect();
    order.sort_by(|a, b| {
        a.iter()
            .map(|x| x.to_bits())
            .cmp(b.iter().map(|x| x.to_bits()))
    });
    let mut sum = vec![0.0; dim];
    for m in order {
        for (s, x) in sum.iter_mut().zip(m) {
            *s += x;
        }
    }
    sum
}

impl NumericModel {
    pub fn new(config: ModelConfig) -> Result<Self, CgnnError> {
        config.validate()?;
        let mut layout = ParamLayout::new();
        let d = config.attr_dim;
        let r = config.sgnn.hidden;
        let s = config.temporal.state;
        let mut layers = Vec::with_capacity(config.sgnn.layers);
        for l in 0..config.sgnn.layers {
            let r_in = if l == 0 { d } else { r };
            let aggr = Mlp::new(&mut layout, &format!("sgnn.{l}.aggr"), r_in + d, r, r);
            let comb = Mlp::new(&mut layout, &format!("sgnn.{l}.comb"), r_in + r, r, r);
            layers.push((aggr, comb));
        }
        let adapter = (r != s).then(|| layout.dense("adapter", r, s));
        let (blocks, extra) = match config.temporal.mode {
            TemporalMode::PerInterval => (config.temporal.intervals, 0),
            TemporalMode::SharedDeltaT => (1, 1),
        };
        let cells = (0..blocks)
            .map(|j| layout.dense(&format!("temporal.{j}"), 2 * s + extra, s))
            .collect();
        let readout = Mlp::new(
            &mut layout,
            "readout",
            s,
            config.readout_hidden,
            config.output_dim,
        );
        Ok(NumericModel {
            config,
            layout,
            layers,
            adapter,
            cells,
            readout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    /// Seed-deterministic initial parameters.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = vec![0.0; self.layout.len()];
        for (aggr, comb) in &self.layers {
            aggr.init(&mut p, &mut rng);
            comb.init(&mut p, &mut rng);
        }
        if let Some(a) = &self.adapter {
            a.init(&mut p, &mut rng);
        }
        for c in &self.cells {
            c.init(&mut p, &mut rng);
        }
        self.readout.init(&mut p, &mut rng);
        p
    }

    fn act(&self) -> Activation {
        self.config.sgnn.activation
    }

    fn tact(&self) -> Activation {
        self.config.temporal.activation
    }

    fn check_cdg(&self, g: &PreparedCdg) -> Result<(), CgnnError> {
        for graph in &g.graphs {
            for i in 0..graph.len() {
                if let Some(a) = graph.attr(i) {
                    if a.dim() != self.config.attr_dim {
                        return Err(CgnnError::DimensionMismatch {
                            expected: self.config.attr_dim,
                            found: a.dim(),
                        });
                    }
                }
            }
        }
        let needed = g.timestamp_count().saturating_sub(1);
        if self.config.temporal.mode == TemporalMode::PerInterval && needed > self.cells.len() {
            return Err(CgnnError::TooManyIntervals {
                needed,
                available: self.cells.len(),
            });
        }
        Ok(())
    }

    fn sgnn_layers(
        &self,
        p: &[f64],
        g: &IndexedGraph,
    ) -> (Vec<LayerTrace>, Vec<Vec<Option<Vec<f64>>>>) {
        let act = self.act();
        let r = self.config.sgnn.hidden;
        let h0: Vec<Option<Vec<f64>>> = (0..g.len())
            .map(|i| g.attr(i).map(|a| a.as_slice().to_vec()))
            .collect();
        let mut hidden = vec![h0];
        let mut traces = Vec::with_capacity(self.layers.len());
        for (aggr, comb) in &self.layers {
            let prev = hidden.last().expect("layer input");
            let mut messages = Vec::with_capacity(g.len());
            let mut combs = Vec::with_capacity(g.len());
            let mut next = Vec::with_capacity(g.len());
            for (v, hv) in prev.iter().enumerate() {
                let Some(hv) = hv else {
                    messages.push(Vec::new());
                    combs.push(None);
                    next.push(None);
                    continue;
                };
                let msgs: Vec<(usize, MlpTrace)> = g
                    .neighbors(v)
                    .iter()
                    .map(|(u, e)| {
                        let hu = prev[*u].as_ref().expect("neighbors exist");
                        let input = [hu.as_slice(), e.as_slice()].concat();
                        (*u, aggr.forward(p, input, act, act))
                    })
                    .collect();
                let outs: Vec<Vec<f64>> = msgs.iter().map(|(_, t)| t.output.clone()).collect();
                let sum = sum_sorted(&outs, r);
                let tr = comb.forward(p, [hv.as_slice(), sum.as_slice()].concat(), act, act);
                next.push(Some(tr.output.clone()));
                combs.push(Some(tr));
                messages.push(msgs);
            }
            traces.push(LayerTrace {
                messages,
                comb: combs,
            });
            hidden.push(next);
        }
        (traces, hidden)
    }

    fn forward_traced(&self, p: &[f64], g: &PreparedCdg) -> Vec<SnapshotTrace> {
        let tact = self.tact();
        let mut out: Vec<SnapshotTrace> = Vec::with_capacity(g.timestamp_count());
        for (t, graph) in g.graphs.iter().enumerate() {
            let (layers, hidden) = self.sgnn_layers(p, graph);
            let h = hidden.last().expect("final layer");
            let n = graph.len();
            let mut adapter = Vec::with_capacity(n);
            let mut cell = Vec::with_capacity(n);
            let mut states = Vec::with_capacity(n);
            let mut readout = Vec::with_capacity(n);
            for i in 0..n {
                let Some(hi) = &h[i] else {
                    adapter.push(None);
                    cell.push(None);
                    states.push(None);
                    readout.push(None);
                    continue;
                };
                let ha = match &self.adapter {
                    Some(a) => {
                        let y = a.forward(p, hi, tact);
                        adapter.push(Some((hi.clone(), y.clone())));
                        y
                    }
                    None => {
                        adapter.push(None);
                        hi.clone()
                    }
                };
                let prev = if t == 0 {
                    None
                } else {
                    out[t - 1].states[i].as_ref()
                };
                let q = match prev {
                    Some(q_prev) => {
                        let (j, input) = match self.config.temporal.mode {
                            TemporalMode::PerInterval => {
                                (t - 1, [q_prev.as_slice(), ha.as_slice()].concat())
                            }
                            TemporalMode::SharedDeltaT => {
                                (0, [q_prev.as_slice(), ha.as_slice(), &[g.gaps[t]]].concat())
                            }
                        };
                        let q = self.cells[j].forward(p, &input, tact);
                        cell.push(Some((j, input, q.clone())));
                        q
                    }
                    None => {
                        cell.push(None);
                        ha
                    }
                };
                readout.push(Some(self.readout.forward(
                    p,
                    q.clone(),
                    self.act(),
                    Activation::Identity,
                )));
                states.push(Some(q));
            }
            out.push(SnapshotTrace {
                layers,
                hidden,
                adapter,
                cell,
                states,
                readout,
            });
        }
        out
    }

    pub fn forward_prepared(&self, p: &[f64], g: &PreparedCdg) -> Result<NumericOutput, CgnnError> {
        self.check_cdg(g)?;
        let traces = self.forward_traced(p, g);
        let m = self.config.output_dim;
        Ok(NumericOutput {
            nodes: g.nodes.clone(),
            hidden: traces
                .iter()
                .map(|t| t.hidden.last().cloned().unwrap_or_default())
                .collect(),
            outputs: traces
                .iter()
                .map(|t| {
                    t.readout
                        .iter()
                        .map(|r| {
                            r.as_ref()
                                .map_or_else(|| vec![0.0; m], |r| r.output.clone())
                        })
                        .collect()
                })
                .collect(),
            states: traces.into_iter().map(|t| t.states).collect(),
        })
    }

    /// Runs the model over every timestamp of `g`.
    pub fn forward(&self, p: &[f64], g: &Cdg) -> Result<NumericOutput, CgnnError> {
        self.forward_prepared(p, &PreparedCdg::new(g))
    }

    /// SGNN embeddings of one snapshot. Nodes of `universe` missing from
    /// `s` map to `None`.
    pub fn sgnn_forward(
        &self,
        p: &[f64],
        s: &Snapshot,
        universe: &BTreeSet<NodeId>,
    ) -> Result<BTreeMap<NodeId, Option<Vec<f64>>>, CgnnError> {
        let g = IndexedGraph::single(s, universe);
        for i in 0..g.len() {
            if let Some(a) = g.attr(i) {
                if a.dim() != self.config.attr_dim {
                    return Err(CgnnError::DimensionMismatch {
                        expected: self.config.attr_dim,
                        found: a.dim(),
                    });
                }
            }
        }
        let (_, mut hidden) = self.sgnn_layers(p, &g);
        let h = hidden.pop().expect("final layer");
        Ok((0..g.len()).map(|i| g.key(i).1.clone()).zip(h).collect())
    }

    /// Sum of squared errors over present rows with a target, and the number
    /// of such rows. Gradients of the sum are added to `grad` when given.
    pub fn sse(
        &self,
        p: &[f64],
        g: &PreparedCdg,
        targets: &[Vec<Option<Vec<f64>>>],
        grad: Option<&mut [f64]>,
    ) -> (f64, usize) {
        let traces = self.forward_traced(p, g);
        let mut sse = 0.0;
        let mut rows = 0;
        let mut dys: Vec<Vec<Option<Vec<f64>>>> = Vec::with_capacity(traces.len());
        for (t, tr) in traces.iter().enumerate() {
            let mut row = Vec::with_capacity(tr.readout.len());
            for (i, r) in tr.readout.iter().enumerate() {
                match (
                    r,
                    targets
                        .get(t)
                        .and_then(|x| x.get(i))
                        .and_then(Option::as_ref),
                ) {
                    (Some(r), Some(y)) => {
                        let d: Vec<f64> = r.output.iter().zip(y).map(|(a, b)| a - b).collect();
                        sse += d.iter().map(|x| x * x).sum::<f64>();
                        rows += 1;
                        row.push(Some(d.iter().map(|x| 2.0 * x).collect()));
                    }
                    _ => row.push(None),
                }
            }
            dys.push(row);
        }
        if let Some(grad) = grad {
            self.backward(p, g, &traces, &dys, grad);
        }
        (sse, rows)
    }

    fn backward(
        &self,
        p: &[f64],
        g: &PreparedCdg,
        traces: &[SnapshotTrace],
        dys: &[Vec<Option<Vec<f64>>>],
        grad: &mut [f64],
    ) {
        let act = self.act();
        let tact = self.tact();
        let s = self.config.temporal.state;
        let mut carry: Vec<Option<Vec<f64>>> = vec![None; g.nodes.len()];
        for t in (0..traces.len()).rev() {
            let tr = &traces[t];
            let n = tr.states.len();
            let mut next_carry: Vec<Option<Vec<f64>>> = vec![None; n];
            let mut dh: Vec<Option<Vec<f64>>> = vec![None; n];
            for i in 0..n {
                let Some(ro) = &tr.readout[i] else { continue };
                let mut dq = match &dys[t][i] {
                    Some(dy) => self
                        .readout
                        .backward(p, ro, dy, act, Activation::Identity, grad),
                    None => vec![0.0; s],
                };
                if let Some(c) = carry[i].take() {
                    for (a, b) in dq.iter_mut().zip(c) {
                        *a += b;
                    }
                }
                let dha = match &tr.cell[i] {
                    Some((j, input, q)) => {
                        let dx = self.cells[*j].backward(p, input, q, &dq, tact, grad);
                        next_carry[i] = Some(dx[..s].to_vec());
                        dx[s..2 * s].to_vec()
                    }
                    None => dq,
                };
                dh[i] = Some(match (&self.adapter, &tr.adapter[i]) {
                    (Some(a), Some((x, y))) => a.backward(p, x, y, &dha, tact, grad),
                    _ => dha,
                });
            }
            carry = next_carry;
            for (l, (aggr, comb)) in self.layers.iter().enumerate().rev() {
                let lt = &tr.layers[l];
                let r_in = tr.hidden[l].iter().flatten().next().map_or(0, Vec::len);
                let mut dprev: Vec<Option<Vec<f64>>> = tr.hidden[l]
                    .iter()
                    .map(|h| h.as_ref().map(|h| vec![0.0; h.len()]))
                    .collect();
                for v in 0..n {
                    let (Some(ct), Some(dhv)) = (&lt.comb[v], &dh[v]) else {
                        continue;
                    };
                    let dc = comb.backward(p, ct, dhv, act, act, grad);
                    add_into(dprev[v].as_mut().expect("present"), &dc[..r_in]);
                    let dsum = &dc[r_in..];
                    for (u, mt) in &lt.messages[v] {
                        let dm = aggr.backward(p, mt, dsum, act, act, grad);
                        add_into(dprev[*u].as_mut().expect("present"), &dm[..r_in]);
                    }
                }
                dh = dprev;
            }
        }
    }

    pub fn save(&self, p: &[f64]) -> SavedModel {
        SavedModel {
            config: self.config.clone(),
            tensors: self
                .layout
                .tensors()
                .iter()
                .map(|t: &TensorSpec| SavedTensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    data: p[t.offset..t.offset + t.len()].to_vec(),
                })
                .collect(),
        }
    }

    pub fn load(saved: &SavedModel) -> Result<(Self, Vec<f64>), CgnnError> {
        let model = NumericModel::new(saved.config.clone())?;
        let mut p = vec![0.0; model.layout.len()];
        if saved.tensors.len() != model.layout.tensors().len() {
            return Err(CgnnError::InvalidParams(format!(
                "expected {} tensors, found {}",
                model.layout.tensors().len(),
                saved.tensors.len()
            )));
        }
        for (spec, t) in model.layout.tensors().iter().zip(&saved.tensors) {
            if spec.name != t.name || spec.shape != t.shape || t.data.len() != spec.len() {
                return Err(CgnnError::InvalidParams(format!(
                    "tensor {} does not match the layout",
                    t.name
                )));
            }
            p[spec.offset..spec.offset + spec.len()].copy_from_slice(&t.data);
        }
        Ok((model, p))
    }
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::{Attr, EdgeKey, Event, EventKind, Item, StartGraph, Timestamp};
    use crate::cgnn::{SgnnConfig, TemporalConfig};

    fn attr(x: f64) -> Attr {
        Attr::new(vec![x]).unwrap()
    }

    fn config(mode: TemporalMode, hidden: usize, state: usize) -> ModelConfig {
        ModelConfig {
            attr_dim: 1,
            sgnn: SgnnConfig::numeric(2, hidden),
            temporal: TemporalConfig {
                mode,
                state,
                intervals: 3,
                activation: Activation::Tanh,
            },
            readout_hidden: 4,
            output_dim: 1,
        }
    }

    fn sample() -> Cdg {
        let mut s = StartGraph::new();
        for (v, a) in [("a", 1.0), ("b", 2.0), ("c", 1.0)] {
            s.add_node(NodeId::from(v), attr(a)).unwrap();
        }
        s.add_edge(
            EdgeKey::new(NodeId::from("a"), NodeId::from("b")).unwrap(),
            attr(0.5),
        )
        .unwrap();
        let t = |x| Timestamp::new(x).unwrap();
        let ev = vec![
            Event::new(t(1.0), Item::Node(NodeId::from("c")), EventKind::Delete),
            Event::new(
                t(2.5),
                Item::Node(NodeId::from("c")),
                EventKind::Add(attr(1.0)),
            ),
        ];
        Cdg::new(1, s, ev).unwrap()
    }

    #[test]
    fn isolated_node_first_layer_uses_empty_sum() {
        let mut s = StartGraph::new();
        s.add_node(NodeId::from("a"), attr(0.7)).unwrap();
        let g = Cdg::new(1, s, vec![]).unwrap();
        let mut cfg = config(TemporalMode::PerInterval, 3, 3);
        cfg.sgnn.layers = 1;
        let model = NumericModel::new(cfg).unwrap();
        let mut p = model.init_params(3);
        let (aggr, comb) = model.layers[0];
        for x in &mut p[aggr.first.w..aggr.second.b + aggr.second.n_out] {
            *x = 0.0;
        }
        let snap = g.replay_index(0).unwrap();
        let h = model.sgnn_forward(&p, &snap, g.universe()).unwrap();
        let expected = comb
            .forward(
                &p,
                vec![0.7, 0.0, 0.0, 0.0],
                Activation::Tanh,
                Activation::Tanh,
            )
            .output;
        assert_eq!(h[&NodeId::from("a")].as_ref().unwrap(), &expected);
    }

    #[test]
    fn start_only_state_is_sgnn_output() {
        let mut s = StartGraph::new();
        s.add_node(NodeId::from("a"), attr(0.7)).unwrap();
        s.add_node(NodeId::from("b"), attr(0.1)).unwrap();
        s.add_edge(
            EdgeKey::new(NodeId::from("a"), NodeId::from("b")).unwrap(),
            attr(1.0),
        )
        .unwrap();
        let g = Cdg::new(1, s, vec![]).unwrap();
        let model = NumericModel::new(config(TemporalMode::PerInterval, 4, 4)).unwrap();
        let p = model.init_params(1);
        let out = model.forward(&p, &g).unwrap();
        let h = model
            .sgnn_forward(&p, &g.replay_index(0).unwrap(), g.universe())
            .unwrap();
        assert_eq!(out.states[0][0], h[&NodeId::from("a")]);
    }

    #[test]
    fn reappearing_node_restarts_from_fresh_embedding() {
        let g = sample();
        for mode in [TemporalMode::PerInterval, TemporalMode::SharedDeltaT] {
            let model = NumericModel::new(config(mode, 4, 4)).unwrap();
            let p = model.init_params(9);
            let out = model.forward(&p, &g).unwrap();
            let c = 2;
            assert!(out.states[0][c].is_some());
            assert!(out.states[1][c].is_none());
            assert_eq!(out.outputs[1][c], vec![0.0]);
            assert_eq!(out.states[2][c], out.hidden[2][c]);
            assert_ne!(out.states[1][0], out.hidden[1][0]);
        }
    }

    #[test]
    fn adapter_when_state_differs() {
        let model = NumericModel::new(config(TemporalMode::PerInterval, 4, 2)).unwrap();
        let p = model.init_params(2);
        let out = model.forward(&p, &sample()).unwrap();
        assert_eq!(out.states[0][0].as_ref().unwrap().len(), 2);
        assert!(model
            .layout()
            .tensors()
            .iter()
            .any(|t| t.name == "adapter.w"));
    }

    #[test]
    fn interval_count_enforced() {
        let mut cfg = config(TemporalMode::PerInterval, 2, 2);
        cfg.temporal.intervals = 1;
        let model = NumericModel::new(cfg).unwrap();
        let p = model.init_params(0);
        assert_eq!(
            model.forward(&p, &sample()).unwrap_err(),
            CgnnError::TooManyIntervals {
                needed: 2,
                available: 1
            }
        );
    }

    #[test]
    fn save_load_round_trip() {
        let model = NumericModel::new(config(TemporalMode::SharedDeltaT, 3, 3)).unwrap();
        let p = model.init_params(4);
        let saved = model.save(&p);
        let json = serde_json::to_string(&saved).unwrap();
        let back: SavedModel = serde_json::from_str(&json).unwrap();
        let (m2, p2) = NumericModel::load(&back).unwrap();
        assert_eq!(p, p2);
        assert_eq!(m2.param_count(), model.param_count());
    }

    #[test]
    fn deterministic_init() {
        let model = NumericModel::new(config(TemporalMode::PerInterval, 3, 3)).unwrap();
        assert_eq!(model.init_params(5), model.init_params(5));
        assert_ne!(model.init_params(5), model.init_params(6));
    }
}
