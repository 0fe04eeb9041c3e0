//! Named experiments over generated or loaded corpora.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::corpus::{generate_corpus, Corpus, CorpusError, CorpusSpec, PairKind, PairRecord};
use super::generate::{generate, generate_isomorphic_pair, GenerateError, GeneratorConfig};
use super::report::{Counterexample, Report};
use crate::cdg::{Cdg, Snapshot};
use crate::cgnn::expressivity::{expressivity_check, ExpressivityConfig};
use crate::cgnn::gradcheck::gradient_check;
use crate::cgnn::target::{CdynTarget, PrefixTable, TargetSpec};
use crate::cgnn::train::{train_to_target, TrainConfig};
use crate::cgnn::{CgnnError, ModelConfig, NumericModel, TemporalMode};
use crate::decompose::{components, match_components, ComponentPartition};
use crate::iso::{brute_force_isomorphic, is_isomorphism_witness, AttributeMode, IsoError};
use crate::utree::{CutDepth, TreeId};
use crate::verify::{check_cut_cwl_pair, check_depth_bound_pair, VerifyError};
use crate::wl::{
    color_histogram, cwl_with, trajectories_equivalent, ColorDictionary, Depth,
    GraphEquivalenceMode, WlError,
};

pub const EXPERIMENTS: [&str; 7] = [
    "cut-cwl",
    "depth-bound",
    "iso-soundness",
    "decomposition",
    "expressivity",
    "approximation",
    "gradcheck",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment {0:?}; expected one of {EXPERIMENTS:?}")]
    Unknown(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Cgnn(#[from] CgnnError),
    #[error(transparent)]
    Wl(#[from] WlError),
    #[error(transparent)]
    Iso(#[from] IsoError),
    #[error("{0}")]
    Invalid(String),
}

/// Knobs shared by all experiments; each experiment reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub pairs: usize,
    /// Size of the extra all-disconnected corpus of `depth-bound`.
    pub disconnected_pairs: usize,
    pub max_nodes: usize,
    pub max_events: usize,
    pub max_dim: usize,
    pub max_alphabet: usize,
    /// Tree depth for `cut-cwl`; `2N - 1` when unset.
    pub depth: Option<usize>,
    /// Model seeds for `expressivity` and `approximation`.
    pub seeds: usize,
    /// Model layer count; experiment-specific default when unset.
    pub layers: Option<usize>,
    pub hidden: usize,
    pub steps: usize,
    pub lr: f64,
    /// Loss threshold (`approximation`) or relative error bound (`gradcheck`).
    pub tolerance: f64,
    /// Seeds that must reach the threshold in `approximation`.
    pub required_seeds: usize,
    /// CDGs in the training corpus (`approximation`) or probes (`gradcheck`).
    pub graphs: usize,
    /// Parameters sampled per gradient check; 0 checks all.
    pub subset: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            pairs: 1000,
            disconnected_pairs: 300,
            max_nodes: 6,
            max_events: 4,
            max_dim: 2,
            max_alphabet: 3,
            depth: None,
            seeds: 5,
            layers: None,
            hidden: 8,
            steps: 5000,
            lr: 0.1,
            tolerance: 1e-2,
            required_seeds: 4,
            graphs: 8,
            subset: 0,
        }
    }
}

impl ExperimentConfig {
    /// Defaults sized for the named experiment.
    pub fn for_experiment(name: &str) -> Result<Self, ExperimentError> {
        let base = ExperimentConfig::default();
        Ok(match name {
            "cut-cwl" | "depth-bound" | "decomposition" | "expressivity" => base,
            "iso-soundness" => ExperimentConfig { pairs: 200, ..base },
            "approximation" => ExperimentConfig {
                max_nodes: 4,
                max_events: 3,
                max_dim: 1,
                ..base
            },
            "gradcheck" => ExperimentConfig {
                max_nodes: 4,
                max_events: 3,
                graphs: 3,
                layers: Some(2),
                hidden: 4,
                tolerance: 1e-4,
                ..base
            },
            other => return Err(ExperimentError::Unknown(other.to_owned())),
        })
    }

    pub fn corpus_spec(&self, kinds: Vec<PairKind>) -> CorpusSpec {
        CorpusSpec {
            seed: self.seed,
            pairs: self.pairs,
            max_nodes: self.max_nodes,
            max_events: self.max_events,
            max_dim: self.max_dim,
            max_alphabet: self.max_alphabet,
            kinds,
            ..CorpusSpec::default()
        }
    }
}

fn all_kinds() -> Vec<PairKind> {
    vec![
        PairKind::Independent,
        PairKind::Permuted,
        PairKind::Perturbed,
    ]
}

fn corpus_or_generate(
    corpus: Option<&Corpus>,
    spec: CorpusSpec,
) -> Result<Corpus, ExperimentError> {
    match corpus {
        Some(c) => Ok(c.clone()),
        None => Ok(generate_corpus(&spec)?),
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Runs experiment `name`. A given corpus replaces the generated one.
pub fn run_experiment(
    name: &str,
    cfg: &ExperimentConfig,
    corpus: Option<&Corpus>,
) -> Result<Report, ExperimentError> {
    let start = Instant::now();
    let (aggregate, instances, counterexamples) = match name {
        "cut-cwl" => cut_cwl(cfg, corpus)?,
        "depth-bound" => depth_bound(cfg, corpus)?,
        "iso-soundness" => iso_soundness(cfg, corpus)?,
        "decomposition" => decomposition(cfg, corpus)?,
        "expressivity" => expressivity(cfg, corpus)?,
        "approximation" => approximation(cfg, corpus)?,
        "gradcheck" => gradcheck(cfg, corpus)?,
        other => return Err(ExperimentError::Unknown(other.to_owned())),
    };
    Ok(Report::new(
        name,
        cfg,
        aggregate,
        instances,
        counterexamples,
        elapsed_ms(start),
    ))
}

type Outcome = (Value, Vec<Value>, Vec<Counterexample>);

fn pair_instance(i: usize, p: &PairRecord) -> Value {
    json!({
        "pair": i,
        "kind": p.kind,
        "nodes": [p.first.universe().len(), p.second.universe().len()],
        "timestamps": p.first.timestamp_count(),
    })
}

fn cut_cwl(cfg: &ExperimentConfig, corpus: Option<&Corpus>) -> Result<Outcome, ExperimentError> {
    let corpus = corpus_or_generate(corpus, cfg.corpus_spec(all_kinds()))?;
    let depth = cfg.depth.map_or(CutDepth::Auto, CutDepth::Fixed);
    let results = corpus
        .pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| check_cut_cwl_pair(i, &p.first, &p.second, depth))
        .collect::<Result<Vec<_>, _>>()?;
    let mut instances = Vec::new();
    let mut counterexamples = Vec::new();
    let (mut snapshots, mut node_pairs) = (0, 0u64);
    for (i, (p, r)) in corpus.pairs.iter().zip(&results).enumerate() {
        snapshots += r.snapshots_checked;
        node_pairs += r.node_pairs_checked;
        let mut inst = pair_instance(i, p);
        inst["mismatches"] = json!(r.mismatches.len());
        instances.push(inst);
        for m in &r.mismatches {
            counterexamples.push(Counterexample::new(m, &[&p.first, &p.second]));
        }
    }
    let aggregate = json!({
        "pairs": corpus.pairs.len(),
        "snapshots": snapshots,
        "node_pairs": node_pairs,
        "mismatches": counterexamples.len(),
    });
    Ok((aggregate, instances, counterexamples))
}

fn depth_bound(
    cfg: &ExperimentConfig,
    corpus: Option<&Corpus>,
) -> Result<Outcome, ExperimentError> {
    let random = corpus_or_generate(corpus, cfg.corpus_spec(all_kinds()))?;
    let mut spec = cfg.corpus_spec(all_kinds());
    spec.seed = cfg.seed.wrapping_add(1);
    spec.pairs = cfg.disconnected_pairs;
    spec.max_nodes = cfg.max_nodes.max(2);
    spec.disconnected = true;
    spec.edge_density = 0.6;
    let disconnected = if cfg.disconnected_pairs > 0 {
        generate_corpus(&spec)?
    } else {
        Corpus::default()
    };
    let mut instances = Vec::new();
    let mut counterexamples = Vec::new();
    let mut aggregate = serde_json::Map::new();
    for (label, c) in [("random", &random), ("disconnected", &disconnected)] {
        let n_bound = match (label, corpus) {
            ("random", Some(_)) => c.max_nodes().max(1),
            ("random", None) => cfg.max_nodes,
            _ => spec.max_nodes,
        };
        let results = c
            .pairs
            .par_iter()
            .enumerate()
            .map(|(i, p)| check_depth_bound_pair(i, &p.first, &p.second, n_bound))
            .collect::<Result<Vec<_>, _>>()?;
        let (mut snaps, mut disc, mut viol) = (0, 0, 0);
        for (i, (p, r)) in c.pairs.iter().zip(&results).enumerate() {
            snaps += r.snapshots_checked;
            disc += r.disconnected_snapshots;
            viol += r.violations.len();
            let mut inst = pair_instance(i, p);
            inst["corpus"] = json!(label);
            inst["disconnected_snapshots"] = json!(r.disconnected_snapshots);
            inst["violations"] = json!(r.violations.len());
            instances.push(inst);
            for v in &r.violations {
                counterexamples.push(Counterexample::new(
                    json!({"corpus": label, "violation": v}),
                    &[&p.first, &p.second],
                ));
            }
        }
        if label == "disconnected" && disc != snaps {
            counterexamples.push(Counterexample::new(
                json!({"corpus": label, "error": "snapshot not disconnected", "snapshots": snaps, "disconnected": disc}),
                &[],
            ));
        }
        aggregate.insert(
            label.to_owned(),
            json!({"pairs": c.pairs.len(), "n_bound": n_bound, "snapshots": snaps, "disconnected_snapshots": disc, "violations": viol}),
        );
    }
    Ok((Value::Object(aggregate), instances, counterexamples))
}

fn iso_soundness(
    cfg: &ExperimentConfig,
    corpus: Option<&Corpus>,
) -> Result<Outcome, ExperimentError> {
    let corpus = match corpus {
        Some(c) => Corpus {
            spec: c.spec.clone(),
            pairs: c
                .pairs
                .iter()
                .filter(|p| p.bijection.is_some())
                .cloned()
                .collect(),
        },
        None => generate_corpus(&cfg.corpus_spec(vec![PairKind::Permuted]))?,
    };
    let results = corpus
        .pairs
        .par_iter()
        .enumerate()
        .map(
            |(i, p)| -> Result<(Value, Vec<Counterexample>), ExperimentError> {
                let both = [p.first.clone(), p.second.clone()];
                let out = cwl_with(&both, Depth::Stable, &mut ColorDictionary::new())?;
                let bij = trajectories_equivalent(
                    &out.trajectories[0],
                    &out.trajectories[1],
                    GraphEquivalenceMode::Bijection,
                );
                let exist = trajectories_equivalent(
                    &out.trajectories[0],
                    &out.trajectories[1],
                    GraphEquivalenceMode::Existence,
                );
                let map = p.bijection.as_ref().expect("filtered to permuted pairs");
                let witness =
                    is_isomorphism_witness(&p.first, &p.second, map, AttributeMode::Identity);
                let brute = brute_force_isomorphic(&p.first, &p.second, AttributeMode::Identity)?
                    .is_isomorphic();
                let mut cex = Vec::new();
                for (check, ok) in [
                    ("cwl-bijection", bij),
                    ("cwl-existence", exist),
                    ("ground-truth-witness", witness),
                    ("brute-force", brute),
                ] {
                    if !ok {
                        cex.push(Counterexample::new(
                            json!({"pair": i, "check": check}),
                            &[&p.first, &p.second],
                        ));
                    }
                }
                let mut inst = pair_instance(i, p);
                inst["cwl_bijection"] = json!(bij);
                inst["cwl_existence"] = json!(exist);
                inst["witness"] = json!(witness);
                inst["brute_force"] = json!(brute);
                Ok((inst, cex))
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    let mut renamed_ok = 0;
    let renamed_total = corpus.pairs.len().min(50);
    let mut counterexamples = Vec::new();
    for i in 0..renamed_total {
        let cfg_i = GeneratorConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            max_nodes: cfg.max_nodes,
            events: cfg.max_events,
            dim: cfg.max_dim,
            alphabet: cfg.max_alphabet,
            ..GeneratorConfig::default()
        };
        let p =
            generate_isomorphic_pair(&cfg_i, cfg_i.seed.wrapping_mul(31).wrapping_add(7), true)?;
        if brute_force_isomorphic(&p.first, &p.second, AttributeMode::Renaming)?.is_isomorphic() {
            renamed_ok += 1;
        } else {
            counterexamples.push(Counterexample::new(
                json!({"renamed": i, "check": "renaming-mode"}),
                &[&p.first, &p.second],
            ));
        }
    }
    let mut instances = Vec::new();
    let mut equivalent = 0;
    for (inst, cex) in results {
        if inst["cwl_bijection"] == json!(true) {
            equivalent += 1;
        }
        instances.push(inst);
        counterexamples.extend(cex);
    }
    let aggregate = json!({
        "pairs": corpus.pairs.len(),
        "cwl_equivalent": equivalent,
        "renamed_pairs": renamed_total,
        "renamed_isomorphic": renamed_ok,
    });
    Ok((aggregate, instances, counterexamples))
}

fn partition_problems(s: &Snapshot, p: &ComponentPartition) -> Vec<String> {
    let mut problems = Vec::new();
    let covered: BTreeSet<_> = p.components.iter().flatten().collect();
    let total: usize = p.components.iter().map(BTreeSet::len).sum();
    if total != covered.len() {
        problems.push("components overlap".to_owned());
    }
    if covered.len() != s.node_count() || !s.nodes().keys().all(|v| covered.contains(v)) {
        problems.push("components do not cover the node set".to_owned());
    }
    if p.components.iter().any(BTreeSet::is_empty) {
        problems.push("empty component".to_owned());
    }
    for e in s.edges().keys() {
        let (u, v) = e.endpoints();
        if p.index.get(u) != p.index.get(v) {
            problems.push(format!("edge {e} crosses components"));
        }
    }
    problems
}

fn decomposition(
    cfg: &ExperimentConfig,
    corpus: Option<&Corpus>,
) -> Result<Outcome, ExperimentError> {
    let corpus = corpus_or_generate(corpus, cfg.corpus_spec(all_kinds()))?;
    let results = corpus
        .pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| -> Result<(Value, Vec<Counterexample>), ExperimentError> {
            let both = [p.first.clone(), p.second.clone()];
            let mut dict = ColorDictionary::new();
            let out = cwl_with(&both, Depth::Stable, &mut dict)?;
            let equivalent = trajectories_equivalent(&out.trajectories[0], &out.trajectories[1], GraphEquivalenceMode::Bijection);
            let (s1, s2) = (p.first.snapshots(), p.second.snapshots());
            let mut cex = Vec::new();
            let mut class_ok = 0;
            let mut component_ok = 0;
            for t in 0..s1.len() {
                for (side, s) in [(0, &s1[t]), (1, &s2[t])] {
                    for problem in partition_problems(s, &components(s)) {
                        cex.push(Counterexample::new(json!({"pair": i, "t_index": t, "side": side, "problem": problem}), &[&p.first, &p.second]));
                    }
                }
                let m = match_components(&s1[t], &s2[t], &mut dict);
                class_ok += usize::from(m.class_level);
                component_ok += usize::from(m.component_level);
                if equivalent && !m.class_level {
                    cex.push(Counterexample::new(json!({"pair": i, "t_index": t, "problem": "class-level match failed on an equivalent pair"}), &[&p.first, &p.second]));
                }
                let same_histogram = color_histogram(&out.trajectories[0], t) == color_histogram(&out.trajectories[1], t);
                if m.class_level && !same_histogram {
                    cex.push(Counterexample::new(json!({"pair": i, "t_index": t, "problem": "match succeeded but stable colorings differ"}), &[&p.first, &p.second]));
                }
                if p.kind == PairKind::Permuted && m.left.sizes().len() != m.right.sizes().len() {
                    cex.push(Counterexample::new(json!({"pair": i, "t_index": t, "problem": "component count changed under relabeling"}), &[&p.first, &p.second]));
                }
            }
            let mut inst = pair_instance(i, p);
            inst["cwl_equivalent"] = json!(equivalent);
            inst["class_level_matches"] = json!(class_ok);
            inst["component_level_matches"] = json!(component_ok);
            Ok((inst, cex))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut instances = Vec::new();
    let mut counterexamples = Vec::new();
    let (mut equivalent, mut class_ok, mut comp_ok, mut snaps) = (0, 0, 0, 0);
    for ((inst, cex), p) in results.into_iter().zip(&corpus.pairs) {
        equivalent += usize::from(inst["cwl_equivalent"] == json!(true));
        class_ok += inst["class_level_matches"].as_u64().unwrap_or(0);
        comp_ok += inst["component_level_matches"].as_u64().unwrap_or(0);
        snaps += p.first.timestamp_count();
        instances.push(inst);
        counterexamples.extend(cex);
    }
    let aggregate = json!({
        "pairs": corpus.pairs.len(),
        "cwl_equivalent_pairs": equivalent,
        "snapshot_pairs": snaps,
        "class_level_matches": class_ok,
        "component_level_matches": comp_ok,
    });
    Ok((aggregate, instances, counterexamples))
}

fn expressivity(
    cfg: &ExperimentConfig,
    corpus: Option<&Corpus>,
) -> Result<Outcome, ExperimentError> {
    let corpus = corpus_or_generate(corpus, cfg.corpus_spec(all_kinds()))?;
    let ecfg = ExpressivityConfig {
        seeds: (0..cfg.seeds as u64)
            .map(|s| cfg.seed.wrapping_add(s))
            .collect(),
        layers: cfg.layers,
        hidden: cfg.hidden,
        state: cfg.hidden,
    };
    let results = corpus
        .pairs
        .par_iter()
        .map(|p| expressivity_check(&[(p.first.clone(), p.second.clone())], &ecfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut instances = Vec::new();
    let mut counterexamples = Vec::new();
    let (mut exact, mut runs, mut prefixes) = (0, 0, 0);
    for (i, (p, r)) in corpus.pairs.iter().zip(results).enumerate() {
        exact += r.symbolic_exact;
        runs += r.numeric_runs;
        prefixes += r.prefixes_checked;
        let mut inst = pair_instance(i, p);
        inst["symbolic_exact"] = json!(r.symbolic_exact == 1);
        inst["violations"] = json!(r.violations.len());
        instances.push(inst);
        for mut v in r.violations {
            v.pair = i;
            counterexamples.push(Counterexample::new(&v, &[&p.first, &p.second]));
        }
    }
    let aggregate = json!({
        "pairs": corpus.pairs.len(),
        "prefixes": prefixes,
        "symbolic_exact_pairs": exact,
        "numeric_runs": runs,
        "violations": counterexamples.len(),
    });
    Ok((aggregate, instances, counterexamples))
}

/// The indicator target of the largest non-empty prefix class whose
/// indicator has variance above `min_variance`.
pub fn choose_indicator(graphs: &[Cdg], min_variance: f64) -> Option<(TargetSpec, CdynTarget)> {
    let table = PrefixTable::new(graphs);
    let mut classes: Vec<(&[TreeId], usize)> = table.class_sizes().into_iter().collect();
    classes.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (class, _) in classes {
        let found = table.prefixes.iter().enumerate().find_map(|(g, per_t)| {
            per_t.iter().enumerate().find_map(|(t, per_slot)| {
                per_slot
                    .iter()
                    .position(|p| p.as_slice() == class)
                    .map(|slot| (g, t, slot))
            })
        });
        let (g, t, slot) = found.expect("class occurs in the table");
        let spec = TargetSpec::Indicator {
            graph: g,
            node: table.nodes[g][slot].clone(),
            t_index: t,
        };
        let target = CdynTarget::build_with(&table, &spec)
            .expect("indicators are tree-trajectory functions");
        if target.variance() > min_variance {
            return Some((spec, target));
        }
    }
    None
}

/// Smallest tree depth whose prefix partition over all rows of `graphs`
/// equals the partition at depth `2N - 1`.
pub fn corpus_stable_depth(graphs: &[Cdg]) -> usize {
    let full = PrefixTable::new(graphs);
    let flatten = |t: &PrefixTable| -> Vec<Vec<TreeId>> {
        t.prefixes.iter().flatten().flatten().cloned().collect()
    };
    let reference = flatten(&full);
    let labels = |rows: &[Vec<TreeId>]| -> Vec<usize> {
        let mut ids = std::collections::HashMap::new();
        rows.iter()
            .map(|r| {
                let n = ids.len();
                *ids.entry(r.clone()).or_insert(n)
            })
            .collect()
    };
    let want = labels(&reference);
    for d in 0..full.depth {
        let mut interner = crate::utree::TreeInterner::new();
        let rows: Vec<Vec<TreeId>> = graphs
            .iter()
            .flat_map(|g| {
                let tr = crate::utree::cut_trajectories_with(
                    std::slice::from_ref(g),
                    CutDepth::Fixed(d),
                    &mut interner,
                )
                .expect("single CDG")
                .pop()
                .expect("one map");
                (0..g.timestamp_count())
                    .flat_map(|t| {
                        tr.values()
                            .map(move |x| x.trees[..=t].to_vec())
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        if crate::wl::same_partition(&labels(&rows), &want) {
            return d;
        }
    }
    full.depth
}

/// Least mean squared error reachable by any model whose state at a node's
/// first appearance depends only on its current tree, so that first
/// appearances at different timestamps are indistinguishable.
pub fn restart_floor_mse(table: &PrefixTable, target: &CdynTarget) -> f64 {
    let mut groups: std::collections::HashMap<(Option<(usize, usize)>, &[TreeId]), Vec<&[f64]>> =
        Default::default();
    for (g, per_t) in table.prefixes.iter().enumerate() {
        for (t, per_slot) in per_t.iter().enumerate() {
            for (slot, prefix) in per_slot.iter().enumerate() {
                let Some(v) = &target.values[g][t][slot] else {
                    continue;
                };
                let a = prefix.iter().position(|x| *x != TreeId::EMPTY).unwrap_or(t);
                let key = if a == t {
                    (None, &prefix[t..=t])
                } else {
                    (Some((a, t)), &prefix[a..=t])
                };
                groups.entry(key).or_default().push(v);
            }
        }
    }
    let (mut sse, mut count) = (0.0, 0usize);
    for rows in groups.values() {
        let m = target.output_dim;
        for k in 0..m {
            let mean = rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64;
            sse += rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>();
        }
        count += rows.len() * m;
    }
    if count == 0 {
        0.0
    } else {
        sse / count as f64
    }
}

fn training_graphs(
    cfg: &ExperimentConfig,
    corpus: Option<&Corpus>,
) -> Result<Vec<Cdg>, ExperimentError> {
    if let Some(c) = corpus {
        return Ok(c.graphs());
    }
    let spec = CorpusSpec {
        seed: cfg.seed,
        pairs: cfg.graphs.div_ceil(2),
        max_nodes: cfg.max_nodes,
        max_events: cfg.max_events,
        max_dim: 1,
        max_alphabet: cfg.max_alphabet,
        allow_readd: false,
        kinds: vec![PairKind::Independent],
        ..CorpusSpec::default()
    };
    let mut graphs = generate_corpus(&spec)?.graphs();
    graphs.truncate(cfg.graphs);
    Ok(graphs)
}

fn approximation(
    cfg: &ExperimentConfig,
    corpus: Option<&Corpus>,
) -> Result<Outcome, ExperimentError> {
    let graphs = training_graphs(cfg, corpus)?;
    let dim = graphs.first().map_or(1, Cdg::dim);
    if graphs.iter().any(|g| g.dim() != dim) {
        return Err(ExperimentError::Invalid(
            "training CDGs differ in attribute dimension".into(),
        ));
    }
    let (spec, target) = choose_indicator(&graphs, 1e-2).ok_or_else(|| {
        ExperimentError::Invalid("no indicator target with enough variance".into())
    })?;
    let layers = cfg
        .layers
        .unwrap_or_else(|| corpus_stable_depth(&graphs).max(1));
    let intervals = graphs
        .iter()
        .map(|g| g.timestamp_count().saturating_sub(1))
        .max()
        .unwrap_or(0)
        .max(1);
    let mut mc = ModelConfig::numeric(dim, layers, intervals, TemporalMode::PerInterval);
    mc.sgnn.hidden = cfg.hidden;
    mc.temporal.state = cfg.hidden;
    mc.readout_hidden = cfg.hidden;
    let model = NumericModel::new(mc)?;
    let seeds: Vec<u64> = (0..cfg.seeds as u64)
        .map(|s| cfg.seed.wrapping_add(s))
        .collect();
    let results = seeds
        .par_iter()
        .map(|&seed| {
            let tc = TrainConfig {
                steps: cfg.steps,
                lr: cfg.lr,
                seed,
                stop_below: Some(cfg.tolerance),
                record_every: 0,
            };
            train_to_target(&model, &graphs, &target, &tc)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut instances = Vec::new();
    let mut reached = 0;
    for (seed, r) in seeds.iter().zip(&results) {
        let ok = r.final_loss <= cfg.tolerance;
        reached += usize::from(ok);
        instances.push(json!({
            "seed": seed,
            "initial_loss": r.initial_loss,
            "final_loss": r.final_loss,
            "steps_run": r.steps_run,
            "reached": ok,
        }));
    }
    let mut counterexamples = Vec::new();
    if reached < cfg.required_seeds {
        for (seed, r) in seeds.iter().zip(&results) {
            if r.final_loss > cfg.tolerance {
                let refs: Vec<&Cdg> = graphs.iter().collect();
                counterexamples.push(Counterexample::new(
                    json!({"seed": seed, "final_loss": r.final_loss}),
                    &refs,
                ));
            }
        }
    }
    let aggregate = json!({
        "graphs": graphs.len(),
        "rows": target.rows(),
        "target": spec,
        "target_variance": target.variance(),
        "restart_floor_mse": restart_floor_mse(&PrefixTable::new(&graphs), &target),
        "layers": layers,
        "parameters": model.param_count(),
        "seeds": seeds.len(),
        "reached": reached,
        "required": cfg.required_seeds,
    });
    Ok((aggregate, instances, counterexamples))
}

fn gradcheck(cfg: &ExperimentConfig, corpus: Option<&Corpus>) -> Result<Outcome, ExperimentError> {
    let probes: Vec<Cdg> = match corpus {
        Some(c) => c.graphs().into_iter().take(cfg.graphs).collect(),
        None => (0..cfg.graphs as u64)
            .map(|i| {
                generate(&GeneratorConfig {
                    seed: cfg.seed.wrapping_add(i),
                    max_nodes: cfg.max_nodes,
                    events: cfg.max_events,
                    dim: cfg.max_dim,
                    alphabet: cfg.max_alphabet,
                    ..GeneratorConfig::default()
                })
            })
            .collect::<Result<_, _>>()?,
    };
    let mut instances = Vec::new();
    let mut counterexamples = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, probe) in probes.iter().enumerate() {
        for mode in [TemporalMode::PerInterval, TemporalMode::SharedDeltaT] {
            let intervals = probe.timestamp_count().saturating_sub(1).max(1);
            let mut mc =
                ModelConfig::numeric(probe.dim(), cfg.layers.unwrap_or(2), intervals, mode);
            mc.sgnn.hidden = cfg.hidden;
            mc.temporal.state = cfg.hidden;
            mc.readout_hidden = cfg.hidden;
            let model = NumericModel::new(mc)?;
            let p = model.init_params(cfg.seed.wrapping_add(i as u64));
            let r = gradient_check(
                &model,
                &p,
                std::slice::from_ref(probe),
                cfg.subset,
                cfg.seed,
            );
            worst = worst.max(r.max_rel_error);
            let inst = json!({"probe": i, "mode": mode, "report": r});
            if r.max_rel_error > cfg.tolerance {
                counterexamples.push(Counterexample::new(&inst, &[probe]));
            }
            instances.push(inst);
        }
    }
    let aggregate =
        json!({"probes": probes.len(), "max_rel_error": worst, "tolerance": cfg.tolerance});
    Ok((aggregate, instances, counterexamples))
}
