//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{BTreeMap, HashMap};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ctwl::cdg::{Attr, Cdg, EdgeKey, Event, EventKind, Item, NodeId, StartGraph, Timestamp};
use ctwl::harness::corpus::{generate_corpus, CorpusSpec};
use ctwl::harness::experiments::{run_experiment, ExperimentConfig, EXPERIMENTS};
use ctwl::harness::generate::{generate, GeneratorConfig};
use ctwl::harness::report::Report;
use ctwl::io::{parse_cdg, to_jsonl};
use ctwl::iso::{brute_force_isomorphic, AttributeMode};
use ctwl::utree::{graph_cut_equivalent, signature, unfolding_tree, CutDepth, TreeSignature};
use ctwl::wl::{cwl, graph_cwl_equivalent, same_partition, Depth, GraphEquivalenceMode};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(name: &str) -> Report {
    let cfg = ExperimentConfig::for_experiment(name).unwrap();
    run_experiment(name, &cfg, None).unwrap()
}

fn agg(r: &Report, path: &[&str]) -> serde_json::Value {
    path.iter().fold(r.aggregate.clone(), |v, k| v[*k].clone())
}

/// Dense labels of hashable keys.
fn labels<K: std::hash::Hash + Eq + Clone>(keys: &[K]) -> Vec<usize> {
    let mut ids = HashMap::new();
    keys.iter()
        .map(|k| {
            let n = ids.len();
            *ids.entry(k.clone()).or_insert(n)
        })
        .collect()
}

/// Recomputes the tree side with materialized trees and byte signatures,
/// independent of the memoized tree ids used by the experiment.
fn explicit_tree_oracle() -> Outcome {
    let corpus = generate_corpus(&CorpusSpec {
        seed: 99,
        pairs: 200,
        max_nodes: 4,
        max_events: 4,
        ..CorpusSpec::default()
    })
    .unwrap();
    let mut mismatches = 0;
    for p in &corpus.pairs {
        let both = [p.first.clone(), p.second.clone()];
        let n = both.iter().map(|g| g.universe().len()).max().unwrap();
        let depth = 2 * n - 1;
        let colors = cwl(&both, Depth::Stable).unwrap();
        let snaps: Vec<_> = both.iter().map(Cdg::snapshots).collect();
        for t in 0..p.first.timestamp_count() {
            let mut tree_keys: Vec<Vec<TreeSignature>> = Vec::new();
            let mut color_keys = Vec::new();
            for (side, g) in both.iter().enumerate() {
                for v in g.universe() {
                    tree_keys.push(
                        (0..=t)
                            .map(|i| signature(&unfolding_tree(&snaps[side][i], v, depth)))
                            .collect(),
                    );
                    color_keys.push(colors.trajectories[side][v].0[..=t].to_vec());
                }
            }
            if !same_partition(&labels(&tree_keys), &labels(&color_keys)) {
                mismatches += 1;
            }
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("explicit-tree oracle on 200 pairs: {mismatches} mismatching timestamps"),
    }
}

fn criterion_1() -> Outcome {
    let r = run("cut-cwl");
    let oracle = explicit_tree_oracle();
    let in_time = Duration::from_millis(r.wall_clock_ms) <= Duration::from_secs(300);
    Outcome {
        pass: r.pass && agg(&r, &["pairs"]) == 1000 && in_time && oracle.pass,
        detail: format!(
            "{} pairs, {} snapshots, {} mismatches, {} ms; {}",
            agg(&r, &["pairs"]),
            agg(&r, &["snapshots"]),
            agg(&r, &["mismatches"]),
            r.wall_clock_ms,
            oracle.detail
        ),
    }
}

fn criterion_2() -> Outcome {
    let r = run("depth-bound");
    let d = agg(&r, &["disconnected"]);
    Outcome {
        pass: r.pass && d["pairs"].as_u64() >= Some(300),
        detail: format!(
            "random: {} pairs, {} violations; disconnected: {} pairs, {}/{} disconnected snapshots, {} violations",
            agg(&r, &["random", "pairs"]),
            agg(&r, &["random", "violations"]),
            d["pairs"],
            d["disconnected_snapshots"],
            d["snapshots"],
            d["violations"]
        ),
    }
}

fn criterion_3() -> Outcome {
    let r = run("iso-soundness");
    Outcome {
        pass: r.pass && agg(&r, &["pairs"]) == 200 && agg(&r, &["cwl_equivalent"]) == 200,
        detail: format!(
            "{}/{} isomorphic pairs equivalent, {} counterexamples",
            agg(&r, &["cwl_equivalent"]),
            agg(&r, &["pairs"]),
            r.counterexamples.len()
        ),
    }
}

fn two_triangles_and_hexagon() -> (Cdg, Cdg) {
    let a = Attr::new(vec![1.0]).unwrap();
    let build = |edges: &[(usize, usize)]| {
        let mut g = StartGraph::new();
        for i in 0..6 {
            g.add_node(NodeId::new(format!("v{i}")), a.clone()).unwrap();
        }
        for &(u, v) in edges {
            let key = EdgeKey::new(NodeId::new(format!("v{u}")), NodeId::new(format!("v{v}")));
            g.add_edge(key.unwrap(), a.clone()).unwrap();
        }
        let late = Event::new(
            Timestamp::new(0.5).unwrap(),
            Item::Node(NodeId::new("x")),
            EventKind::Add(Attr::new(vec![2.0]).unwrap()),
        );
        Cdg::new(1, g, vec![late]).unwrap()
    };
    (
        build(&[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]),
        build(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]),
    )
}

fn criterion_4() -> Outcome {
    let (tt, c6) = two_triangles_and_hexagon();
    let cwl_eq = graph_cwl_equivalent(&tt, &c6, GraphEquivalenceMode::Bijection).unwrap();
    let cut_eq = graph_cut_equivalent(&tt, &c6, CutDepth::Auto).unwrap().is_equivalent();
    let iso = brute_force_isomorphic(&tt, &c6, AttributeMode::Identity).unwrap().is_isomorphic();
    Outcome {
        pass: cwl_eq && cut_eq && !iso,
        detail: format!("cwl-equivalent={cwl_eq} cut-equivalent={cut_eq} isomorphic={iso}"),
    }
}

fn criterion_5() -> Outcome {
    let r = run("decomposition");
    Outcome {
        pass: r.pass && agg(&r, &["cwl_equivalent_pairs"]).as_u64() > Some(0),
        detail: format!(
            "{} equivalent pairs of {}, {} class-level matches, {} counterexamples",
            agg(&r, &["cwl_equivalent_pairs"]),
            agg(&r, &["pairs"]),
            agg(&r, &["class_level_matches"]),
            r.counterexamples.len()
        ),
    }
}

fn criterion_6() -> Outcome {
    let r = run("expressivity");
    let pairs = agg(&r, &["pairs"]);
    Outcome {
        pass: r.pass && agg(&r, &["symbolic_exact_pairs"]) == pairs && agg(&r, &["numeric_runs"]) == 5 * pairs.as_u64().unwrap(),
        detail: format!(
            "symbolic exact on {}/{} pairs, {} numeric runs, {} violations",
            agg(&r, &["symbolic_exact_pairs"]),
            pairs,
            agg(&r, &["numeric_runs"]),
            agg(&r, &["violations"])
        ),
    }
}

fn criterion_7() -> Outcome {
    let r = run("approximation");
    let in_time = Duration::from_millis(r.wall_clock_ms) <= Duration::from_secs(120);
    let losses: Vec<String> = r
        .instances
        .iter()
        .map(|i| format!("{:.2e}", i["final_loss"].as_f64().unwrap()))
        .collect();
    Outcome {
        pass: r.pass && agg(&r, &["reached"]).as_u64() >= Some(4) && in_time,
        detail: format!(
            "{}/5 seeds reached MSE <= 1e-2, final losses [{}], {} ms",
            agg(&r, &["reached"]),
            losses.join(", "),
            r.wall_clock_ms
        ),
    }
}

fn criterion_8() -> Outcome {
    let r = run("gradcheck");
    let modes: Vec<_> = r.instances.iter().map(|i| i["mode"].as_str().unwrap().to_owned()).collect();
    let both = modes.iter().any(|m| m == "per-interval") && modes.iter().any(|m| m == "shared-delta-t");
    Outcome {
        pass: r.pass && agg(&r, &["probes"]) == 3 && both,
        detail: format!("3 probes x 2 modes, max relative error {:.3e}", agg(&r, &["max_rel_error"]).as_f64().unwrap()),
    }
}

fn criterion_9() -> Outcome {
    let mut differing = Vec::new();
    for name in EXPERIMENTS {
        let a = run(name).without_wall_clock().to_json();
        let b = run(name).without_wall_clock().to_json();
        if a != b {
            differing.push(name);
        }
    }
    let mut round_trip_failures = 0;
    for seed in 0..1000u64 {
        let g = generate(&GeneratorConfig {
            seed,
            max_nodes: 1 + (seed % 6) as usize,
            events: (seed % 7) as usize,
            dim: 1 + (seed % 3) as usize,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let text = to_jsonl(&g);
        let back = parse_cdg(&text).unwrap();
        if back != g || to_jsonl(&back) != text {
            round_trip_failures += 1;
        }
    }
    Outcome {
        pass: differing.is_empty() && round_trip_failures == 0,
        detail: format!(
            "{} experiments rerun, non-identical: {:?}; 1000 CDG round trips, {} failures",
            EXPERIMENTS.len(),
            differing,
            round_trip_failures
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("tree/color partition correspondence", criterion_1),
        ("depth bounds", criterion_2),
        ("isomorphic pairs are equivalent", criterion_3),
        ("two triangles vs hexagon", criterion_4),
        ("component matching", criterion_5),
        ("model expressivity", criterion_6),
        ("approximation by training", criterion_7),
        ("gradient check", criterion_8),
        ("reproducibility and round trips", criterion_9),
    ];
    let mut failed = 0;
    let mut summary = BTreeMap::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {}: {name}: {} ({:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
        summary.insert(i + 1, o.pass);
    }
    println!("acceptance: {}/{} criteria passed", summary.len() - failed, summary.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
