//! Command-line front end. Exit codes: 0 success or equivalent, 1 failed
//! check or distinguished inputs, 2 error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ctwl::cdg::{Cdg, NodeId, Snapshot, Timestamp};
use ctwl::cgnn::gradcheck::gradient_check;
use ctwl::cgnn::target::{CdynTarget, TargetSpec};
use ctwl::cgnn::train::{train_to_target, TrainConfig};
use ctwl::cgnn::{ModelConfig, NumericModel, TemporalMode};
use ctwl::decompose::{components, match_components};
use ctwl::harness::corpus::{default_corpus_dir, generate_corpus, load_corpus, save_corpus, Corpus, CorpusSpec, CORPUS_ENV};
use ctwl::harness::experiments::{corpus_stable_depth, run_experiment, ExperimentConfig, EXPERIMENTS};
use ctwl::io::load_cdg;
use ctwl::iso::{brute_force_isomorphic, AttributeMode};
use ctwl::utree::{graph_cut_equivalent, unfolding_tree, CutDepth, CutVerdict};
use ctwl::wl::{color_histogram, cwl, first_distinguishing_timestamp, trajectories_equivalent, ColorDictionary, Depth, GraphEquivalenceMode};

type Error = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "ctwl", version, about = "Continuous-time 1-WL, unfolding trees and message passing on dynamic graphs")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of CDG pairs into --out or $CTWL_CORPUS.
    Gen(GenArgs),
    #[command(subcommand)]
    Cwl(CwlCommand),
    #[command(subcommand)]
    Utree(UtreeCommand),
    /// Decide isomorphism of two small CDGs by exhaustive search.
    Iso {
        a: PathBuf,
        b: PathBuf,
        /// Allow a consistent renaming of attribute values.
        #[arg(long)]
        renaming: bool,
    },
    /// Connected components of the snapshot at time t.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Match the components of two snapshots by stable colors.
    MatchComponents {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        t: f64,
    },
    #[command(subcommand)]
    Cgnn(CgnnCommand),
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Run a named experiment and write its report.
    Run {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENTS))]
        experiment: String,
        #[command(flatten)]
        corpus: CorpusArg,
        /// JSON file overriding the experiment's default configuration.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 6)]
    max_nodes: usize,
    #[arg(long, default_value_t = 4)]
    max_events: usize,
    #[arg(long, default_value_t = 2)]
    max_dim: usize,
    #[arg(long, default_value_t = 3)]
    max_alphabet: usize,
    /// Keep every snapshot disconnected.
    #[arg(long)]
    disconnected: bool,
    /// Never re-add a deleted node or edge.
    #[arg(long)]
    no_readd: bool,
}

#[derive(Args)]
struct CorpusArg {
    /// Corpus directory; defaults to $CTWL_CORPUS, else a generated corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

impl CorpusArg {
    fn load(&self) -> Result<Option<Corpus>, Error> {
        match self.corpus.clone().or_else(default_corpus_dir) {
            Some(dir) => Ok(Some(load_corpus(&dir).map_err(|e| format!("{}: {e}", dir.display()))?)),
            None => Ok(None),
        }
    }

    fn require(&self) -> Result<Corpus, Error> {
        self.load()?
            .ok_or_else(|| format!("no corpus given; pass --corpus or set {CORPUS_ENV}").into())
    }
}

#[derive(Subcommand)]
enum CwlCommand {
    /// Color trajectories of every node.
    Run {
        file: PathBuf,
        #[arg(long, conflicts_with = "stable")]
        depth: Option<usize>,
        #[arg(long)]
        stable: bool,
    },
    /// Compare two CDGs; exit 0 if equivalent, 1 if distinguished.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Bijection)]
        mode: Mode,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bijection,
    Existence,
}

#[derive(Subcommand)]
enum UtreeCommand {
    /// The unfolding tree of one node at time t.
    Build {
        file: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        depth: usize,
    },
    /// Compare two CDGs by tree trajectories; exit 0 if equivalent.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, conflicts_with = "auto")]
        depth: Option<usize>,
        #[arg(long)]
        auto: bool,
    },
}

#[derive(Subcommand)]
enum CgnnCommand {
    /// Compare model partitions with color partitions on a corpus.
    Expressivity {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
    },
    /// Fit a numeric model to a target by full-batch gradient descent.
    Train {
        #[command(flatten)]
        corpus: CorpusArg,
        /// JSON target specification.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 5000)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, value_enum, default_value_t = TrainMode::PerInterval)]
        mode: TrainMode,
        /// Message-passing layers; the corpus stabilization depth by default.
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long, default_value_t = 8)]
        hidden: usize,
    },
    /// Compare analytic and finite-difference gradients on one CDG.
    Gradcheck {
        #[arg(long)]
        probe: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainMode {
    PerInterval,
    SharedDt,
}

impl From<TrainMode> for TemporalMode {
    fn from(m: TrainMode) -> Self {
        match m {
            TrainMode::PerInterval => TemporalMode::PerInterval,
            TrainMode::SharedDt => TemporalMode::SharedDeltaT,
        }
    }
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Tree/color partition correspondence on every pair.
    CutCwl {
        #[command(flatten)]
        corpus: CorpusArg,
    },
    /// Depth-bound stability on every pair.
    DepthBound {
        #[command(flatten)]
        corpus: CorpusArg,
    },
}

fn load(path: &Path) -> Result<Cdg, Error> {
    load_cdg(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

/// Snapshot with every event at or before `t` applied.
fn snapshot_at(g: &Cdg, t: f64) -> Result<Snapshot, Error> {
    let t = Timestamp::new(t)?;
    let index = g.timestamps().iter().take_while(|&&s| s <= t).count() - 1;
    Ok(g.replay_index(index)?)
}

struct Ctx {
    seed: u64,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, value: &impl Serialize) -> Result<(), Error> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        match &self.out {
            Some(path) => fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }

    fn experiment(&self, name: &str, cfg: Option<ExperimentConfig>, corpus: Option<&Corpus>) -> Result<u8, Error> {
        let cfg = match cfg {
            Some(c) => c,
            None => ExperimentConfig {
                seed: self.seed,
                ..ExperimentConfig::for_experiment(name)?
            },
        };
        let report = run_experiment(name, &cfg, corpus)?;
        eprintln!("{name}: {}", if report.pass { "pass" } else { "FAIL" });
        self.emit(&report)?;
        Ok(u8::from(!report.pass))
    }
}

fn verdict(equivalent: bool) -> u8 {
    u8::from(!equivalent)
}

fn run(cli: Cli) -> Result<u8, Error> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        out: cli.out.clone(),
    };
    match cli.command {
        Command::Gen(a) => {
            let dir = cli
                .out
                .or_else(default_corpus_dir)
                .ok_or_else(|| format!("gen needs --out or {CORPUS_ENV}"))?;
            let corpus = generate_corpus(&CorpusSpec {
                seed: cli.seed,
                pairs: a.pairs,
                max_nodes: a.max_nodes,
                max_events: a.max_events,
                max_dim: a.max_dim,
                max_alphabet: a.max_alphabet,
                disconnected: a.disconnected,
                allow_readd: !a.no_readd,
                ..CorpusSpec::default()
            })?;
            save_corpus(&corpus, &dir)?;
            eprintln!("wrote {} pairs to {}", corpus.pairs.len(), dir.display());
            Ok(0)
        }
        Command::Cwl(CwlCommand::Run { file, depth, stable }) => {
            let g = load(&file)?;
            let depth = match (depth, stable) {
                (Some(k), _) => Depth::Fixed(k),
                _ => Depth::Stable,
            };
            let out = cwl(std::slice::from_ref(&g), depth)?;
            let trajectories: BTreeMap<&NodeId, Vec<u32>> =
                out.trajectories[0].iter().map(|(v, tr)| (v, tr.0.iter().map(|c| c.0).collect())).collect();
            ctx.emit(&json!({
                "timestamps": g.timestamps(),
                "iterations": out.iterations,
                "trajectories": trajectories,
            }))?;
            Ok(0)
        }
        Command::Cwl(CwlCommand::Compare { a, b, mode }) => {
            let (g1, g2) = (load(&a)?, load(&b)?);
            let out = cwl(&[g1.clone(), g2.clone()], Depth::Stable)?;
            let mode = match mode {
                Mode::Bijection => GraphEquivalenceMode::Bijection,
                Mode::Existence => GraphEquivalenceMode::Existence,
            };
            let (ta, tb) = (&out.trajectories[0], &out.trajectories[1]);
            let equivalent = trajectories_equivalent(ta, tb, mode);
            let first = first_distinguishing_timestamp(ta, tb);
            let histograms: Vec<Value> = (0..g1.timestamp_count())
                .map(|t| {
                    let h = |x| -> BTreeMap<u32, usize> { color_histogram(x, t).into_iter().map(|(c, n)| (c.0, n)).collect() };
                    json!({"t_index": t, "a": h(ta), "b": h(tb)})
                })
                .collect();
            println!("{}", if equivalent { "equivalent" } else { "distinguished" });
            if let Some(t) = first {
                println!("first distinguishing timestamp index: {t} (t = {})", g1.timestamps()[t].value());
            }
            ctx.emit(&json!({
                "equivalent": equivalent,
                "first_distinguishing_t_index": first,
                "histograms": histograms,
            }))?;
            Ok(verdict(equivalent))
        }
        Command::Utree(UtreeCommand::Build { file, node, t, depth }) => {
            let g = load(&file)?;
            let tree = unfolding_tree(&snapshot_at(&g, t)?, &NodeId::new(node), depth);
            ctx.emit(&tree)?;
            Ok(0)
        }
        Command::Utree(UtreeCommand::Compare { a, b, depth, auto }) => {
            let (g1, g2) = (load(&a)?, load(&b)?);
            let depth = match (depth, auto) {
                (Some(k), _) => CutDepth::Fixed(k),
                _ => CutDepth::Auto,
            };
            let v = graph_cut_equivalent(&g1, &g2, depth)?;
            let equivalent = v.is_equivalent();
            println!("{}", if equivalent { "equivalent" } else { "distinguished" });
            let matching = match v {
                CutVerdict::Equivalent(m) => Some(m),
                CutVerdict::NotEquivalent => None,
            };
            ctx.emit(&json!({"equivalent": equivalent, "matching": matching}))?;
            Ok(verdict(equivalent))
        }
        Command::Iso { a, b, renaming } => {
            let (g1, g2) = (load(&a)?, load(&b)?);
            let mode = if renaming { AttributeMode::Renaming } else { AttributeMode::Identity };
            let v = brute_force_isomorphic(&g1, &g2, mode)?;
            println!("{}", if v.is_isomorphic() { "isomorphic" } else { "not isomorphic" });
            ctx.emit(&json!({"isomorphic": v.is_isomorphic(), "witness": v.witness()}))?;
            Ok(verdict(v.is_isomorphic()))
        }
        Command::Decompose { file, t } => {
            let g = load(&file)?;
            let p = components(&snapshot_at(&g, t)?);
            ctx.emit(&json!({"components": p.components, "sizes": p.sizes()}))?;
            Ok(0)
        }
        Command::MatchComponents { a, b, t } => {
            let (g1, g2) = (load(&a)?, load(&b)?);
            let m = match_components(&snapshot_at(&g1, t)?, &snapshot_at(&g2, t)?, &mut ColorDictionary::new());
            println!("class level: {}, component level: {}", m.class_level, m.component_level);
            ctx.emit(&m)?;
            Ok(verdict(m.class_level))
        }
        Command::Cgnn(CgnnCommand::Expressivity { corpus, seeds }) => {
            let cfg = ExperimentConfig {
                seed: cli.seed,
                seeds,
                ..ExperimentConfig::for_experiment("expressivity")?
            };
            ctx.experiment("expressivity", Some(cfg), Some(&corpus.require()?))
        }
        Command::Cgnn(CgnnCommand::Train {
            corpus,
            target,
            epochs,
            lr,
            mode,
            layers,
            hidden,
        }) => {
            let graphs = corpus.require()?.graphs();
            let dim = graphs.first().ok_or("empty corpus")?.dim();
            let spec: TargetSpec = serde_json::from_str(&fs::read_to_string(&target)?)?;
            let target = CdynTarget::build(&graphs, &spec)?;
            let layers = layers.unwrap_or_else(|| corpus_stable_depth(&graphs).max(1));
            let intervals = graphs.iter().map(|g| g.timestamp_count().saturating_sub(1)).max().unwrap_or(0).max(1);
            let mut mc = ModelConfig::numeric(dim, layers, intervals, mode.into());
            mc.sgnn.hidden = hidden;
            mc.temporal.state = hidden;
            mc.readout_hidden = hidden;
            let model = NumericModel::new(mc)?;
            let tc = TrainConfig {
                steps: epochs,
                lr,
                seed: cli.seed,
                stop_below: None,
                record_every: (epochs / 50).max(1),
            };
            let r = train_to_target(&model, &graphs, &target, &tc)?;
            eprintln!("loss {:.3e} -> {:.3e} after {} steps", r.initial_loss, r.final_loss, r.steps_run);
            ctx.emit(&json!({"train": tc, "result": r, "model": model.save(&r.params)}))?;
            Ok(0)
        }
        Command::Cgnn(CgnnCommand::Gradcheck { probe, tolerance }) => {
            let g = load(&probe)?;
            let intervals = g.timestamp_count().saturating_sub(1).max(1);
            let mut reports = Vec::new();
            let mut pass = true;
            for mode in [TemporalMode::PerInterval, TemporalMode::SharedDeltaT] {
                let mut mc = ModelConfig::numeric(g.dim(), 2, intervals, mode);
                mc.sgnn.hidden = 4;
                mc.temporal.state = 4;
                mc.readout_hidden = 4;
                let model = NumericModel::new(mc)?;
                let p = model.init_params(cli.seed);
                let r = gradient_check(&model, &p, std::slice::from_ref(&g), 0, cli.seed);
                pass &= r.max_rel_error <= tolerance;
                eprintln!("{mode:?}: max relative error {:.3e}", r.max_rel_error);
                reports.push(json!({"mode": mode, "report": r}));
            }
            ctx.emit(&json!({"tolerance": tolerance, "pass": pass, "modes": reports}))?;
            Ok(verdict(pass))
        }
        Command::Verify(VerifyCommand::CutCwl { corpus }) => ctx.experiment("cut-cwl", None, Some(&corpus.require()?)),
        Command::Verify(VerifyCommand::DepthBound { corpus }) => {
            ctx.experiment("depth-bound", None, Some(&corpus.require()?))
        }
        Command::Run {
            experiment,
            corpus,
            config,
        } => {
            let cfg = match config {
                Some(path) => Some(serde_json::from_str(&fs::read_to_string(path)?)?),
                None => None,
            };
            ctx.experiment(&experiment, cfg, corpus.load()?.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
