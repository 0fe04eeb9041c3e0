//! Corpora of CDG pairs: generation and the on-disk directory layout
//! (one `.jsonl` file per CDG plus `manifest.json`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::generate::{
    generate, generate_isomorphic_pair, perturb, EventProbabilities, GenerateError, GeneratorConfig,
};
use crate::cdg::{Cdg, NodeId};
use crate::io::{load_cdg, save_cdg, FormatError};

/// Environment variable naming the default corpus directory.
pub const CORPUS_ENV: &str = "CTWL_CORPUS";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// Two independently drawn CDGs with the same event count.
    Independent,
    /// A CDG and a copy with permuted node ids.
    Permuted,
    /// A permuted copy with one attribute changed.
    Perturbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub seed: u64,
    pub pairs: usize,
    pub max_nodes: usize,
    pub max_events: usize,
    pub max_dim: usize,
    pub max_alphabet: usize,
    pub edge_density: f64,
    pub probabilities: EventProbabilities,
    pub disconnected: bool,
    pub allow_readd: bool,
    /// Pair kinds, used in rotation.
    pub kinds: Vec<PairKind>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 0,
            pairs: 100,
            max_nodes: 6,
            max_events: 4,
            max_dim: 2,
            max_alphabet: 3,
            edge_density: 0.4,
            probabilities: EventProbabilities::default(),
            disconnected: false,
            allow_readd: true,
            kinds: vec![
                PairKind::Independent,
                PairKind::Permuted,
                PairKind::Perturbed,
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairRecord {
    pub kind: PairKind,
    pub seed: u64,
    pub first: Cdg,
    pub second: Cdg,
    /// Ground-truth node bijection for permuted pairs.
    pub bijection: Option<BTreeMap<NodeId, NodeId>>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Corpus {
    pub spec: Option<CorpusSpec>,
    pub pairs: Vec<PairRecord>,
}

impl Corpus {
    pub fn pair_list(&self) -> Vec<(Cdg, Cdg)> {
        self.pairs
            .iter()
            .map(|p| (p.first.clone(), p.second.clone()))
            .collect()
    }

    /// Every CDG of the corpus, pair by pair.
    pub fn graphs(&self) -> Vec<Cdg> {
        self.pairs
            .iter()
            .flat_map(|p| [p.first.clone(), p.second.clone()])
            .collect()
    }

    pub fn max_nodes(&self) -> usize {
        self.pairs
            .iter()
            .map(|p| p.first.universe().len().max(p.second.universe().len()))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("invalid corpus: {0}")]
    Invalid(String),
}

/// The generator configuration for pair `index`, drawn from `rng`.
fn pair_config(spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> GeneratorConfig {
    let lo = if spec.disconnected { 2 } else { 1 };
    GeneratorConfig {
        seed: rng.next_u64(),
        max_nodes: rng.random_range(lo..=spec.max_nodes.max(lo)),
        events: rng.random_range(0..=spec.max_events),
        dim: rng.random_range(1..=spec.max_dim.max(1)),
        alphabet: rng.random_range(1..=spec.max_alphabet.max(1)),
        probabilities: spec.probabilities.clone(),
        edge_density: spec.edge_density,
        disconnected: spec.disconnected,
        allow_readd: spec.allow_readd,
        ..GeneratorConfig::default()
    }
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus, CorpusError> {
    if spec.kinds.is_empty() {
        return Err(CorpusError::Invalid("no pair kinds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs = Vec::with_capacity(spec.pairs);
    for i in 0..spec.pairs {
        let kind = spec.kinds[i % spec.kinds.len()];
        let cfg = pair_config(spec, &mut rng);
        let perm_seed = rng.next_u64();
        let record = match kind {
            PairKind::Independent => {
                let second = GeneratorConfig {
                    seed: perm_seed,
                    ..cfg.clone()
                };
                PairRecord {
                    kind,
                    seed: cfg.seed,
                    first: generate(&cfg)?,
                    second: generate(&second)?,
                    bijection: None,
                }
            }
            PairKind::Permuted | PairKind::Perturbed => {
                let p = generate_isomorphic_pair(&cfg, perm_seed, false)?;
                let (second, bijection) = if kind == PairKind::Perturbed {
                    let mut prng = ChaCha8Rng::seed_from_u64(perm_seed.wrapping_add(1));
                    (perturb(&p.second, &cfg.alphabet_vectors(), &mut prng), None)
                } else {
                    (p.second, Some(p.bijection))
                };
                PairRecord {
                    kind,
                    seed: cfg.seed,
                    first: p.first,
                    second,
                    bijection,
                }
            }
        };
        pairs.push(record);
    }
    Ok(Corpus {
        spec: Some(spec.clone()),
        pairs,
    })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spec: Option<CorpusSpec>,
    pairs: Vec<ManifestPair>,
}

#[derive(Serialize, Deserialize)]
struct ManifestPair {
    a: String,
    b: String,
    kind: PairKind,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bijection: Option<BTreeMap<NodeId, NodeId>>,
}

pub fn save_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(corpus.pairs.len());
    for (i, p) in corpus.pairs.iter().enumerate() {
        let a = format!("pair{i:05}_a.jsonl");
        let b = format!("pair{i:05}_b.jsonl");
        for (name, g) in [(&a, &p.first), (&b, &p.second)] {
            let path = dir.join(name);
            save_cdg(g, &path).map_err(|source| CorpusError::Format { path, source })?;
        }
        entries.push(ManifestPair {
            a,
            b,
            kind: p.kind,
            seed: p.seed,
            bijection: p.bijection.clone(),
        });
    }
    let manifest = Manifest {
        spec: corpus.spec.clone(),
        pairs: entries,
    };
    fs::write(
        dir.join(MANIFEST),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let dir = dir.as_ref();
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?;
    let load = |name: &str| {
        let path = dir.join(name);
        load_cdg(&path).map_err(|source| CorpusError::Format { path, source })
    };
    let pairs = manifest
        .pairs
        .into_iter()
        .map(|m| {
            Ok(PairRecord {
                kind: m.kind,
                seed: m.seed,
                first: load(&m.a)?,
                second: load(&m.b)?,
                bijection: m.bijection,
            })
        })
        .collect::<Result<_, CorpusError>>()?;
    Ok(Corpus {
        spec: manifest.spec,
        pairs,
    })
}

/// The directory named by [`CORPUS_ENV`], if set.
pub fn default_corpus_dir() -> Option<PathBuf> {
    std::env::var_os(CORPUS_ENV).map(PathBuf::from)
}
