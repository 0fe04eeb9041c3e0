//! Python bindings.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ctwl_core::cdg::{Cdg, NodeId};
use ctwl_core::cgnn::gradcheck::gradient_check as core_gradient_check;
use ctwl_core::cgnn::{ModelConfig, NumericModel, TemporalMode};
use ctwl_core::decompose::{components as core_components, match_components as core_match};
use ctwl_core::harness::experiments::{run_experiment as core_run, ExperimentConfig};
use ctwl_core::harness::generate::{generate as core_generate, GeneratorConfig};
use ctwl_core::io::{load_cdg, parse_cdg, to_jsonl};
use ctwl_core::iso::{brute_force_isomorphic, AttributeMode};
use ctwl_core::utree::{graph_cut_equivalent, unfolding_tree as core_tree, CutDepth};
use ctwl_core::wl::{cwl as core_cwl, ColorDictionary, Depth, GraphEquivalenceMode};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A continuous-time dynamic graph.
#[pyclass(name = "Cdg", module = "ctwl", frozen)]
struct PyCdg {
    inner: Cdg,
}

#[pymethods]
impl PyCdg {
    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Ok(PyCdg {
            inner: parse_cdg(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyCdg {
            inner: load_cdg(path).map_err(err)?,
        })
    }

    fn to_jsonl(&self) -> String {
        to_jsonl(&self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn timestamps(&self) -> Vec<f64> {
        self.inner.timestamps().iter().map(|t| t.value()).collect()
    }

    fn universe(&self) -> Vec<String> {
        self.inner.universe().iter().map(|v| v.as_str().to_owned()).collect()
    }

    /// Node attributes and edge list of the snapshot at `t_index`.
    fn snapshot(&self, t_index: usize) -> PyResult<(BTreeMap<String, Vec<f64>>, Vec<(String, String, Vec<f64>)>)> {
        let s = self.inner.replay_index(t_index).map_err(err)?;
        let nodes = s.nodes().iter().map(|(v, a)| (v.as_str().to_owned(), a.as_slice().to_vec())).collect();
        let edges = s
            .edges()
            .iter()
            .map(|(e, a)| {
                let (u, v) = e.endpoints();
                (u.as_str().to_owned(), v.as_str().to_owned(), a.as_slice().to_vec())
            })
            .collect();
        Ok((nodes, edges))
    }

    fn relabel(&self, mapping: BTreeMap<String, String>) -> PyResult<Self> {
        let map = mapping.into_iter().map(|(k, v)| (NodeId::new(k), NodeId::new(v))).collect();
        Ok(PyCdg {
            inner: self.inner.relabel(&map).map_err(err)?,
        })
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Cdg(dim={}, nodes={}, timestamps={})",
            self.inner.dim(),
            self.inner.universe().len(),
            self.inner.timestamp_count()
        )
    }
}

fn graphs(cdgs: &[PyRef<'_, PyCdg>]) -> Vec<Cdg> {
    cdgs.iter().map(|g| g.inner.clone()).collect()
}

/// Joint color trajectories; one dict per input CDG.
#[pyfunction]
#[pyo3(signature = (cdgs, depth=None))]
fn cwl(cdgs: Vec<PyRef<'_, PyCdg>>, depth: Option<usize>) -> PyResult<Vec<BTreeMap<String, Vec<u32>>>> {
    let depth = depth.map_or(Depth::Stable, Depth::Fixed);
    let out = core_cwl(&graphs(&cdgs), depth).map_err(err)?;
    Ok(out
        .trajectories
        .iter()
        .map(|m| m.iter().map(|(v, tr)| (v.as_str().to_owned(), tr.0.iter().map(|c| c.0).collect())).collect())
        .collect())
}

#[pyfunction]
#[pyo3(signature = (a, b, mode="bijection"))]
fn cwl_equivalent(a: &PyCdg, b: &PyCdg, mode: &str) -> PyResult<bool> {
    let mode = match mode {
        "bijection" => GraphEquivalenceMode::Bijection,
        "existence" => GraphEquivalenceMode::Existence,
        other => return Err(err(format!("unknown mode {other:?}"))),
    };
    ctwl_core::wl::graph_cwl_equivalent(&a.inner, &b.inner, mode).map_err(err)
}

/// Tree-trajectory equivalence; depth `2N - 1` when not given.
#[pyfunction]
#[pyo3(signature = (a, b, depth=None))]
fn cut_equivalent(a: &PyCdg, b: &PyCdg, depth: Option<usize>) -> PyResult<bool> {
    let depth = depth.map_or(CutDepth::Auto, CutDepth::Fixed);
    Ok(graph_cut_equivalent(&a.inner, &b.inner, depth).map_err(err)?.is_equivalent())
}

/// The unfolding tree as a JSON string.
#[pyfunction]
fn unfolding_tree(g: &PyCdg, node: &str, t_index: usize, depth: usize) -> PyResult<String> {
    let s = g.inner.replay_index(t_index).map_err(err)?;
    serde_json::to_string(&core_tree(&s, &NodeId::new(node), depth)).map_err(err)
}

/// A node bijection witnessing isomorphism, or None.
#[pyfunction]
#[pyo3(signature = (a, b, renaming=false))]
fn isomorphism(a: &PyCdg, b: &PyCdg, renaming: bool) -> PyResult<Option<BTreeMap<String, String>>> {
    let mode = if renaming { AttributeMode::Renaming } else { AttributeMode::Identity };
    let v = brute_force_isomorphic(&a.inner, &b.inner, mode).map_err(err)?;
    Ok(v.witness()
        .map(|m| m.iter().map(|(x, y)| (x.as_str().to_owned(), y.as_str().to_owned())).collect()))
}

#[pyfunction]
fn components(g: &PyCdg, t_index: usize) -> PyResult<Vec<Vec<String>>> {
    let s = g.inner.replay_index(t_index).map_err(err)?;
    Ok(core_components(&s)
        .components
        .iter()
        .map(|c| c.iter().map(|v| v.as_str().to_owned()).collect())
        .collect())
}

/// (class-level, component-level) match of the snapshots at `t_index`.
#[pyfunction]
fn match_components(a: &PyCdg, b: &PyCdg, t_index: usize) -> PyResult<(bool, bool)> {
    let sa = a.inner.replay_index(t_index).map_err(err)?;
    let sb = b.inner.replay_index(t_index).map_err(err)?;
    let m = core_match(&sa, &sb, &mut ColorDictionary::new());
    Ok((m.class_level, m.component_level))
}

#[pyfunction]
#[pyo3(signature = (seed, max_nodes=6, events=4, dim=1, alphabet=3, disconnected=false, allow_readd=true))]
fn generate(
    seed: u64,
    max_nodes: usize,
    events: usize,
    dim: usize,
    alphabet: usize,
    disconnected: bool,
    allow_readd: bool,
) -> PyResult<PyCdg> {
    let cfg = GeneratorConfig {
        seed,
        max_nodes,
        events,
        dim,
        alphabet,
        disconnected,
        allow_readd,
        ..GeneratorConfig::default()
    };
    Ok(PyCdg {
        inner: core_generate(&cfg).map_err(err)?,
    })
}

/// Runs a named experiment; `config` is a JSON object overriding defaults.
/// Returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (name, config=None))]
fn run_experiment(py: Python<'_>, name: &str, config: Option<&str>) -> PyResult<String> {
    let mut cfg = serde_json::to_value(ExperimentConfig::for_experiment(name).map_err(err)?).map_err(err)?;
    if let Some(text) = config {
        let overrides: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text).map_err(err)?;
        for (k, v) in overrides {
            cfg[k] = v;
        }
    }
    let cfg: ExperimentConfig = serde_json::from_value(cfg).map_err(err)?;
    let name = name.to_owned();
    let report = py.detach(move || core_run(&name, &cfg, None)).map_err(err)?;
    Ok(report.to_json())
}

/// A numeric message-passing model with flat parameters.
#[pyclass(name = "Model", module = "ctwl", frozen)]
struct PyModel {
    inner: NumericModel,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (attr_dim, layers, intervals, mode="per-interval", hidden=8))]
    fn new(attr_dim: usize, layers: usize, intervals: usize, mode: &str, hidden: usize) -> PyResult<Self> {
        let mode = match mode {
            "per-interval" => TemporalMode::PerInterval,
            "shared-dt" => TemporalMode::SharedDeltaT,
            other => return Err(err(format!("unknown mode {other:?}"))),
        };
        let mut mc = ModelConfig::numeric(attr_dim, layers, intervals, mode);
        mc.sgnn.hidden = hidden;
        mc.temporal.state = hidden;
        mc.readout_hidden = hidden;
        Ok(PyModel {
            inner: NumericModel::new(mc).map_err(err)?,
        })
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        self.inner.init_params(seed)
    }

    /// Per timestamp, per universe node (sorted by id), the output vector;
    /// absent nodes give zeros.
    fn forward(&self, params: Vec<f64>, g: &PyCdg) -> PyResult<Vec<Vec<Vec<f64>>>> {
        if params.len() != self.inner.param_count() {
            return Err(err(format!("expected {} parameters, got {}", self.inner.param_count(), params.len())));
        }
        Ok(self.inner.forward(&params, &g.inner).map_err(err)?.outputs)
    }

    /// Largest relative error between analytic and finite-difference
    /// gradients over all parameters.
    fn gradient_check(&self, params: Vec<f64>, probes: Vec<PyRef<'_, PyCdg>>) -> PyResult<f64> {
        if params.len() != self.inner.param_count() {
            return Err(err("parameter count mismatch"));
        }
        Ok(core_gradient_check(&self.inner, &params, &graphs(&probes), 0, 0).max_rel_error)
    }
}

#[pymodule]
fn ctwl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCdg>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(cwl, m)?)?;
    m.add_function(wrap_pyfunction!(cwl_equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(cut_equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(unfolding_tree, m)?)?;
    m.add_function(wrap_pyfunction!(isomorphism, m)?)?;
    m.add_function(wrap_pyfunction!(components, m)?)?;
    m.add_function(wrap_pyfunction!(match_components, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
