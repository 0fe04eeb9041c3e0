//! Experiment reports.

use serde::Serialize;
use serde_json::Value;

use crate::cdg::Cdg;
use crate::io::to_jsonl;

/// A failing instance together with the CDGs needed to replay it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub description: Value,
    /// JSON-lines serializations of the CDGs involved.
    pub cdgs: Vec<String>,
}

impl Counterexample {
    pub fn new(description: impl Serialize, cdgs: &[&Cdg]) -> Self {
        Counterexample {
            description: serde_json::to_value(description).expect("serializable"),
            cdgs: cdgs.iter().map(|g| to_jsonl(g)).collect(),
        }
    }
}

/// Field order is fixed by the struct and maps inside `Value`s are sorted,
/// so equal reports serialize to equal bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub pass: bool,
    pub config: Value,
    pub aggregate: Value,
    pub instances: Vec<Value>,
    pub counterexamples: Vec<Counterexample>,
    pub wall_clock_ms: u64,
}

impl Report {
    /// `pass` is true exactly when there are no counterexamples.
    pub fn new(
        experiment: &str,
        config: impl Serialize,
        aggregate: impl Serialize,
        instances: Vec<Value>,
        mut counterexamples: Vec<Counterexample>,
        wall_clock_ms: u64,
    ) -> Self {
        counterexamples.sort_by_key(|c| c.description.to_string());
        Report {
            experiment: experiment.to_owned(),
            pass: counterexamples.is_empty(),
            config: serde_json::to_value(config).expect("serializable"),
            aggregate: serde_json::to_value(aggregate).expect("serializable"),
            instances,
            counterexamples,
            wall_clock_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    /// The report with the wall-clock field zeroed, for comparing runs.
    pub fn without_wall_clock(&self) -> Report {
        Report {
            wall_clock_ms: 0,
            ..self.clone()
        }
    }
}
