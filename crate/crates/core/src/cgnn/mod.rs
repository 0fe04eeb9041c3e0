//! A small continuous-time message-passing network in two flavours.
//!
//! The symbolic model replaces every learned function by dictionary
//! interning and so separates exactly what the continuous-time 1-WL test
//! separates. The numeric model uses tanh MLPs and is trained by full-batch
//! gradient descent.

pub mod expressivity;
pub mod gradcheck;
pub mod model;
pub mod nn;
pub mod symbolic;
pub mod target;
pub mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expressivity::{expressivity_check, ExpressivityConfig, ExpressivityReport};
pub use gradcheck::{gradient_check, GradcheckReport};
pub use model::{NumericModel, NumericOutput, PreparedCdg, SavedModel};
pub use nn::Activation;
pub use symbolic::{symbolic_forward, SymbolicOutput};
pub use target::{CdynTarget, TargetSpec};
pub use train::{train_to_target, TrainConfig, TrainResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SgnnMode {
    Symbolic,
    #[default]
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SgnnConfig {
    pub mode: SgnnMode,
    pub layers: usize,
    /// Ignored in symbolic mode.
    pub hidden: usize,
    pub activation: Activation,
}

impl SgnnConfig {
    pub fn numeric(layers: usize, hidden: usize) -> Self {
        SgnnConfig {
            mode: SgnnMode::Numeric,
            layers,
            hidden,
            activation: Activation::Tanh,
        }
    }

    pub fn symbolic(layers: usize) -> Self {
        SgnnConfig {
            mode: SgnnMode::Symbolic,
            layers,
            hidden: 1,
            activation: Activation::Tanh,
        }
    }

    /// `2n - 1` layers for graphs with at most `n` nodes.
    pub fn default_layers(n: usize) -> usize {
        2 * n.max(1) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalMode {
    /// One recurrent block per inter-event interval.
    #[default]
    PerInterval,
    /// One recurrent block shared by all intervals, fed the interval length.
    SharedDeltaT,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalConfig {
    pub mode: TemporalMode,
    pub state: usize,
    /// Number of recurrent blocks in per-interval mode.
    pub intervals: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub attr_dim: usize,
    pub sgnn: SgnnConfig,
    pub temporal: TemporalConfig,
    pub readout_hidden: usize,
    pub output_dim: usize,
}

impl ModelConfig {
    /// Numeric defaults: hidden and state size 8, tanh everywhere.
    pub fn numeric(attr_dim: usize, layers: usize, intervals: usize, mode: TemporalMode) -> Self {
        ModelConfig {
            attr_dim,
            sgnn: SgnnConfig::numeric(layers, 8),
            temporal: TemporalConfig {
                mode,
                state: 8,
                intervals,
                activation: Activation::Tanh,
            },
            readout_hidden: 8,
            output_dim: 1,
        }
    }

    pub fn with_activation(mut self, act: Activation) -> Self {
        self.sgnn.activation = act;
        self.temporal.activation = act;
        self
    }

    pub fn validate(&self) -> Result<(), CgnnError> {
        let bad = |m: &str| Err(CgnnError::InvalidConfig(m.to_owned()));
        if self.sgnn.mode != SgnnMode::Numeric {
            return bad("the numeric model needs numeric sgnn mode");
        }
        if self.attr_dim == 0 {
            return bad("attribute dimension must be positive");
        }
        if self.sgnn.layers == 0 || self.sgnn.hidden == 0 {
            return bad("layers and hidden size must be positive");
        }
        if self.temporal.state == 0 || self.readout_hidden == 0 || self.output_dim == 0 {
            return bad("state, readout and output sizes must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CgnnError {
    #[error("attribute dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("CDG needs {needed} interval blocks, model has {available}")]
    TooManyIntervals { needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error(
        "target is not a function of tree trajectories: graph {graph_a} node {node_a} and graph {graph_b} node {node_b} share a prefix at t_index {t_index}"
    )]
    TargetNotCutRespecting {
        graph_a: usize,
        node_a: String,
        graph_b: usize,
        node_b: String,
        t_index: usize,
    },
}
