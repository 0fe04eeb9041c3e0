//! Full-batch gradient descent on the mean squared error.

use serde::Serialize;

use super::model::{NumericModel, PreparedCdg};
use super::target::CdynTarget;
use super::CgnnError;
use crate::cdg::Cdg;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    /// Stop as soon as the training loss drops to this value.
    pub stop_below: Option<f64>,
    /// Record the loss every this many steps; 0 disables recording.
    pub record_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 5000,
            lr: 0.05,
            seed: 0,
            stop_below: None,
            record_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainResult {
    #[serde(skip)]
    pub params: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub steps_run: usize,
    pub history: Vec<(usize, f64)>,
}

/// Mean squared error over every present (graph, timestamp, node) row and
/// output component, with its gradient when `grad` is given.
pub fn mse(
    model: &NumericModel,
    p: &[f64],
    corpus: &[PreparedCdg],
    target: &CdynTarget,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let mut sse = 0.0;
    let mut rows = 0;
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    for (g, t) in corpus.iter().zip(&target.values) {
        let (s, r) = model.sse(p, g, t, grad.as_deref_mut());
        sse += s;
        rows += r;
    }
    let denom = (rows * target.output_dim).max(1) as f64;
    if let Some(g) = grad {
        for x in g.iter_mut() {
            *x /= denom;
        }
    }
    sse / denom
}

pub fn check_target(
    model: &NumericModel,
    corpus: &[Cdg],
    target: &CdynTarget,
) -> Result<Vec<PreparedCdg>, CgnnError> {
    if target.values.len() != corpus.len() {
        return Err(CgnnError::InvalidTarget(format!(
            "target covers {} graphs, corpus has {}",
            target.values.len(),
            corpus.len()
        )));
    }
    if target.output_dim != model.config().output_dim {
        return Err(CgnnError::DimensionMismatch {
            expected: model.config().output_dim,
            found: target.output_dim,
        });
    }
    let prepared: Vec<PreparedCdg> = corpus.iter().map(PreparedCdg::new).collect();
    let p = model.init_params(0);
    for g in &prepared {
        model.forward_prepared(&p, g)?;
    }
    Ok(prepared)
}

/// Trains from seed-deterministic initial parameters.
pub fn train_to_target(
    model: &NumericModel,
    corpus: &[Cdg],
    target: &CdynTarget,
    cfg: &TrainConfig,
) -> Result<TrainResult, CgnnError> {
    let prepared = check_target(model, corpus, target)?;
    let mut p = model.init_params(cfg.seed);
    let mut grad = vec![0.0; p.len()];
    let mut history = Vec::new();
    let mut loss = mse(model, &p, &prepared, target, Some(&mut grad));
    let initial_loss = loss;
    let mut steps_run = 0;
    while steps_run < cfg.steps {
        if cfg.stop_below.is_some_and(|tol| loss <= tol) {
            break;
        }
        if cfg.record_every > 0 && steps_run % cfg.record_every == 0 {
            history.push((steps_run, loss));
        }
        for (x, g) in p.iter_mut().zip(&grad) {
            *x -= cfg.lr * g;
        }
        steps_run += 1;
        loss = mse(model, &p, &prepared, target, Some(&mut grad));
    }
    if cfg.record_every > 0 {
        history.push((steps_run, loss));
    }
    Ok(TrainResult {
        params: p,
        initial_loss,
        final_loss: loss,
        steps_run,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::{Attr, EdgeKey, NodeId, StartGraph};
    use crate::cgnn::target::TargetSpec;
    use crate::cgnn::{ModelConfig, TemporalMode};

    fn path() -> Cdg {
        let mut s = StartGraph::new();
        let a = Attr::new(vec![1.0]).unwrap();
        for v in ["a", "b", "c"] {
            s.add_node(NodeId::from(v), a.clone()).unwrap();
        }
        for (u, v) in [("a", "b"), ("b", "c")] {
            s.add_edge(
                EdgeKey::new(NodeId::from(u), NodeId::from(v)).unwrap(),
                a.clone(),
            )
            .unwrap();
        }
        Cdg::new(1, s, vec![]).unwrap()
    }

    #[test]
    fn constant_target_fits() {
        let corpus = [path()];
        let target =
            CdynTarget::build(&corpus, &TargetSpec::Constant { value: vec![0.3] }).unwrap();
        let model =
            NumericModel::new(ModelConfig::numeric(1, 2, 1, TemporalMode::PerInterval)).unwrap();
        let cfg = TrainConfig {
            steps: 3000,
            lr: 0.1,
            stop_below: Some(1e-7),
            ..Default::default()
        };
        let r = train_to_target(&model, &corpus, &target, &cfg).unwrap();
        assert!(r.final_loss < 1e-6, "{}", r.final_loss);
        assert!(r.initial_loss > r.final_loss);
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = [path()];
        let target =
            CdynTarget::build(&corpus, &TargetSpec::Constant { value: vec![0.3] }).unwrap();
        let model =
            NumericModel::new(ModelConfig::numeric(1, 1, 1, TemporalMode::SharedDeltaT)).unwrap();
        let cfg = TrainConfig {
            steps: 20,
            ..Default::default()
        };
        let a = train_to_target(&model, &corpus, &target, &cfg).unwrap();
        let b = train_to_target(&model, &corpus, &target, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.final_loss.to_bits(), b.final_loss.to_bits());
    }

    #[test]
    fn output_dimension_checked() {
        let corpus = [path()];
        let target = CdynTarget::build(
            &corpus,
            &TargetSpec::Constant {
                value: vec![0.3, 0.1],
            },
        )
        .unwrap();
        let model =
            NumericModel::new(ModelConfig::numeric(1, 1, 1, TemporalMode::PerInterval)).unwrap();
        assert!(matches!(
            train_to_target(&model, &corpus, &target, &TrainConfig::default()),
            Err(CgnnError::DimensionMismatch { .. })
        ));
    }
}
