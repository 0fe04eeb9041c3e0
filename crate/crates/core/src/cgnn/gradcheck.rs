//! Analytic gradients against central finite differences.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::{NumericModel, PreparedCdg};
use super::target::CdynTarget;
use super::train::mse;
use crate::cdg::Cdg;

pub const FD_STEP: f64 = 1e-5;

/// Denominator floor of the relative error, so that parameters with a
/// vanishing gradient are judged by their absolute error.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_param: Option<String>,
    pub analytic: f64,
    pub numeric: f64,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / (a.abs() + b.abs()).max(REL_FLOOR)
}

/// Deterministic, non-constant targets for every present row of the probes.
pub fn probe_targets(probes: &[PreparedCdg], output_dim: usize) -> CdynTarget {
    let mut k = 0usize;
    let values = probes
        .iter()
        .map(|g| {
            g.graphs
                .iter()
                .map(|ig| {
                    (0..ig.len())
                        .map(|i| {
                            ig.is_present(i).then(|| {
                                (0..output_dim)
                                    .map(|_| {
                                        k += 1;
                                        0.8 * (k as f64 * 1.7).sin()
                                    })
                                    .collect()
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    CdynTarget { output_dim, values }
}

/// Compares the gradient of the training loss on `probes` with central
/// differences on `subset` randomly chosen parameters (all when 0 or larger
/// than the parameter count).
pub fn gradient_check(
    model: &NumericModel,
    p: &[f64],
    probes: &[Cdg],
    subset: usize,
    seed: u64,
) -> GradcheckReport {
    let prepared: Vec<PreparedCdg> = probes.iter().map(PreparedCdg::new).collect();
    let target = probe_targets(&prepared, model.config().output_dim);
    let n = p.len();
    let mut report = GradcheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst_param: None,
        analytic: 0.0,
        numeric: 0.0,
    };
    if n == 0 {
        return report;
    }
    let mut grad = vec![0.0; n];
    mse(model, p, &prepared, &target, Some(&mut grad));
    let indices: Vec<usize> = if subset == 0 || subset >= n {
        (0..n).collect()
    } else {
        let mut v = sample(&mut ChaCha8Rng::seed_from_u64(seed), n, subset).into_vec();
        v.sort_unstable();
        v
    };
    let mut q = p.to_vec();
    for &i in &indices {
        q[i] = p[i] + FD_STEP;
        let up = mse(model, &q, &prepared, &target, None);
        q[i] = p[i] - FD_STEP;
        let down = mse(model, &q, &prepared, &target, None);
        q[i] = p[i];
        let numeric = (up - down) / (2.0 * FD_STEP);
        let err = relative_error(grad[i], numeric);
        if err > report.max_rel_error || report.worst_param.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            let spec = model
                .layout()
                .tensors()
                .iter()
                .find(|t| t.offset <= i && i < t.offset + t.len())
                .expect("index inside the layout");
            report.worst_param = Some(format!("{}[{}]", spec.name, i - spec.offset));
            report.analytic = grad[i];
            report.numeric = numeric;
        }
        report.checked += 1;
    }
    report
}
