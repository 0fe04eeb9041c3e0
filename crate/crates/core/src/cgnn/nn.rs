//! Flat parameter storage and dense layers with hand-written gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    pub fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn apply_all(self, xs: &mut [f64]) {
        for x in xs {
            *x = self.apply(*x);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Named tensors laid out back to back in one flat vector.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamLayout {
    tensors: Vec<TensorSpec>,
    len: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>) -> usize {
        let offset = self.len;
        let spec = TensorSpec {
            name: name.into(),
            shape,
            offset,
        };
        self.len += spec.len();
        self.tensors.push(spec);
        offset
    }

    pub fn dense(&mut self, name: &str, n_in: usize, n_out: usize) -> Dense {
        let w = self.push(format!("{name}.w"), vec![n_out, n_in]);
        let b = self.push(format!("{name}.b"), vec![n_out]);
        Dense { w, b, n_in, n_out }
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Affine map `y = W x + b` over a slice of the flat parameter vector.
/// `W` is stored row-major with shape `[n_out, n_in]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dense {
    pub w: usize,
    pub b: usize,
    pub n_in: usize,
    pub n_out: usize,
}

impl Dense {
    pub fn forward(&self, p: &[f64], x: &[f64], act: Activation) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_in);
        let w = &p[self.w..self.w + self.n_in * self.n_out];
        let b = &p[self.b..self.b + self.n_out];
        (0..self.n_out)
            .map(|o| {
                let row = &w[o * self.n_in..(o + 1) * self.n_in];
                let z = row.iter().zip(x).fold(b[o], |acc, (wi, xi)| acc + wi * xi);
                act.apply(z)
            })
            .collect()
    }

    /// Backpropagates `dy` (gradient w.r.t. the activated output `y`).
    /// Accumulates parameter gradients into `grad` and returns `dx`.
    pub fn backward(
        &self,
        p: &[f64],
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        act: Activation,
        grad: &mut [f64],
    ) -> Vec<f64> {
        let w = &p[self.w..self.w + self.n_in * self.n_out];
        let mut dx = vec![0.0; self.n_in];
        for o in 0..self.n_out {
            let dz = dy[o] * act.derivative_at_output(y[o]);
            if dz == 0.0 {
                continue;
            }
            grad[self.b + o] += dz;
            let row = o * self.n_in;
            for i in 0..self.n_in {
                grad[self.w + row + i] += dz * x[i];
                dx[i] += dz * w[row + i];
            }
        }
        dx
    }

    /// Uniform Glorot initialization of the weights, small uniform biases.
    pub fn init<R: Rng>(&self, p: &mut [f64], rng: &mut R) {
        let a = (6.0 / (self.n_in + self.n_out) as f64).sqrt();
        for x in &mut p[self.w..self.w + self.n_in * self.n_out] {
            *x = rng.random_range(-a..a);
        }
        for x in &mut p[self.b..self.b + self.n_out] {
            *x = rng.random_range(-0.1..0.1);
        }
    }
}

/// Two dense layers; the output activation is chosen per call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mlp {
    pub first: Dense,
    pub second: Dense,
}

#[derive(Clone, Debug)]
pub struct MlpTrace {
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl Mlp {
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        n_in: usize,
        n_hidden: usize,
        n_out: usize,
    ) -> Self {
        Mlp {
            first: layout.dense(&format!("{name}.0"), n_in, n_hidden),
            second: layout.dense(&format!("{name}.1"), n_hidden, n_out),
        }
    }

    pub fn forward(
        &self,
        p: &[f64],
        input: Vec<f64>,
        act: Activation,
        out_act: Activation,
    ) -> MlpTrace {
        let hidden = self.first.forward(p, &input, act);
        let output = self.second.forward(p, &hidden, out_act);
        MlpTrace {
            input,
            hidden,
            output,
        }
    }

    pub fn backward(
        &self,
        p: &[f64],
        tr: &MlpTrace,
        dy: &[f64],
        act: Activation,
        out_act: Activation,
        grad: &mut [f64],
    ) -> Vec<f64> {
        let dh = self
            .second
            .backward(p, &tr.hidden, &tr.output, dy, out_act, grad);
        self.first
            .backward(p, &tr.input, &tr.hidden, &dh, act, grad)
    }

    pub fn init<R: Rng>(&self, p: &mut [f64], rng: &mut R) {
        self.first.init(p, rng);
        self.second.init(p, rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_offsets() {
        let mut l = ParamLayout::new();
        let d = l.dense("a", 3, 2);
        assert_eq!((d.w, d.b), (0, 6));
        let e = l.dense("b", 2, 1);
        assert_eq!((e.w, e.b), (8, 10));
        assert_eq!(l.len(), 11);
        assert_eq!(l.tensors()[2].name, "b.w");
    }

    #[test]
    fn dense_forward_backward() {
        let mut l = ParamLayout::new();
        let d = l.dense("a", 2, 1);
        let p = vec![2.0, -1.0, 0.5];
        let x = [3.0, 4.0];
        let y = d.forward(&p, &x, Activation::Identity);
        assert_eq!(y, vec![2.5]);
        let mut g = vec![0.0; 3];
        let dx = d.backward(&p, &x, &y, &[1.0], Activation::Identity, &mut g);
        assert_eq!(g, vec![3.0, 4.0, 1.0]);
        assert_eq!(dx, vec![2.0, -1.0]);
    }

    #[test]
    fn tanh_is_odd_and_bounded() {
        for x in [-3.0, -0.5, 0.0, 0.25, 10.0] {
            let y = Activation::Tanh.apply(x);
            assert_eq!(y, -Activation::Tanh.apply(-x));
            assert!(y.abs() <= 1.0);
        }
    }
}
