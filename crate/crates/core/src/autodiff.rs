//! Reverse-mode differentiation for small fully connected networks.
//!
//! The model is `f(x, Θ): R^p × R^d -> R^m`, a stack of affine layers with a
//! single hidden activation and an identity output layer. Parameters live in
//! one flat vector with a canonical layout: layer-major, weights before
//! biases, weights row-major. All arithmetic is in `f64`; the learning-rate
//! scaling studies need errors well below 32-bit noise floors.
//!
//! Gradients are exact reverse-mode derivatives. The ReLU subgradient at 0
//! is defined as 0, so an input that never activates a unit produces
//! identically zero tangent-feature entries for that unit's incoming
//! weights and bias.

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Identity => z,
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed from pre-activation `z` and post-activation `a`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                // Subgradient at exactly 0 is 0.
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// Architecture of a fully connected network: layer widths (input first,
/// output last) and the hidden activation. The output layer is affine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Weight,
    Bias,
}

/// One contiguous piece of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub layer: usize,
    pub kind: SegmentKind,
    pub offset: usize,
    /// Output width of the layer (rows of the weight matrix / bias length).
    pub rows: usize,
    /// Input width of the layer (columns of the weight matrix; 1 for biases).
    pub cols: usize,
}

impl ModelSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if layer_widths.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 layers, got {}",
                layer_widths.len()
            )));
        }
        if layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidModel("all layer widths must be >= 1".into()));
        }
        Ok(Self {
            layer_widths,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_widths
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    /// Canonical layout: for each layer, the weight block (row-major,
    /// `w_out × w_in`) followed by the bias block (`w_out`).
    pub fn layout(&self) -> Vec<Segment> {
        let mut segments = Vec::with_capacity(2 * self.n_layers());
        let mut offset = 0;
        for (layer, w) in self.layer_widths.windows(2).enumerate() {
            let (w_in, w_out) = (w[0], w[1]);
            segments.push(Segment {
                layer,
                kind: SegmentKind::Weight,
                offset,
                rows: w_out,
                cols: w_in,
            });
            offset += w_in * w_out;
            segments.push(Segment {
                layer,
                kind: SegmentKind::Bias,
                offset,
                rows: w_out,
                cols: 1,
            });
            offset += w_out;
        }
        segments
    }
}

/// Flat parameter vector matching a [`ModelSpec`] layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(model: &ModelSpec) -> Self {
        Self {
            values: vec![0.0; model.param_count()],
        }
    }

    pub fn from_values(model: &ModelSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != model.param_count() {
            return Err(Error::DimensionMismatch {
                layer: 0,
                expected: model.param_count(),
                got: values.len(),
            });
        }
        Ok(Self { values })
    }

    /// Gaussian initialization: weights `N(0, scale²/w_in)`, biases zero.
    pub fn init(model: &ModelSpec, seed: u64, scale: f64) -> Self {
        let mut values = vec![0.0; model.param_count()];
        let mut rng = stream_rng(seed, streams::compose(streams::INIT, 0));
        for seg in model.layout() {
            if seg.kind == SegmentKind::Weight {
                let sd = scale / (seg.cols as f64).sqrt();
                for v in &mut values[seg.offset..seg.offset + seg.rows * seg.cols] {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = sd * z;
                }
            } else {
                // Biases are drawn too (tiny scale) so that finite-difference
                // probes see a generic point; callers can overwrite.
                for v in &mut values[seg.offset..seg.offset + seg.rows] {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = 0.1 * scale * z;
                }
            }
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-input parameter gradient `∇_Θ f_c(x, Θ)`.
#[derive(Debug, Clone)]
pub struct TangentFeature {
    pub values: Vec<f64>,
    pub output_coordinate: usize,
}

/// Supported losses. Squared error is `ℓ(f, y) = Σ_c (f_c − y_c)²` with
/// output derivative `∂ℓ/∂f_c = 2(f_c − y_c)`; batch reduction is the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFunction {
    SquaredError,
}

impl LossFunction {
    #[inline]
    pub fn value(self, output: &[f64], target: &[f64]) -> f64 {
        match self {
            LossFunction::SquaredError => output
                .iter()
                .zip(target)
                .map(|(f, y)| (f - y) * (f - y))
                .sum(),
        }
    }

    /// `∂ℓ/∂f` at a single sample.
    #[inline]
    pub fn output_grad(self, output: &[f64], target: &[f64]) -> Vec<f64> {
        match self {
            LossFunction::SquaredError => output
                .iter()
                .zip(target)
                .map(|(f, y)| 2.0 * (f - y))
                .collect(),
        }
    }
}

struct ForwardTrace {
    /// `post[0]` is the input; `post[l+1]` the activation output of layer l.
    post: Vec<Vec<f64>>,
    /// Pre-activations per layer.
    pre: Vec<Vec<f64>>,
}

fn forward_trace(model: &ModelSpec, params: &ParamVector, x: &[f64]) -> Result<ForwardTrace> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            layer: 0,
            expected: model.input_dim(),
            got: x.len(),
        });
    }
    debug_assert_eq!(params.len(), model.param_count());
    let n_layers = model.n_layers();
    let mut post = Vec::with_capacity(n_layers + 1);
    let mut pre = Vec::with_capacity(n_layers);
    post.push(x.to_vec());
    let mut offset = 0;
    for layer in 0..n_layers {
        let w_in = model.layer_widths[layer];
        let w_out = model.layer_widths[layer + 1];
        let weights = &params.values[offset..offset + w_in * w_out];
        let biases = &params.values[offset + w_in * w_out..offset + w_in * w_out + w_out];
        offset += (w_in + 1) * w_out;
        let input = post.last().unwrap();
        let mut z = vec![0.0; w_out];
        for (r, z_r) in z.iter_mut().enumerate() {
            let row = &weights[r * w_in..(r + 1) * w_in];
            let mut acc = biases[r];
            for (w, a) in row.iter().zip(input) {
                acc += w * a;
            }
            if !acc.is_finite() {
                return Err(Error::NonFinite { layer });
            }
            *z_r = acc;
        }
        let is_output = layer == n_layers - 1;
        let a: Vec<f64> = if is_output {
            z.clone()
        } else {
            z.iter().map(|&v| model.activation.apply(v)).collect()
        };
        pre.push(z);
        post.push(a);
    }
    Ok(ForwardTrace { post, pre })
}

/// Evaluate `f(x, Θ)`.
pub fn forward(model: &ModelSpec, params: &ParamVector, x: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_trace(model, params, x)?.post.pop().unwrap())
}

/// Reverse sweep seeded with `∂(objective)/∂f = seed`; returns the gradient
/// with respect to every parameter, in canonical layout order.
fn backprop(model: &ModelSpec, params: &ParamVector, trace: &ForwardTrace, seed: &[f64]) -> Vec<f64> {
    let n_layers = model.n_layers();
    let mut grad = vec![0.0; model.param_count()];
    // Adjoint of the current layer's pre-activation.
    let mut delta = seed.to_vec(); // output layer is affine
    // Walk layers from last to first; track each layer's parameter offset.
    let mut offsets = Vec::with_capacity(n_layers);
    {
        let mut off = 0;
        for layer in 0..n_layers {
            offsets.push(off);
            off += (model.layer_widths[layer] + 1) * model.layer_widths[layer + 1];
        }
    }
    for layer in (0..n_layers).rev() {
        let w_in = model.layer_widths[layer];
        let w_out = model.layer_widths[layer + 1];
        let offset = offsets[layer];
        let input = &trace.post[layer];
        // Parameter gradients of this layer.
        for r in 0..w_out {
            let d = delta[r];
            let g_row = &mut grad[offset + r * w_in..offset + (r + 1) * w_in];
            for (g, a) in g_row.iter_mut().zip(input) {
                *g = d * a;
            }
            grad[offset + w_in * w_out + r] = d;
        }
        if layer == 0 {
            break;
        }
        // Propagate to the previous layer's post-activation, then through
        // its activation derivative.
        let weights = &params.values[offset..offset + w_in * w_out];
        let mut prev = vec![0.0; w_in];
        for (r, &d) in delta.iter().enumerate() {
            let row = &weights[r * w_in..(r + 1) * w_in];
            for (p, w) in prev.iter_mut().zip(row) {
                *p += d * w;
            }
        }
        let z_prev = &trace.pre[layer - 1];
        let a_prev = &trace.post[layer];
        for ((p, &z), &a) in prev.iter_mut().zip(z_prev).zip(a_prev) {
            *p *= model.activation.derivative(z, a);
        }
        delta = prev;
    }
    grad
}

/// Exact gradient of the output coordinate with respect to every parameter.
pub fn param_gradient(
    model: &ModelSpec,
    params: &ParamVector,
    x: &[f64],
    output_coordinate: usize,
) -> Result<TangentFeature> {
    if output_coordinate >= model.output_dim() {
        return Err(Error::DimensionMismatch {
            layer: model.n_layers() - 1,
            expected: model.output_dim(),
            got: output_coordinate,
        });
    }
    let trace = forward_trace(model, params, x)?;
    let mut seed = vec![0.0; model.output_dim()];
    seed[output_coordinate] = 1.0;
    Ok(TangentFeature {
        values: backprop(model, params, &trace, &seed),
        output_coordinate,
    })
}

/// Gradient of the per-sample loss `ℓ(f(x,Θ), y)` with respect to Θ,
/// together with the loss value and the network output.
pub fn sample_loss_grad(
    loss: LossFunction,
    model: &ModelSpec,
    params: &ParamVector,
    x: &[f64],
    y: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let trace = forward_trace(model, params, x)?;
    let output = trace.post.last().unwrap().clone();
    let value = loss.value(&output, y);
    let seed = loss.output_grad(&output, y);
    let grad = backprop(model, params, &trace, &seed);
    Ok((value, grad, output))
}

/// Mini-batch loss `(1/B) Σ ℓ` and its gradient. The gradient is the mean of
/// per-sample gradients, accumulated by a simple left fold in ascending
/// sample order, so it equals the exposed per-sample decomposition
/// bit-for-bit.
pub fn loss_and_grad(
    loss: LossFunction,
    model: &ModelSpec,
    params: &ParamVector,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    if inputs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    let mut grad = vec![0.0; model.param_count()];
    for (x, y) in inputs.iter().zip(targets) {
        let (v, g, _) = sample_loss_grad(loss, model, params, x, y)?;
        total += v;
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    let inv = 1.0 / inputs.len() as f64;
    total *= inv;
    for g in &mut grad {
        *g *= inv;
    }
    Ok((total, grad))
}

/// Batch loss only (no gradient).
pub fn batch_loss(
    loss: LossFunction,
    model: &ModelSpec,
    params: &ParamVector,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for (x, y) in inputs.iter().zip(targets) {
        total += loss.value(&forward(model, params, x)?, y);
    }
    Ok(total / inputs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(model: &ModelSpec, params: &ParamVector, x: &[f64], coord: usize) -> Vec<f64> {
        let h = 1e-5;
        (0..params.len())
            .map(|i| {
                let mut plus = params.clone();
                plus.values[i] += h;
                let mut minus = params.clone();
                minus.values[i] -= h;
                let fp = forward(model, &plus, x).unwrap()[coord];
                let fm = forward(model, &minus, x).unwrap()[coord];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn linear_layer_is_affine_map() {
        let model = ModelSpec::new(vec![2, 2], Activation::Identity).unwrap();
        // W = [[1, 2], [3, 4]], b = [5, 6]
        let params =
            ParamVector::from_values(&model, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = forward(&model, &params, &[1.0, 1.0]).unwrap();
        assert_eq!(y, vec![8.0, 13.0]);
    }

    #[test]
    fn zero_params_give_zero_output() {
        let model = ModelSpec::new(vec![3, 4, 2], Activation::Tanh).unwrap();
        let params = ParamVector::zeros(&model);
        let y = forward(&model, &params, &[0.3, -0.7, 2.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    /// Six-unit ReLU construction: f(x) = Σ a_i max(0, w_i x - b_i) with
    /// w_i = 1. At x = 1 the closed form is Σ a_i max(0, 1 - b_i).
    #[test]
    fn relu_six_unit_closed_form() {
        let model = ModelSpec::new(vec![1, 6, 1], Activation::Relu).unwrap();
        let a = [0.3, -0.4, 0.9, 1.1, -0.2, 0.5];
        let b = [0.1, 0.5, 0.9, 1.0, 1.5, 2.0];
        let mut values = vec![0.0; model.param_count()];
        for i in 0..6 {
            values[i] = 1.0; // w_i
            values[6 + i] = -b[i]; // hidden bias is -b_i (threshold form)
            values[12 + i] = a[i]; // output weights
        }
        // output bias stays 0
        let params = ParamVector::from_values(&model, values).unwrap();
        let y = forward(&model, &params, &[1.0]).unwrap()[0];
        let expected: f64 = (0..6).map(|i| a[i] * (1.0f64 - b[i]).max(0.0)).sum();
        assert!((y - expected).abs() < 1e-15);
    }

    #[test]
    fn scalar_linear_gradient_is_input_and_one() {
        let model = ModelSpec::new(vec![1, 1], Activation::Identity).unwrap();
        let params = ParamVector::from_values(&model, vec![0.7, -0.3]).unwrap();
        let g = param_gradient(&model, &params, &[2.5], 0).unwrap();
        assert_eq!(g.values, vec![2.5, 1.0]);
    }

    #[test]
    fn dormant_relu_unit_has_zero_tangent_columns() {
        let model = ModelSpec::new(vec![1, 6, 1], Activation::Relu).unwrap();
        let mut values = vec![0.0; model.param_count()];
        for i in 0..6 {
            values[i] = 1.0;
            values[6 + i] = -1.0;
            values[12 + i] = 0.5;
        }
        values[6 + 5] = -2.0; // unit 6 threshold at x = 2
        let params = ParamVector::from_values(&model, values).unwrap();
        let g = param_gradient(&model, &params, &[1.5], 0).unwrap();
        // w_6, bias_6 and a_6 gradients all vanish for x < 2.
        assert_eq!(g.values[5], 0.0);
        assert_eq!(g.values[6 + 5], 0.0);
        assert_eq!(g.values[12 + 5], 0.0);
        // An active unit's entries do not vanish.
        assert!(g.values[0] != 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences_all_activations() {
        for act in [
            Activation::Tanh,
            Activation::Sigmoid,
            Activation::Identity,
        ] {
            let model = ModelSpec::new(vec![2, 5, 3, 1], act).unwrap();
            for trial in 0..5 {
                let params = ParamVector::init(&model, 100 + trial, 1.0);
                let x = [0.4 - 0.1 * trial as f64, -0.8];
                let g = param_gradient(&model, &params, &x, 0).unwrap();
                let fd = fd_gradient(&model, &params, &x, 0);
                for (a, b) in g.values.iter().zip(&fd) {
                    let scale = a.abs().max(b.abs()).max(1e-6);
                    assert!(
                        (a - b).abs() / scale < 1e-6,
                        "{act:?}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn loss_and_grad_hand_example() {
        // f = w x + b, one sample (x=1, y=0), w=1, b=0: loss 1, dl/dw = 2.
        let model = ModelSpec::new(vec![1, 1], Activation::Identity).unwrap();
        let params = ParamVector::from_values(&model, vec![1.0, 0.0]).unwrap();
        let (l, g) =
            loss_and_grad(LossFunction::SquaredError, &model, &params, &[vec![1.0]], &[vec![0.0]])
                .unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g, vec![2.0, 2.0]);
    }

    #[test]
    fn interpolating_sample_has_zero_loss_and_gradient() {
        let model = ModelSpec::new(vec![1, 1], Activation::Identity).unwrap();
        let params = ParamVector::from_values(&model, vec![2.0, 1.0]).unwrap();
        let (l, g) =
            loss_and_grad(LossFunction::SquaredError, &model, &params, &[vec![0.5]], &[vec![2.0]])
                .unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_gradient_is_exact_mean_of_per_sample_gradients() {
        let model = ModelSpec::new(vec![2, 4, 1], Activation::Tanh).unwrap();
        let params = ParamVector::init(&model, 3, 1.0);
        let xs = vec![vec![0.2, -0.5], vec![1.1, 0.3]];
        let ys = vec![vec![0.7], vec![-0.2]];
        let (_, g) = loss_and_grad(LossFunction::SquaredError, &model, &params, &xs, &ys).unwrap();
        let (_, g0, _) =
            sample_loss_grad(LossFunction::SquaredError, &model, &params, &xs[0], &ys[0]).unwrap();
        let (_, g1, _) =
            sample_loss_grad(LossFunction::SquaredError, &model, &params, &xs[1], &ys[1]).unwrap();
        let mean: Vec<f64> = g0.iter().zip(&g1).map(|(a, b)| (a + b) * 0.5).collect();
        assert_eq!(g, mean);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let model = ModelSpec::new(vec![1, 1], Activation::Identity).unwrap();
        let params = ParamVector::zeros(&model);
        assert!(matches!(
            loss_and_grad(LossFunction::SquaredError, &model, &params, &[], &[]),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn dimension_mismatch_names_layer() {
        let model = ModelSpec::new(vec![2, 1], Activation::Identity).unwrap();
        let params = ParamVector::zeros(&model);
        match forward(&model, &params, &[1.0]) {
            Err(Error::DimensionMismatch { layer: 0, expected: 2, got: 1 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }
}
