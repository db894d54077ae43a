use serde::{Deserialize, Serialize};

use super::activation::{act_eval, backprop_activation, ActivationKind};
use super::loss::LossKind;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: ActivationKind,
    #[serde(default)]
    pub use_bias: bool,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: ActivationKind) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
            use_bias: false,
        }
    }

    pub fn with_bias(mut self) -> Self {
        self.use_bias = true;
        self
    }

    /// Shape of the weight matrix: `(in_dim [+1 bias row]) x out_dim`.
    pub fn weight_shape(&self) -> (usize, usize) {
        (self.in_dim + usize::from(self.use_bias), self.out_dim)
    }

    pub fn param_count(&self) -> usize {
        let (r, c) = self.weight_shape();
        r * c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
    loss: LossKind,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>, loss: LossKind) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidSpec(
                "network needs at least one layer".into(),
            ));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::InvalidSpec(format!(
                    "layer {i} has a zero dimension"
                )));
            }
            l.activation.validate()?;
            if i > 0 && layers[i - 1].out_dim != l.in_dim {
                return Err(Error::InvalidSpec(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    l.in_dim,
                    i - 1,
                    layers[i - 1].out_dim
                )));
            }
        }
        let out = layers.last().expect("non-empty").activation;
        match loss {
            LossKind::CategoricalCrossEntropy if !out.is_softmax() => {
                return Err(Error::InvalidSpec(
                    "categorical cross-entropy needs a softmax output layer".into(),
                ))
            }
            LossKind::BinaryCrossEntropy if out != ActivationKind::Sigmoid => {
                return Err(Error::InvalidSpec(
                    "binary cross-entropy needs a sigmoid output layer".into(),
                ))
            }
            _ => {}
        }
        Ok(Self { layers, loss })
    }

    /// Chain of dense layers with a shared hidden activation and a separate
    /// output activation. `dims = [d_0, d_1, ..., d_L]`.
    pub fn mlp(
        dims: &[usize],
        hidden: ActivationKind,
        output: ActivationKind,
        loss: LossKind,
        use_bias: bool,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidSpec(
                "need at least input and output dims".into(),
            ));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                in_dim: w[0],
                out_dim: w[1],
                activation: if i == last { output } else { hidden },
                use_bias,
            })
            .collect();
        Self::new(layers, loss)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Sub-network made of the listed layers in the given order. Used to
    /// build the virtual one-hidden-layer nets of the autoencoder schedule.
    pub fn sub_network(&self, indices: &[usize], loss: LossKind) -> Result<NetworkSpec> {
        let layers = indices
            .iter()
            .map(|&i| {
                self.layers
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::InvalidSpec(format!("no layer {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        NetworkSpec::new(layers, loss)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub weights: Vec<DenseMatrix>,
}

impl NetworkState {
    pub fn new(spec: &NetworkSpec, weights: Vec<DenseMatrix>) -> Result<Self> {
        let state = Self { weights };
        state.check(spec)?;
        Ok(state)
    }

    /// Uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, layer by layer.
    pub fn init(spec: &NetworkSpec, rng: &mut Rng) -> Self {
        let weights = spec
            .layers()
            .iter()
            .map(|l| {
                let (r, c) = l.weight_shape();
                let s = 1.0 / (l.in_dim as f64).sqrt();
                rng.uniform_matrix(r, c, -s, s)
            })
            .collect();
        Self { weights }
    }

    pub fn zeros(spec: &NetworkSpec) -> Self {
        let weights = spec
            .layers()
            .iter()
            .map(|l| {
                let (r, c) = l.weight_shape();
                DenseMatrix::zeros(r, c)
            })
            .collect();
        Self { weights }
    }

    pub fn check(&self, spec: &NetworkSpec) -> Result<()> {
        if self.weights.len() != spec.depth() {
            return Err(Error::InvalidSpec(format!(
                "state has {} weight matrices, spec has {} layers",
                self.weights.len(),
                spec.depth()
            )));
        }
        for (i, (w, l)) in self.weights.iter().zip(spec.layers()).enumerate() {
            if w.shape() != l.weight_shape() {
                return Err(Error::InvalidSpec(format!(
                    "layer {i} weights are {}x{}, expected {}x{}",
                    w.rows(),
                    w.cols(),
                    l.weight_shape().0,
                    l.weight_shape().1
                )));
            }
            if !w.is_finite() {
                return Err(Error::NonFinite("network weights"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub inputs: DenseMatrix,
    pub targets: DenseMatrix,
}

impl Batch {
    pub fn new(inputs: DenseMatrix, targets: DenseMatrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::InvalidDataset(format!(
                "{} input rows but {} target rows",
                inputs.rows(),
                targets.rows()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Batch {
        Batch {
            inputs: self.inputs.select_rows(indices),
            targets: self.targets.select_rows(indices),
        }
    }
}

fn layer_preact(layer: &LayerSpec, w: &DenseMatrix, input: &DenseMatrix) -> Result<DenseMatrix> {
    if input.cols() != layer.in_dim {
        return Err(Error::ShapeMismatch {
            op: "forward",
            left: input.shape(),
            right: (layer.in_dim, layer.out_dim),
        });
    }
    if layer.use_bias {
        input.with_ones_column().matmul(w)
    } else {
        input.matmul(w)
    }
}

/// Pre-activations and activations of layers `start..L` for `input = a_start`.
pub(crate) struct Trace {
    /// `acts[0]` is the input to layer `start`, `acts[k+1]` its output.
    pub acts: Vec<DenseMatrix>,
    pub preacts: Vec<DenseMatrix>,
}

pub(crate) fn trace_from(
    spec: &NetworkSpec,
    state: &NetworkState,
    start: usize,
    input: &DenseMatrix,
) -> Result<Trace> {
    let mut acts = Vec::with_capacity(spec.depth() - start + 1);
    let mut preacts = Vec::with_capacity(spec.depth() - start);
    acts.push(input.clone());
    for l in start..spec.depth() {
        let layer = &spec.layers()[l];
        let z = layer_preact(layer, &state.weights[l], acts.last().expect("non-empty"))?;
        let a = act_eval(layer.activation, &z);
        preacts.push(z);
        acts.push(a);
    }
    Ok(Trace { acts, preacts })
}

/// All activations `a_0 ... a_L`; the last one is the prediction.
pub fn forward(
    spec: &NetworkSpec,
    state: &NetworkState,
    inputs: &DenseMatrix,
) -> Result<Vec<DenseMatrix>> {
    Ok(trace_from(spec, state, 0, inputs)?.acts)
}

/// Prediction only, starting from the activation `a_start` fed to layer `start`.
pub fn forward_from(
    spec: &NetworkSpec,
    state: &NetworkState,
    start: usize,
    input: &DenseMatrix,
) -> Result<DenseMatrix> {
    let mut a = input.clone();
    for l in start..spec.depth() {
        let layer = &spec.layers()[l];
        a = act_eval(
            layer.activation,
            &layer_preact(layer, &state.weights[l], &a)?,
        );
    }
    Ok(a)
}

pub fn predict(
    spec: &NetworkSpec,
    state: &NetworkState,
    inputs: &DenseMatrix,
) -> Result<DenseMatrix> {
    forward_from(spec, state, 0, inputs)
}

/// `dL/dz_L` for the batch-mean loss.
fn output_delta(
    spec: &NetworkSpec,
    z: &DenseMatrix,
    pred: &DenseMatrix,
    targets: &DenseMatrix,
) -> Result<DenseMatrix> {
    if pred.shape() != targets.shape() {
        return Err(Error::ShapeMismatch {
            op: "loss gradient",
            left: pred.shape(),
            right: targets.shape(),
        });
    }
    let inv_m = 1.0 / pred.rows() as f64;
    let out = spec.layers()[spec.depth() - 1].activation;
    match spec.loss() {
        // Fused forms: softmax + CCE and sigmoid + BCE both reduce to p - y.
        LossKind::CategoricalCrossEntropy | LossKind::BinaryCrossEntropy => {
            pred.zip_map(targets, "loss gradient", |p, y| (p - y) * inv_m)
        }
        LossKind::MeanSquaredError => {
            let upstream = pred.zip_map(targets, "loss gradient", |p, y| 2.0 * inv_m * (p - y))?;
            Ok(backprop_activation(out, z, pred, &upstream))
        }
    }
}

/// Gradients for layers `stop..L`, given the activation feeding layer
/// `start <= stop`. Index `k` of the result belongs to layer `stop + k`.
pub(crate) fn gradients_from(
    spec: &NetworkSpec,
    state: &NetworkState,
    start: usize,
    input: &DenseMatrix,
    targets: &DenseMatrix,
    stop: usize,
) -> Result<Vec<DenseMatrix>> {
    if stop >= spec.depth() || start > stop {
        return Err(Error::InvalidSpec(format!(
            "layer range {start}..{stop} outside a {}-layer network",
            spec.depth()
        )));
    }
    let tr = trace_from(spec, state, start, input)?;
    let last = spec.depth() - 1;
    let k_last = last - start;
    let mut delta = output_delta(spec, &tr.preacts[k_last], &tr.acts[k_last + 1], targets)?;
    let mut grads = Vec::with_capacity(last - stop + 1);
    let mut l = last;
    loop {
        let k = l - start;
        let layer = &spec.layers()[l];
        let a_in = &tr.acts[k];
        let g = if layer.use_bias {
            a_in.with_ones_column().matmul_tn(&delta)?
        } else {
            a_in.matmul_tn(&delta)?
        };
        grads.push(g);
        if l == stop {
            break;
        }
        let w = &state.weights[l];
        let upstream = if layer.use_bias {
            delta.matmul_nt(&w.without_last_row())?
        } else {
            delta.matmul_nt(w)?
        };
        let prev = &spec.layers()[l - 1];
        delta = backprop_activation(prev.activation, &tr.preacts[k - 1], &tr.acts[k], &upstream);
        l -= 1;
    }
    grads.reverse();
    Ok(grads)
}

fn check_batch(spec: &NetworkSpec, batch: &Batch) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyData);
    }
    if batch.targets.cols() != spec.output_dim() {
        return Err(Error::ShapeMismatch {
            op: "targets",
            left: batch.targets.shape(),
            right: (batch.targets.rows(), spec.output_dim()),
        });
    }
    Ok(())
}

/// Gradient of the batch loss with respect to `W_{layer_index}` alone.
pub fn layer_gradient(
    spec: &NetworkSpec,
    state: &NetworkState,
    batch: &Batch,
    layer_index: usize,
) -> Result<DenseMatrix> {
    check_batch(spec, batch)?;
    let mut g = gradients_from(spec, state, 0, &batch.inputs, &batch.targets, layer_index)?;
    Ok(g.swap_remove(0))
}

/// Gradients of all layers from one backward sweep.
pub fn full_gradient(
    spec: &NetworkSpec,
    state: &NetworkState,
    batch: &Batch,
) -> Result<Vec<DenseMatrix>> {
    check_batch(spec, batch)?;
    gradients_from(spec, state, 0, &batch.inputs, &batch.targets, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::loss::loss_eval;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn spec_validation() {
        let relu = ActivationKind::leaky_relu();
        assert!(NetworkSpec::new(vec![], LossKind::MeanSquaredError).is_err());
        let bad_chain = vec![LayerSpec::new(3, 4, relu), LayerSpec::new(5, 2, relu)];
        assert!(NetworkSpec::new(bad_chain, LossKind::MeanSquaredError).is_err());
        let ce = vec![LayerSpec::new(3, 2, relu)];
        assert!(NetworkSpec::new(ce.clone(), LossKind::CategoricalCrossEntropy).is_err());
        assert!(NetworkSpec::new(ce, LossKind::BinaryCrossEntropy).is_err());
        let bad_act = vec![LayerSpec::new(
            3,
            2,
            ActivationKind::GeneralizedRelu { a: 2.0, b: 1.0 },
        )];
        assert!(NetworkSpec::new(bad_act, LossKind::MeanSquaredError).is_err());
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let spec = NetworkSpec::new(
            vec![LayerSpec::new(3, 3, ActivationKind::Identity)],
            LossKind::MeanSquaredError,
        )
        .unwrap();
        let state = NetworkState::new(&spec, vec![DenseMatrix::identity(3)]).unwrap();
        let x = m(&[&[1.0, -2.0, 3.0], &[0.5, 0.0, -1.0]]);
        let acts = forward(&spec, &state, &x).unwrap();
        assert_eq!(acts.len(), 2);
        assert_eq!(acts[1], x);
    }

    #[test]
    fn degenerate_relu_is_linear() {
        let spec = NetworkSpec::new(
            vec![LayerSpec::new(
                1,
                1,
                ActivationKind::GeneralizedRelu { a: 1.0, b: 1.0 },
            )],
            LossKind::MeanSquaredError,
        )
        .unwrap();
        let state = NetworkState::new(&spec, vec![m(&[&[2.0]])]).unwrap();
        assert_eq!(predict(&spec, &state, &m(&[&[3.0]])).unwrap(), m(&[&[6.0]]));
    }

    #[test]
    fn two_layer_forward_matches_hand_composition() {
        let mut rng = Rng::new(4);
        let spec = NetworkSpec::mlp(
            &[4, 3, 2],
            ActivationKind::Sigmoid,
            ActivationKind::leaky_relu(),
            LossKind::MeanSquaredError,
            false,
        )
        .unwrap();
        let state = NetworkState::init(&spec, &mut rng);
        let x = rng.uniform_matrix(5, 4, -1.0, 1.0);
        let mut expect = DenseMatrix::zeros(5, 2);
        for i in 0..5 {
            let mut h = [0.0; 3];
            for (j, hj) in h.iter_mut().enumerate() {
                let z: f64 = (0..4).map(|k| x[(i, k)] * state.weights[0][(k, j)]).sum();
                *hj = 1.0 / (1.0 + (-z).exp());
            }
            for j in 0..2 {
                let z: f64 = (0..3).map(|k| h[k] * state.weights[1][(k, j)]).sum();
                expect[(i, j)] = if z <= 0.0 { 0.01 * z } else { z };
            }
        }
        let got = predict(&spec, &state, &x).unwrap();
        for (a, b) in got.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn bias_row_is_applied() {
        let spec = NetworkSpec::new(
            vec![LayerSpec::new(1, 1, ActivationKind::Identity).with_bias()],
            LossKind::MeanSquaredError,
        )
        .unwrap();
        let state = NetworkState::new(&spec, vec![m(&[&[2.0], &[0.5]])]).unwrap();
        assert_eq!(predict(&spec, &state, &m(&[&[3.0]])).unwrap(), m(&[&[6.5]]));
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let mut rng = Rng::new(1);
        let spec = NetworkSpec::mlp(
            &[3, 4, 2],
            ActivationKind::leaky_relu(),
            ActivationKind::leaky_relu(),
            LossKind::MeanSquaredError,
            false,
        )
        .unwrap();
        let state = NetworkState::init(&spec, &mut rng);
        let x = rng.uniform_matrix(6, 3, -1.0, 1.0);
        let y = predict(&spec, &state, &x).unwrap();
        let batch = Batch::new(x, y).unwrap();
        for l in 0..2 {
            assert_eq!(
                layer_gradient(&spec, &state, &batch, l).unwrap().max_abs(),
                0.0
            );
        }
    }

    #[test]
    fn full_gradient_matches_layer_gradient() {
        let mut rng = Rng::new(2);
        let spec = NetworkSpec::mlp(
            &[5, 4, 3, 3],
            ActivationKind::Sigmoid,
            ActivationKind::Softmax,
            LossKind::CategoricalCrossEntropy,
            true,
        )
        .unwrap();
        let state = NetworkState::init(&spec, &mut rng);
        let x = rng.uniform_matrix(7, 5, -1.0, 1.0);
        let y = DenseMatrix::from_fn(7, 3, |r, c| if r % 3 == c { 1.0 } else { 0.0 });
        let batch = Batch::new(x, y).unwrap();
        let full = full_gradient(&spec, &state, &batch).unwrap();
        for (l, g) in full.iter().enumerate() {
            let single = layer_gradient(&spec, &state, &batch, l).unwrap();
            assert_eq!(g.shape(), single.shape());
            for (a, b) in g.data().iter().zip(single.data()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn single_layer_full_gradient_is_layer_gradient() {
        let mut rng = Rng::new(3);
        let spec = NetworkSpec::mlp(
            &[3, 2],
            ActivationKind::Identity,
            ActivationKind::Sigmoid,
            LossKind::BinaryCrossEntropy,
            false,
        )
        .unwrap();
        let state = NetworkState::init(&spec, &mut rng);
        let batch = Batch::new(
            rng.uniform_matrix(4, 3, -1.0, 1.0),
            rng.uniform_matrix(4, 2, 0.0, 1.0),
        )
        .unwrap();
        let full = full_gradient(&spec, &state, &batch).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0], layer_gradient(&spec, &state, &batch, 0).unwrap());
    }

    #[test]
    fn outer_layer_gradient_is_glm_gradient() {
        // Independent oracle: (2/m) sum_i g(<w,z_i>) (phi(<w,z_i>) - y_i) z_i
        // with z_i the hidden activations.
        let mut rng = Rng::new(5);
        let act = ActivationKind::leaky_relu();
        let spec =
            NetworkSpec::mlp(&[4, 3, 1], act, act, LossKind::MeanSquaredError, false).unwrap();
        let state = NetworkState::init(&spec, &mut rng);
        let x = rng.uniform_matrix(9, 4, -1.0, 1.0);
        let y = rng.uniform_matrix(9, 1, -1.0, 1.0);
        let batch = Batch::new(x.clone(), y.clone()).unwrap();
        let hidden = &forward(&spec, &state, &x).unwrap()[1];
        let w = &state.weights[1];
        let mut oracle = [0.0; 3];
        for i in 0..9 {
            let s: f64 = (0..3).map(|k| hidden[(i, k)] * w[(k, 0)]).sum();
            let coef = act.derivative(s) * (act.apply(s) - y[(i, 0)]);
            for k in 0..3 {
                oracle[k] += 2.0 / 9.0 * coef * hidden[(i, k)];
            }
        }
        let g = layer_gradient(&spec, &state, &batch, 1).unwrap();
        for k in 0..3 {
            assert!((g[(k, 0)] - oracle[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn loss_of_forward_matches_manual_mse() {
        let spec = NetworkSpec::new(
            vec![LayerSpec::new(2, 1, ActivationKind::Identity)],
            LossKind::MeanSquaredError,
        )
        .unwrap();
        let state = NetworkState::new(&spec, vec![m(&[&[1.0], &[1.0]])]).unwrap();
        let x = m(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let pred = predict(&spec, &state, &x).unwrap();
        let v = loss_eval(LossKind::MeanSquaredError, &pred, &m(&[&[2.0], &[1.0]])).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn wrong_state_shape_rejected() {
        let spec = NetworkSpec::new(
            vec![LayerSpec::new(2, 1, ActivationKind::Identity)],
            LossKind::MeanSquaredError,
        )
        .unwrap();
        assert!(NetworkState::new(&spec, vec![DenseMatrix::zeros(1, 2)]).is_err());
        let state = NetworkState::zeros(&spec);
        assert!(forward(&spec, &state, &DenseMatrix::zeros(3, 3)).is_err());
    }
}
