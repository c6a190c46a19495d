//! Architecture descriptions and the networks instantiated from them.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    concat_rows, concat_rows_backward, softmax, sigmoid, Activation, ActivationKind, Conv2d, Dense, Dropout,
    Flatten, MaxPool2x2, TimeDistributedDense,
};
use super::lstm::{BiLstm, Lstm};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Side of every convolution kernel.
pub const CONV_KERNEL: usize = 3;
pub const DROPOUT_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d { filters: usize, kernel: usize },
    MaxPool2x2,
    Dense { units: usize },
    TimeDistributedDense { units: usize },
    Relu,
    Sigmoid,
    Softmax,
    Dropout { p: f64 },
    Flatten,
    /// Joins the branch outputs; only valid as the first head layer.
    Concat,
    Lstm { units: usize, return_sequences: bool },
    /// `units` is the total output width, split evenly between the two directions.
    BiLstm { units: usize, return_sequences: bool },
}

impl LayerSpec {
    /// Output shape (without batch axis) for a given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let bad = |why: &str| Err(Error::Shape(format!("{self:?} on input {input:?}: {why}")));
        match *self {
            LayerSpec::Conv2d { filters, kernel } => match *input {
                [h, w, _] if filters > 0 && kernel > 0 && kernel <= h.min(w) => {
                    Ok(vec![h - kernel + 1, w - kernel + 1, filters])
                }
                _ => bad("needs [h, w, c] at least as large as the kernel"),
            },
            LayerSpec::MaxPool2x2 => match *input {
                [h, w, c] if h >= 2 && w >= 2 => Ok(vec![h / 2, w / 2, c]),
                _ => bad("needs [h, w, c] with h, w >= 2"),
            },
            LayerSpec::Dense { units } => match *input {
                [_] if units > 0 => Ok(vec![units]),
                _ => bad("needs a vector"),
            },
            LayerSpec::TimeDistributedDense { units } => match *input {
                [t, _] if units > 0 => Ok(vec![t, units]),
                _ => bad("needs [t, d]"),
            },
            LayerSpec::Relu | LayerSpec::Sigmoid => Ok(input.to_vec()),
            LayerSpec::Softmax => match *input {
                [_] => Ok(input.to_vec()),
                _ => bad("softmax needs a vector"),
            },
            LayerSpec::Dropout { p } => {
                if (0.0..1.0).contains(&p) {
                    Ok(input.to_vec())
                } else {
                    bad("dropout probability outside [0, 1)")
                }
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Concat => bad("concat is resolved by the model, not a single input"),
            LayerSpec::Lstm {
                units,
                return_sequences,
            } => match *input {
                [t, _] if units > 0 => Ok(if return_sequences { vec![t, units] } else { vec![units] }),
                _ => bad("needs [t, d]"),
            },
            LayerSpec::BiLstm {
                units,
                return_sequences,
            } => match *input {
                [t, _] if units > 0 && units % 2 == 0 => {
                    Ok(if return_sequences { vec![t, units] } else { vec![units] })
                }
                _ => bad("needs [t, d] and an even unit count"),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    SingleCnn,
    ParallelCnn,
    Lstm,
    BiLstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::SingleCnn,
        ModelKind::ParallelCnn,
        ModelKind::Lstm,
        ModelKind::BiLstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SingleCnn => "single-cnn",
            ModelKind::ParallelCnn => "parallel-cnn",
            ModelKind::Lstm => "lstm",
            ModelKind::BiLstm => "bilstm",
        }
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, ModelKind::Lstm | ModelKind::BiLstm)
    }

    /// Mini-batch size used for this family: 8 for the CNNs, 20 for the recurrent nets.
    pub fn default_batch_size(self) -> usize {
        if self.is_recurrent() {
            20
        } else {
            8
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }
}

/// Final activation applied to the logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputHead {
    Softmax,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Shape of one branch input, without batch axis.
    pub input_shape: Vec<usize>,
    /// One layer list per input; a single entry for sequential models.
    pub branches: Vec<Vec<LayerSpec>>,
    /// Layers after the branches are joined. Empty for sequential models.
    pub head: Vec<LayerSpec>,
    pub output_classes: usize,
}

fn output_layers(classes: usize) -> [LayerSpec; 2] {
    if classes == 2 {
        [LayerSpec::Dense { units: 1 }, LayerSpec::Sigmoid]
    } else {
        [LayerSpec::Dense { units: classes }, LayerSpec::Softmax]
    }
}

fn conv_trunk() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv2d {
            filters: 32,
            kernel: CONV_KERNEL,
        },
        LayerSpec::Relu,
        LayerSpec::Conv2d {
            filters: 64,
            kernel: CONV_KERNEL,
        },
        LayerSpec::Relu,
        LayerSpec::MaxPool2x2,
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 576 },
        LayerSpec::Relu,
    ]
}

fn check_classes(classes: usize) -> Result<()> {
    if classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
    }
    Ok(())
}

/// Conv32 -> Conv64 -> MaxPool -> Dense576 -> Dense32 -> Dense8 -> output, on one `m x m` field.
pub fn build_single_cnn(m: usize, classes: usize) -> Result<ModelSpec> {
    check_classes(classes)?;
    let mut layers = conv_trunk();
    layers.extend([
        LayerSpec::Dense { units: 32 },
        LayerSpec::Relu,
        LayerSpec::Dense { units: 8 },
        LayerSpec::Relu,
    ]);
    layers.extend(output_layers(classes));
    let spec = ModelSpec {
        kind: ModelKind::SingleCnn,
        input_shape: vec![m, m, 1],
        branches: vec![layers],
        head: vec![],
        output_classes: classes,
    };
    spec.validate()?;
    Ok(spec)
}

/// Three conv branches (GASF, GADF, MTF) joined into a 1728-wide feature vector.
pub fn build_parallel_cnn(m: usize, classes: usize) -> Result<ModelSpec> {
    check_classes(classes)?;
    let mut head = vec![
        LayerSpec::Concat,
        LayerSpec::Dense { units: 128 },
        LayerSpec::Relu,
        LayerSpec::Dense { units: 32 },
        LayerSpec::Relu,
        LayerSpec::Dense { units: 8 },
        LayerSpec::Relu,
    ];
    head.extend(output_layers(classes));
    let spec = ModelSpec {
        kind: ModelKind::ParallelCnn,
        input_shape: vec![m, m, 1],
        branches: vec![conv_trunk(), conv_trunk(), conv_trunk()],
        head,
        output_classes: classes,
    };
    spec.validate()?;
    Ok(spec)
}

fn recurrent(kind: ModelKind, m: usize, classes: usize) -> Result<ModelSpec> {
    check_classes(classes)?;
    let (first, second) = match kind {
        ModelKind::Lstm => (
            LayerSpec::Lstm {
                units: 64,
                return_sequences: true,
            },
            LayerSpec::Lstm {
                units: 32,
                return_sequences: true,
            },
        ),
        _ => (
            LayerSpec::BiLstm {
                units: 128,
                return_sequences: true,
            },
            LayerSpec::BiLstm {
                units: 64,
                return_sequences: true,
            },
        ),
    };
    let mut layers = vec![
        LayerSpec::TimeDistributedDense { units: 32 },
        LayerSpec::Relu,
        first,
        LayerSpec::Dropout { p: DROPOUT_RATE },
        second,
        LayerSpec::Dropout { p: DROPOUT_RATE },
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 64 },
        LayerSpec::Relu,
        LayerSpec::Dense { units: 32 },
        LayerSpec::Relu,
    ];
    layers.extend(output_layers(classes));
    let spec = ModelSpec {
        kind,
        input_shape: vec![m, 1],
        branches: vec![layers],
        head: vec![],
        output_classes: classes,
    };
    spec.validate()?;
    Ok(spec)
}

/// Dense32 per step -> LSTM64 -> LSTM32 -> Dense64 -> Dense32 -> output, on a raw length-`m` series.
pub fn build_lstm(m: usize, classes: usize) -> Result<ModelSpec> {
    recurrent(ModelKind::Lstm, m, classes)
}

/// As [`build_lstm`] with bidirectional layers of total width 128 and 64.
pub fn build_bilstm(m: usize, classes: usize) -> Result<ModelSpec> {
    recurrent(ModelKind::BiLstm, m, classes)
}

pub fn build_model(kind: ModelKind, m: usize, classes: usize) -> Result<ModelSpec> {
    match kind {
        ModelKind::SingleCnn => build_single_cnn(m, classes),
        ModelKind::ParallelCnn => build_parallel_cnn(m, classes),
        ModelKind::Lstm => build_lstm(m, classes),
        ModelKind::BiLstm => build_bilstm(m, classes),
    }
}

impl ModelSpec {
    /// Checks the layer chain and returns the shape after every branch layer, the
    /// joined width, and the final output shape.
    pub fn validate(&self) -> Result<Vec<usize>> {
        if self.branches.is_empty() {
            return Err(Error::Config("model has no branches".into()));
        }
        let mut branch_out = Vec::new();
        for branch in &self.branches {
            let mut shape = self.input_shape.clone();
            for layer in branch {
                shape = layer.output_shape(&shape)?;
            }
            branch_out.push(shape);
        }
        let mut shape = if self.head.first() == Some(&LayerSpec::Concat) {
            let mut width = 0;
            for s in &branch_out {
                match s[..] {
                    [w] => width += w,
                    _ => return Err(Error::Shape(format!("cannot concatenate branch output {s:?}"))),
                }
            }
            vec![width]
        } else if self.branches.len() == 1 {
            branch_out.pop().unwrap()
        } else {
            return Err(Error::Config("several branches need a leading concat".into()));
        };
        for layer in self.head.iter().skip_while(|l| **l == LayerSpec::Concat) {
            if *layer == LayerSpec::Concat {
                return Err(Error::Config("concat may only lead the head".into()));
            }
            shape = layer.output_shape(&shape)?;
        }
        let expect = if self.output_classes == 2 { 1 } else { self.output_classes };
        if shape != [expect] {
            return Err(Error::Shape(format!(
                "model ends in {shape:?}, expected [{expect}] for {} classes",
                self.output_classes
            )));
        }
        match self.last_layer() {
            Some(LayerSpec::Softmax) if self.output_classes > 2 => {}
            Some(LayerSpec::Sigmoid) if self.output_classes == 2 => {}
            other => {
                return Err(Error::Config(format!(
                    "model must end in softmax (C > 2) or sigmoid (C = 2), found {other:?}"
                )))
            }
        }
        Ok(shape)
    }

    fn last_layer(&self) -> Option<&LayerSpec> {
        self.head
            .last()
            .or_else(|| self.branches.last().and_then(|b| b.last()))
    }

    pub fn output_head(&self) -> OutputHead {
        if self.output_classes == 2 {
            OutputHead::Sigmoid
        } else {
            OutputHead::Softmax
        }
    }

    /// Width of the vector entering the first dense layer after `Flatten` in branch 0.
    pub fn flatten_width(&self) -> Result<usize> {
        let mut shape = self.input_shape.clone();
        for layer in &self.branches[0] {
            shape = layer.output_shape(&shape)?;
            if *layer == LayerSpec::Flatten {
                return Ok(shape[0]);
            }
        }
        Err(Error::Config("model has no flatten layer".into()))
    }

    /// Width after joining the branches (equal to the branch output for sequential models).
    pub fn joined_width(&self) -> Result<usize> {
        let mut total = 0;
        for branch in &self.branches {
            let mut shape = self.input_shape.clone();
            for layer in branch {
                shape = layer.output_shape(&shape)?;
            }
            total += shape.iter().product::<usize>();
        }
        Ok(total)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum Layer {
    Conv2d(Conv2d),
    MaxPool(MaxPool2x2),
    Dense(Dense),
    TimeDense(TimeDistributedDense),
    Activation(Activation),
    Dropout(Dropout),
    Flatten(Flatten),
    Lstm(Lstm),
    BiLstm(BiLstm),
}

impl Layer {
    fn build(spec: &LayerSpec, input: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(match *spec {
            LayerSpec::Conv2d { filters, kernel } => Layer::Conv2d(Conv2d::init(input[2], filters, kernel, rng)),
            LayerSpec::MaxPool2x2 => Layer::MaxPool(MaxPool2x2::default()),
            LayerSpec::Dense { units } => Layer::Dense(Dense::init(input[0], units, rng)),
            LayerSpec::TimeDistributedDense { units } => Layer::TimeDense(TimeDistributedDense {
                inner: Dense::init(input[1], units, rng),
            }),
            LayerSpec::Relu => Layer::Activation(Activation::new(ActivationKind::Relu)),
            LayerSpec::Sigmoid => Layer::Activation(Activation::new(ActivationKind::Sigmoid)),
            LayerSpec::Softmax => Layer::Activation(Activation::new(ActivationKind::Softmax)),
            LayerSpec::Dropout { p } => Layer::Dropout(Dropout::new(p)?),
            LayerSpec::Flatten => Layer::Flatten(Flatten::default()),
            LayerSpec::Concat => return Err(Error::Config("concat is not a standalone layer".into())),
            LayerSpec::Lstm {
                units,
                return_sequences,
            } => Layer::Lstm(Lstm::init(input[1], units, return_sequences, rng)),
            LayerSpec::BiLstm {
                units,
                return_sequences,
            } => Layer::BiLstm(BiLstm::init(input[1], units / 2, return_sequences, rng)),
        })
    }

    pub fn forward(&mut self, x: &Tensor, rng: Option<&mut ChaCha8Rng>) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.forward(x),
            Layer::MaxPool(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x),
            Layer::TimeDense(l) => l.forward(x),
            Layer::Activation(l) => Ok(l.forward(x)),
            Layer::Dropout(l) => Ok(l.forward(x, rng)),
            Layer::Flatten(l) => l.forward(x),
            Layer::Lstm(l) => l.forward(x),
            Layer::BiLstm(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv2d(l) => l.backward(grad),
            Layer::MaxPool(l) => l.backward(grad),
            Layer::Dense(l) => l.backward(grad),
            Layer::TimeDense(l) => l.backward(grad),
            Layer::Activation(l) => l.backward(grad),
            Layer::Dropout(l) => Ok(l.backward(grad)),
            Layer::Flatten(l) => l.backward(grad),
            Layer::Lstm(l) => l.backward(grad),
            Layer::BiLstm(l) => l.backward(grad),
        }
    }

    /// Visits `(parameter, gradient)` pairs in a fixed order.
    pub fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor, &mut Tensor)) {
        fn lstm(l: &mut Lstm, f: &mut dyn FnMut(&mut Tensor, &mut Tensor)) {
            f(&mut l.w_input, &mut l.w_input_grad);
            f(&mut l.w_hidden, &mut l.w_hidden_grad);
            f(&mut l.bias, &mut l.bias_grad);
        }
        match self {
            Layer::Conv2d(l) => {
                f(&mut l.kernels, &mut l.kernel_grad);
                f(&mut l.bias, &mut l.bias_grad);
            }
            Layer::Dense(l) | Layer::TimeDense(TimeDistributedDense { inner: l }) => {
                f(&mut l.weights, &mut l.weight_grad);
                f(&mut l.bias, &mut l.bias_grad);
            }
            Layer::Lstm(l) => lstm(l, f),
            Layer::BiLstm(l) => {
                lstm(&mut l.forward_cell, f);
                lstm(&mut l.backward_cell, f);
            }
            Layer::MaxPool(_) | Layer::Activation(_) | Layer::Dropout(_) | Layer::Flatten(_) => {}
        }
    }
}

/// A model instance: parameters, gradient buffers and forward caches.
#[derive(Debug, Clone)]
pub struct Network {
    spec: ModelSpec,
    branches: Vec<Vec<Layer>>,
    head: Vec<Layer>,
    branch_widths: Vec<usize>,
    joins: bool,
}

impl Network {
    /// Instantiates `spec` with Glorot-uniform weights drawn from `rng`.
    pub fn new(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let output_act = spec.last_layer().cloned();
        let n_branches = spec.branches.len();
        let mut branches = Vec::with_capacity(n_branches);
        let mut branch_widths = Vec::with_capacity(n_branches);
        let mut shapes = Vec::new();
        for (bi, branch) in spec.branches.iter().enumerate() {
            let mut shape = spec.input_shape.clone();
            let mut layers = Vec::with_capacity(branch.len());
            for (li, ls) in branch.iter().enumerate() {
                let is_output = spec.head.is_empty() && bi == n_branches - 1 && li == branch.len() - 1;
                if !is_output {
                    layers.push(Layer::build(ls, &shape, rng)?);
                }
                shape = ls.output_shape(&shape)?;
            }
            branch_widths.push(shape.iter().product());
            shapes.push(shape);
            branches.push(layers);
        }
        let joins = spec.head.first() == Some(&LayerSpec::Concat);
        let mut shape = vec![branch_widths.iter().sum()];
        let mut head = Vec::new();
        let head_specs: Vec<&LayerSpec> = spec.head.iter().skip(usize::from(joins)).collect();
        for (li, ls) in head_specs.iter().enumerate() {
            if li + 1 < head_specs.len() {
                head.push(Layer::build(ls, &shape, rng)?);
            }
            shape = ls.output_shape(&shape)?;
        }
        debug_assert!(matches!(output_act, Some(LayerSpec::Softmax | LayerSpec::Sigmoid)));
        Ok(Self {
            spec: spec.clone(),
            branches,
            head,
            branch_widths,
            joins,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn branches_mut(&mut self) -> &mut [Vec<Layer>] {
        &mut self.branches
    }

    pub fn head_mut(&mut self) -> &mut [Layer] {
        &mut self.head
    }

    /// Pre-activation outputs for a batch. `inputs` holds one `[n, ..input_shape]`
    /// tensor per branch; `rng` is `Some` only in training mode.
    pub fn forward_logits(&mut self, inputs: &[Tensor], mut rng: Option<&mut ChaCha8Rng>) -> Result<Tensor> {
        if inputs.len() != self.branches.len() {
            return Err(Error::Shape(format!(
                "model takes {} inputs, got {}",
                self.branches.len(),
                inputs.len()
            )));
        }
        let mut outs = Vec::with_capacity(inputs.len());
        for (branch, x) in self.branches.iter_mut().zip(inputs) {
            if x.shape().get(1..) != Some(&self.spec.input_shape[..]) {
                return Err(Error::Shape(format!(
                    "input {:?} does not match model input [n, {:?}]",
                    x.shape(),
                    self.spec.input_shape
                )));
            }
            let mut h = x.clone();
            for layer in branch.iter_mut() {
                h = layer.forward(&h, rng.as_deref_mut())?;
            }
            outs.push(h);
        }
        let mut h = if self.joins {
            concat_rows(&outs)?
        } else {
            outs.pop().expect("one branch")
        };
        for layer in self.head.iter_mut() {
            h = layer.forward(&h, rng.as_deref_mut())?;
        }
        Ok(h)
    }

    /// Backpropagates a gradient w.r.t. the logits, accumulating parameter gradients.
    /// Returns the gradient w.r.t. each branch input.
    pub fn backward(&mut self, grad: &Tensor) -> Result<Vec<Tensor>> {
        let mut g = grad.clone();
        for layer in self.head.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        let parts = if self.joins {
            concat_rows_backward(&g, &self.branch_widths)?
        } else {
            vec![g]
        };
        let mut input_grads = Vec::with_capacity(parts.len());
        for (branch, mut g) in self.branches.iter_mut().zip(parts) {
            for layer in branch.iter_mut().rev() {
                g = layer.backward(&g)?;
            }
            input_grads.push(g);
        }
        Ok(input_grads)
    }

    /// Applies the output activation to logits.
    pub fn activate(&self, logits: &Tensor) -> Tensor {
        match self.spec.output_head() {
            OutputHead::Softmax => softmax(logits),
            OutputHead::Sigmoid => sigmoid(logits),
        }
    }

    pub fn visit_params(&mut self, f: &mut dyn FnMut(&mut Tensor, &mut Tensor)) {
        for branch in self.branches.iter_mut() {
            for layer in branch.iter_mut() {
                layer.visit_params(f);
            }
        }
        for layer in self.head.iter_mut() {
            layer.visit_params(f);
        }
    }

    pub fn zero_grads(&mut self) {
        self.visit_params(&mut |_, g| g.fill(0.0));
    }

    /// Copies of every parameter tensor, in checkpoint order.
    pub fn parameters(&mut self) -> Vec<Tensor> {
        let mut out = Vec::new();
        self.visit_params(&mut |p, _| out.push(p.clone()));
        out
    }

    pub fn gradients(&mut self) -> Vec<Tensor> {
        let mut out = Vec::new();
        self.visit_params(&mut |_, g| out.push(g.clone()));
        out
    }

    /// Replaces every parameter; shapes must match exactly.
    pub fn set_parameters(&mut self, params: &[Tensor]) -> Result<()> {
        let current = self.parameters();
        if current.len() != params.len() {
            return Err(Error::Shape(format!(
                "model has {} parameter tensors, got {}",
                current.len(),
                params.len()
            )));
        }
        for (i, (c, p)) in current.iter().zip(params).enumerate() {
            if c.shape() != p.shape() {
                return Err(Error::Shape(format!(
                    "parameter {i}: model expects {:?}, got {:?}",
                    c.shape(),
                    p.shape()
                )));
            }
        }
        let mut it = params.iter();
        self.visit_params(&mut |p, _| *p = it.next().expect("checked length").clone());
        Ok(())
    }

    pub fn parameter_count(&mut self) -> usize {
        self.parameters().iter().map(Tensor::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn single_cnn_shapes() {
        let spec = build_single_cnn(16, 3).unwrap();
        assert_eq!(spec.validate().unwrap(), vec![3]);
        assert_eq!(spec.flatten_width().unwrap(), 6 * 6 * 64);
        assert_eq!(spec.flatten_width().unwrap(), 2304);
        let binary = build_single_cnn(16, 2).unwrap();
        assert_eq!(binary.branches[0].last(), Some(&LayerSpec::Sigmoid));
        assert_eq!(binary.output_head(), OutputHead::Sigmoid);
        assert!(build_single_cnn(4, 3).is_err());
        assert!(build_single_cnn(16, 1).is_err());
    }

    #[test]
    fn parallel_cnn_shapes() {
        let spec = build_parallel_cnn(16, 3).unwrap();
        assert_eq!(spec.validate().unwrap(), vec![3]);
        assert_eq!(spec.joined_width().unwrap(), 1728);
        assert_eq!(spec.branches.len(), 3);
    }

    #[test]
    fn recurrent_shapes() {
        let lstm = build_lstm(13, 3).unwrap();
        assert_eq!(lstm.validate().unwrap(), vec![3]);
        assert_eq!(lstm.flatten_width().unwrap(), 13 * 32);
        let bi = build_bilstm(13, 3).unwrap();
        let after_first = bi.branches[0][..3]
            .iter()
            .try_fold(bi.input_shape.clone(), |s, l| l.output_shape(&s))
            .unwrap();
        assert_eq!(after_first, vec![13, 128]);
        assert_eq!(bi.flatten_width().unwrap(), 13 * 64);
    }

    #[test]
    fn model_kind_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("resnet".parse::<ModelKind>().is_err());
    }

    #[test]
    fn malformed_specs_are_rejected() {
        let mut spec = build_single_cnn(16, 3).unwrap();
        spec.branches[0].pop();
        assert!(spec.validate().is_err());
        let mut spec = build_parallel_cnn(16, 3).unwrap();
        spec.head.remove(0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn network_output_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (spec, shape) in [
            (build_single_cnn(8, 3).unwrap(), vec![2, 8, 8, 1]),
            (build_lstm(6, 2).unwrap(), vec![2, 6, 1]),
            (build_bilstm(6, 3).unwrap(), vec![2, 6, 1]),
        ] {
            let mut net = Network::new(&spec, &mut rng).unwrap();
            let x = Tensor::from_fn(&shape, |i| (i as f64 * 0.37).sin());
            let y = net.forward_logits(&[x], None).unwrap();
            let width = if spec.output_classes == 2 { 1 } else { spec.output_classes };
            assert_eq!(y.shape(), &[2, width]);
        }
    }
}
