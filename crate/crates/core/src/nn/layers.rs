//! Feed-forward layers. Every layer works on a leading batch axis and caches
//! what its backward pass needs from the most recent forward pass.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

/// Glorot-uniform initializer.
pub(crate) fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::from_fn(shape, |_| rng.gen_range(-limit..limit))
}

fn missing_cache(layer: &str) -> Error {
    Error::Shape(format!("{layer}: backward called before forward"))
}

// ---------------------------------------------------------------------------
// convolution

/// Unrolls valid `k x k` windows of `[n, h, w, c]` into rows of `k*k*c`.
fn im2col(x: &Tensor, k: usize) -> (Vec<f64>, usize, usize) {
    let &[n, h, w, c] = x.shape() else { unreachable!() };
    let (oh, ow) = (h - k + 1, w - k + 1);
    let kkc = k * k * c;
    let xd = x.data();
    let mut cols = vec![0.0; n * oh * ow * kkc];
    let mut row = 0;
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let dst = &mut cols[row * kkc..(row + 1) * kkc];
                for ky in 0..k {
                    let src = ((b * h + oy + ky) * w + ox) * c;
                    dst[ky * k * c..(ky + 1) * k * c].copy_from_slice(&xd[src..src + k * c]);
                }
                row += 1;
            }
        }
    }
    (cols, oh, ow)
}

fn col2im(dcols: &[f64], input_shape: &[usize], k: usize) -> Tensor {
    let &[n, h, w, c] = input_shape else { unreachable!() };
    let (oh, ow) = (h - k + 1, w - k + 1);
    let kkc = k * k * c;
    let mut dx = Tensor::zeros(input_shape);
    let dxd = dx.data_mut();
    let mut row = 0;
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let src = &dcols[row * kkc..(row + 1) * kkc];
                for ky in 0..k {
                    let dst = ((b * h + oy + ky) * w + ox) * c;
                    for (d, s) in dxd[dst..dst + k * c]
                        .iter_mut()
                        .zip(&src[ky * k * c..(ky + 1) * k * c])
                    {
                        *d += s;
                    }
                }
                row += 1;
            }
        }
    }
    dx
}

fn check_conv_shapes(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<(usize, usize)> {
    input.expect_rank(4, "conv2d input")?;
    kernels.expect_rank(4, "conv2d kernels")?;
    let &[_, h, w, c] = input.shape() else { unreachable!() };
    let &[k, k2, kc, f] = kernels.shape() else { unreachable!() };
    if k != k2 || kc != c {
        return Err(Error::Shape(format!(
            "kernels {:?} do not fit input {:?}",
            kernels.shape(),
            input.shape()
        )));
    }
    if k > h.min(w) {
        return Err(Error::Shape(format!("kernel side {k} exceeds input {h}x{w}")));
    }
    bias.expect_shape(&[f], "conv2d bias")?;
    Ok((k, f))
}

/// Valid cross-correlation of a batch `[n, h, w, c]` with kernels `[k, k, c, f]`.
pub fn conv2d_forward_batch(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (k, f) = check_conv_shapes(input, kernels, bias)?;
    let (cols, oh, ow) = im2col(input, k);
    Ok(conv_from_cols(&cols, input.shape()[0], oh, ow, k * k * input.shape()[3], kernels, bias, f))
}

#[allow(clippy::too_many_arguments)]
fn conv_from_cols(
    cols: &[f64],
    n: usize,
    oh: usize,
    ow: usize,
    kkc: usize,
    kernels: &Tensor,
    bias: &Tensor,
    f: usize,
) -> Tensor {
    let rows = n * oh * ow;
    let mut out = Vec::with_capacity(rows * f);
    for _ in 0..rows {
        out.extend_from_slice(bias.data());
    }
    gemm(rows, kkc, f, cols, false, kernels.data(), false, 1.0, &mut out);
    Tensor::new(vec![n, oh, ow, f], out).expect("conv output shape")
}

/// Gradients of a batched convolution: `(input_grad, kernel_grad, bias_grad)`.
pub fn conv2d_backward_batch(
    upstream: &Tensor,
    cached_input: &Tensor,
    kernels: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let &[_, _, _, f] = kernels.shape() else {
        return Err(Error::Shape("conv2d kernels must be rank 4".into()));
    };
    check_conv_shapes(cached_input, kernels, &Tensor::zeros(&[f]))?;
    let k = kernels.shape()[0];
    let (cols, oh, ow) = im2col(cached_input, k);
    upstream.expect_shape(&[cached_input.shape()[0], oh, ow, f], "conv2d upstream")?;
    let kkc = k * k * cached_input.shape()[3];
    let mut dk = Tensor::zeros(kernels.shape());
    let mut db = Tensor::zeros(&[f]);
    let dx = conv_backward_from_cols(upstream, &cols, kkc, kernels, cached_input.shape(), &mut dk, &mut db);
    Ok((dx, dk, db))
}

fn conv_backward_from_cols(
    upstream: &Tensor,
    cols: &[f64],
    kkc: usize,
    kernels: &Tensor,
    input_shape: &[usize],
    dk: &mut Tensor,
    db: &mut Tensor,
) -> Tensor {
    let f = kernels.shape()[3];
    let rows = upstream.len() / f;
    let g = upstream.data();
    gemm(kkc, rows, f, cols, true, g, false, 1.0, dk.data_mut());
    let dbd = db.data_mut();
    for r in g.chunks_exact(f) {
        for (d, v) in dbd.iter_mut().zip(r) {
            *d += v;
        }
    }
    let mut dcols = vec![0.0; rows * kkc];
    gemm(rows, f, kkc, g, false, kernels.data(), true, 0.0, &mut dcols);
    col2im(&dcols, input_shape, kernels.shape()[0])
}

/// Single-image convolution: `[h, w, c]` with `[k, k, c, f]` gives `[h-k+1, w-k+1, f]`.
pub fn conv2d_forward(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    input.expect_rank(3, "conv2d input")?;
    conv2d_forward_batch(&input.clone().batched(), kernels, bias)?.unbatched()
}

pub fn conv2d_backward(
    upstream: &Tensor,
    cached_input: &Tensor,
    kernels: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    upstream.expect_rank(3, "conv2d upstream")?;
    cached_input.expect_rank(3, "conv2d input")?;
    let (dx, dk, db) = conv2d_backward_batch(
        &upstream.clone().batched(),
        &cached_input.clone().batched(),
        kernels,
    )?;
    Ok((dx.unbatched()?, dk, db))
}

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub kernels: Tensor,
    pub bias: Tensor,
    pub kernel_grad: Tensor,
    pub bias_grad: Tensor,
    cache: Option<(Vec<f64>, Vec<usize>)>,
}

impl Conv2d {
    pub fn new(kernels: Tensor, bias: Tensor) -> Self {
        Self {
            kernel_grad: Tensor::zeros(kernels.shape()),
            bias_grad: Tensor::zeros(bias.shape()),
            kernels,
            bias,
            cache: None,
        }
    }

    pub fn init(channels: usize, filters: usize, k: usize, rng: &mut ChaCha8Rng) -> Self {
        let kernels = glorot(&[k, k, channels, filters], k * k * channels, k * k * filters, rng);
        Self::new(kernels, Tensor::zeros(&[filters]))
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let (k, f) = check_conv_shapes(x, &self.kernels, &self.bias)?;
        let (cols, oh, ow) = im2col(x, k);
        let out = conv_from_cols(&cols, x.shape()[0], oh, ow, k * k * x.shape()[3], &self.kernels, &self.bias, f);
        self.cache = Some((cols, x.shape().to_vec()));
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (cols, input_shape) = self.cache.as_ref().ok_or_else(|| missing_cache("conv2d"))?;
        let k = self.kernels.shape()[0];
        let f = self.kernels.shape()[3];
        let (oh, ow) = (input_shape[1] - k + 1, input_shape[2] - k + 1);
        grad.expect_shape(&[input_shape[0], oh, ow, f], "conv2d upstream")?;
        Ok(conv_backward_from_cols(
            grad,
            cols,
            k * k * input_shape[3],
            &self.kernels,
            input_shape,
            &mut self.kernel_grad,
            &mut self.bias_grad,
        ))
    }
}

// ---------------------------------------------------------------------------
// pooling

/// 2x2 max pooling with stride 2 over `[n, h, w, c]`. Odd trailing rows and
/// columns are dropped. Ties go to the first position in scan order.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2x2 {
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

/// Returns the pooled tensor and, per output element, the flat input index of its maximum.
pub fn maxpool2x2(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    input.expect_rank(4, "maxpool input")?;
    let &[n, h, w, c] = input.shape() else { unreachable!() };
    if h < 2 || w < 2 {
        return Err(Error::Shape(format!("maxpool needs at least 2x2, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let xd = input.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut argmax = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best_idx = ((b * h + 2 * oy) * w + 2 * ox) * c + ch;
                    let mut best = xd[best_idx];
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = ((b * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                        if xd[idx] > best {
                            best = xd[idx];
                            best_idx = idx;
                        }
                    }
                    out.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    Ok((Tensor::new(vec![n, oh, ow, c], out)?, argmax))
}

/// Routes each upstream value to the input position that won its window.
pub fn maxpool2x2_backward(upstream: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor> {
    if upstream.len() != argmax.len() {
        return Err(Error::Shape(format!(
            "maxpool upstream has {} values for {} windows",
            upstream.len(),
            argmax.len()
        )));
    }
    let mut dx = Tensor::zeros(input_shape);
    let dxd = dx.data_mut();
    for (&idx, &g) in argmax.iter().zip(upstream.data()) {
        dxd[idx] += g;
    }
    Ok(dx)
}

impl MaxPool2x2 {
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let (out, argmax) = maxpool2x2(x)?;
        self.cache = Some((argmax, x.shape().to_vec()));
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (argmax, shape) = self.cache.as_ref().ok_or_else(|| missing_cache("maxpool"))?;
        maxpool2x2_backward(grad, argmax, shape)
    }
}

// ---------------------------------------------------------------------------
// dense

/// Affine map `[n, d] -> [n, u]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weights: Tensor,
    pub bias: Tensor,
    pub weight_grad: Tensor,
    pub bias_grad: Tensor,
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(weights: Tensor, bias: Tensor) -> Self {
        Self {
            weight_grad: Tensor::zeros(weights.shape()),
            bias_grad: Tensor::zeros(bias.shape()),
            weights,
            bias,
            cache: None,
        }
    }

    pub fn init(inputs: usize, units: usize, rng: &mut ChaCha8Rng) -> Self {
        Self::new(glorot(&[inputs, units], inputs, units, rng), Tensor::zeros(&[units]))
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn units(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let out = dense_forward(x, &self.weights, &self.bias)?;
        self.cache = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self.cache.as_ref().ok_or_else(|| missing_cache("dense"))?;
        let (n, d, u) = (x.shape()[0], self.inputs(), self.units());
        grad.expect_shape(&[n, u], "dense upstream")?;
        gemm(d, n, u, x.data(), true, grad.data(), false, 1.0, self.weight_grad.data_mut());
        let bg = self.bias_grad.data_mut();
        for row in grad.data().chunks_exact(u) {
            for (b, g) in bg.iter_mut().zip(row) {
                *b += g;
            }
        }
        let mut dx = vec![0.0; n * d];
        gemm(n, u, d, grad.data(), false, self.weights.data(), true, 0.0, &mut dx);
        Tensor::new(vec![n, d], dx)
    }
}

/// `x W + b` for a batch `[n, d]` and weights `[d, u]`.
pub fn dense_forward(x: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    x.expect_rank(2, "dense input")?;
    weights.expect_rank(2, "dense weights")?;
    let (n, d) = (x.shape()[0], x.shape()[1]);
    let u = weights.shape()[1];
    weights.expect_shape(&[d, u], "dense weights")?;
    bias.expect_shape(&[u], "dense bias")?;
    let mut out = Vec::with_capacity(n * u);
    for _ in 0..n {
        out.extend_from_slice(bias.data());
    }
    gemm(n, d, u, x.data(), false, weights.data(), false, 1.0, &mut out);
    Tensor::new(vec![n, u], out)
}

/// Dense layer applied independently at every step of `[n, t, d]`.
#[derive(Debug, Clone)]
pub struct TimeDistributedDense {
    pub inner: Dense,
}

impl TimeDistributedDense {
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        x.expect_rank(3, "time-distributed input")?;
        let &[n, t, d] = x.shape() else { unreachable!() };
        let out = self.inner.forward(&x.clone().reshape(&[n * t, d])?)?;
        out.reshape(&[n, t, self.inner.units()])
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        grad.expect_rank(3, "time-distributed upstream")?;
        let &[n, t, u] = grad.shape() else { unreachable!() };
        let dx = self.inner.backward(&grad.clone().reshape(&[n * t, u])?)?;
        dx.reshape(&[n, t, self.inner.inputs()])
    }
}

// ---------------------------------------------------------------------------
// activations

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

pub fn relu_backward(grad: &Tensor, input: &Tensor) -> Tensor {
    let mut out = grad.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(input.data()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    out
}

#[inline]
pub(crate) fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(sigmoid_scalar)
}

pub fn sigmoid_backward(grad: &Tensor, output: &Tensor) -> Tensor {
    let mut out = grad.clone();
    for (g, &y) in out.data_mut().iter_mut().zip(output.data()) {
        *g *= y * (1.0 - y);
    }
    out
}

/// Softmax over one row, shifted by the row maximum.
pub fn softmax_slice(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax along the last axis.
pub fn softmax(x: &Tensor) -> Tensor {
    let width = *x.shape().last().expect("non-empty shape");
    let data = x.data().chunks_exact(width).flat_map(softmax_slice).collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

pub fn softmax_backward(grad: &Tensor, output: &Tensor) -> Tensor {
    let width = *output.shape().last().expect("non-empty shape");
    let mut out = Vec::with_capacity(grad.len());
    for (g, y) in grad.data().chunks_exact(width).zip(output.data().chunks_exact(width)) {
        let dot: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
        out.extend(g.iter().zip(y).map(|(gi, yi)| yi * (gi - dot)));
    }
    Tensor::new(grad.shape().to_vec(), out).expect("same shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    Relu,
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone)]
pub struct Activation {
    pub kind: ActivationKind,
    cache: Option<Tensor>,
}

impl Activation {
    pub fn new(kind: ActivationKind) -> Self {
        Self { kind, cache: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        let (out, keep) = match self.kind {
            ActivationKind::Relu => (relu(x), x.clone()),
            ActivationKind::Sigmoid => {
                let y = sigmoid(x);
                (y.clone(), y)
            }
            ActivationKind::Softmax => {
                let y = softmax(x);
                (y.clone(), y)
            }
        };
        self.cache = Some(keep);
        out
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cached = self.cache.as_ref().ok_or_else(|| missing_cache("activation"))?;
        if cached.shape() != grad.shape() {
            return Err(Error::Shape(format!(
                "activation upstream {:?} vs forward {:?}",
                grad.shape(),
                cached.shape()
            )));
        }
        Ok(match self.kind {
            ActivationKind::Relu => relu_backward(grad, cached),
            ActivationKind::Sigmoid => sigmoid_backward(grad, cached),
            ActivationKind::Softmax => softmax_backward(grad, cached),
        })
    }
}

// ---------------------------------------------------------------------------
// dropout, flatten, concat

/// Inverted dropout; `rng` is `Some` only while training.
pub fn dropout(input: &Tensor, p: f64, rng: Option<&mut ChaCha8Rng>) -> (Tensor, Option<Vec<f64>>) {
    match rng {
        Some(rng) if p > 0.0 => {
            let scale = 1.0 / (1.0 - p);
            let mask: Vec<f64> = (0..input.len())
                .map(|_| if rng.gen::<f64>() < p { 0.0 } else { scale })
                .collect();
            let mut out = input.clone();
            for (v, m) in out.data_mut().iter_mut().zip(&mask) {
                *v *= m;
            }
            (out, Some(mask))
        }
        _ => (input.clone(), None),
    }
}

#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    mask: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!("dropout probability {p} outside [0, 1)")));
        }
        Ok(Self { p, mask: None })
    }

    pub fn forward(&mut self, x: &Tensor, rng: Option<&mut ChaCha8Rng>) -> Tensor {
        let (out, mask) = dropout(x, self.p, rng);
        self.mask = mask;
        out
    }

    pub fn backward(&mut self, grad: &Tensor) -> Tensor {
        match &self.mask {
            Some(mask) => {
                let mut out = grad.clone();
                for (g, m) in out.data_mut().iter_mut().zip(mask) {
                    *g *= m;
                }
                out
            }
            None => grad.clone(),
        }
    }
}

/// Collapses everything after the batch axis.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let n = x.shape()[0];
        self.input_shape = Some(x.shape().to_vec());
        x.clone().reshape(&[n, x.len() / n])
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let shape = self.input_shape.as_ref().ok_or_else(|| missing_cache("flatten"))?;
        grad.clone().reshape(shape)
    }
}

/// Joins vectors end to end.
pub fn concat(parts: &[&Tensor]) -> Result<Tensor> {
    if parts.is_empty() {
        return Err(Error::Shape("nothing to concatenate".into()));
    }
    let mut data = Vec::new();
    for p in parts {
        p.expect_rank(1, "concat input")?;
        data.extend_from_slice(p.data());
    }
    Ok(Tensor::vector(data))
}

/// Splits a gradient of a concatenation back into pieces of the given widths.
pub fn concat_backward(grad: &Tensor, widths: &[usize]) -> Result<Vec<Tensor>> {
    if widths.iter().sum::<usize>() != grad.len() || grad.rank() != 1 {
        return Err(Error::Shape(format!(
            "cannot split {:?} into {widths:?}",
            grad.shape()
        )));
    }
    let mut start = 0;
    Ok(widths
        .iter()
        .map(|&w| {
            let part = Tensor::vector(grad.data()[start..start + w].to_vec());
            start += w;
            part
        })
        .collect())
}

/// Batched concatenation along the feature axis: `[n, d_i]` pieces into `[n, sum d_i]`.
pub fn concat_rows(parts: &[Tensor]) -> Result<Tensor> {
    let n = parts
        .first()
        .ok_or_else(|| Error::Shape("nothing to concatenate".into()))?
        .shape()[0];
    let mut width = 0;
    for p in parts {
        p.expect_rank(2, "concat input")?;
        if p.shape()[0] != n {
            return Err(Error::Shape("concat inputs disagree on batch size".into()));
        }
        width += p.shape()[1];
    }
    let mut data = Vec::with_capacity(n * width);
    for row in 0..n {
        for p in parts {
            let w = p.shape()[1];
            data.extend_from_slice(&p.data()[row * w..(row + 1) * w]);
        }
    }
    Tensor::new(vec![n, width], data)
}

pub fn concat_rows_backward(grad: &Tensor, widths: &[usize]) -> Result<Vec<Tensor>> {
    grad.expect_rank(2, "concat upstream")?;
    let n = grad.shape()[0];
    let total: usize = widths.iter().sum();
    if grad.shape()[1] != total {
        return Err(Error::Shape(format!(
            "cannot split {:?} into {widths:?}",
            grad.shape()
        )));
    }
    let mut out: Vec<Vec<f64>> = widths.iter().map(|w| Vec::with_capacity(n * w)).collect();
    for row in grad.data().chunks_exact(total) {
        let mut start = 0;
        for (buf, &w) in out.iter_mut().zip(widths) {
            buf.extend_from_slice(&row[start..start + w]);
            start += w;
        }
    }
    out.into_iter()
        .zip(widths)
        .map(|(d, &w)| Tensor::new(vec![n, w], d))
        .collect()
}
