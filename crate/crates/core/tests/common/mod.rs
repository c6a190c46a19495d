//! Finite-difference oracle shared by the gradient tests and the acceptance suite.

#![allow(dead_code)]

use boldfield::nn::layers::{
    concat, concat_backward, dropout, Activation, ActivationKind, Conv2d, Dense, Dropout, MaxPool2x2,
    TimeDistributedDense,
};
use boldfield::nn::loss::{sigmoid_binary_cross_entropy, softmax_cross_entropy};
use boldfield::nn::lstm::{BiLstm, Lstm};
use boldfield::nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Norm-wise relative error `||a - n|| / max(||a||, ||n||)`, or the absolute
/// difference when both gradients vanish.
pub fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = analytic
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
    if scale < 1e-10 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `f` with respect to every element of every tensor in `inputs`.
pub fn numeric_grads(inputs: &[Tensor], f: &dyn Fn(&[Tensor]) -> f64) -> Vec<Vec<f64>> {
    let mut work = inputs.to_vec();
    let mut out = Vec::with_capacity(inputs.len());
    for t in 0..inputs.len() {
        let mut g = Vec::with_capacity(inputs[t].len());
        for i in 0..inputs[t].len() {
            let orig = work[t].data()[i];
            work[t].data_mut()[i] = orig + FD_STEP;
            let up = f(&work);
            work[t].data_mut()[i] = orig - FD_STEP;
            let down = f(&work);
            work[t].data_mut()[i] = orig;
            g.push((up - down) / (2.0 * FD_STEP));
        }
        out.push(g);
    }
    out
}

/// Worst relative error across the tensors of one instance.
pub fn compare(inputs: &[Tensor], analytic: &[Tensor], f: &dyn Fn(&[Tensor]) -> f64) -> f64 {
    assert_eq!(inputs.len(), analytic.len());
    numeric_grads(inputs, f)
        .iter()
        .zip(analytic)
        .map(|(n, a)| rel_error(a.data(), n))
        .fold(0.0, f64::max)
}

pub fn dot(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-scale..scale))
}

/// Values bounded away from zero so no ReLU kink lies within one step.
pub fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    Tensor::from_fn(shape, |_| {
        let v: f64 = rng.gen_range(0.05..1.5);
        if rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    })
}

pub fn conv_instance(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.gen_range(1..3);
    let k = rng.gen_range(1..4);
    let h = rng.gen_range(k..k + 4);
    let w = rng.gen_range(k..k + 4);
    let c = rng.gen_range(1..4);
    let f = rng.gen_range(1..4);
    let inputs = vec![
        uniform(rng, &[n, h, w, c], 1.0),
        uniform(rng, &[k, k, c, f], 1.0),
        uniform(rng, &[f], 1.0),
    ];
    let r = uniform(rng, &[n, h - k + 1, w - k + 1, f], 1.0);
    let mut layer = Conv2d::new(inputs[1].clone(), inputs[2].clone());
    layer.forward(&inputs[0]).unwrap();
    let dx = layer.backward(&r).unwrap();
    let analytic = vec![dx, layer.kernel_grad.clone(), layer.bias_grad.clone()];
    compare(&inputs, &analytic, &|ts| {
        dot(&Conv2d::new(ts[1].clone(), ts[2].clone()).forward(&ts[0]).unwrap(), &r)
    })
}

pub fn dense_instance(rng: &mut ChaCha8Rng) -> f64 {
    let (n, d, u) = (rng.gen_range(1..4), rng.gen_range(1..6), rng.gen_range(1..6));
    let inputs = vec![uniform(rng, &[n, d], 1.0), uniform(rng, &[d, u], 1.0), uniform(rng, &[u], 1.0)];
    let r = uniform(rng, &[n, u], 1.0);
    let mut layer = Dense::new(inputs[1].clone(), inputs[2].clone());
    layer.forward(&inputs[0]).unwrap();
    let dx = layer.backward(&r).unwrap();
    let analytic = vec![dx, layer.weight_grad.clone(), layer.bias_grad.clone()];
    compare(&inputs, &analytic, &|ts| {
        dot(&Dense::new(ts[1].clone(), ts[2].clone()).forward(&ts[0]).unwrap(), &r)
    })
}

pub fn time_dense_instance(rng: &mut ChaCha8Rng) -> f64 {
    let (n, t, d, u) = (rng.gen_range(1..3), rng.gen_range(1..5), rng.gen_range(1..4), rng.gen_range(1..4));
    let inputs = vec![uniform(rng, &[n, t, d], 1.0), uniform(rng, &[d, u], 1.0), uniform(rng, &[u], 1.0)];
    let r = uniform(rng, &[n, t, u], 1.0);
    let build = |ts: &[Tensor]| TimeDistributedDense {
        inner: Dense::new(ts[1].clone(), ts[2].clone()),
    };
    let mut layer = build(&inputs);
    layer.forward(&inputs[0]).unwrap();
    let dx = layer.backward(&r).unwrap();
    let analytic = vec![dx, layer.inner.weight_grad.clone(), layer.inner.bias_grad.clone()];
    compare(&inputs, &analytic, &|ts| dot(&build(ts).forward(&ts[0]).unwrap(), &r))
}

pub fn activation_instance(rng: &mut ChaCha8Rng, kind: ActivationKind) -> f64 {
    let (n, d) = (rng.gen_range(1..4), rng.gen_range(1..7));
    let x = match kind {
        ActivationKind::Relu => away_from_zero(rng, &[n, d]),
        _ => uniform(rng, &[n, d], 3.0),
    };
    let r = uniform(rng, &[n, d], 1.0);
    let mut layer = Activation::new(kind);
    layer.forward(&x);
    let dx = layer.backward(&r).unwrap();
    compare(&[x], &[dx], &|ts| dot(&Activation::new(kind).forward(&ts[0]), &r))
}

pub fn maxpool_instance(rng: &mut ChaCha8Rng) -> f64 {
    let (n, h, w, c) = (rng.gen_range(1..3), rng.gen_range(2..6), rng.gen_range(2..6), rng.gen_range(1..3));
    // a shuffled ramp keeps every window's maximum well separated
    let len = n * h * w * c;
    let mut ramp: Vec<f64> = (0..len).map(|i| i as f64 * 0.1).collect();
    for i in (1..len).rev() {
        ramp.swap(i, rng.gen_range(0..=i));
    }
    let x = Tensor::new(vec![n, h, w, c], ramp).unwrap();
    let r = uniform(rng, &[n, h / 2, w / 2, c], 1.0);
    let mut layer = MaxPool2x2::default();
    layer.forward(&x).unwrap();
    let dx = layer.backward(&r).unwrap();
    compare(&[x], &[dx], &|ts| dot(&MaxPool2x2::default().forward(&ts[0]).unwrap(), &r))
}

pub fn dropout_instance(rng: &mut ChaCha8Rng) -> f64 {
    let shape = [rng.gen_range(1..3), rng.gen_range(1..20)];
    let x = uniform(rng, &shape, 1.0);
    let r = uniform(rng, x.shape(), 1.0);
    let seed: u64 = rng.gen();
    let mut layer = Dropout::new(0.5).unwrap();
    layer.forward(&x, Some(&mut ChaCha8Rng::seed_from_u64(seed)));
    let dx = layer.backward(&r);
    compare(&[x], &[dx], &|ts| {
        dot(&dropout(&ts[0], 0.5, Some(&mut ChaCha8Rng::seed_from_u64(seed))).0, &r)
    })
}

fn lstm_from(ts: &[Tensor], return_sequences: bool) -> Lstm {
    Lstm::new(ts[0].clone(), ts[1].clone(), ts[2].clone(), return_sequences).unwrap()
}

pub fn lstm_instance(rng: &mut ChaCha8Rng) -> f64 {
    let (n, t, d, u) = (rng.gen_range(1..3), rng.gen_range(1..6), rng.gen_range(1..4), rng.gen_range(1..4));
    let seq = rng.gen_bool(0.5);
    let inputs = vec![
        uniform(rng, &[n, t, d], 1.0),
        uniform(rng, &[d, 4 * u], 0.8),
        uniform(rng, &[u, 4 * u], 0.8),
        uniform(rng, &[4 * u], 0.5),
    ];
    let r_shape = if seq { vec![n, t, u] } else { vec![n, u] };
    let r = uniform(rng, &r_shape, 1.0);
    let mut layer = lstm_from(&inputs[1..], seq);
    layer.forward(&inputs[0]).unwrap();
    let dx = layer.backward(&r).unwrap();
    let analytic = vec![
        dx,
        layer.w_input_grad.clone(),
        layer.w_hidden_grad.clone(),
        layer.bias_grad.clone(),
    ];
    compare(&inputs, &analytic, &|ts| {
        dot(&lstm_from(&ts[1..], seq).forward(&ts[0]).unwrap(), &r)
    })
}

pub fn bilstm_instance(rng: &mut ChaCha8Rng) -> f64 {
    let (n, t, d, u) = (rng.gen_range(1..3), rng.gen_range(1..6), rng.gen_range(1..3), rng.gen_range(1..3));
    let seq = rng.gen_bool(0.5);
    let mut inputs = vec![uniform(rng, &[n, t, d], 1.0)];
    for _ in 0..2 {
        inputs.push(uniform(rng, &[d, 4 * u], 0.8));
        inputs.push(uniform(rng, &[u, 4 * u], 0.8));
        inputs.push(uniform(rng, &[4 * u], 0.5));
    }
    let build = |ts: &[Tensor]| BiLstm {
        forward_cell: lstm_from(&ts[1..4], seq),
        backward_cell: lstm_from(&ts[4..7], seq),
    };
    let r_shape = if seq { vec![n, t, 2 * u] } else { vec![n, 2 * u] };
    let r = uniform(rng, &r_shape, 1.0);
    let mut layer = build(&inputs);
    layer.forward(&inputs[0]).unwrap();
    let dx = layer.backward(&r).unwrap();
    let (f, b) = (&layer.forward_cell, &layer.backward_cell);
    let analytic = vec![
        dx,
        f.w_input_grad.clone(),
        f.w_hidden_grad.clone(),
        f.bias_grad.clone(),
        b.w_input_grad.clone(),
        b.w_hidden_grad.clone(),
        b.bias_grad.clone(),
    ];
    compare(&inputs, &analytic, &|ts| dot(&build(ts).forward(&ts[0]).unwrap(), &r))
}

pub fn concat_instance(rng: &mut ChaCha8Rng) -> f64 {
    let parts: Vec<Tensor> = (0..rng.gen_range(1..4))
        .map(|_| {
            let len = rng.gen_range(1..6);
            uniform(rng, &[len], 1.0)
        })
        .collect();
    let widths: Vec<usize> = parts.iter().map(Tensor::len).collect();
    let r = uniform(rng, &[widths.iter().sum()], 1.0);
    let analytic = concat_backward(&r, &widths).unwrap();
    compare(&parts, &analytic, &|ts| {
        dot(&concat(&ts.iter().collect::<Vec<_>>()).unwrap(), &r)
    })
}

pub fn softmax_ce_instance(rng: &mut ChaCha8Rng) -> f64 {
    let (n, c) = (rng.gen_range(1..4), rng.gen_range(2..6));
    let logits = uniform(rng, &[n, c], 3.0);
    let targets: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
    let (_, g) = softmax_cross_entropy(&logits, &targets).unwrap();
    compare(&[logits], &[g], &|ts| {
        let (l, _) = softmax_cross_entropy(&ts[0], &targets).unwrap();
        l.iter().sum::<f64>() / l.len() as f64
    })
}

pub fn sigmoid_bce_instance(rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.gen_range(1..5);
    let logits = uniform(rng, &[n, 1], 3.0);
    let targets: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let (_, g) = sigmoid_binary_cross_entropy(&logits, &targets).unwrap();
    compare(&[logits], &[g], &|ts| {
        let (l, _) = sigmoid_binary_cross_entropy(&ts[0], &targets).unwrap();
        l.iter().sum::<f64>() / l.len() as f64
    })
}

pub type Instance = fn(&mut ChaCha8Rng) -> f64;

/// Every differentiable layer kind with its instance generator.
pub fn layer_checks() -> Vec<(&'static str, Instance)> {
    vec![
        ("conv2d", conv_instance),
        ("dense", dense_instance),
        ("time_distributed_dense", time_dense_instance),
        ("relu", |r| activation_instance(r, ActivationKind::Relu)),
        ("sigmoid", |r| activation_instance(r, ActivationKind::Sigmoid)),
        ("softmax", |r| activation_instance(r, ActivationKind::Softmax)),
        ("maxpool2x2", maxpool_instance),
        ("dropout", dropout_instance),
        ("lstm", lstm_instance),
        ("bilstm", bilstm_instance),
        ("concat", concat_instance),
        ("softmax_cross_entropy", softmax_ce_instance),
        ("sigmoid_binary_cross_entropy", sigmoid_bce_instance),
    ]
}

/// Worst relative error of each layer over `trials` random instances.
pub fn gradient_suite(trials: usize, seed: u64) -> Vec<(&'static str, f64)> {
    layer_checks()
        .into_iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + i as u64);
            let worst = (0..trials).map(|_| check(&mut rng)).fold(0.0, f64::max);
            (name, worst)
        })
        .collect()
}
