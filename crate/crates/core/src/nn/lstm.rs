//! LSTM and bidirectional LSTM over `[n, t, d]` batches, with backpropagation through time.
//!
//! Gate layout in the packed weight matrices is `[input, forget, candidate, output]`,
//! each block `units` wide. Initial hidden and cell states are zero.

use rand_chacha::ChaCha8Rng;

use super::layers::{glorot, sigmoid_scalar};
use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// post-activation gates, `[n, 4u]`
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Lstm {
    pub units: usize,
    pub return_sequences: bool,
    /// `[d, 4u]`
    pub w_input: Tensor,
    /// `[u, 4u]`
    pub w_hidden: Tensor,
    /// `[4u]`
    pub bias: Tensor,
    pub w_input_grad: Tensor,
    pub w_hidden_grad: Tensor,
    pub bias_grad: Tensor,
    cache: Option<(Vec<StepCache>, [usize; 3])>,
}

impl Lstm {
    pub fn new(w_input: Tensor, w_hidden: Tensor, bias: Tensor, return_sequences: bool) -> Result<Self> {
        w_input.expect_rank(2, "lstm input weights")?;
        let units = w_hidden.shape()[0];
        let d = w_input.shape()[0];
        w_input.expect_shape(&[d, 4 * units], "lstm input weights")?;
        w_hidden.expect_shape(&[units, 4 * units], "lstm hidden weights")?;
        bias.expect_shape(&[4 * units], "lstm bias")?;
        Ok(Self {
            units,
            return_sequences,
            w_input_grad: Tensor::zeros(w_input.shape()),
            w_hidden_grad: Tensor::zeros(w_hidden.shape()),
            bias_grad: Tensor::zeros(bias.shape()),
            w_input,
            w_hidden,
            bias,
            cache: None,
        })
    }

    /// Glorot weights, zero bias except a forget-gate bias of one.
    pub fn init(inputs: usize, units: usize, return_sequences: bool, rng: &mut ChaCha8Rng) -> Self {
        let w_input = glorot(&[inputs, 4 * units], inputs, 4 * units, rng);
        let w_hidden = glorot(&[units, 4 * units], units, 4 * units, rng);
        let mut bias = Tensor::zeros(&[4 * units]);
        bias.data_mut()[units..2 * units].iter_mut().for_each(|b| *b = 1.0);
        Self::new(w_input, w_hidden, bias, return_sequences).expect("consistent shapes")
    }

    pub fn inputs(&self) -> usize {
        self.w_input.shape()[0]
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        x.expect_rank(3, "lstm input")?;
        let &[n, t, d] = x.shape() else { unreachable!() };
        if d != self.inputs() {
            return Err(Error::Shape(format!("lstm expects {} features, got {d}", self.inputs())));
        }
        let u = self.units;
        let xd = x.data();
        let mut h = vec![0.0; n * u];
        let mut c = vec![0.0; n * u];
        let mut steps = Vec::with_capacity(t);
        let mut outputs = Vec::with_capacity(if self.return_sequences { n * t * u } else { n * u });
        let mut seq_out = vec![0.0; n * t * u];
        for step in 0..t {
            let mut x_t = Vec::with_capacity(n * d);
            for b in 0..n {
                x_t.extend_from_slice(&xd[(b * t + step) * d..(b * t + step + 1) * d]);
            }
            let mut z = Vec::with_capacity(n * 4 * u);
            for _ in 0..n {
                z.extend_from_slice(self.bias.data());
            }
            gemm(n, d, 4 * u, &x_t, false, self.w_input.data(), false, 1.0, &mut z);
            gemm(n, u, 4 * u, &h, false, self.w_hidden.data(), false, 1.0, &mut z);
            let mut c_new = vec![0.0; n * u];
            let mut h_new = vec![0.0; n * u];
            let mut tanh_c = vec![0.0; n * u];
            for b in 0..n {
                let zr = &mut z[b * 4 * u..(b + 1) * 4 * u];
                for j in 0..u {
                    let i_g = sigmoid_scalar(zr[j]);
                    let f_g = sigmoid_scalar(zr[u + j]);
                    let g_g = zr[2 * u + j].tanh();
                    let o_g = sigmoid_scalar(zr[3 * u + j]);
                    zr[j] = i_g;
                    zr[u + j] = f_g;
                    zr[2 * u + j] = g_g;
                    zr[3 * u + j] = o_g;
                    let k = b * u + j;
                    c_new[k] = f_g * c[k] + i_g * g_g;
                    tanh_c[k] = c_new[k].tanh();
                    h_new[k] = o_g * tanh_c[k];
                }
            }
            for b in 0..n {
                seq_out[(b * t + step) * u..(b * t + step + 1) * u]
                    .copy_from_slice(&h_new[b * u..(b + 1) * u]);
            }
            steps.push(StepCache {
                x: x_t,
                h_prev: std::mem::replace(&mut h, h_new),
                c_prev: std::mem::replace(&mut c, c_new),
                gates: z,
                tanh_c,
            });
        }
        self.cache = Some((steps, [n, t, d]));
        if self.return_sequences {
            Tensor::new(vec![n, t, u], seq_out)
        } else {
            outputs.extend_from_slice(&h);
            Tensor::new(vec![n, u], outputs)
        }
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (steps, [n, t, d]) = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Shape("lstm: backward called before forward".into()))?;
        let (n, t, d, u) = (*n, *t, *d, self.units);
        if self.return_sequences {
            grad.expect_shape(&[n, t, u], "lstm upstream")?;
        } else {
            grad.expect_shape(&[n, u], "lstm upstream")?;
        }
        let gd = grad.data();
        let mut dx = vec![0.0; n * t * d];
        let mut dh_next = vec![0.0; n * u];
        let mut dc_next = vec![0.0; n * u];
        let mut dz = vec![0.0; n * 4 * u];
        let mut dx_t = vec![0.0; n * d];
        for step in (0..t).rev() {
            let s = &steps[step];
            for b in 0..n {
                for j in 0..u {
                    let k = b * u + j;
                    let mut dh = dh_next[k];
                    if self.return_sequences {
                        dh += gd[(b * t + step) * u + j];
                    } else if step == t - 1 {
                        dh += gd[k];
                    }
                    let g = &s.gates[b * 4 * u..(b + 1) * 4 * u];
                    let (i_g, f_g, g_g, o_g) = (g[j], g[u + j], g[2 * u + j], g[3 * u + j]);
                    let tc = s.tanh_c[k];
                    let dc = dh * o_g * (1.0 - tc * tc) + dc_next[k];
                    let dzr = &mut dz[b * 4 * u..(b + 1) * 4 * u];
                    dzr[j] = dc * g_g * i_g * (1.0 - i_g);
                    dzr[u + j] = dc * s.c_prev[k] * f_g * (1.0 - f_g);
                    dzr[2 * u + j] = dc * i_g * (1.0 - g_g * g_g);
                    dzr[3 * u + j] = dh * tc * o_g * (1.0 - o_g);
                    dc_next[k] = dc * f_g;
                }
            }
            gemm(d, n, 4 * u, &s.x, true, &dz, false, 1.0, self.w_input_grad.data_mut());
            gemm(u, n, 4 * u, &s.h_prev, true, &dz, false, 1.0, self.w_hidden_grad.data_mut());
            let bg = self.bias_grad.data_mut();
            for row in dz.chunks_exact(4 * u) {
                for (bv, g) in bg.iter_mut().zip(row) {
                    *bv += g;
                }
            }
            gemm(n, 4 * u, d, &dz, false, self.w_input.data(), true, 0.0, &mut dx_t);
            gemm(n, 4 * u, u, &dz, false, self.w_hidden.data(), true, 0.0, &mut dh_next);
            for b in 0..n {
                dx[(b * t + step) * d..(b * t + step + 1) * d]
                    .copy_from_slice(&dx_t[b * d..(b + 1) * d]);
            }
        }
        Tensor::new(vec![n, t, d], dx)
    }
}

/// Reverses the time axis of `[n, t, w]`.
pub fn reverse_time(x: &Tensor) -> Tensor {
    let &[n, t, w] = x.shape() else { panic!("reverse_time expects rank 3") };
    let mut out = Vec::with_capacity(x.len());
    for b in 0..n {
        for step in (0..t).rev() {
            out.extend_from_slice(&x.data()[(b * t + step) * w..(b * t + step + 1) * w]);
        }
    }
    Tensor::new(x.shape().to_vec(), out).expect("same shape")
}

/// Joins `[.., a]` and `[.., b]` along the last axis.
fn join_last(a: &Tensor, b: &Tensor) -> Tensor {
    let wa = *a.shape().last().unwrap();
    let wb = *b.shape().last().unwrap();
    let mut out = Vec::with_capacity(a.len() + b.len());
    for (ra, rb) in a.data().chunks_exact(wa).zip(b.data().chunks_exact(wb)) {
        out.extend_from_slice(ra);
        out.extend_from_slice(rb);
    }
    let mut shape = a.shape().to_vec();
    *shape.last_mut().unwrap() = wa + wb;
    Tensor::new(shape, out).expect("joined shape")
}

fn split_last(x: &Tensor, wa: usize) -> (Tensor, Tensor) {
    let w = *x.shape().last().unwrap();
    let wb = w - wa;
    let mut a = Vec::with_capacity(x.len() / w * wa);
    let mut b = Vec::with_capacity(x.len() / w * wb);
    for row in x.data().chunks_exact(w) {
        a.extend_from_slice(&row[..wa]);
        b.extend_from_slice(&row[wa..]);
    }
    let mut sa = x.shape().to_vec();
    let mut sb = x.shape().to_vec();
    *sa.last_mut().unwrap() = wa;
    *sb.last_mut().unwrap() = wb;
    (Tensor::new(sa, a).unwrap(), Tensor::new(sb, b).unwrap())
}

/// One LSTM reading forward in time and one reading backward; outputs are
/// concatenated per timestep, forward half first.
#[derive(Debug, Clone)]
pub struct BiLstm {
    pub forward_cell: Lstm,
    pub backward_cell: Lstm,
}

impl BiLstm {
    pub fn init(inputs: usize, units_per_direction: usize, return_sequences: bool, rng: &mut ChaCha8Rng) -> Self {
        Self {
            forward_cell: Lstm::init(inputs, units_per_direction, return_sequences, rng),
            backward_cell: Lstm::init(inputs, units_per_direction, return_sequences, rng),
        }
    }

    pub fn output_width(&self) -> usize {
        self.forward_cell.units + self.backward_cell.units
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let fwd = self.forward_cell.forward(x)?;
        let bwd = self.backward_cell.forward(&reverse_time(x))?;
        let bwd = if self.backward_cell.return_sequences {
            reverse_time(&bwd)
        } else {
            bwd
        };
        Ok(join_last(&fwd, &bwd))
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (gf, gb) = split_last(grad, self.forward_cell.units);
        let gb = if self.backward_cell.return_sequences {
            reverse_time(&gb)
        } else {
            gb
        };
        let mut dx = self.forward_cell.backward(&gf)?;
        let dxb = reverse_time(&self.backward_cell.backward(&gb)?);
        for (a, b) in dx.data_mut().iter_mut().zip(dxb.data()) {
            *a += b;
        }
        Ok(dx)
    }
}

/// Single-sequence convenience wrapper: `[t, d]` to `[t, u]` or `[u]`.
pub fn lstm_layer(layer: &mut Lstm, seq: &Tensor) -> Result<Tensor> {
    seq.expect_rank(2, "lstm sequence")?;
    layer.forward(&seq.clone().batched())?.unbatched()
}

pub fn bilstm_layer(layer: &mut BiLstm, seq: &Tensor) -> Result<Tensor> {
    seq.expect_rank(2, "bilstm sequence")?;
    layer.forward(&seq.clone().batched())?.unbatched()
}
