//! LSTM and Elman cells plus dense layers, with explicit forward/backward
//! step functions used by the unrolled training graphs.
//!
//! Biases are kept explicit. The forget-gate bias defaults to 1.0 at
//! initialization (toggleable at the model level); everything else starts at
//! zero or Gaussian noise.

use crate::linalg::{add_vec, sigmoid, Matrix};

/// Weights of one LSTM layer: four input maps (h×d), four recurrent maps
/// (h×h) and four bias vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    pub w_fx: Matrix,
    pub w_ix: Matrix,
    pub w_ox: Matrix,
    pub w_cx: Matrix,
    pub w_fh: Matrix,
    pub w_ih: Matrix,
    pub w_oh: Matrix,
    pub w_ch: Matrix,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_c: Vec<f64>,
}

impl LstmWeights {
    pub fn zeros(d: usize, h: usize) -> Self {
        LstmWeights {
            w_fx: Matrix::zeros(h, d),
            w_ix: Matrix::zeros(h, d),
            w_ox: Matrix::zeros(h, d),
            w_cx: Matrix::zeros(h, d),
            w_fh: Matrix::zeros(h, h),
            w_ih: Matrix::zeros(h, h),
            w_oh: Matrix::zeros(h, h),
            w_ch: Matrix::zeros(h, h),
            b_f: vec![0.0; h],
            b_i: vec![0.0; h],
            b_o: vec![0.0; h],
            b_c: vec![0.0; h],
        }
    }

    pub fn input_width(&self) -> usize {
        self.w_fx.cols
    }

    pub fn hidden_width(&self) -> usize {
        self.w_fx.rows
    }
}

/// Hidden and cell state of one LSTM layer; both start as zero vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub s: Vec<f64>,
}

impl LstmState {
    pub fn zeros(h: usize) -> Self {
        LstmState {
            h: vec![0.0; h],
            s: vec![0.0; h],
        }
    }
}

/// Intermediate values of one LSTM step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub s_prev: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub s: Vec<f64>,
    pub tanh_s: Vec<f64>,
}

/// One LSTM step: gates via sigmoid of affine maps, candidate via tanh,
/// s_t = f⊙s_{t−1} + i⊙c̃, h_t = o⊙tanh(s_t).
pub fn lstm_step(w: &LstmWeights, x: &[f64], state: &LstmState) -> (LstmState, LstmStepCache) {
    let h = w.hidden_width();
    let mut a_f = w.w_fx.matvec(x);
    add_vec(&mut a_f, &w.w_fh.matvec(&state.h));
    add_vec(&mut a_f, &w.b_f);
    let mut a_i = w.w_ix.matvec(x);
    add_vec(&mut a_i, &w.w_ih.matvec(&state.h));
    add_vec(&mut a_i, &w.b_i);
    let mut a_o = w.w_ox.matvec(x);
    add_vec(&mut a_o, &w.w_oh.matvec(&state.h));
    add_vec(&mut a_o, &w.b_o);
    let mut a_c = w.w_cx.matvec(x);
    add_vec(&mut a_c, &w.w_ch.matvec(&state.h));
    add_vec(&mut a_c, &w.b_c);

    let f: Vec<f64> = a_f.iter().map(|&v| sigmoid(v)).collect();
    let i: Vec<f64> = a_i.iter().map(|&v| sigmoid(v)).collect();
    let o: Vec<f64> = a_o.iter().map(|&v| sigmoid(v)).collect();
    let c: Vec<f64> = a_c.iter().map(|&v| v.tanh()).collect();

    let mut s = vec![0.0; h];
    for j in 0..h {
        s[j] = f[j] * state.s[j] + i[j] * c[j];
    }
    let tanh_s: Vec<f64> = s.iter().map(|v| v.tanh()).collect();
    let mut h_out = vec![0.0; h];
    for j in 0..h {
        h_out[j] = o[j] * tanh_s[j];
    }

    let cache = LstmStepCache {
        x: x.to_vec(),
        h_prev: state.h.clone(),
        s_prev: state.s.clone(),
        f,
        i,
        o,
        c,
        s: s.clone(),
        tanh_s,
    };
    (LstmState { h: h_out, s }, cache)
}

/// Reverse-mode step: given gradients on h_t and s_t, accumulate weight
/// gradients into `grad` and return (dx, dh_prev, ds_prev).
pub fn lstm_step_backward(
    w: &LstmWeights,
    grad: &mut LstmWeights,
    cache: &LstmStepCache,
    dh: &[f64],
    ds_in: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = w.hidden_width();
    let mut ds = vec![0.0; h];
    let mut d_o = vec![0.0; h];
    for j in 0..h {
        d_o[j] = dh[j] * cache.tanh_s[j];
        ds[j] = ds_in[j] + dh[j] * cache.o[j] * (1.0 - cache.tanh_s[j] * cache.tanh_s[j]);
    }
    let mut d_f = vec![0.0; h];
    let mut d_i = vec![0.0; h];
    let mut d_c = vec![0.0; h];
    let mut ds_prev = vec![0.0; h];
    for j in 0..h {
        d_f[j] = ds[j] * cache.s_prev[j];
        d_i[j] = ds[j] * cache.c[j];
        d_c[j] = ds[j] * cache.i[j];
        ds_prev[j] = ds[j] * cache.f[j];
    }
    // pre-activation gradients
    let mut da_f = vec![0.0; h];
    let mut da_i = vec![0.0; h];
    let mut da_o = vec![0.0; h];
    let mut da_c = vec![0.0; h];
    for j in 0..h {
        da_f[j] = d_f[j] * cache.f[j] * (1.0 - cache.f[j]);
        da_i[j] = d_i[j] * cache.i[j] * (1.0 - cache.i[j]);
        da_o[j] = d_o[j] * cache.o[j] * (1.0 - cache.o[j]);
        da_c[j] = d_c[j] * (1.0 - cache.c[j] * cache.c[j]);
    }

    grad.w_fx.add_outer(&da_f, &cache.x);
    grad.w_ix.add_outer(&da_i, &cache.x);
    grad.w_ox.add_outer(&da_o, &cache.x);
    grad.w_cx.add_outer(&da_c, &cache.x);
    grad.w_fh.add_outer(&da_f, &cache.h_prev);
    grad.w_ih.add_outer(&da_i, &cache.h_prev);
    grad.w_oh.add_outer(&da_o, &cache.h_prev);
    grad.w_ch.add_outer(&da_c, &cache.h_prev);
    add_vec(&mut grad.b_f, &da_f);
    add_vec(&mut grad.b_i, &da_i);
    add_vec(&mut grad.b_o, &da_o);
    add_vec(&mut grad.b_c, &da_c);

    let mut dx = w.w_fx.matvec_t(&da_f);
    add_vec(&mut dx, &w.w_ix.matvec_t(&da_i));
    add_vec(&mut dx, &w.w_ox.matvec_t(&da_o));
    add_vec(&mut dx, &w.w_cx.matvec_t(&da_c));

    let mut dh_prev = w.w_fh.matvec_t(&da_f);
    add_vec(&mut dh_prev, &w.w_ih.matvec_t(&da_i));
    add_vec(&mut dh_prev, &w.w_oh.matvec_t(&da_o));
    add_vec(&mut dh_prev, &w.w_ch.matvec_t(&da_c));

    (dx, dh_prev, ds_prev)
}

/// Weights of one Elman RNN layer: h_t = tanh(W_x x + W_h h_prev + b).
#[derive(Debug, Clone, PartialEq)]
pub struct RnnWeights {
    pub w_x: Matrix,
    pub w_h: Matrix,
    pub b: Vec<f64>,
}

impl RnnWeights {
    pub fn zeros(d: usize, h: usize) -> Self {
        RnnWeights {
            w_x: Matrix::zeros(h, d),
            w_h: Matrix::zeros(h, h),
            b: vec![0.0; h],
        }
    }

    pub fn input_width(&self) -> usize {
        self.w_x.cols
    }

    pub fn hidden_width(&self) -> usize {
        self.w_x.rows
    }
}

#[derive(Debug, Clone)]
pub struct RnnStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn rnn_step(w: &RnnWeights, x: &[f64], h_prev: &[f64]) -> (Vec<f64>, RnnStepCache) {
    let mut a = w.w_x.matvec(x);
    add_vec(&mut a, &w.w_h.matvec(h_prev));
    add_vec(&mut a, &w.b);
    let h: Vec<f64> = a.iter().map(|v| v.tanh()).collect();
    let cache = RnnStepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        h: h.clone(),
    };
    (h, cache)
}

pub fn rnn_step_backward(
    w: &RnnWeights,
    grad: &mut RnnWeights,
    cache: &RnnStepCache,
    dh: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = dh.len();
    let mut da = vec![0.0; n];
    for j in 0..n {
        da[j] = dh[j] * (1.0 - cache.h[j] * cache.h[j]);
    }
    grad.w_x.add_outer(&da, &cache.x);
    grad.w_h.add_outer(&da, &cache.h_prev);
    add_vec(&mut grad.b, &da);
    let dx = w.w_x.matvec_t(&da);
    let dh_prev = w.w_h.matvec_t(&da);
    (dx, dh_prev)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

/// Fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseWeights {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub activation: Activation,
}

impl DenseWeights {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        DenseWeights {
            w: Matrix::zeros(output, input),
            b: vec![0.0; output],
            activation,
        }
    }
}

pub fn dense_forward(w: &DenseWeights, v: &[f64]) -> Vec<f64> {
    let mut out = w.w.matvec(v);
    add_vec(&mut out, &w.b);
    if w.activation == Activation::Relu {
        for o in out.iter_mut() {
            if *o < 0.0 {
                *o = 0.0;
            }
        }
    }
    out
}

/// Backward through a dense layer. `out` is the activated forward output for
/// this input (needed for the ReLU mask); returns dv.
pub fn dense_backward(
    w: &DenseWeights,
    grad: &mut DenseWeights,
    v: &[f64],
    out: &[f64],
    dout: &[f64],
) -> Vec<f64> {
    let da: Vec<f64> = match w.activation {
        Activation::Identity => dout.to_vec(),
        Activation::Relu => dout
            .iter()
            .zip(out)
            .map(|(d, o)| if *o > 0.0 { *d } else { 0.0 })
            .collect(),
    };
    grad.w.add_outer(&da, v);
    add_vec(&mut grad.b, &da);
    w.w.matvec_t(&da)
}
