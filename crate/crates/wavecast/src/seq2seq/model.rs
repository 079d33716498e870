//! The sequence-to-sequence model and the recurrent-trunk baselines, with
//! exact reverse-mode gradients through the unrolled graphs.
//!
//! The encoder reads the T×d input and hands its final hidden and cell
//! states (the context) to the decoder, which runs a static unrolled graph
//! of fixed length T'. Encoder and decoder weights are disjoint. The first
//! decoder input is a learned projection of the context's top-layer hidden;
//! later steps consume the previous target (teacher forced) or the previous
//! prediction (autoregressive), projected from target width to input width
//! when the two differ. In autoregressive mode the gradient flows through
//! the fed-back predictions.

use crate::dataset::SampleWindow;
use crate::linalg::add_vec;
use crate::net::cells::{
    dense_backward, dense_forward, lstm_step, lstm_step_backward, rnn_step, rnn_step_backward,
    Activation, DenseWeights, LstmState, LstmStepCache, LstmWeights, RnnStepCache, RnnWeights,
};
use crate::net::params::ParamSet;
use crate::optim::{regularizer_gradient, RegularizerConfig};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Weight-matrix entries are drawn from N(0, 0.1²); biases start at zero
/// except the forget-gate bias.
pub const INIT_STD: f64 = 0.1;

/// Model dimensions shared by all network kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shapes {
    /// Encoder input steps T.
    pub input_steps: usize,
    /// Decoder output steps T'.
    pub output_steps: usize,
    /// Input feature width d.
    pub input_width: usize,
    /// Target width m.
    pub target_width: usize,
    /// Hidden width h.
    pub hidden: usize,
    /// Stacked recurrent layers per side.
    pub layers: usize,
}

/// Decoder conditioning for one forward pass.
#[derive(Debug, Clone, Copy)]
pub enum DecodeMode<'a> {
    /// Decoder sees the ground-truth previous outputs.
    TeacherForced(&'a [Vec<f64>]),
    /// Decoder feeds its own predictions back.
    Autoregressive,
}

/// Common surface for trainable forecasting networks.
pub trait Network: Clone {
    /// Forward pass: T×d input to t_out×m predictions.
    fn forward(&self, x: &[Vec<f64>], mode: DecodeMode<'_>, t_out: usize) -> Vec<Vec<f64>>;

    /// Mean-squared-error data term over the batch plus a same-shaped
    /// gradient accumulator. The MSE is averaged over every predicted entry.
    fn batch_grad(&self, batch: &[SampleWindow], teacher_forced: bool) -> (f64, Self);

    fn params(&self) -> ParamSet;
    fn set_from_flat(&mut self, flat: &[f64]);
    fn zeros_like(&self) -> Self;
    fn shapes(&self) -> Shapes;
}

/// Loss and flat gradient of MSE + λ₁‖w‖² + λ₂‖w‖₁ over a batch, aligned
/// with the network's [`ParamSet`].
pub fn bptt_gradient<N: Network>(
    model: &N,
    batch: &[SampleWindow],
    teacher_forced: bool,
    reg: &RegularizerConfig,
) -> (f64, Vec<f64>) {
    let (mse, grad_model) = model.batch_grad(batch, teacher_forced);
    let params = model.params();
    let mut grad = grad_model.params().flat;
    let reg_grad = regularizer_gradient(&params.flat, reg);
    add_vec(&mut grad, &reg_grad);
    (mse + reg.penalty(&params.flat), grad)
}

fn init_matrix(m: &mut crate::linalg::Matrix, rng: &mut impl Rng) {
    let normal = Normal::new(0.0, INIT_STD).unwrap();
    for v in m.data.iter_mut() {
        *v = normal.sample(rng);
    }
}

fn init_lstm(w: &mut LstmWeights, rng: &mut impl Rng, forget_bias: f64) {
    for m in [
        &mut w.w_fx, &mut w.w_ix, &mut w.w_ox, &mut w.w_cx, &mut w.w_fh, &mut w.w_ih, &mut w.w_oh,
        &mut w.w_ch,
    ] {
        init_matrix(m, rng);
    }
    for b in w.b_f.iter_mut() {
        *b = forget_bias;
    }
}

fn init_dense(w: &mut DenseWeights, rng: &mut impl Rng) {
    init_matrix(&mut w.w, rng);
}

// ---------------------------------------------------------------------------
// Seq2Seq
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Seq2SeqModel {
    pub encoder: Vec<LstmWeights>,
    pub decoder: Vec<LstmWeights>,
    /// Projects the context's top-layer hidden to the first decoder input.
    pub bridge: DenseWeights,
    /// Projects previous outputs (width m) to decoder input width d when m≠d.
    pub input_map: Option<DenseWeights>,
    /// Decoder hidden to target width.
    pub head: DenseWeights,
    pub shapes: Shapes,
}

impl Seq2SeqModel {
    pub fn zeros(shapes: Shapes) -> Self {
        let stack = |input: usize| -> Vec<LstmWeights> {
            (0..shapes.layers)
                .map(|k| LstmWeights::zeros(if k == 0 { input } else { shapes.hidden }, shapes.hidden))
                .collect()
        };
        let input_map = if shapes.target_width != shapes.input_width {
            Some(DenseWeights::zeros(
                shapes.target_width,
                shapes.input_width,
                Activation::Identity,
            ))
        } else {
            None
        };
        Seq2SeqModel {
            encoder: stack(shapes.input_width),
            decoder: stack(shapes.input_width),
            bridge: DenseWeights::zeros(shapes.hidden, shapes.input_width, Activation::Identity),
            input_map,
            head: DenseWeights::zeros(shapes.hidden, shapes.target_width, Activation::Identity),
            shapes,
        }
    }

    /// Gaussian initialization; `forget_bias` stabilizes early training and
    /// can be set to 0.0 to disable the offset.
    pub fn init(shapes: Shapes, rng: &mut impl Rng, forget_bias: f64) -> Self {
        let mut m = Seq2SeqModel::zeros(shapes);
        for layer in m.encoder.iter_mut().chain(m.decoder.iter_mut()) {
            init_lstm(layer, rng, forget_bias);
        }
        init_dense(&mut m.bridge, rng);
        if let Some(im) = m.input_map.as_mut() {
            init_dense(im, rng);
        }
        init_dense(&mut m.head, rng);
        m
    }

    /// Run the encoder, returning per-layer final states and step caches.
    fn encode_cached(&self, x: &[Vec<f64>]) -> (Vec<LstmState>, Vec<Vec<LstmStepCache>>) {
        let layers = self.encoder.len();
        let mut states: Vec<LstmState> = self
            .encoder
            .iter()
            .map(|w| LstmState::zeros(w.hidden_width()))
            .collect();
        let mut caches: Vec<Vec<LstmStepCache>> = vec![Vec::with_capacity(x.len()); layers];
        for row in x {
            let mut input = row.clone();
            for (k, w) in self.encoder.iter().enumerate() {
                let (next, cache) = lstm_step(w, &input, &states[k]);
                input = next.h.clone();
                caches[k].push(cache);
                states[k] = next;
            }
        }
        (states, caches)
    }

    /// Fixed-size context: per-layer final hidden vectors and cell carries.
    pub fn encode(&self, x: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        assert_eq!(x.len(), self.shapes.input_steps, "encoder expects T rows");
        let (states, _) = self.encode_cached(x);
        (
            states.iter().map(|s| s.h.clone()).collect(),
            states.iter().map(|s| s.s.clone()).collect(),
        )
    }

    /// Decode from externally supplied context states.
    pub fn decode(
        &self,
        context_h: &[Vec<f64>],
        context_s: &[Vec<f64>],
        mode: DecodeMode<'_>,
        t_out: usize,
    ) -> Vec<Vec<f64>> {
        let states: Vec<LstmState> = context_h
            .iter()
            .zip(context_s)
            .map(|(h, s)| LstmState { h: h.clone(), s: s.clone() })
            .collect();
        self.decode_cached(states, mode, t_out).outputs
    }

    fn map_feedback(&self, prev: &[f64]) -> Vec<f64> {
        match &self.input_map {
            Some(im) => dense_forward(im, prev),
            None => prev.to_vec(),
        }
    }

    fn decode_cached(
        &self,
        init_states: Vec<LstmState>,
        mode: DecodeMode<'_>,
        t_out: usize,
    ) -> DecodeTrace {
        if let DecodeMode::TeacherForced(y) = mode {
            assert!(y.len() >= t_out, "teacher forcing needs T' target rows");
        }
        let layers = self.decoder.len();
        let v_top = init_states.last().expect("decoder needs layers").h.clone();
        let mut states = init_states;
        let mut caches: Vec<Vec<LstmStepCache>> = vec![Vec::with_capacity(t_out); layers];
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(t_out);
        let mut top_hidden = Vec::with_capacity(t_out);
        let mut fed_values = Vec::with_capacity(t_out);
        let mut inputs = Vec::with_capacity(t_out);

        for t in 0..t_out {
            let (fed, input) = if t == 0 {
                (v_top.clone(), dense_forward(&self.bridge, &v_top))
            } else {
                let prev: Vec<f64> = match mode {
                    DecodeMode::TeacherForced(y) => y[t - 1].clone(),
                    DecodeMode::Autoregressive => outputs[t - 1].clone(),
                };
                let mapped = self.map_feedback(&prev);
                (prev, mapped)
            };
            fed_values.push(fed);
            inputs.push(input.clone());
            let mut layer_in = input;
            for (k, w) in self.decoder.iter().enumerate() {
                let (next, cache) = lstm_step(w, &layer_in, &states[k]);
                layer_in = next.h.clone();
                caches[k].push(cache);
                states[k] = next;
            }
            top_hidden.push(layer_in.clone());
            outputs.push(dense_forward(&self.head, &layer_in));
        }

        DecodeTrace {
            outputs,
            top_hidden,
            fed_values,
            inputs,
            caches,
            v_top,
        }
    }
}

struct DecodeTrace {
    outputs: Vec<Vec<f64>>,
    /// Decoder top-layer hidden per step (head input).
    top_hidden: Vec<Vec<f64>>,
    /// Value fed at each step before projection (v_top at t=0, else y/ŷ).
    fed_values: Vec<Vec<f64>>,
    /// Actual decoder layer-0 inputs per step.
    inputs: Vec<Vec<f64>>,
    caches: Vec<Vec<LstmStepCache>>,
    v_top: Vec<f64>,
}

impl Network for Seq2SeqModel {
    fn forward(&self, x: &[Vec<f64>], mode: DecodeMode<'_>, t_out: usize) -> Vec<Vec<f64>> {
        let (states, _) = self.encode_cached(x);
        self.decode_cached(states, mode, t_out).outputs
    }

    fn batch_grad(&self, batch: &[SampleWindow], teacher_forced: bool) -> (f64, Self) {
        let t_out = self.shapes.output_steps;
        let m = self.shapes.target_width;
        let layers = self.decoder.len();
        let denom = (batch.len() * t_out * m) as f64;
        let mut grad = self.zeros_like();
        let mut mse = 0.0;

        for window in batch {
            let (enc_states, enc_caches) = self.encode_cached(window.x.clone().as_slice());
            let mode = if teacher_forced {
                DecodeMode::TeacherForced(&window.y)
            } else {
                DecodeMode::Autoregressive
            };
            let trace = self.decode_cached(enc_states, mode, t_out);

            // Loss gradients per output step, including autoregressive
            // feedback contributions filled in during the reverse sweep.
            let mut dy: Vec<Vec<f64>> = (0..t_out)
                .map(|t| {
                    (0..m)
                        .map(|j| {
                            let e = trace.outputs[t][j] - window.y[t][j];
                            mse += e * e;
                            2.0 * e / denom
                        })
                        .collect()
                })
                .collect();

            let mut dh_carry: Vec<Vec<f64>> =
                self.decoder.iter().map(|w| vec![0.0; w.hidden_width()]).collect();
            let mut ds_carry = dh_carry.clone();
            let mut d_v_top = vec![0.0; self.shapes.hidden];

            for t in (0..t_out).rev() {
                let dh_top = dense_backward(
                    &self.head,
                    &mut grad.head,
                    &trace.top_hidden[t],
                    &trace.outputs[t],
                    &dy[t],
                );
                add_vec(&mut dh_carry[layers - 1], &dh_top);

                let mut dx_down: Option<Vec<f64>> = None;
                for k in (0..layers).rev() {
                    if let Some(dx) = dx_down.take() {
                        add_vec(&mut dh_carry[k], &dx);
                    }
                    let dh = std::mem::take(&mut dh_carry[k]);
                    let ds = std::mem::take(&mut ds_carry[k]);
                    let (dx, dh_prev, ds_prev) = lstm_step_backward(
                        &self.decoder[k],
                        &mut grad.decoder[k],
                        &trace.caches[k][t],
                        &dh,
                        &ds,
                    );
                    dh_carry[k] = dh_prev;
                    ds_carry[k] = ds_prev;
                    dx_down = Some(dx);
                }
                let dx0 = dx_down.unwrap();

                if t == 0 {
                    let d_fed = dense_backward(
                        &self.bridge,
                        &mut grad.bridge,
                        &trace.v_top,
                        &trace.inputs[0],
                        &dx0,
                    );
                    add_vec(&mut d_v_top, &d_fed);
                } else {
                    let d_prev = match (&self.input_map, grad.input_map.as_mut()) {
                        (Some(im), Some(gim)) => dense_backward(
                            im,
                            gim,
                            &trace.fed_values[t],
                            &trace.inputs[t],
                            &dx0,
                        ),
                        _ => dx0,
                    };
                    if !teacher_forced {
                        add_vec(&mut dy[t - 1], &d_prev);
                    }
                }
            }

            // Decoder initial-state gradients flow into the encoder's final
            // states; the bridge gradient lands on the top layer's hidden.
            add_vec(&mut dh_carry[layers - 1], &d_v_top);
            backward_lstm_stack(
                &self.encoder,
                &mut grad.encoder,
                &enc_caches,
                dh_carry,
                ds_carry,
            );
        }

        (mse / denom, grad)
    }

    fn params(&self) -> ParamSet {
        let mut tensors = Vec::new();
        for (k, layer) in self.encoder.iter().enumerate() {
            push_lstm_tensors(&mut tensors, &format!("encoder.{k}"), layer);
        }
        for (k, layer) in self.decoder.iter().enumerate() {
            push_lstm_tensors(&mut tensors, &format!("decoder.{k}"), layer);
        }
        push_dense_tensors(&mut tensors, "bridge", &self.bridge);
        if let Some(im) = &self.input_map {
            push_dense_tensors(&mut tensors, "input_map", im);
        }
        push_dense_tensors(&mut tensors, "head", &self.head);
        ParamSet::from_tensors(tensors)
    }

    fn set_from_flat(&mut self, flat: &[f64]) {
        let mut slots: Vec<&mut [f64]> = Vec::new();
        for layer in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            collect_lstm_slots(&mut slots, layer);
        }
        collect_dense_slots(&mut slots, &mut self.bridge);
        if let Some(im) = self.input_map.as_mut() {
            collect_dense_slots(&mut slots, im);
        }
        collect_dense_slots(&mut slots, &mut self.head);
        fill_slots(slots, flat);
    }

    fn zeros_like(&self) -> Self {
        let mut z = Seq2SeqModel::zeros(self.shapes);
        debug_assert_eq!(z.params().len(), self.params().len());
        z.shapes = self.shapes;
        z
    }

    fn shapes(&self) -> Shapes {
        self.shapes
    }
}

fn push_lstm_tensors(out: &mut Vec<(String, Vec<usize>, Vec<f64>)>, prefix: &str, w: &LstmWeights) {
    let h = w.hidden_width();
    let d = w.input_width();
    for (name, m) in [
        ("w_fx", &w.w_fx), ("w_ix", &w.w_ix), ("w_ox", &w.w_ox), ("w_cx", &w.w_cx),
    ] {
        out.push((format!("{prefix}.{name}"), vec![h, d], m.data.clone()));
    }
    for (name, m) in [
        ("w_fh", &w.w_fh), ("w_ih", &w.w_ih), ("w_oh", &w.w_oh), ("w_ch", &w.w_ch),
    ] {
        out.push((format!("{prefix}.{name}"), vec![h, h], m.data.clone()));
    }
    for (name, b) in [("b_f", &w.b_f), ("b_i", &w.b_i), ("b_o", &w.b_o), ("b_c", &w.b_c)] {
        out.push((format!("{prefix}.{name}"), vec![h], b.clone()));
    }
}

fn push_dense_tensors(out: &mut Vec<(String, Vec<usize>, Vec<f64>)>, prefix: &str, w: &DenseWeights) {
    out.push((format!("{prefix}.w"), vec![w.w.rows, w.w.cols], w.w.data.clone()));
    out.push((format!("{prefix}.b"), vec![w.b.len()], w.b.clone()));
}

fn collect_lstm_slots<'a>(slots: &mut Vec<&'a mut [f64]>, w: &'a mut LstmWeights) {
    slots.push(&mut w.w_fx.data);
    slots.push(&mut w.w_ix.data);
    slots.push(&mut w.w_ox.data);
    slots.push(&mut w.w_cx.data);
    slots.push(&mut w.w_fh.data);
    slots.push(&mut w.w_ih.data);
    slots.push(&mut w.w_oh.data);
    slots.push(&mut w.w_ch.data);
    slots.push(&mut w.b_f);
    slots.push(&mut w.b_i);
    slots.push(&mut w.b_o);
    slots.push(&mut w.b_c);
}

fn collect_dense_slots<'a>(slots: &mut Vec<&'a mut [f64]>, w: &'a mut DenseWeights) {
    slots.push(&mut w.w.data);
    slots.push(&mut w.b);
}

fn collect_rnn_slots<'a>(slots: &mut Vec<&'a mut [f64]>, w: &'a mut RnnWeights) {
    slots.push(&mut w.w_x.data);
    slots.push(&mut w.w_h.data);
    slots.push(&mut w.b);
}

fn fill_slots(slots: Vec<&mut [f64]>, flat: &[f64]) {
    let total: usize = slots.iter().map(|s| s.len()).sum();
    assert_eq!(total, flat.len(), "flat vector length mismatch");
    let mut offset = 0;
    for slot in slots {
        slot.copy_from_slice(&flat[offset..offset + slot.len()]);
        offset += slot.len();
    }
}

/// Reverse an LSTM stack over a full sequence given gradients on each
/// layer's final hidden and cell states (per-time-step external gradients on
/// the top hidden enter through `dh_final` of the consumer instead).
fn backward_lstm_stack(
    weights: &[LstmWeights],
    grads: &mut [LstmWeights],
    caches: &[Vec<LstmStepCache>],
    mut dh_carry: Vec<Vec<f64>>,
    mut ds_carry: Vec<Vec<f64>>,
) {
    let layers = weights.len();
    let steps = caches[0].len();
    for t in (0..steps).rev() {
        let mut dx_down: Option<Vec<f64>> = None;
        for k in (0..layers).rev() {
            if let Some(dx) = dx_down.take() {
                add_vec(&mut dh_carry[k], &dx);
            }
            let dh = std::mem::take(&mut dh_carry[k]);
            let ds = std::mem::take(&mut ds_carry[k]);
            let (dx, dh_prev, ds_prev) =
                lstm_step_backward(&weights[k], &mut grads[k], &caches[k][t], &dh, &ds);
            dh_carry[k] = dh_prev;
            ds_carry[k] = ds_prev;
            dx_down = Some(dx);
        }
    }
}

// ---------------------------------------------------------------------------
// Recurrent trunk + fully connected head baselines
// ---------------------------------------------------------------------------

/// The four baseline network kinds. Multi-layer variants use three recurrent
/// layers of hidden widths (T, T, h) with ReLU between the layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    SlRnnFcl,
    MlRnnFcl,
    SlLstmFcl,
    MlLstmFcl,
}

impl BaselineKind {
    pub fn is_lstm(self) -> bool {
        matches!(self, BaselineKind::SlLstmFcl | BaselineKind::MlLstmFcl)
    }

    pub fn is_multi_layer(self) -> bool {
        matches!(self, BaselineKind::MlRnnFcl | BaselineKind::MlLstmFcl)
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sl-rnn+fcl" | "sl-rnn" => Ok(BaselineKind::SlRnnFcl),
            "ml-rnn+fcl" | "ml-rnn" => Ok(BaselineKind::MlRnnFcl),
            "sl-lstm+fcl" | "sl-lstm" => Ok(BaselineKind::SlLstmFcl),
            "ml-lstm+fcl" | "ml-lstm" => Ok(BaselineKind::MlLstmFcl),
            other => Err(format!("unknown baseline kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Trunk {
    Lstm(Vec<LstmWeights>),
    Rnn(Vec<RnnWeights>),
}

enum TrunkCache {
    Lstm(Vec<Vec<LstmStepCache>>),
    Rnn(Vec<Vec<RnnStepCache>>),
}

/// Recurrent trunk feeding a fully connected head that emits the whole
/// T'×m output block from the final top-layer hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentHeadModel {
    trunk: Trunk,
    /// ReLU between recurrent layers (multi-layer variants).
    relu_between: bool,
    head: DenseWeights,
    pub shapes: Shapes,
}

impl RecurrentHeadModel {
    /// Layer widths: (h) for single-layer kinds, (T, T, h) for multi-layer.
    pub fn build(kind: BaselineKind, shapes: Shapes, rng: &mut impl Rng, forget_bias: f64) -> Self {
        let widths: Vec<usize> = if kind.is_multi_layer() {
            vec![shapes.input_steps, shapes.input_steps, shapes.hidden]
        } else {
            vec![shapes.hidden]
        };
        let mut input = shapes.input_width;
        let trunk = if kind.is_lstm() {
            let mut layers = Vec::new();
            for w in &widths {
                let mut layer = LstmWeights::zeros(input, *w);
                init_lstm(&mut layer, rng, forget_bias);
                layers.push(layer);
                input = *w;
            }
            Trunk::Lstm(layers)
        } else {
            let mut layers = Vec::new();
            for w in &widths {
                let mut layer = RnnWeights::zeros(input, *w);
                init_matrix(&mut layer.w_x, rng);
                init_matrix(&mut layer.w_h, rng);
                layers.push(layer);
                input = *w;
            }
            Trunk::Rnn(layers)
        };
        let top = *widths.last().unwrap();
        let mut head = DenseWeights::zeros(
            top,
            shapes.output_steps * shapes.target_width,
            Activation::Identity,
        );
        init_dense(&mut head, rng);
        RecurrentHeadModel {
            trunk,
            relu_between: kind.is_multi_layer(),
            head,
            shapes,
        }
    }

    pub fn kind(&self) -> BaselineKind {
        match (&self.trunk, self.relu_between) {
            (Trunk::Lstm(_), true) => BaselineKind::MlLstmFcl,
            (Trunk::Lstm(_), false) => BaselineKind::SlLstmFcl,
            (Trunk::Rnn(_), true) => BaselineKind::MlRnnFcl,
            (Trunk::Rnn(_), false) => BaselineKind::SlRnnFcl,
        }
    }

    fn zeros_matching(&self) -> Self {
        let trunk = match &self.trunk {
            Trunk::Lstm(layers) => Trunk::Lstm(
                layers
                    .iter()
                    .map(|l| LstmWeights::zeros(l.input_width(), l.hidden_width()))
                    .collect(),
            ),
            Trunk::Rnn(layers) => Trunk::Rnn(
                layers
                    .iter()
                    .map(|l| RnnWeights::zeros(l.input_width(), l.hidden_width()))
                    .collect(),
            ),
        };
        RecurrentHeadModel {
            trunk,
            relu_between: self.relu_between,
            head: DenseWeights::zeros(self.head.w.cols, self.head.w.rows, Activation::Identity),
            shapes: self.shapes,
        }
    }

    /// Forward over the trunk, returning the final top hidden plus caches and
    /// the (possibly ReLU-masked) inter-layer inputs.
    fn trunk_forward(&self, x: &[Vec<f64>]) -> (Vec<f64>, TrunkCache) {
        match &self.trunk {
            Trunk::Lstm(layers) => {
                let mut states: Vec<LstmState> =
                    layers.iter().map(|l| LstmState::zeros(l.hidden_width())).collect();
                let mut caches: Vec<Vec<LstmStepCache>> = vec![Vec::new(); layers.len()];
                let mut top = Vec::new();
                for row in x {
                    let mut input = row.clone();
                    for (k, w) in layers.iter().enumerate() {
                        let (next, cache) = lstm_step(w, &input, &states[k]);
                        input = next.h.clone();
                        if self.relu_between && k + 1 < layers.len() {
                            for v in input.iter_mut() {
                                if *v < 0.0 {
                                    *v = 0.0;
                                }
                            }
                        }
                        caches[k].push(cache);
                        states[k] = next;
                    }
                    top = input;
                }
                (top, TrunkCache::Lstm(caches))
            }
            Trunk::Rnn(layers) => {
                let mut hidden: Vec<Vec<f64>> =
                    layers.iter().map(|l| vec![0.0; l.hidden_width()]).collect();
                let mut caches: Vec<Vec<RnnStepCache>> = vec![Vec::new(); layers.len()];
                let mut top = Vec::new();
                for row in x {
                    let mut input = row.clone();
                    for (k, w) in layers.iter().enumerate() {
                        let (next, cache) = rnn_step(w, &input, &hidden[k]);
                        input = next.clone();
                        if self.relu_between && k + 1 < layers.len() {
                            for v in input.iter_mut() {
                                if *v < 0.0 {
                                    *v = 0.0;
                                }
                            }
                        }
                        caches[k].push(cache);
                        hidden[k] = next;
                    }
                    top = input;
                }
                (top, TrunkCache::Rnn(caches))
            }
        }
    }
}

impl Network for RecurrentHeadModel {
    fn forward(&self, x: &[Vec<f64>], _mode: DecodeMode<'_>, t_out: usize) -> Vec<Vec<f64>> {
        assert!(
            t_out <= self.shapes.output_steps,
            "baseline head emits at most {} steps",
            self.shapes.output_steps
        );
        let (top, _) = self.trunk_forward(x);
        let flat = dense_forward(&self.head, &top);
        let m = self.shapes.target_width;
        (0..t_out).map(|t| flat[t * m..(t + 1) * m].to_vec()).collect()
    }

    fn batch_grad(&self, batch: &[SampleWindow], _teacher_forced: bool) -> (f64, Self) {
        let t_out = self.shapes.output_steps;
        let m = self.shapes.target_width;
        let denom = (batch.len() * t_out * m) as f64;
        let mut grad = self.zeros_matching();
        let mut mse = 0.0;

        for window in batch {
            let (top, caches) = self.trunk_forward(&window.x);
            let flat_out = dense_forward(&self.head, &top);
            let mut d_out = vec![0.0; flat_out.len()];
            for t in 0..t_out {
                for j in 0..m {
                    let e = flat_out[t * m + j] - window.y[t][j];
                    mse += e * e;
                    d_out[t * m + j] = 2.0 * e / denom;
                }
            }
            let d_top = dense_backward(&self.head, &mut grad.head, &top, &flat_out, &d_out);

            match (&self.trunk, &mut grad.trunk, caches) {
                (Trunk::Lstm(layers), Trunk::Lstm(grads), TrunkCache::Lstm(caches)) => {
                    let last = layers.len() - 1;
                    let mut dh_carry: Vec<Vec<f64>> =
                        layers.iter().map(|l| vec![0.0; l.hidden_width()]).collect();
                    let mut ds_carry = dh_carry.clone();
                    add_vec(&mut dh_carry[last], &d_top);
                    for t in (0..window.x.len()).rev() {
                        let mut dx_down: Option<Vec<f64>> = None;
                        for k in (0..layers.len()).rev() {
                            if let Some(mut dx) = dx_down.take() {
                                // undo the inter-layer ReLU mask
                                if self.relu_between {
                                    let below = &caches[k + 1][t].x;
                                    for (d, b) in dx.iter_mut().zip(below) {
                                        if *b <= 0.0 {
                                            *d = 0.0;
                                        }
                                    }
                                }
                                add_vec(&mut dh_carry[k], &dx);
                            }
                            let dh = std::mem::take(&mut dh_carry[k]);
                            let ds = std::mem::take(&mut ds_carry[k]);
                            let (dx, dh_prev, ds_prev) =
                                lstm_step_backward(&layers[k], &mut grads[k], &caches[k][t], &dh, &ds);
                            dh_carry[k] = dh_prev;
                            ds_carry[k] = ds_prev;
                            dx_down = Some(dx);
                        }
                    }
                }
                (Trunk::Rnn(layers), Trunk::Rnn(grads), TrunkCache::Rnn(caches)) => {
                    let last = layers.len() - 1;
                    let mut dh_carry: Vec<Vec<f64>> =
                        layers.iter().map(|l| vec![0.0; l.hidden_width()]).collect();
                    add_vec(&mut dh_carry[last], &d_top);
                    for t in (0..window.x.len()).rev() {
                        let mut dx_down: Option<Vec<f64>> = None;
                        for k in (0..layers.len()).rev() {
                            if let Some(mut dx) = dx_down.take() {
                                if self.relu_between {
                                    let below = &caches[k + 1][t].x;
                                    for (d, b) in dx.iter_mut().zip(below) {
                                        if *b <= 0.0 {
                                            *d = 0.0;
                                        }
                                    }
                                }
                                add_vec(&mut dh_carry[k], &dx);
                            }
                            let dh = std::mem::take(&mut dh_carry[k]);
                            let (dx, dh_prev) =
                                rnn_step_backward(&layers[k], &mut grads[k], &caches[k][t], &dh);
                            dh_carry[k] = dh_prev;
                            dx_down = Some(dx);
                        }
                    }
                }
                _ => unreachable!("trunk/grad kind mismatch"),
            }
        }

        (mse / denom, grad)
    }

    fn params(&self) -> ParamSet {
        let mut tensors = Vec::new();
        match &self.trunk {
            Trunk::Lstm(layers) => {
                for (k, layer) in layers.iter().enumerate() {
                    push_lstm_tensors(&mut tensors, &format!("trunk.{k}"), layer);
                }
            }
            Trunk::Rnn(layers) => {
                for (k, layer) in layers.iter().enumerate() {
                    let h = layer.hidden_width();
                    let d = layer.input_width();
                    tensors.push((format!("trunk.{k}.w_x"), vec![h, d], layer.w_x.data.clone()));
                    tensors.push((format!("trunk.{k}.w_h"), vec![h, h], layer.w_h.data.clone()));
                    tensors.push((format!("trunk.{k}.b"), vec![h], layer.b.clone()));
                }
            }
        }
        push_dense_tensors(&mut tensors, "head", &self.head);
        ParamSet::from_tensors(tensors)
    }

    fn set_from_flat(&mut self, flat: &[f64]) {
        let mut slots: Vec<&mut [f64]> = Vec::new();
        match &mut self.trunk {
            Trunk::Lstm(layers) => {
                for layer in layers {
                    collect_lstm_slots(&mut slots, layer);
                }
            }
            Trunk::Rnn(layers) => {
                for layer in layers {
                    collect_rnn_slots(&mut slots, layer);
                }
            }
        }
        collect_dense_slots(&mut slots, &mut self.head);
        fill_slots(slots, flat);
    }

    fn zeros_like(&self) -> Self {
        self.zeros_matching()
    }

    fn shapes(&self) -> Shapes {
        self.shapes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::gradcheck::{finite_difference_gradient, max_relative_error};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_shapes() -> Shapes {
        Shapes {
            input_steps: 3,
            output_steps: 2,
            input_width: 2,
            target_width: 1,
            hidden: 4,
            layers: 1,
        }
    }

    fn random_window(rng: &mut impl Rng, shapes: &Shapes) -> SampleWindow {
        SampleWindow {
            x: (0..shapes.input_steps)
                .map(|_| (0..shapes.input_width).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
            y: (0..shapes.output_steps)
                .map(|_| (0..shapes.target_width).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
            origin: chrono::NaiveDate::from_ymd_opt(2010, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
        }
    }

    #[test]
    fn zero_model_outputs_head_bias() {
        let mut m = Seq2SeqModel::zeros(tiny_shapes());
        m.head.b = vec![0.7];
        let x = vec![vec![0.3, -0.4]; 3];
        let out = m.forward(&x, DecodeMode::Autoregressive, 2);
        assert_eq!(out, vec![vec![0.7], vec![0.7]]);
    }

    #[test]
    fn teacher_forcing_on_own_outputs_matches_autoregressive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = Seq2SeqModel::init(tiny_shapes(), &mut rng, 1.0);
        let x = vec![vec![0.5, -0.2], vec![0.1, 0.3], vec![-0.4, 0.2]];
        let auto = m.forward(&x, DecodeMode::Autoregressive, 2);
        let forced = m.forward(&x, DecodeMode::TeacherForced(&auto), 2);
        for (a, b) in auto.iter().zip(&forced) {
            assert_relative_eq!(a[0], b[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn autoregressive_decode_has_prefix_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shapes = Shapes { output_steps: 5, ..tiny_shapes() };
        let m = Seq2SeqModel::init(shapes, &mut rng, 1.0);
        let x = vec![vec![0.5, -0.2], vec![0.1, 0.3], vec![-0.4, 0.2]];
        let long = m.forward(&x, DecodeMode::Autoregressive, 5);
        let short = m.forward(&x, DecodeMode::Autoregressive, 3);
        assert_eq!(&long[..3], &short[..]);
    }

    #[test]
    fn encode_single_step_equals_lstm_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shapes = Shapes { input_steps: 1, ..tiny_shapes() };
        let m = Seq2SeqModel::init(shapes, &mut rng, 1.0);
        let x = vec![vec![0.2, -0.7]];
        let (h, s) = m.encode(&x);
        let (state, _) = lstm_step(&m.encoder[0], &x[0], &LstmState::zeros(4));
        assert_eq!(h[0], state.h);
        assert_eq!(s[0], state.s);
    }

    #[test]
    fn param_roundtrip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = Seq2SeqModel::init(tiny_shapes(), &mut rng, 1.0);
        let p = m.params();
        let mut m2 = m.zeros_like();
        m2.set_from_flat(&p.flat);
        assert_eq!(m, m2);
    }

    #[test]
    fn init_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let shapes = Shapes {
            input_steps: 10,
            output_steps: 5,
            input_width: 8,
            target_width: 8,
            hidden: 40,
            layers: 2,
        };
        let m = Seq2SeqModel::init(shapes, &mut rng, 0.0);
        let weights: Vec<f64> = m
            .params()
            .catalog
            .iter()
            .filter(|e| !e.name.contains(".b"))
            .flat_map(|e| m.params().flat[e.offset..e.offset + e.len()].to_vec())
            .collect();
        assert!(weights.len() >= 10_000);
        let n = weights.len() as f64;
        let mean = weights.iter().sum::<f64>() / n;
        let std = (weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n).sqrt();
        assert!(std > 0.08 && std < 0.12, "sample std {std}");

        let mut rng_a = ChaCha8Rng::seed_from_u64(9);
        let mut rng_b = ChaCha8Rng::seed_from_u64(9);
        let a = Seq2SeqModel::init(tiny_shapes(), &mut rng_a, 1.0);
        let b = Seq2SeqModel::init(tiny_shapes(), &mut rng_b, 1.0);
        assert_eq!(a, b);
        let mut rng_c = ChaCha8Rng::seed_from_u64(10);
        let c = Seq2SeqModel::init(tiny_shapes(), &mut rng_c, 1.0);
        assert_ne!(a, c);
    }

    fn gradcheck_model<N: Network>(model: &N, batch: &[SampleWindow], teacher_forced: bool) -> f64 {
        let reg = RegularizerConfig::default();
        let (_, analytic) = bptt_gradient(model, batch, teacher_forced, &reg);
        let base = model.params().flat;
        let f = |w: &[f64]| {
            let mut probe = model.clone();
            probe.set_from_flat(w);
            let (mse, _) = probe.batch_grad(batch, teacher_forced);
            mse
        };
        let numeric = finite_difference_gradient(&f, &base, 1e-5);
        max_relative_error(&analytic, &numeric, 1e-6)
    }

    #[test]
    fn seq2seq_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let shapes = tiny_shapes();
        let model = Seq2SeqModel::init(shapes, &mut rng, 1.0);
        let batch: Vec<SampleWindow> = (0..3).map(|_| random_window(&mut rng, &shapes)).collect();
        assert!(gradcheck_model(&model, &batch, false) < 1e-4);
        assert!(gradcheck_model(&model, &batch, true) < 1e-4);
    }

    #[test]
    fn seq2seq_gradient_two_layers_equal_widths() {
        // m == d exercises the no-input-map feedback path
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let shapes = Shapes {
            input_steps: 3,
            output_steps: 3,
            input_width: 2,
            target_width: 2,
            hidden: 3,
            layers: 2,
        };
        let model = Seq2SeqModel::init(shapes, &mut rng, 1.0);
        let batch: Vec<SampleWindow> = (0..2).map(|_| random_window(&mut rng, &shapes)).collect();
        assert!(gradcheck_model(&model, &batch, false) < 1e-4);
    }

    #[test]
    fn regularizer_only_gradient_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let model = Seq2SeqModel::init(tiny_shapes(), &mut rng, 1.0);
        let w = model.params().flat;
        // empty batch: pure regularizer
        let reg = RegularizerConfig { lambda1: 0.3, lambda2: 0.7 };
        let (_, grad) = bptt_gradient(&model, &[], false, &reg);
        for (g, wi) in grad.iter().zip(&w) {
            // sign(0) = 0 convention, unlike f64::signum
            let sign = if *wi > 0.0 {
                1.0
            } else if *wi < 0.0 {
                -1.0
            } else {
                0.0
            };
            let expected = 2.0 * 0.3 * wi + 0.7 * sign;
            assert_relative_eq!(*g, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn baseline_zero_weights_output_head_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shapes = tiny_shapes();
        let mut m = RecurrentHeadModel::build(BaselineKind::SlLstmFcl, shapes, &mut rng, 1.0);
        let zeros = vec![0.0; m.params().len()];
        m.set_from_flat(&zeros);
        let mut flat = vec![0.0; m.params().len()];
        // set head bias entries (last target_width*output_steps slots)
        let n = flat.len();
        flat[n - 2] = 0.25;
        flat[n - 1] = -0.5;
        m.set_from_flat(&flat);
        let out = m.forward(&vec![vec![1.0, 1.0]; 3], DecodeMode::Autoregressive, 2);
        assert_eq!(out, vec![vec![0.25], vec![-0.5]]);
    }

    #[test]
    fn ml_trunk_widths_follow_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shapes = Shapes {
            input_steps: 6,
            output_steps: 2,
            input_width: 3,
            target_width: 1,
            hidden: 5,
            layers: 1,
        };
        let m = RecurrentHeadModel::build(BaselineKind::MlLstmFcl, shapes, &mut rng, 1.0);
        match &m.trunk {
            Trunk::Lstm(layers) => {
                assert_eq!(layers.len(), 3);
                assert_eq!(layers[0].hidden_width(), 6);
                assert_eq!(layers[1].hidden_width(), 6);
                assert_eq!(layers[2].hidden_width(), 5);
            }
            _ => panic!("expected LSTM trunk"),
        }
    }

    #[test]
    fn baseline_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let shapes = Shapes {
            input_steps: 4,
            output_steps: 2,
            input_width: 2,
            target_width: 1,
            hidden: 3,
            layers: 1,
        };
        for kind in [
            BaselineKind::SlRnnFcl,
            BaselineKind::SlLstmFcl,
            BaselineKind::MlRnnFcl,
            BaselineKind::MlLstmFcl,
        ] {
            let model = RecurrentHeadModel::build(kind, shapes, &mut rng, 1.0);
            let batch: Vec<SampleWindow> = (0..2).map(|_| random_window(&mut rng, &shapes)).collect();
            let err = gradcheck_model(&model, &batch, false);
            assert!(err < 1e-4, "{kind:?} gradient error {err}");
        }
    }

    #[test]
    fn state_threading_associativity() {
        // unrolling the full sequence equals unrolling halves with carried state
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let shapes = tiny_shapes();
        let m = Seq2SeqModel::init(Shapes { input_steps: 4, ..shapes }, &mut rng, 1.0);
        let x: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let (full, _) = m.encode_cached(&x);

        let mut states: Vec<LstmState> = m.encoder.iter().map(|w| LstmState::zeros(w.hidden_width())).collect();
        for half in [&x[..2], &x[2..]] {
            for row in half {
                let mut input = row.clone();
                for (k, w) in m.encoder.iter().enumerate() {
                    let (next, _) = lstm_step(w, &input, &states[k]);
                    input = next.h.clone();
                    states[k] = next;
                }
            }
        }
        for (a, b) in full.iter().zip(&states) {
            for (x1, x2) in a.h.iter().zip(&b.h) {
                assert_relative_eq!(x1, x2, max_relative = 1e-12);
            }
        }
    }
}
