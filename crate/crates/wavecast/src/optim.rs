//! First-order update rules: SGD, RMSProp, Adam and AMSGrad, plus per-epoch
//! learning-rate decay and the elastic-net regularizer gradient.
//!
//! Adam defaults follow the settings the forecasting experiments use:
//! β₁ = 0.9, β₂ = 0.99, ε = 1e-8; RMSProp runs with momentum 0 and ε = 1e-10.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerVariant {
    Sgd,
    RmsProp,
    Adam,
    AmsGrad,
}

impl std::str::FromStr for OptimizerVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerVariant::Sgd),
            "rmsprop" => Ok(OptimizerVariant::RmsProp),
            "adam" => Ok(OptimizerVariant::Adam),
            "amsgrad" => Ok(OptimizerVariant::AmsGrad),
            other => Err(format!("unknown optimizer '{other}'")),
        }
    }
}

impl std::fmt::Display for OptimizerVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OptimizerVariant::Sgd => "sgd",
            OptimizerVariant::RmsProp => "rmsprop",
            OptimizerVariant::Adam => "adam",
            OptimizerVariant::AmsGrad => "amsgrad",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub variant: OptimizerVariant,
    /// Base learning rate α₀.
    pub alpha0: f64,
    /// Per-epoch multiplicative decay.
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// RMSProp momentum (kept at 0 by default).
    pub rms_momentum: f64,
}

impl OptimizerConfig {
    pub fn new(variant: OptimizerVariant, alpha0: f64) -> Self {
        let eps = match variant {
            OptimizerVariant::RmsProp => 1e-10,
            _ => 1e-8,
        };
        OptimizerConfig {
            variant,
            alpha0,
            decay: 1.0,
            beta1: 0.9,
            beta2: 0.99,
            eps,
            rms_momentum: 0.0,
        }
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }
}

/// Per-parameter accumulator state. All vectors stay aligned with the flat
/// parameter vector they update.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Elementwise running max of the bias-corrected second moment (AMSGrad).
    pub v_max: Vec<f64>,
    /// RMSProp momentum buffer.
    pub momentum: Vec<f64>,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        OptimizerState {
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
            v_max: vec![0.0; n],
            momentum: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegularizerConfig {
    /// 2-norm coefficient λ₁.
    pub lambda1: f64,
    /// 1-norm coefficient λ₂ (feature-selection mode).
    pub lambda2: f64,
}

impl RegularizerConfig {
    pub fn l2(lambda1: f64) -> Self {
        RegularizerConfig { lambda1, lambda2: 0.0 }
    }

    pub fn penalty(&self, w: &[f64]) -> f64 {
        let l2: f64 = w.iter().map(|x| x * x).sum();
        let l1: f64 = w.iter().map(|x| x.abs()).sum();
        self.lambda1 * l2 + self.lambda2 * l1
    }
}

/// Gradient of λ₁‖w‖² + λ₂‖w‖₁ with the sign(0)=0 subgradient convention.
pub fn regularizer_gradient(w: &[f64], reg: &RegularizerConfig) -> Vec<f64> {
    w.iter()
        .map(|&x| {
            let sign = if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            };
            2.0 * reg.lambda1 * x + reg.lambda2 * sign
        })
        .collect()
}

/// α₀ · decayᵉᵖᵒᶜʰ
pub fn decayed_lr(alpha0: f64, decay: f64, epoch: u32) -> f64 {
    alpha0 * decay.powi(epoch as i32)
}

pub fn sgd_step(w: &mut [f64], grad: &[f64], alpha: f64) {
    for (wi, gi) in w.iter_mut().zip(grad) {
        *wi -= alpha * gi;
    }
}

pub fn rmsprop_step(w: &mut [f64], grad: &[f64], state: &mut OptimizerState, cfg: &OptimizerConfig, alpha: f64) {
    state.step += 1;
    for i in 0..w.len() {
        let g = grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let update = alpha * g / (state.v[i].sqrt() + cfg.eps);
        state.momentum[i] = cfg.rms_momentum * state.momentum[i] + update;
        w[i] -= state.momentum[i];
    }
}

pub fn adam_step(w: &mut [f64], grad: &[f64], state: &mut OptimizerState, cfg: &OptimizerConfig, alpha: f64) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..w.len() {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        w[i] -= alpha * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

pub fn amsgrad_step(w: &mut [f64], grad: &[f64], state: &mut OptimizerState, cfg: &OptimizerConfig, alpha: f64) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..w.len() {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        state.v_max[i] = state.v_max[i].max(v_hat);
        w[i] -= alpha * m_hat / (state.v_max[i].sqrt() + cfg.eps);
    }
}

/// Dispatch one update at the epoch's decayed learning rate.
pub fn apply_step(
    w: &mut [f64],
    grad: &[f64],
    state: &mut OptimizerState,
    cfg: &OptimizerConfig,
    epoch: u32,
) {
    let alpha = decayed_lr(cfg.alpha0, cfg.decay, epoch);
    match cfg.variant {
        OptimizerVariant::Sgd => {
            state.step += 1;
            sgd_step(w, grad, alpha);
        }
        OptimizerVariant::RmsProp => rmsprop_step(w, grad, state, cfg, alpha),
        OptimizerVariant::Adam => adam_step(w, grad, state, cfg, alpha),
        OptimizerVariant::AmsGrad => amsgrad_step(w, grad, state, cfg, alpha),
    }
}
