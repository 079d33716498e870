//! The training loop: chronological mini-batches, one decoder-mode draw per
//! epoch, per-batch optimizer updates at the epoch's decayed learning rate,
//! autoregressive validation after every epoch and best-weight selection by
//! validation MAAPE.

use crate::dataset::SampleWindow;
use crate::metrics::{maape, rmse};
use crate::optim::{apply_step, decayed_lr, OptimizerConfig, OptimizerState, RegularizerConfig};
use crate::seq2seq::model::{bptt_gradient, DecodeMode, Network};
use crate::seq2seq::schedule::{draw_epoch_mode, EpochMode, SchedulePolicy};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("batch size must be positive")]
    ZeroBatchSize,
    #[error("epochs must be positive")]
    ZeroEpochs,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub reg: RegularizerConfig,
    pub schedule: SchedulePolicy,
    /// Losses above this (or non-finite) abort the run, keeping the best
    /// finite weights seen so far.
    pub divergence_threshold: f64,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, optimizer: OptimizerConfig, k: f64) -> Self {
        TrainConfig {
            epochs,
            batch_size,
            optimizer,
            reg: RegularizerConfig::default(),
            schedule: SchedulePolicy::new(k, epochs),
            divergence_threshold: 1e12,
        }
    }
}

/// One epoch of the training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mode: EpochMode,
    pub lr: f64,
    /// Mean over batches of MSE + regularizer penalty.
    pub train_loss: f64,
    /// Autoregressive validation scores; `None` when no validation set.
    pub val_maape: Option<f64>,
    pub val_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    /// Selection score of the kept weights: validation MAAPE, or training
    /// loss when no validation set was given.
    pub best_score: f64,
    pub diverged: bool,
}

/// Autoregressive forecast, the inference-time path.
pub fn forecast<N: Network>(model: &N, x: &[Vec<f64>], t_out: usize) -> Vec<Vec<f64>> {
    model.forward(x, DecodeMode::Autoregressive, t_out)
}

/// Persistence baseline: repeat the target columns of the last observed input
/// row for every forecast step.
pub fn persistence_forecast(x: &[Vec<f64>], target_cols: &[usize], t_out: usize) -> Vec<Vec<f64>> {
    let last = x.last().expect("persistence needs at least one input row");
    let row: Vec<f64> = target_cols.iter().map(|&c| last[c]).collect();
    vec![row; t_out]
}

/// Flattened autoregressive predictions and targets over a window set.
fn eval_pairs<N: Network>(model: &N, windows: &[SampleWindow]) -> (Vec<f64>, Vec<f64>) {
    let t_out = model.shapes().output_steps;
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for w in windows {
        let out = model.forward(&w.x, DecodeMode::Autoregressive, t_out);
        for (yt, ot) in w.y.iter().zip(&out) {
            truth.extend_from_slice(yt);
            pred.extend_from_slice(ot);
        }
    }
    (truth, pred)
}

/// Chronological mini-batches. A trailing partial batch is dropped unless it
/// is the only batch.
fn batches(windows: &[SampleWindow], batch_size: usize) -> Vec<&[SampleWindow]> {
    let full = windows.len() / batch_size;
    if full == 0 {
        return vec![windows];
    }
    (0..full)
        .map(|b| &windows[b * batch_size..(b + 1) * batch_size])
        .collect()
}

/// Run the full loop and leave the best weights in `model`.
pub fn train<N: Network>(
    model: &mut N,
    train_set: &[SampleWindow],
    val_set: &[SampleWindow],
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<TrainReport, TrainError> {
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if cfg.batch_size == 0 {
        return Err(TrainError::ZeroBatchSize);
    }
    if cfg.epochs == 0 {
        return Err(TrainError::ZeroEpochs);
    }

    let mut opt_state = OptimizerState::new(model.params().len());
    let mut best_flat = model.params().flat;
    let mut best_score = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut diverged = false;

    'epochs: for epoch in 0..cfg.epochs {
        let mode = draw_epoch_mode(&cfg.schedule, epoch, rng);
        let teacher_forced = mode == EpochMode::TeacherForced;
        let lr = decayed_lr(cfg.optimizer.alpha0, cfg.optimizer.decay, epoch as u32);

        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for batch in batches(train_set, cfg.batch_size) {
            let (loss, grad) = bptt_gradient(model, batch, teacher_forced, &cfg.reg);
            if !loss.is_finite() || loss > cfg.divergence_threshold {
                diverged = true;
                break 'epochs;
            }
            loss_sum += loss;
            n_batches += 1;
            let mut flat = model.params().flat;
            apply_step(&mut flat, &grad, &mut opt_state, &cfg.optimizer, epoch as u32);
            model.set_from_flat(&flat);
        }
        let train_loss = loss_sum / n_batches as f64;

        let (val_maape, val_rmse) = if val_set.is_empty() {
            (None, None)
        } else {
            let (truth, pred) = eval_pairs(model, val_set);
            (maape(&truth, &pred).ok(), rmse(&truth, &pred).ok())
        };

        let score = val_maape.unwrap_or(train_loss);
        if score.is_finite() && score < best_score {
            best_score = score;
            best_epoch = epoch;
            best_flat = model.params().flat;
        }

        records.push(EpochRecord {
            epoch,
            mode,
            lr,
            train_loss,
            val_maape,
            val_rmse,
        });
    }

    model.set_from_flat(&best_flat);
    Ok(TrainReport {
        epochs: records,
        best_epoch,
        best_score,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerVariant;
    use crate::seq2seq::model::{Seq2SeqModel, Shapes};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_windows(n: usize, value: f64) -> Vec<SampleWindow> {
        let origin = chrono::NaiveDate::from_ymd_opt(2010, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        (0..n)
            .map(|_| SampleWindow {
                x: vec![vec![value]; 4],
                y: vec![vec![value]; 2],
                origin,
            })
            .collect()
    }

    fn small_model(seed: u64) -> Seq2SeqModel {
        let shapes = Shapes {
            input_steps: 4,
            output_steps: 2,
            input_width: 1,
            target_width: 1,
            hidden: 8,
            layers: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Seq2SeqModel::init(shapes, &mut rng, 1.0)
    }

    #[test]
    fn learns_a_constant_series() {
        let windows = constant_windows(32, 0.5);
        let mut model = small_model(1);
        let cfg = TrainConfig::new(60, 8, OptimizerConfig::new(OptimizerVariant::Adam, 0.01), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let report = train(&mut model, &windows, &windows[..4], &cfg, &mut rng).unwrap();
        assert!(!report.diverged);
        let out = forecast(&model, &windows[0].x, 2);
        let mse: f64 = out.iter().map(|r| (r[0] - 0.5) * (r[0] - 0.5)).sum::<f64>() / 2.0;
        assert!(mse < 1e-4, "final mse {mse}");
    }

    #[test]
    fn two_epoch_run_is_all_autoregressive() {
        let windows = constant_windows(8, 0.3);
        let mut model = small_model(3);
        let cfg = TrainConfig::new(2, 4, OptimizerConfig::new(OptimizerVariant::Sgd, 0.001), 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let report = train(&mut model, &windows, &[], &cfg, &mut rng).unwrap();
        assert_eq!(report.epochs.len(), 2);
        for r in &report.epochs {
            assert_eq!(r.mode, EpochMode::Autoregressive);
        }
    }

    #[test]
    fn identical_seeds_are_bit_reproducible() {
        let windows = constant_windows(16, 0.7);
        let cfg = TrainConfig::new(10, 4, OptimizerConfig::new(OptimizerVariant::Adam, 0.005), 5.0);
        let run = || {
            let mut model = small_model(9);
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            train(&mut model, &windows, &windows[..2], &cfg, &mut rng).unwrap();
            model.params().flat
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn partial_final_batch_dropped_unless_only() {
        let windows = constant_windows(10, 0.1);
        assert_eq!(batches(&windows, 4).len(), 2);
        assert_eq!(batches(&windows, 16).len(), 1);
        assert_eq!(batches(&windows, 16)[0].len(), 10);
        assert_eq!(batches(&windows, 5).len(), 2);
    }

    #[test]
    fn divergence_keeps_last_finite_weights() {
        let windows = constant_windows(8, 1.0);
        let mut model = small_model(5);
        // absurd learning rate forces the loss over the threshold
        let mut cfg =
            TrainConfig::new(50, 8, OptimizerConfig::new(OptimizerVariant::Sgd, 1e6), 5.0);
        cfg.divergence_threshold = 10.0;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let report = train(&mut model, &windows, &[], &cfg, &mut rng).unwrap();
        assert!(report.diverged);
        assert!(report.epochs.len() < 50);
        for v in &model.params().flat {
            assert!(v.is_finite());
        }
    }

    #[test]
    fn persistence_repeats_last_row() {
        let x = vec![vec![1.0, 10.0], vec![2.0, 20.0]];
        let out = persistence_forecast(&x, &[1], 3);
        assert_eq!(out, vec![vec![20.0], vec![20.0], vec![20.0]]);
    }

    #[test]
    fn input_validation() {
        let mut model = small_model(0);
        let cfg = TrainConfig::new(1, 1, OptimizerConfig::new(OptimizerVariant::Sgd, 0.01), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            train(&mut model, &[], &[], &cfg, &mut rng),
            Err(TrainError::EmptyTrainingSet)
        );
    }
}
