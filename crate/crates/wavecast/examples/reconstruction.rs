//! Reconstruct a "failed" station's wave-height series from two correlated
//! neighbor stations using the single-layer LSTM baseline.
//!
//!     cargo run --release --example reconstruction

use chrono::{Duration, NaiveDate};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wavecast::dataset::{build_reconstruction_set, ReconstructionTiming};
use wavecast::metrics::report;
use wavecast::ndbc::{AlignedTable, ColumnKey};
use wavecast::optim::{OptimizerConfig, OptimizerVariant};
use wavecast::seq2seq::{forecast, train, BaselineKind, RecurrentHeadModel, Shapes, TrainConfig};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // one shared swell signal observed with station-specific offsets and noise
    let n = 800;
    let swell: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64 * 0.05).sin()).collect();
    let obs = |scale: f64, offset: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        swell
            .iter()
            .map(|s| scale * s + offset + rng.gen_range(-0.05..0.05))
            .collect()
    };
    let start = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let timestamps = (0..n).map(|i| start + Duration::hours(i as i64)).collect();
    let table = AlignedTable::new(
        timestamps,
        vec![
            (ColumnKey::new("A", "WVHT"), obs(1.0, 0.1, &mut rng)),
            (ColumnKey::new("B", "WVHT"), obs(0.9, -0.2, &mut rng)),
            (ColumnKey::new("C", "WVHT"), obs(1.1, 0.0, &mut rng)),
        ],
    );

    let t = 6;
    let windows = build_reconstruction_set(
        &table,
        &ColumnKey::new("C", "WVHT"),
        &[ColumnKey::new("A", "WVHT"), ColumnKey::new("B", "WVHT")],
        t,
        ReconstructionTiming::Nowcast,
    )
    .unwrap();
    let n = windows.len();
    let train_set = &windows[..n * 6 / 10];
    let val_set = &windows[n * 6 / 10..n * 8 / 10];
    let test_set = &windows[n * 8 / 10..];

    let shapes = Shapes {
        input_steps: t,
        output_steps: 1,
        input_width: 2,
        target_width: 1,
        hidden: 32,
        layers: 1,
    };
    let mut model = RecurrentHeadModel::build(BaselineKind::SlLstmFcl, shapes, &mut rng, 1.0);
    let cfg = TrainConfig::new(25, 32, OptimizerConfig::new(OptimizerVariant::Adam, 0.005), 10.0);
    train(&mut model, train_set, val_set, &cfg, &mut rng).unwrap();

    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for w in test_set {
        truth.push(w.y[0][0]);
        pred.push(forecast(&model, &w.x, 1)[0][0]);
    }
    let m = report(&truth, &pred).unwrap();
    println!("reconstruction of C:WVHT from A and B over {} held-out rows", truth.len());
    println!("  RMSE  = {:.4} m", m.rmse);
    println!("  MAAPE = {:.4}", m.maape);
    if let Some(r2) = m.r2 {
        println!("  r^2   = {r2:.4}");
    }
}
