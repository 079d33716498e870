//! Train the encoder-decoder on a noisy sine wave and compare it against the
//! persistence baseline.
//!
//!     cargo run --release --example sine_forecast

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wavecast::dataset::SampleWindow;
use wavecast::metrics::maape;
use wavecast::optim::{OptimizerConfig, OptimizerVariant};
use wavecast::seq2seq::{
    forecast, persistence_forecast, train, Seq2SeqModel, Shapes, TrainConfig,
};

fn windows(series: &[f64], t: usize, t_out: usize) -> Vec<SampleWindow> {
    let origin = chrono::NaiveDate::from_ymd_opt(2009, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    (0..series.len() - t - t_out + 1)
        .map(|o| SampleWindow {
            x: series[o..o + t].iter().map(|&v| vec![v]).collect(),
            y: series[o + t..o + t + t_out].iter().map(|&v| vec![v]).collect(),
            origin: origin + chrono::Duration::hours(o as i64),
        })
        .collect()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let series: Vec<f64> = (0..600)
        .map(|i| 1.5 + (i as f64 * 0.2).sin() + rng.gen_range(-0.02..0.02))
        .collect();

    let (t, t_out) = (10, 5);
    let all = windows(&series, t, t_out);
    let n = all.len();
    let train_set = &all[..n * 6 / 10];
    let val_set = &all[n * 6 / 10..n * 8 / 10];
    let test_set = &all[n * 8 / 10..];

    let shapes = Shapes {
        input_steps: t,
        output_steps: t_out,
        input_width: 1,
        target_width: 1,
        hidden: 64,
        layers: 1,
    };
    let mut model = Seq2SeqModel::init(shapes, &mut rng, 1.0);
    let cfg = TrainConfig::new(30, 16, OptimizerConfig::new(OptimizerVariant::Adam, 0.001), 12.0);
    let report = train(&mut model, train_set, val_set, &cfg, &mut rng).unwrap();
    println!(
        "trained {} epochs, best epoch {} (val MAAPE {:.4})",
        report.epochs.len(),
        report.best_epoch,
        report.best_score
    );

    let mut truth = Vec::new();
    let mut model_pred = Vec::new();
    let mut persist_pred = Vec::new();
    for w in test_set {
        let m = forecast(&model, &w.x, t_out);
        let p = persistence_forecast(&w.x, &[0], t_out);
        for step in 0..t_out {
            truth.push(w.y[step][0]);
            model_pred.push(m[step][0]);
            persist_pred.push(p[step][0]);
        }
    }
    let model_maape = maape(&truth, &model_pred).unwrap();
    let persist_maape = maape(&truth, &persist_pred).unwrap();
    println!("test MAAPE  seq2seq     = {model_maape:.4}");
    println!("test MAAPE  persistence = {persist_maape:.4}");
}
