//! Elastic-net feature selection: sweep the 1-norm strength and watch the
//! noise feature's first-layer weights die off while the real one survives.
//!
//!     cargo run --release --example feature_selection

use chrono::{Duration, NaiveDate};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wavecast::dataset::SampleWindow;
use wavecast::feature_select::{feature_attribution, nonzero_percentage};
use wavecast::optim::{OptimizerConfig, OptimizerVariant, RegularizerConfig};
use wavecast::seq2seq::{train, Network, Seq2SeqModel, Shapes, TrainConfig};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // feature 0 drives the target, feature 1 is pure noise
    let n = 400;
    let signal: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (i as f64 * 0.15).sin()).collect();
    let noise: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let start = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let (t, t_out) = (6, 2);
    let windows: Vec<SampleWindow> = (0..n - t - t_out + 1)
        .map(|o| SampleWindow {
            x: (o..o + t).map(|i| vec![signal[i], noise[i]]).collect(),
            y: (o + t..o + t + t_out).map(|i| vec![signal[i]]).collect(),
            origin: start + Duration::hours(o as i64),
        })
        .collect();
    let shapes = Shapes {
        input_steps: t,
        output_steps: t_out,
        input_width: 2,
        target_width: 1,
        hidden: 16,
        layers: 1,
    };
    for lambda2 in [0.0, 0.01, 0.02] {
        let mut init_rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = Seq2SeqModel::init(shapes, &mut init_rng, 1.0);
        // decayed SGD and no validation snapshot: the kept weights are the
        // late-epoch ones the 1-norm penalty has actually shrunk
        let mut cfg = TrainConfig::new(
            30,
            16,
            OptimizerConfig::new(OptimizerVariant::Sgd, 0.05).with_decay(0.85),
            8.0,
        );
        cfg.reg = RegularizerConfig { lambda1: 0.0, lambda2 };
        let mut train_rng = ChaCha8Rng::seed_from_u64(2);
        train(&mut model, &windows, &[], &cfg, &mut train_rng).unwrap();

        let params = model.params();
        let sparsity = nonzero_percentage(&params.flat);
        let ranked = feature_attribution(&params, 2);
        println!("lambda2 = {lambda2}");
        println!("  weight density: {:.1}%", sparsity.density_percent());
        for (idx, score) in ranked {
            let name = if idx == 0 { "signal" } else { "noise" };
            println!("  {name}: attribution {score:.3}");
        }
    }
}
