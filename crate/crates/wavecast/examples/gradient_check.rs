//! Check the analytic backpropagation gradients against central finite
//! differences for the encoder-decoder network.
//!
//!     cargo run --release --example gradient_check

use chrono::NaiveDate;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wavecast::dataset::SampleWindow;
use wavecast::net::gradcheck::{finite_difference_gradient, max_relative_error};
use wavecast::optim::RegularizerConfig;
use wavecast::seq2seq::{bptt_gradient, Network, Seq2SeqModel, Shapes};

fn main() {
    let shapes = Shapes {
        input_steps: 3,
        output_steps: 2,
        input_width: 2,
        target_width: 1,
        hidden: 4,
        layers: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let origin = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();

    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let model = Seq2SeqModel::init(shapes, &mut rng, 1.0);
        let batch: Vec<SampleWindow> = (0..2)
            .map(|_| SampleWindow {
                x: (0..3).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
                y: (0..2).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect(),
                origin,
            })
            .collect();

        let (_, analytic) = bptt_gradient(&model, &batch, false, &RegularizerConfig::default());
        let base = model.params().flat;
        let f = |w: &[f64]| {
            let mut probe = model.clone();
            probe.set_from_flat(w);
            probe.batch_grad(&batch, false).0
        };
        let numeric = finite_difference_gradient(&f, &base, 1e-5);
        let err = max_relative_error(&analytic, &numeric, 1e-6);
        println!("trial {trial}: {} parameters, max relative error {err:.3e}", base.len());
        worst = worst.max(err);
    }
    println!("worst over all trials: {worst:.3e} (tolerance 1e-4)");
    assert!(worst < 1e-4);
}
