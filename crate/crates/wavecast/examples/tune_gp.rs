//! Gaussian-process hyperparameter search on a cheap synthetic objective.
//!
//!     cargo run --example tune_gp

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavecast::hypertune::{tune, Candidate, Dimension, ParamGrid, TuneConfig};

fn main() {
    // pretend "validation MAAPE" surface over three knobs, best at (0.004, 64, 20)
    let grid = ParamGrid::new(vec![
        Dimension::new("learning_rate", (1..=10).map(|i| i as f64 * 0.001).collect()),
        Dimension::new("hidden", vec![16.0, 32.0, 64.0, 128.0]),
        Dimension::new("input_steps", vec![5.0, 10.0, 20.0, 40.0]),
    ]);
    println!("grid size: {} candidates", grid.len());

    let objective = |c: &Candidate| -> Result<f64, String> {
        let v = grid.values(c);
        let lr_term = ((v[0] - 0.004) * 250.0).powi(2);
        let hidden_term = ((v[1].log2() - 6.0) / 3.0).powi(2);
        let steps_term = ((v[2] - 20.0) / 35.0).powi(2);
        Ok(0.12 + lr_term + hidden_term + steps_term)
    };

    let cfg = TuneConfig { budget: 25, ..TuneConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let result = tune(&grid, objective, &cfg, &mut rng, None).unwrap();

    println!("evaluated {} candidates", result.history.len());
    println!("best score: {:.4}", result.best_score);
    for (dim, value) in grid.dims.iter().zip(grid.values(&result.best)) {
        println!("  {} = {}", dim.name, value);
    }
}
