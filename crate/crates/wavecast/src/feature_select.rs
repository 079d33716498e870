//! Embedded feature selection through the elastic-net penalty: the 1-norm
//! term drives first-layer input weights toward zero, and per-feature
//! attribution scores read the surviving relevance off those weights.

use crate::net::params::ParamSet;
use crate::optim::RegularizerConfig;
use crate::seq2seq::Network;

/// Weights with magnitude at or below this count as zero in sparsity reports.
pub const ZERO_THRESHOLD: f64 = 1e-4;

/// Share of weights that survive the penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityReport {
    pub total: usize,
    pub nonzero: usize,
}

impl SparsityReport {
    pub fn density_percent(&self) -> f64 {
        100.0 * self.nonzero as f64 / self.total as f64
    }
}

/// Count weights above [`ZERO_THRESHOLD`] in magnitude.
pub fn nonzero_percentage(w: &[f64]) -> SparsityReport {
    SparsityReport {
        total: w.len(),
        nonzero: w.iter().filter(|v| v.abs() > ZERO_THRESHOLD).count(),
    }
}

/// Full elastic-net training objective: batch MSE plus λ₁‖w‖² + λ₂‖w‖₁.
/// Identical to the value [`bptt_gradient`] differentiates.
pub fn elastic_net_loss<N: Network>(
    model: &N,
    batch: &[crate::dataset::SampleWindow],
    teacher_forced: bool,
    reg: &RegularizerConfig,
) -> f64 {
    let (mse, _) = model.batch_grad(batch, teacher_forced);
    mse + reg.penalty(&model.params().flat)
}

/// Per-input-feature relevance: the sum of |w| over each column of every
/// first-layer input matrix, descending. Returns `(feature_index, score)`
/// pairs.
pub fn feature_attribution(params: &ParamSet, input_width: usize) -> Vec<(usize, f64)> {
    let mut scores = vec![0.0; input_width];
    for e in &params.catalog {
        let first_layer = e.name.starts_with("encoder.0.") || e.name.starts_with("trunk.0.");
        if first_layer && e.shape.len() == 2 && e.shape[1] == input_width {
            let data = &params.flat[e.offset..e.offset + e.len()];
            for (i, v) in data.iter().enumerate() {
                scores[i % input_width] += v.abs();
            }
        }
    }
    let mut ranked: Vec<(usize, f64)> = scores.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::gradcheck::finite_difference_gradient;
    use crate::seq2seq::{bptt_gradient, Seq2SeqModel, Shapes};
    use approx::assert_relative_eq;
    use chrono::NaiveDate;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn shapes() -> Shapes {
        Shapes {
            input_steps: 3,
            output_steps: 2,
            input_width: 3,
            target_width: 1,
            hidden: 4,
            layers: 1,
        }
    }

    fn batch(rng: &mut impl Rng) -> Vec<crate::dataset::SampleWindow> {
        let origin = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        (0..2)
            .map(|_| crate::dataset::SampleWindow {
                x: (0..3).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
                y: (0..2).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect(),
                origin,
            })
            .collect()
    }

    #[test]
    fn loss_gradient_composition_identity() {
        // the gradient of elastic_net_loss is exactly what bptt_gradient
        // returns; verify both against finite differences of the loss
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = Seq2SeqModel::init(shapes(), &mut rng, 1.0);
        let batch = batch(&mut rng);
        let reg = RegularizerConfig { lambda1: 0.05, lambda2: 0.0 };
        let (loss, grad) = bptt_gradient(&model, &batch, true, &reg);
        assert_relative_eq!(
            loss,
            elastic_net_loss(&model, &batch, true, &reg),
            epsilon = 1e-10
        );
        let w = model.params().flat;
        let f = |probe: &[f64]| {
            let mut m = model.clone();
            m.set_from_flat(probe);
            elastic_net_loss(&m, &batch, true, &reg)
        };
        let numeric = finite_difference_gradient(&f, &w, 1e-5);
        for (a, b) in grad.iter().zip(&numeric) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn sparsity_counts() {
        let w = [0.5, -0.3, 1e-5, 0.0, -1e-4, 2e-4];
        let r = nonzero_percentage(&w);
        assert_eq!(r.total, 6);
        assert_eq!(r.nonzero, 3);
        assert_relative_eq!(r.density_percent(), 50.0);
    }

    #[test]
    fn attribution_ranks_heavy_columns_first() {
        let mut model = Seq2SeqModel::zeros(shapes());
        // feature 1 heavy, feature 0 light, feature 2 zero
        let layer = &mut model.encoder[0];
        for m in [&mut layer.w_fx, &mut layer.w_ix] {
            for r in 0..4 {
                m.set(r, 0, 0.1);
                m.set(r, 1, 2.0);
            }
        }
        let ranked = feature_attribution(&model.params(), 3);
        assert_eq!(ranked[0].0, 1);
        assert_relative_eq!(ranked[0].1, 16.0);
        assert_eq!(ranked[1].0, 0);
        assert_relative_eq!(ranked[1].1, 0.8);
        assert_eq!(ranked[2].1, 0.0);
    }

    #[test]
    fn attribution_ignores_recurrent_and_later_layers() {
        let two_layer = Shapes { layers: 2, ..shapes() };
        let mut model = Seq2SeqModel::zeros(two_layer);
        // recurrent matrix of layer 0 (shape h×h ≠ h×d) and layer-1 input
        // matrix (columns = h) must not leak into feature scores
        model.encoder[0].w_fh.set(0, 0, 5.0);
        model.encoder[1].w_fx.set(0, 0, 5.0);
        let ranked = feature_attribution(&model.params(), 3);
        for (_, score) in ranked {
            assert_eq!(score, 0.0);
        }
    }
}
