//! Model checkpoints: the flat parameter vector in the binary format plus a
//! small text manifest describing how to rebuild the network around it.

use crate::net::params::{ParamError, ParamSet};
use crate::seq2seq::{BaselineKind, Network, RecurrentHeadModel, Seq2SeqModel, Shapes};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("params: {0}")]
    Params(#[from] ParamError),
    #[error("manifest line {0} is malformed")]
    BadManifestLine(usize),
    #[error("manifest is missing key '{0}'")]
    MissingKey(&'static str),
    #[error("unknown model kind '{0}'")]
    UnknownKind(String),
    #[error("parameter count {got} does not match the manifest shapes ({want})")]
    SizeMismatch { got: usize, want: usize },
}

/// A rebuilt model of either family.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Seq2Seq(Seq2SeqModel),
    Baseline(RecurrentHeadModel),
}

impl AnyModel {
    pub fn shapes(&self) -> Shapes {
        match self {
            AnyModel::Seq2Seq(m) => m.shapes(),
            AnyModel::Baseline(m) => m.shapes(),
        }
    }

    pub fn forecast(&self, x: &[Vec<f64>], t_out: usize) -> Vec<Vec<f64>> {
        match self {
            AnyModel::Seq2Seq(m) => crate::seq2seq::forecast(m, x, t_out),
            AnyModel::Baseline(m) => crate::seq2seq::forecast(m, x, t_out),
        }
    }

    fn kind_label(&self) -> &'static str {
        match self {
            AnyModel::Seq2Seq(_) => "seq2seq",
            AnyModel::Baseline(m) if m.kind().is_lstm() && m.kind().is_multi_layer() => "ml-lstm",
            AnyModel::Baseline(m) if m.kind().is_lstm() => "sl-lstm",
            AnyModel::Baseline(m) if m.kind().is_multi_layer() => "ml-rnn",
            AnyModel::Baseline(_) => "sl-rnn",
        }
    }

    fn params(&self) -> ParamSet {
        match self {
            AnyModel::Seq2Seq(m) => m.params(),
            AnyModel::Baseline(m) => m.params(),
        }
    }
}

/// Write `<prefix>.bin` and `<prefix>.manifest`.
pub fn save(prefix: &Path, model: &AnyModel) -> Result<(), CheckpointError> {
    let s = model.shapes();
    let manifest = format!(
        "kind = {}\ninput_steps = {}\noutput_steps = {}\ninput_width = {}\ntarget_width = {}\nhidden = {}\nlayers = {}\n",
        model.kind_label(), s.input_steps, s.output_steps, s.input_width, s.target_width, s.hidden, s.layers
    );
    std::fs::write(with_ext(prefix, "manifest"), manifest)?;
    let mut buf = Vec::new();
    model.params().write_binary(&mut buf)?;
    std::fs::write(with_ext(prefix, "bin"), buf)?;
    Ok(())
}

/// Rebuild a model from `<prefix>.manifest` and `<prefix>.bin`.
pub fn load(prefix: &Path) -> Result<AnyModel, CheckpointError> {
    let manifest = std::fs::read_to_string(with_ext(prefix, "manifest"))?;
    let mut kind = None;
    let mut values = std::collections::HashMap::new();
    for (i, raw) in manifest.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(CheckpointError::BadManifestLine(i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "kind" {
            kind = Some(value.to_string());
        } else {
            let v: usize = value
                .parse()
                .map_err(|_| CheckpointError::BadManifestLine(i + 1))?;
            values.insert(key.to_string(), v);
        }
    }
    let get = |k: &'static str| values.get(k).copied().ok_or(CheckpointError::MissingKey(k));
    let shapes = Shapes {
        input_steps: get("input_steps")?,
        output_steps: get("output_steps")?,
        input_width: get("input_width")?,
        target_width: get("target_width")?,
        hidden: get("hidden")?,
        layers: get("layers")?,
    };
    let kind = kind.ok_or(CheckpointError::MissingKey("kind"))?;

    let bytes = std::fs::read(with_ext(prefix, "bin"))?;
    let params = ParamSet::read_binary(&mut bytes.as_slice())?;

    // rng is irrelevant: every weight is overwritten from the checkpoint
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = match kind.as_str() {
        "seq2seq" => AnyModel::Seq2Seq(Seq2SeqModel::zeros(shapes)),
        other => {
            let baseline_kind: BaselineKind = other
                .parse()
                .map_err(|_| CheckpointError::UnknownKind(other.to_string()))?;
            AnyModel::Baseline(RecurrentHeadModel::build(baseline_kind, shapes, &mut rng, 0.0))
        }
    };
    let want = model.params().len();
    if params.len() != want {
        return Err(CheckpointError::SizeMismatch { got: params.len(), want });
    }
    match &mut model {
        AnyModel::Seq2Seq(m) => m.set_from_flat(&params.flat),
        AnyModel::Baseline(m) => m.set_from_flat(&params.flat),
    }
    Ok(model)
}

fn with_ext(prefix: &Path, ext: &str) -> std::path::PathBuf {
    let mut p = prefix.as_os_str().to_owned();
    p.push(".");
    p.push(ext);
    std::path::PathBuf::from(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn shapes() -> Shapes {
        Shapes {
            input_steps: 3,
            output_steps: 2,
            input_width: 2,
            target_width: 1,
            hidden: 4,
            layers: 1,
        }
    }

    #[test]
    fn seq2seq_roundtrip_preserves_forecasts() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("model");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = Seq2SeqModel::init(shapes(), &mut rng, 1.0);
        let x = vec![vec![0.2, -0.1], vec![0.4, 0.0], vec![-0.3, 0.5]];
        let before = crate::seq2seq::forecast(&model, &x, 2);
        save(&prefix, &AnyModel::Seq2Seq(model)).unwrap();
        let loaded = load(&prefix).unwrap();
        let after = loaded.forecast(&x, 2);
        for (a, b) in before.iter().zip(&after) {
            assert_relative_eq!(a[0], b[0], max_relative = 1e-15);
        }
    }

    #[test]
    fn baseline_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("baseline");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = RecurrentHeadModel::build(BaselineKind::MlLstmFcl, shapes(), &mut rng, 1.0);
        let x = vec![vec![0.2, -0.1]; 3];
        let before = crate::seq2seq::forecast(&model, &x, 2);
        save(&prefix, &AnyModel::Baseline(model)).unwrap();
        let loaded = load(&prefix).unwrap();
        assert_eq!(loaded.forecast(&x, 2), before);
    }

    #[test]
    fn corrupt_manifest_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("bad");
        std::fs::write(prefix.with_extension("manifest"), "kind = seq2seq\nhidden\n").unwrap();
        assert!(matches!(
            load(&prefix),
            Err(CheckpointError::BadManifestLine(2))
        ));
    }
}
