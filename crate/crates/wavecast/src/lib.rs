//! Ocean-wave forecasting toolkit: buoy data ingestion, wave-physics
//! conversions, sequence-to-sequence recurrent networks trained with
//! scheduled teacher forcing, elastic-net feature selection and
//! Gaussian-process hyperparameter search.
//!
//! The crate is organized around a batch workflow:
//!
//! 1. [`ndbc`] parses standard-meteorological buoy files and aligns stations
//!    on common timestamps.
//! 2. [`wave_physics`] converts spectra and bulk parameters into derived
//!    quantities such as significant wave height and energy flux.
//! 3. [`dataset`] slices aligned tables into supervised windows with
//!    chronological train/validation/test splits.
//! 4. [`seq2seq`] holds the encoder-decoder model, the LSTM/RNN baselines
//!    and the training loop; [`optim`] the update rules; [`metrics`] the
//!    evaluation suite.
//! 5. [`hypertune`] searches the hyperparameter grid with a GP surrogate,
//!    and [`feature_select`] reads feature relevance off the penalized
//!    first-layer weights.
//!
//! The `wavecast` binary exposes the same steps as CLI subcommands; the
//! `examples/` directory shows one runnable program per capability.

pub mod cli;
pub mod dataset;
pub mod feature_select;
pub mod hypertune;
pub mod linalg;
pub mod metrics;
pub mod ndbc;
pub mod net;
pub mod optim;
pub mod seq2seq;
pub mod wave_physics;
