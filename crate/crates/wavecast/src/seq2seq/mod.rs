//! Encoder-decoder forecasting networks, the LSTM/RNN+FCL baselines,
//! epoch-scheduled teacher forcing and the training loop.

pub mod model;
pub mod schedule;
pub mod train;

pub use model::{
    bptt_gradient, BaselineKind, DecodeMode, Network, RecurrentHeadModel, Seq2SeqModel, Shapes,
};
pub use schedule::{draw_epoch_mode, epsilon, EpochMode, SchedulePolicy};
pub use train::{forecast, persistence_forecast, train, EpochRecord, TrainConfig, TrainError, TrainReport};
