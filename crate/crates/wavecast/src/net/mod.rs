//! Recurrent cells, dense layers, parameter flattening and the
//! finite-difference gradient oracle.

pub mod cells;
pub mod gradcheck;
pub mod params;

pub use cells::{dense_forward, lstm_step, rnn_step, Activation, DenseWeights, LstmState, LstmWeights, RnnWeights};
pub use gradcheck::finite_difference_gradient;
pub use params::{CatalogEntry, ParamSet};
