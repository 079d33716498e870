//! Epoch-scheduled teacher forcing with inverse-sigmoid decay.
//!
//! The forcing probability at epoch `ep` is ε = k/(k + e^(ep/k)). One coin
//! flip per epoch picks the decoder mode for the whole epoch, and the final
//! two epochs always run autoregressively so training ends in the same
//! regime as inference.

use rand::Rng;

/// Mode used by the decoder for every batch of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochMode {
    TeacherForced,
    Autoregressive,
}

/// Teacher-forcing probability ε_ep = k/(k + e^(ep/k)); `k ≥ 1` controls how
/// slowly the probability decays.
pub fn epsilon(epoch: usize, k: f64) -> f64 {
    assert!(k >= 1.0, "decay constant k must be at least 1");
    k / (k + (epoch as f64 / k).exp())
}

/// Per-run schedule: decay constant, total epochs and the length of the
/// always-autoregressive tail.
#[derive(Debug, Clone, Copy)]
pub struct SchedulePolicy {
    pub k: f64,
    pub epochs: usize,
    pub forced_tail: usize,
}

impl SchedulePolicy {
    pub fn new(k: f64, epochs: usize) -> Self {
        SchedulePolicy { k, epochs, forced_tail: 2 }
    }

    /// Whether the given epoch falls in the always-autoregressive tail.
    pub fn in_tail(&self, epoch: usize) -> bool {
        epoch + self.forced_tail >= self.epochs
    }
}

/// One coin flip deciding the decoder mode for a whole epoch.
pub fn draw_epoch_mode(policy: &SchedulePolicy, epoch: usize, rng: &mut impl Rng) -> EpochMode {
    if policy.in_tail(epoch) {
        return EpochMode::Autoregressive;
    }
    if rng.gen::<f64>() < epsilon(epoch, policy.k) {
        EpochMode::TeacherForced
    } else {
        EpochMode::Autoregressive
    }
}
