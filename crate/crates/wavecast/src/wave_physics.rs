//! Spectral-moment integration and the significant-wave-height / average-period
//! / energy-flux conversions.
//!
//! The spectral density moment of order `r` is the integral of `w^r S(w)` over
//! the sampled frequency band, approximated with the trapezoid rule. The band
//! is never extrapolated; NDBC spectra are band-limited and the pipeline
//! computes power from the measured `H_s` and `A` columns anyway.

use thiserror::Error;

/// Seawater density and gravity used in the energy-flux formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConstants {
    /// Seawater density, kg/m³.
    pub rho: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
}

impl Default for PhysicsConstants {
    fn default() -> Self {
        PhysicsConstants {
            rho: 1025.0,
            g: 9.80665,
        }
    }
}

/// A sampled wave spectrum: angular frequencies (rad/s) with their spectral
/// densities (m²·s).
#[derive(Debug, Clone)]
pub struct SpectrumSample {
    frequencies: Vec<f64>,
    densities: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("spectrum needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("frequencies must be strictly increasing and positive")]
    BadFrequencies,
    #[error("spectral densities must be nonnegative and finite")]
    BadDensities,
    #[error("negative-order moment requires strictly positive frequencies")]
    SingularIntegrand,
    #[error("degenerate spectrum: zeroth moment is zero")]
    ZeroMoment,
    #[error("wave height must be nonnegative, got {0}")]
    NegativeHeight(f64),
    #[error("wave period must be positive, got {0}")]
    NonPositivePeriod(f64),
}

impl SpectrumSample {
    pub fn new(frequencies: Vec<f64>, densities: Vec<f64>) -> Result<Self, PhysicsError> {
        if frequencies.len() < 2 || frequencies.len() != densities.len() {
            return Err(PhysicsError::TooFewSamples(frequencies.len().min(densities.len())));
        }
        // Zero is allowed as a leading frequency; negative orders reject it later.
        if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0)
            || frequencies.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(PhysicsError::BadFrequencies);
        }
        if densities.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(PhysicsError::BadDensities);
        }
        Ok(SpectrumSample { frequencies, densities })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }
}

/// Trapezoid-rule spectral density moment of order `r` over the sampled band.
pub fn spectral_moment(spectrum: &SpectrumSample, r: i32) -> Result<f64, PhysicsError> {
    let w = spectrum.frequencies();
    let s = spectrum.densities();
    if r < 0 && w[0] <= 0.0 {
        return Err(PhysicsError::SingularIntegrand);
    }
    let mut acc = 0.0;
    for i in 0..w.len() - 1 {
        let f0 = w[i].powi(r) * s[i];
        let f1 = w[i + 1].powi(r) * s[i + 1];
        acc += 0.5 * (f0 + f1) * (w[i + 1] - w[i]);
    }
    Ok(acc)
}

/// `H_s = 4 · SDM(0)^{1/2}`, meters.
pub fn significant_wave_height(spectrum: &SpectrumSample) -> Result<f64, PhysicsError> {
    Ok(4.0 * spectral_moment(spectrum, 0)?.sqrt())
}

/// `A = SDM(-1) / SDM(0)`, seconds.
pub fn average_period(spectrum: &SpectrumSample) -> Result<f64, PhysicsError> {
    let m0 = spectral_moment(spectrum, 0)?;
    if m0 <= 0.0 {
        return Err(PhysicsError::ZeroMoment);
    }
    Ok(spectral_moment(spectrum, -1)? / m0)
}

/// Energy flux `P = ρ g² / (64π) · H_s² · A`, W per meter of wave crest.
pub fn energy_flux(hs: f64, a: f64, c: &PhysicsConstants) -> Result<f64, PhysicsError> {
    if hs < 0.0 {
        return Err(PhysicsError::NegativeHeight(hs));
    }
    if a <= 0.0 {
        return Err(PhysicsError::NonPositivePeriod(a));
    }
    Ok(c.rho * c.g * c.g / (64.0 * std::f64::consts::PI) * hs * hs * a)
}
