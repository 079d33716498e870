//! Spectral moments and bulk wave parameters from a measured-style spectrum.
//!
//!     cargo run --example wave_physics

use wavecast::wave_physics::{
    average_period, energy_flux, significant_wave_height, spectral_moment, PhysicsConstants,
    SpectrumSample,
};

fn main() {
    // a narrow-banded swell spectrum centered near 0.1 Hz
    let freqs: Vec<f64> = (1..=80).map(|i| i as f64 * 0.005).collect();
    let densities: Vec<f64> = freqs
        .iter()
        .map(|f| {
            let d = (f - 0.1) / 0.02;
            6.0 * (-0.5 * d * d).exp()
        })
        .collect();
    let spectrum = SpectrumSample::new(freqs, densities).expect("valid spectrum");

    let m0 = spectral_moment(&spectrum, 0).unwrap();
    let m_neg1 = spectral_moment(&spectrum, -1).unwrap();
    let hs = significant_wave_height(&spectrum).unwrap();
    let ta = average_period(&spectrum).unwrap();
    println!("zeroth moment      m0   = {m0:.4} m^2");
    println!("minus-first moment m-1  = {m_neg1:.4}");
    println!("significant height H_s  = {hs:.2} m");
    println!("average period     T_a  = {ta:.2} s");

    let c = PhysicsConstants::default();
    let flux = energy_flux(hs, ta, &c).unwrap();
    println!("energy flux        P    = {:.1} W/m ({:.2} kW/m)", flux, flux / 1000.0);

    // the benchmark sea state: 2 m significant height, 8 s average period
    let reference = energy_flux(2.0, 8.0, &c).unwrap();
    println!("reference P(2 m, 8 s)   = {reference:.1} W/m");
}
