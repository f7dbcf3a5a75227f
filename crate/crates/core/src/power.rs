//! Receiver power-consumption and energy-efficiency models.
//!
//! The ADC power grows exponentially with resolution and linearly with the
//! sampling rate; the fully digital receiver pays for one LNA, one RF chain,
//! and an ADC pair per antenna, while the hybrid receiver pays per antenna
//! for the phase-shifter network and per RF chain for the conversion path.

use serde::{Deserialize, Serialize};

use crate::config::Scenario;

/// Component power draws in Watts plus the ADC figure of merit in
/// Joules per conversion step per Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    pub lna_w: f64,
    pub rf_chain_w: f64,
    pub splitter_w: f64,
    pub combiner_w: f64,
    pub phase_shifter_w: f64,
    pub adc_fom_j_per_step_hz: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            lna_w: 25e-3,
            rf_chain_w: 43e-3,
            splitter_w: 19.5e-3,
            combiner_w: 19.5e-3,
            phase_shifter_w: 23e-3,
            adc_fom_j_per_step_hz: 494e-15,
        }
    }
}

/// Power of one `bits`-resolution ADC sampling at `sample_rate_hz`:
/// `kappa * fs * 2^bits`.
pub fn adc_power(bits: u32, sample_rate_hz: f64, fom: f64) -> f64 {
    assert!(bits >= 1 && sample_rate_hz > 0.0);
    fom * sample_rate_hz * 2f64.powi(bits as i32)
}

/// Fully digital receiver: `M (P_LNA + P_RF + 2 P_ADC)`.
pub fn digital_receiver_power(scenario: &Scenario, pm: &PowerModel) -> f64 {
    let p_adc = adc_power(
        scenario.adc_bits(),
        scenario.sample_rate_hz(),
        pm.adc_fom_j_per_step_hz,
    );
    scenario.antennas() as f64 * (pm.lna_w + pm.rf_chain_w + 2.0 * p_adc)
}

/// Hybrid receiver:
/// `M (P_LNA + P_SP + Nrf P_PS) + Nrf (P_RF + P_C + 2 P_ADC)`.
pub fn hybrid_receiver_power(scenario: &Scenario, pm: &PowerModel) -> f64 {
    let p_adc = adc_power(
        scenario.adc_bits(),
        scenario.sample_rate_hz(),
        pm.adc_fom_j_per_step_hz,
    );
    let m = scenario.antennas() as f64;
    let nrf = scenario.rf_chains() as f64;
    m * (pm.lna_w + pm.splitter_w + nrf * pm.phase_shifter_w)
        + nrf * (pm.rf_chain_w + pm.combiner_w + 2.0 * p_adc)
}

/// Energy efficiency `R / P` in bit/s/Hz/W.
pub fn energy_efficiency(rate: f64, power_w: f64) -> f64 {
    assert!(power_w > 0.0, "power must be positive");
    rate / power_w
}

/// Energy efficiency in bits per Joule: `R * Bw / P`.
pub fn energy_efficiency_bits_per_joule(rate: f64, bandwidth_hz: f64, power_w: f64) -> f64 {
    energy_efficiency(rate, power_w) * bandwidth_hz
}
