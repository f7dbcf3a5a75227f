//! Scenario configuration and derived scalars.
//!
//! [`SystemConfig`] holds every knob of the simulated uplink; [`Scenario`]
//! bundles a validated config with its derived quantities (subcarrier count,
//! sampling rate, noise variance, ...). All downstream modules take a
//! `Scenario`, so an invalid configuration can never reach the math.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the analysis obtains the distortion factor for a given ADC resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaModel {
    /// Exact MSE of the Lloyd-Max quantizer (default).
    #[default]
    LloydMax,
    /// Exponential fit `2^(-1.74 b + 0.28)`.
    Fit,
}

/// All scenario scalars of the uplink.
///
/// `Default` is the headline simulation scenario: a 128-antenna base station
/// with 4 RF chains serving 4 users over 128 data subcarriers of 100 MHz each
/// at a 300 GHz carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    /// Number of base-station antennas (M).
    pub antennas: usize,
    /// Number of RF chains feeding ADC pairs.
    pub rf_chains: usize,
    /// Number of single-antenna users.
    pub users: usize,
    /// Number of data-bearing subcarriers (K).
    pub data_subcarriers: usize,
    /// Oversampling ratio: total subcarriers are `osr * data_subcarriers`.
    pub osr: usize,
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing_hz: f64,
    /// ADC resolution in bits per real dimension.
    pub adc_bits: u32,
    /// Signal-to-noise ratio in dB (`rho = symbol_power / noise_var`).
    pub snr_db: f64,
    /// Average transmit power per symbol (dimensionless).
    pub symbol_power: f64,
    /// Multipath components per user (L).
    pub paths_per_user: usize,
    /// Maximum delay taps at Nyquist rate (D0). `None` defaults to K/4.
    pub nyquist_delay_taps: Option<usize>,
    /// Distortion-factor source for the analysis.
    pub gamma_model: GammaModel,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            antennas: 128,
            rf_chains: 4,
            users: 4,
            data_subcarriers: 128,
            osr: 1,
            carrier_hz: 300e9,
            subcarrier_spacing_hz: 100e6,
            adc_bits: 3,
            snr_db: 20.0,
            symbol_power: 1.0,
            paths_per_user: 3,
            nyquist_delay_taps: None,
            gamma_model: GammaModel::LloydMax,
        }
    }
}

/// Quantities derived from a [`SystemConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScalars {
    /// Total subcarriers Nc = osr * K.
    pub total_subcarriers: usize,
    /// Sampling rate fs = Nc * subcarrier spacing, Hz.
    pub sample_rate_hz: f64,
    /// Transmission bandwidth Bw = K * subcarrier spacing, Hz.
    pub bandwidth_hz: f64,
    /// Delay taps at the sampling rate, D = osr * D0.
    pub delay_taps: usize,
    /// Delay taps at Nyquist rate (D0 after defaulting).
    pub nyquist_delay_taps: usize,
    /// Noise variance per antenna, `symbol_power / 10^(snr_db/10)`.
    pub noise_variance: f64,
    /// Linear SNR `rho = symbol_power / noise_variance`.
    pub snr_linear: f64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("antenna, RF-chain, user, subcarrier, and path counts must be positive")]
    ZeroDimension,
    #[error("oversampling ratio must be a positive integer")]
    ZeroOsr,
    #[error("users ({users}) must not exceed RF chains ({rf_chains})")]
    TooManyUsers { users: usize, rf_chains: usize },
    #[error("RF chains ({rf_chains}) must not exceed antennas ({antennas})")]
    TooManyChains { rf_chains: usize, antennas: usize },
    #[error("data subcarriers ({0}) must be divisible by 4 when the delay spread is defaulted to K/4")]
    IndivisibleSubcarriers(usize),
    #[error("delay taps D0 ({d0}) must not exceed the data subcarriers ({k})")]
    DelaySpreadTooLong { d0: usize, k: usize },
    #[error("carrier frequency, subcarrier spacing, and symbol power must be positive and finite")]
    NonPositiveScalar,
    #[error("ADC resolution must be between 1 and 12 bits, got {0}")]
    BadResolution(u32),
}

impl SystemConfig {
    /// Validate the configuration and compute the derived scalars.
    ///
    /// Pure: the same config always yields the same scalars.
    pub fn derive(&self) -> Result<DerivedScalars, ConfigError> {
        if self.antennas == 0
            || self.rf_chains == 0
            || self.users == 0
            || self.data_subcarriers == 0
            || self.paths_per_user == 0
        {
            return Err(ConfigError::ZeroDimension);
        }
        if self.osr == 0 {
            return Err(ConfigError::ZeroOsr);
        }
        if self.users > self.rf_chains {
            return Err(ConfigError::TooManyUsers {
                users: self.users,
                rf_chains: self.rf_chains,
            });
        }
        if self.rf_chains > self.antennas {
            return Err(ConfigError::TooManyChains {
                rf_chains: self.rf_chains,
                antennas: self.antennas,
            });
        }
        if !(self.carrier_hz > 0.0)
            || !(self.subcarrier_spacing_hz > 0.0)
            || !(self.symbol_power > 0.0)
            || !self.carrier_hz.is_finite()
            || !self.subcarrier_spacing_hz.is_finite()
            || !self.symbol_power.is_finite()
            || !self.snr_db.is_finite()
        {
            return Err(ConfigError::NonPositiveScalar);
        }
        if self.adc_bits == 0 || self.adc_bits > 12 {
            return Err(ConfigError::BadResolution(self.adc_bits));
        }
        let d0 = match self.nyquist_delay_taps {
            Some(d0) => d0,
            None => {
                if self.data_subcarriers % 4 != 0 {
                    return Err(ConfigError::IndivisibleSubcarriers(self.data_subcarriers));
                }
                self.data_subcarriers / 4
            }
        };
        if d0 == 0 || d0 > self.data_subcarriers {
            return Err(ConfigError::DelaySpreadTooLong {
                d0,
                k: self.data_subcarriers,
            });
        }
        // The complexity analysis assumes far fewer RF chains than antennas;
        // anything else still runs, just without that regime's guarantees.
        if self.rf_chains * 4 > self.antennas {
            log::warn!(
                "rf_chains = {} is not small relative to antennas = {}",
                self.rf_chains,
                self.antennas
            );
        }
        let total = self.osr * self.data_subcarriers;
        let noise_variance = self.symbol_power / 10f64.powf(self.snr_db / 10.0);
        Ok(DerivedScalars {
            total_subcarriers: total,
            sample_rate_hz: total as f64 * self.subcarrier_spacing_hz,
            bandwidth_hz: self.data_subcarriers as f64 * self.subcarrier_spacing_hz,
            delay_taps: self.osr * d0,
            nyquist_delay_taps: d0,
            noise_variance,
            snr_linear: self.symbol_power / noise_variance,
        })
    }
}

/// A validated configuration plus its derived scalars.
///
/// Immutable value object; cheap to clone and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    config: SystemConfig,
    derived: DerivedScalars,
}

impl Scenario {
    pub fn new(config: SystemConfig) -> Result<Self, ConfigError> {
        let derived = config.derive()?;
        Ok(Self { config, derived })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn derived(&self) -> &DerivedScalars {
        &self.derived
    }

    pub fn antennas(&self) -> usize {
        self.config.antennas
    }

    pub fn rf_chains(&self) -> usize {
        self.config.rf_chains
    }

    pub fn users(&self) -> usize {
        self.config.users
    }

    pub fn data_subcarriers(&self) -> usize {
        self.config.data_subcarriers
    }

    pub fn total_subcarriers(&self) -> usize {
        self.derived.total_subcarriers
    }

    pub fn osr(&self) -> usize {
        self.config.osr
    }

    pub fn carrier_hz(&self) -> f64 {
        self.config.carrier_hz
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.config.subcarrier_spacing_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.derived.sample_rate_hz
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.derived.bandwidth_hz
    }

    pub fn delay_taps(&self) -> usize {
        self.derived.delay_taps
    }

    pub fn nyquist_delay_taps(&self) -> usize {
        self.derived.nyquist_delay_taps
    }

    pub fn adc_bits(&self) -> u32 {
        self.config.adc_bits
    }

    pub fn symbol_power(&self) -> f64 {
        self.config.symbol_power
    }

    pub fn noise_variance(&self) -> f64 {
        self.derived.noise_variance
    }

    pub fn snr_linear(&self) -> f64 {
        self.derived.snr_linear
    }

    pub fn paths_per_user(&self) -> usize {
        self.config.paths_per_user
    }

    /// Subcarrier frequency `f_k = fc + (k + 1 - (Nc+1)/2) * spacing`.
    pub fn subcarrier_freq_hz(&self, k: usize) -> f64 {
        let nc = self.derived.total_subcarriers as f64;
        self.config.carrier_hz + (k as f64 + 1.0 - (nc + 1.0) / 2.0) * self.config.subcarrier_spacing_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, osr: usize, spacing: f64) -> SystemConfig {
        SystemConfig {
            data_subcarriers: k,
            osr,
            subcarrier_spacing_hz: spacing,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn derives_headline_scenario() {
        let d = cfg(128, 1, 100e6).derive().unwrap();
        assert_eq!(d.total_subcarriers, 128);
        assert!((d.sample_rate_hz - 12.8e9).abs() < 1.0);
        assert!((d.bandwidth_hz - 12.8e9).abs() < 1.0);
    }

    #[test]
    fn derives_oversampled_scenario() {
        let d = cfg(128, 4, 100e6).derive().unwrap();
        assert_eq!(d.total_subcarriers, 512);
        assert_eq!(d.delay_taps, 128);
        assert_eq!(d.nyquist_delay_taps, 32);
    }

    #[test]
    fn noise_variance_from_snr() {
        let c = SystemConfig {
            snr_db: 20.0,
            symbol_power: 1.0,
            ..SystemConfig::default()
        };
        let d = c.derive().unwrap();
        assert!((d.noise_variance - 0.01).abs() < 1e-15);
        assert!((d.snr_linear - 100.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_zero_osr() {
        assert_eq!(cfg(128, 0, 100e6).derive(), Err(ConfigError::ZeroOsr));
    }

    #[test]
    fn rejects_indivisible_subcarriers_with_default_delay() {
        let c = SystemConfig {
            data_subcarriers: 126,
            ..SystemConfig::default()
        };
        assert_eq!(c.derive(), Err(ConfigError::IndivisibleSubcarriers(126)));
        // Explicit D0 lifts the divisibility requirement.
        let c = SystemConfig {
            data_subcarriers: 126,
            nyquist_delay_taps: Some(30),
            ..SystemConfig::default()
        };
        assert!(c.derive().is_ok());
    }

    #[test]
    fn rejects_more_users_than_chains() {
        let c = SystemConfig {
            users: 5,
            rf_chains: 4,
            ..SystemConfig::default()
        };
        assert!(matches!(c.derive(), Err(ConfigError::TooManyUsers { .. })));
    }

    #[test]
    fn subcarrier_frequencies_are_centered() {
        let s = Scenario::new(cfg(128, 1, 100e6)).unwrap();
        let lo = s.subcarrier_freq_hz(0);
        let hi = s.subcarrier_freq_hz(127);
        assert!((lo - (300e9 - 63.5 * 100e6)).abs() < 1.0);
        assert!((hi - (300e9 + 63.5 * 100e6)).abs() < 1.0);
        // Band is symmetric about the carrier.
        assert!(((lo + hi) / 2.0 - 300e9).abs() < 1.0);
    }
}
