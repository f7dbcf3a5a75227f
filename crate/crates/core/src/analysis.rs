//! Closed-form performance analysis of the quantized hybrid receiver.
//!
//! The quantization distortion of the scaled ADCs is treated through its
//! Bussgang linearization: the frequency-domain distortion covariance is
//! approximated by a resolution-dependent diagonal expression
//! ([`qd_covariance_closed_form`]), which folds with the AWGN into a single
//! effective-noise covariance ([`effective_noise_cov`]). SINDR and spectral
//! efficiency follow from it in closed form. Every formula here is checked
//! against the brute-force time-domain simulation in [`crate::signal_chain`].

use thiserror::Error;

use crate::channel::ChannelRealization;
use crate::config::Scenario;
use crate::{C64, CMat, RMat, RVec};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("analog combiner entries must all have magnitude 1/sqrt(M)")]
    NotConstantModulus,
    #[error("expected {expected} digital combiners, one per data subcarrier, got {got}")]
    WrongDigitalCount { expected: usize, got: usize },
    #[error("combiner entries must be finite")]
    NonFinite,
    #[error("distortion factor must lie in [0, 1), got {0}")]
    BadGamma(f64),
}

/// Frequency-flat constant-modulus analog combiner plus per-data-subcarrier
/// digital combiners.
#[derive(Debug, Clone)]
pub struct HybridCombiner {
    /// `M x Nrf`, every entry of magnitude `1/sqrt(M)`.
    analog: CMat,
    /// `K` matrices of shape `Nrf x I`; column `i` combines user `i`.
    digital: Vec<CMat>,
}

impl HybridCombiner {
    /// Validates the constant-modulus constraint (tolerance 1e-9) and shapes.
    pub fn new(analog: CMat, digital: Vec<CMat>) -> Result<Self, AnalysisError> {
        if !is_constant_modulus(&analog, 1e-9) {
            return Err(AnalysisError::NotConstantModulus);
        }
        if digital.is_empty() {
            return Err(AnalysisError::WrongDigitalCount { expected: 1, got: 0 });
        }
        let nrf = analog.ncols();
        if digital
            .iter()
            .any(|u| u.nrows() != nrf || u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
        {
            return Err(AnalysisError::NonFinite);
        }
        Ok(Self { analog, digital })
    }

    pub fn analog(&self) -> &CMat {
        &self.analog
    }

    pub fn digital(&self) -> &[CMat] {
        &self.digital
    }

    pub fn into_parts(self) -> (CMat, Vec<CMat>) {
        (self.analog, self.digital)
    }
}

/// `|entry| = 1/sqrt(M)` for every entry, within `tol`.
pub fn is_constant_modulus(analog: &CMat, tol: f64) -> bool {
    let target = 1.0 / (analog.nrows() as f64).sqrt();
    analog.iter().all(|z| (z.norm() - target).abs() <= tol)
}

/// Closed-form approximation of the frequency-domain quantization-distortion
/// covariance (constant over subcarriers):
///
/// `C = gamma (1-gamma) (p/Nc) sum_{k<K} diag(U^H H[k] H[k]^H U)
///    + gamma (1-gamma) sigma_n^2 U^H U`
///
/// Its accuracy improves with the ADC resolution.
pub fn qd_covariance_closed_form(
    ch: &ChannelRealization,
    analog: &CMat,
    gamma: f64,
    scenario: &Scenario,
) -> Result<CMat, AnalysisError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(AnalysisError::BadGamma(gamma));
    }
    let nrf = analog.ncols();
    let coeff = gamma * (1.0 - gamma);
    let mut diag_sum = RVec::zeros(nrf);
    for k in 0..scenario.data_subcarriers() {
        let b = analog.ad_mul(ch.at(k)); // Nrf x I
        for j in 0..nrf {
            diag_sum[j] += b.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    let p_over_nc = scenario.symbol_power() / scenario.total_subcarriers() as f64;
    let mut cov = analog.ad_mul(analog) * C64::from(coeff * scenario.noise_variance());
    for j in 0..nrf {
        cov[(j, j)] += C64::from(coeff * p_over_nc * diag_sum[j]);
    }
    Ok(cov)
}

/// Effective noise of the linearized receiver.
#[derive(Debug, Clone)]
pub struct EffectiveNoise {
    /// `C_e`, Hermitian positive definite `Nrf x Nrf`.
    pub cov: CMat,
    /// Diagonal of the per-chain channel energy `H_e` (real, nonnegative).
    pub channel_diag: RVec,
}

/// Effective-noise covariance of the quantized receive chain:
///
/// `C_e = gamma / ((1-gamma) beta) * H_e + 1 / (rho (1-gamma)) * U^H U`
///
/// with `H_e = (1/K) sum_{k<K} diag(U^H H[k] H[k]^H U)`. `beta` is the
/// oversampling ratio and `rho` the linear SNR.
pub fn effective_noise_cov(
    ch: &ChannelRealization,
    analog: &CMat,
    gamma: f64,
    beta: f64,
    rho: f64,
    data_subcarriers: usize,
) -> Result<EffectiveNoise, AnalysisError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(AnalysisError::BadGamma(gamma));
    }
    assert!(rho > 0.0, "SNR must be positive");
    let nrf = analog.ncols();
    let mut channel_diag = RVec::zeros(nrf);
    for k in 0..data_subcarriers {
        let b = analog.ad_mul(ch.at(k));
        for j in 0..nrf {
            channel_diag[j] += b.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    channel_diag /= data_subcarriers as f64;
    let mut cov = analog.ad_mul(analog) * C64::from(1.0 / (rho * (1.0 - gamma)));
    let qd = gamma / ((1.0 - gamma) * beta);
    for j in 0..nrf {
        cov[(j, j)] += C64::from(qd * channel_diag[j]);
    }
    Ok(EffectiveNoise { cov, channel_diag })
}

/// Per-user per-subcarrier SINDR of a combiner against an effective-noise
/// covariance:
///
/// `zeta_i[k] = |u^H B h_i|^2 / (sum_{j != i} |u^H B h_j|^2 + u^H C_e u)`
///
/// A zero digital combiner yields zero (flagged in the debug log, not an
/// error). Scaling any `u_i[k]` leaves its entry unchanged.
pub fn sindr(ch: &ChannelRealization, analog: &CMat, digital: &[CMat], c_e: &CMat) -> RMat {
    let beff: Vec<CMat> = (0..digital.len()).map(|k| analog.ad_mul(ch.at(k))).collect();
    sindr_with_effective(&beff, digital, c_e)
}

/// Per-data-subcarrier effective channels `U^H H[k]` (`Nrf x I` each);
/// several per-iteration blocks of the optimizer consume the same set.
pub fn effective_channels(ch: &ChannelRealization, analog: &CMat, k_data: usize) -> Vec<CMat> {
    (0..k_data).map(|k| analog.ad_mul(ch.at(k))).collect()
}

/// [`sindr`] from precomputed effective channels.
pub fn sindr_with_effective(beff: &[CMat], digital: &[CMat], c_e: &CMat) -> RMat {
    let k_data = digital.len();
    let users = if k_data > 0 { beff[0].ncols() } else { 0 };
    let mut zeta = RMat::zeros(users, k_data);
    for k in 0..k_data {
        let b = &beff[k];
        let u_k = &digital[k];
        for i in 0..users {
            let u = u_k.column(i);
            let noise = quad_form(c_e, &u);
            let mut signal = 0.0;
            let mut interference = 0.0;
            for j in 0..users {
                let g = u.dotc(&b.column(j)).norm_sqr();
                if j == i {
                    signal = g;
                } else {
                    interference += g;
                }
            }
            let denom = interference + noise;
            zeta[(i, k)] = if denom > 0.0 {
                signal / denom
            } else {
                if signal > 0.0 {
                    log::debug!("degenerate SINDR denominator at user {i}, subcarrier {k}");
                }
                0.0
            };
        }
    }
    zeta
}

/// SINDR in the unnormalized form carrying the Bussgang gain and transmit
/// power explicitly:
///
/// `zeta_i[k] = p a^2 |u^H B h_i|^2 / (p a^2 sum_{j!=i} |u^H B h_j|^2 + u^H C_k u)`
///
/// where `C_k` is the distortion-plus-AWGN covariance (for instance
/// [`qd_covariance_closed_form`] plus `a^2 sigma_n^2 U^H U`). Algebraically
/// identical to [`sindr`] when `C_k` comes from the same approximation.
pub fn sindr_unnormalized(
    ch: &ChannelRealization,
    analog: &CMat,
    digital: &[CMat],
    c_noise: &CMat,
    alpha: f64,
    power: f64,
) -> RMat {
    let users = ch.users();
    let k_data = digital.len();
    let pa2 = power * alpha * alpha;
    let mut zeta = RMat::zeros(users, k_data);
    for k in 0..k_data {
        let b = analog.ad_mul(ch.at(k));
        let u_k = &digital[k];
        for i in 0..users {
            let u = u_k.column(i);
            let noise = quad_form(c_noise, &u);
            let mut signal = 0.0;
            let mut interference = 0.0;
            for j in 0..users {
                let g = u.dotc(&b.column(j)).norm_sqr();
                if j == i {
                    signal = pa2 * g;
                } else {
                    interference += pa2 * g;
                }
            }
            let denom = interference + noise;
            zeta[(i, k)] = if denom > 0.0 { signal / denom } else { 0.0 };
        }
    }
    zeta
}

/// Real quadratic form `u^H C u` of a Hermitian matrix.
pub(crate) fn quad_form(c: &CMat, u: &nalgebra::DVectorView<C64>) -> f64 {
    let n = c.nrows();
    let mut acc = C64::default();
    for col in 0..n {
        let uc = u[col];
        let mut partial = C64::default();
        for row in 0..n {
            partial += u[row].conj() * c[(row, col)];
        }
        acc += partial * uc;
    }
    acc.re
}

/// Sum spectral efficiency `R = (1/K) sum_{i,k} log2(1 + zeta_i[k])` in
/// bit/s/Hz.
pub fn spectral_efficiency(zeta: &RMat) -> f64 {
    let k_data = zeta.ncols() as f64;
    zeta.iter().map(|&z| (1.0 + z).log2()).sum::<f64>() / k_data
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_paths, freq_channel};
    use crate::config::SystemConfig;
    use crate::rng::RngStream;
    use crate::util::rel_frobenius_error;
    use nalgebra::DVector;

    fn scenario(m: usize, nrf: usize, users: usize, k: usize, osr: usize) -> Scenario {
        Scenario::new(SystemConfig {
            antennas: m,
            rf_chains: nrf,
            users,
            data_subcarriers: k,
            osr,
            ..SystemConfig::default()
        })
        .unwrap()
    }

    fn random_constant_modulus(m: usize, nrf: usize, seed: u64) -> CMat {
        use rand::Rng;
        let mut rng = RngStream::new(seed, 77).rng();
        let scale = 1.0 / (m as f64).sqrt();
        CMat::from_fn(m, nrf, |_, _| {
            C64::from_polar(scale, rng.gen::<f64>() * std::f64::consts::TAU)
        })
    }

    #[test]
    fn combiner_rejects_modulus_violations() {
        let mut analog = random_constant_modulus(8, 2, 1);
        analog[(0, 0)] *= 1.5;
        let digital = vec![CMat::zeros(2, 2); 4];
        assert!(matches!(
            HybridCombiner::new(analog, digital),
            Err(AnalysisError::NotConstantModulus)
        ));
    }

    #[test]
    fn qd_covariance_vanishes_without_distortion() {
        let scen = scenario(8, 2, 2, 8, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(1, 0)), &scen);
        let analog = random_constant_modulus(8, 2, 2);
        let cov = qd_covariance_closed_form(&ch, &analog, 0.0, &scen).unwrap();
        assert!(crate::util::frobenius_norm(&cov) < 1e-15);
    }

    #[test]
    fn qd_covariance_of_zero_channel_is_noise_term() {
        let scen = scenario(8, 2, 2, 8, 1);
        let zero = ChannelRealization::from_matrices(vec![CMat::zeros(8, 2); 8]);
        let analog = random_constant_modulus(8, 2, 3);
        let gamma = 0.1;
        let cov = qd_covariance_closed_form(&zero, &analog, gamma, &scen).unwrap();
        let expected = analog.ad_mul(&analog) * C64::from(gamma * 0.9 * scen.noise_variance());
        assert!(rel_frobenius_error(&cov, &expected) < 1e-12);
    }

    #[test]
    fn effective_noise_limits() {
        let scen = scenario(8, 2, 2, 8, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(2, 0)), &scen);
        let analog = random_constant_modulus(8, 2, 4);
        let rho = scen.snr_linear();
        // gamma = 0: pure AWGN, C_e = (1/rho) U^H U.
        let e0 = effective_noise_cov(&ch, &analog, 0.0, 1.0, rho, 8).unwrap();
        let expected = analog.ad_mul(&analog) * C64::from(1.0 / rho);
        assert!(rel_frobenius_error(&e0.cov, &expected) < 1e-12);
        // Doubling the OSR halves the QD part, leaves the AWGN part alone.
        let g = 0.2;
        let e1 = effective_noise_cov(&ch, &analog, g, 1.0, rho, 8).unwrap();
        let e2 = effective_noise_cov(&ch, &analog, g, 2.0, rho, 8).unwrap();
        let qd1 = &e1.cov - &expected * C64::from(1.0 / (1.0 - g));
        let qd2 = &e2.cov - &expected * C64::from(1.0 / (1.0 - g));
        assert!(rel_frobenius_error(&(qd2 * C64::from(2.0)), &qd1) < 1e-10);
        // gamma = 1 is rejected.
        assert!(effective_noise_cov(&ch, &analog, 1.0, 1.0, rho, 8).is_err());
    }

    #[test]
    fn effective_noise_zero_channel_orthonormal_analog() {
        let zero = ChannelRealization::from_matrices(vec![CMat::zeros(4, 2); 8]);
        // DFT columns scaled by 1/sqrt(M): constant modulus and orthonormal.
        let m = 4usize;
        let analog = CMat::from_fn(m, m, |r, c| {
            C64::from_polar(0.5, -std::f64::consts::TAU * (r * c) as f64 / m as f64)
        });
        let g = 0.3;
        let e = effective_noise_cov(&zero, &analog, g, 1.0, 50.0, 8).unwrap();
        let expected = CMat::identity(4, 4) * C64::from(1.0 / (50.0 * (1.0 - g)));
        assert!(rel_frobenius_error(&e.cov, &expected) < 1e-12);
    }

    #[test]
    fn sindr_is_scale_invariant_and_matches_unnormalized() {
        let scen = scenario(16, 4, 3, 8, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(3, 0)), &scen);
        let analog = random_constant_modulus(16, 4, 5);
        let gamma = 0.1175;
        let alpha = 1.0 - gamma;
        let rho = scen.snr_linear();
        let noise = effective_noise_cov(&ch, &analog, gamma, 1.0, rho, 8).unwrap();
        let mut rng = RngStream::new(9, 0).rng();
        let digital: Vec<CMat> = (0..8)
            .map(|_| CMat::from_fn(4, 3, |_, _| crate::rng::complex_normal(&mut rng)))
            .collect();

        let zeta = sindr(&ch, &analog, &digital, &noise.cov);
        // scaling one combiner leaves its SINDR unchanged
        let mut scaled = digital.clone();
        scaled[3] *= C64::new(-2.5, 1.0);
        let zeta_scaled = sindr(&ch, &analog, &scaled, &noise.cov);
        for i in 0..3 {
            let rel = (zeta[(i, 3)] - zeta_scaled[(i, 3)]).abs() / zeta[(i, 3)];
            assert!(rel < 1e-12);
        }

        // The normalized form equals the alpha^2 p form fed with the matching
        // distortion-plus-AWGN covariance.
        let qd = qd_covariance_closed_form(&ch, &analog, gamma, &scen).unwrap();
        let c_k = &qd + analog.ad_mul(&analog) * C64::from(alpha * alpha * scen.noise_variance());
        let zeta_raw = sindr_unnormalized(&ch, &analog, &digital, &c_k, alpha, scen.symbol_power());
        for i in 0..3 {
            for k in 0..8 {
                let rel = (zeta[(i, k)] - zeta_raw[(i, k)]).abs() / zeta[(i, k)].max(1e-300);
                assert!(rel < 1e-10, "mismatch at ({i},{k}): {rel}");
            }
        }
    }

    #[test]
    fn matched_filter_single_user_awgn() {
        // I = 1, gamma = 0, square DFT-style analog combiner: the matched
        // filter reaches rho * ||h||^2 (the analog stage is unitary).
        let m = 4usize;
        let scen = Scenario::new(SystemConfig {
            antennas: m,
            rf_chains: m,
            users: 1,
            data_subcarriers: 4,
            osr: 1,
            ..SystemConfig::default()
        })
        .unwrap();
        let analog = CMat::from_fn(m, m, |r, c| {
            C64::from_polar(0.5, -std::f64::consts::TAU * (r * c) as f64 / m as f64)
        });
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(4, 0)), &scen);
        let rho = scen.snr_linear();
        let noise = effective_noise_cov(&ch, &analog, 0.0, 1.0, rho, 4).unwrap();
        let digital: Vec<CMat> = (0..4)
            .map(|k| {
                let b = analog.ad_mul(ch.at(k));
                CMat::from_column_slice(m, 1, b.column(0).clone_owned().as_slice())
            })
            .collect();
        let zeta = sindr(&ch, &analog, &digital, &noise.cov);
        for k in 0..4 {
            let expected = rho * ch.at(k).column(0).norm_squared();
            let rel = (zeta[(0, k)] - expected).abs() / expected;
            assert!(rel < 1e-9, "k = {k}: {} vs {expected}", zeta[(0, k)]);
        }
    }

    #[test]
    fn zero_combiner_flags_zero_sindr() {
        let scen = scenario(8, 2, 2, 4, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(5, 0)), &scen);
        let analog = random_constant_modulus(8, 2, 6);
        let noise = effective_noise_cov(&ch, &analog, 0.1, 1.0, 100.0, 4).unwrap();
        let digital = vec![CMat::zeros(2, 2); 4];
        let zeta = sindr(&ch, &analog, &digital, &noise.cov);
        assert!(zeta.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn spectral_efficiency_basics() {
        assert_eq!(spectral_efficiency(&RMat::zeros(4, 16)), 0.0);
        let ones = RMat::from_element(4, 16, 1.0);
        assert!((spectral_efficiency(&ones) - 4.0).abs() < 1e-12);
        // elementwise monotone
        let mut bigger = ones.clone();
        bigger[(2, 5)] = 3.0;
        assert!(spectral_efficiency(&bigger) > spectral_efficiency(&ones));
    }

    #[test]
    fn effective_noise_cov_is_hermitian_psd() {
        let scen = scenario(16, 4, 4, 8, 2);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(6, 0)), &scen);
        let analog = random_constant_modulus(16, 4, 7);
        let e = effective_noise_cov(&ch, &analog, 0.3634, 2.0, 100.0, 8).unwrap();
        let herm_err = rel_frobenius_error(&e.cov.adjoint(), &e.cov);
        assert!(herm_err < 1e-12);
        let eig = nalgebra::SymmetricEigen::new(e.cov.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
        assert!(e.channel_diag.iter().all(|&d| d >= 0.0));
        // quadratic forms are strictly positive for nonzero u
        let u = DVector::from_fn(4, |i, _| C64::new(1.0 + i as f64, -0.5));
        assert!(quad_form(&e.cov, &u.as_view()) > 0.0);
    }
}
