//! Brute-force time-domain simulation of the receive chain.
//!
//! OFDM modulation with zero-padded oversampling band, circular multipath
//! propagation (ideal cyclic prefix), analog combining, per-chain scalar
//! quantization, and demodulation. The Monte Carlo estimators in this module
//! are the oracles the closed-form analysis is validated against: they make
//! no use of the Bussgang approximation beyond an empirically estimated
//! linear gain.

use rand::Rng;
use thiserror::Error;

use crate::analysis;
use crate::channel::ChannelRealization;
use crate::config::Scenario;
use crate::fft;
use crate::quantizer::{bussgang_alpha_empirical, ScalarQuantizer};
use crate::rng::{complex_normal, RngStream};
use crate::util::KahanSum;
use crate::{C64, CMat, RMat};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("frequency-domain symbols must be zero on the oversampling band (k >= K)")]
    NonZeroOversamplingBand,
    #[error("symbol matrix must be users x total_subcarriers, got {rows} x {cols}")]
    WrongSymbolShape { rows: usize, cols: usize },
    #[error("quantizer scales must be strictly positive and finite")]
    BadScale,
}

/// One OFDM frame: frequency-domain symbols and their time-domain samples.
#[derive(Debug, Clone)]
pub struct FrameSymbols {
    /// `I x Nc`, zero for `k >= K`.
    pub freq: CMat,
    /// `I x Nc`, `s_i[n] = sqrt(p/Nc) sum_k s_i[k] e^{+j 2 pi n k / Nc}`.
    pub time: CMat,
}

/// Combined-and-quantized receive frame.
#[derive(Debug, Clone)]
pub struct ReceivedFrame {
    /// ADC outputs per RF chain and time sample, `Nrf x Nc`.
    pub z_time: CMat,
    /// Unitary DFT of `z_time` along time, `Nrf x Nc`.
    pub z_freq: CMat,
}

/// Symbol prior for the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolPrior {
    /// Circularly symmetric complex Gaussian, matching the analysis model.
    #[default]
    Gaussian,
    /// Unit-power QPSK, as a sensitivity check.
    Qpsk,
}

fn draw_symbols<R: Rng + ?Sized>(scenario: &Scenario, prior: SymbolPrior, rng: &mut R) -> CMat {
    let users = scenario.users();
    let nc = scenario.total_subcarriers();
    let k_data = scenario.data_subcarriers();
    let mut s = CMat::zeros(users, nc);
    for k in 0..k_data {
        for i in 0..users {
            s[(i, k)] = match prior {
                SymbolPrior::Gaussian => complex_normal(rng),
                SymbolPrior::Qpsk => {
                    let bits: u8 = rng.gen::<u8>() & 0b11;
                    let re = if bits & 1 == 0 { 1.0 } else { -1.0 };
                    let im = if bits & 2 == 0 { 1.0 } else { -1.0 };
                    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                }
            };
        }
    }
    s
}

/// OFDM-modulate frequency-domain symbols:
/// `s_i[n] = sqrt(p/Nc) sum_k s_i[k] e^{+j 2 pi n k / Nc}`.
///
/// Rejects nonzero entries on the oversampling band.
pub fn modulate(freq: &CMat, scenario: &Scenario) -> Result<FrameSymbols, ChainError> {
    let nc = scenario.total_subcarriers();
    if freq.nrows() != scenario.users() || freq.ncols() != nc {
        return Err(ChainError::WrongSymbolShape {
            rows: freq.nrows(),
            cols: freq.ncols(),
        });
    }
    for k in scenario.data_subcarriers()..nc {
        for i in 0..freq.nrows() {
            if freq[(i, k)] != C64::default() {
                return Err(ChainError::NonZeroOversamplingBand);
            }
        }
    }
    let scale = (scenario.symbol_power() / nc as f64).sqrt();
    let mut time = freq.clone();
    let mut row = vec![C64::default(); nc];
    for i in 0..freq.nrows() {
        for k in 0..nc {
            row[k] = freq[(i, k)];
        }
        fft::inverse_raw(&mut row);
        for n in 0..nc {
            time[(i, n)] = row[n] * scale;
        }
    }
    Ok(FrameSymbols {
        freq: freq.clone(),
        time,
    })
}

/// Propagate a frame through the taps with circular convolution and add
/// white Gaussian noise:
/// `r[n] = sum_d H[d] s[(n - d) mod Nc] + w[n]`, `w[n] ~ CN(0, noise_var I)`.
///
/// Returns the received `M x Nc` block.
pub fn propagate<R: Rng + ?Sized>(
    frame: &FrameSymbols,
    taps: &[CMat],
    noise_var: f64,
    rng: &mut R,
) -> CMat {
    let users = frame.time.nrows();
    let nc = frame.time.ncols();
    let m = taps[0].nrows();
    let mut r = CMat::zeros(m, nc);
    let r_slice = r.as_mut_slice(); // column-major: r[n*m + a]
    for (d, tap) in taps.iter().enumerate() {
        // Skip taps that are exactly zero (common beyond the delay spread).
        if tap.iter().all(|z| *z == C64::default()) {
            continue;
        }
        let t_slice = tap.as_slice(); // column-major: tap[i*m + a]
        for n in 0..nc {
            let src = (n + nc - (d % nc)) % nc;
            let dst = &mut r_slice[n * m..(n + 1) * m];
            for i in 0..users {
                let s = frame.time[(i, src)];
                if s != C64::default() {
                    let col = &t_slice[i * m..(i + 1) * m];
                    for (acc, h) in dst.iter_mut().zip(col.iter()) {
                        *acc += h * s;
                    }
                }
            }
        }
    }
    if noise_var > 0.0 {
        let std = (noise_var / 2.0).sqrt();
        for v in r.iter_mut() {
            *v += C64::new(
                std * crate::rng::standard_normal(rng),
                std * crate::rng::standard_normal(rng),
            );
        }
    }
    r
}

/// Analog-combine and quantize a received block:
/// `z[n] = Q_scaled(U^H r[n])` per sample, then a unitary DFT along time.
///
/// `scales[j]` is the RMS of each real dimension of chain `j`, normally from
/// [`rf_input_scales`].
pub fn receive_quantized(
    r_time: &CMat,
    analog: &CMat,
    q: &ScalarQuantizer,
    scales: &[f64],
) -> Result<ReceivedFrame, ChainError> {
    let nrf = analog.ncols();
    assert_eq!(r_time.nrows(), analog.nrows(), "antenna count mismatch");
    assert_eq!(scales.len(), nrf, "one scale per RF chain");
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(ChainError::BadScale);
    }
    let y = analog.ad_mul(r_time); // Nrf x Nc
    let mut z_time = y.clone();
    for n in 0..z_time.ncols() {
        for j in 0..nrf {
            z_time[(j, n)] = q.quantize_complex(y[(j, n)], scales[j]);
        }
    }
    let z_freq = fft::dft_rows_unitary(&z_time);
    Ok(ReceivedFrame { z_time, z_freq })
}

/// Analog combining with no quantization; the linear reference path.
pub fn receive_unquantized(r_time: &CMat, analog: &CMat) -> (CMat, CMat) {
    let y = analog.ad_mul(r_time);
    let y_freq = fft::dft_rows_unitary(&y);
    (y, y_freq)
}

/// Stationary receive covariance at lag zero:
/// `C_r = (p/Nc) sum_{k<K} H[k] H[k]^H + noise_var I`.
///
/// Used to match the quantizer scale to the analytic input variance.
pub fn analytic_rx_covariance(ch: &ChannelRealization, scenario: &Scenario) -> CMat {
    let m = ch.antennas();
    let mut cov = CMat::identity(m, m) * C64::from(scenario.noise_variance());
    let w = C64::from(scenario.symbol_power() / scenario.total_subcarriers() as f64);
    for k in 0..scenario.data_subcarriers() {
        cov.gemm(w, ch.at(k), &ch.at(k).adjoint(), C64::from(1.0));
    }
    cov
}

/// Per-chain quantizer scales from the analytic receive covariance:
/// `scales[j] = sqrt([U^H C_r U]_{jj} / 2)` (RMS per real dimension).
pub fn rf_input_scales(rx_cov: &CMat, analog: &CMat) -> Vec<f64> {
    let nrf = analog.ncols();
    (0..nrf)
        .map(|j| {
            let col = analog.column(j);
            let quad = analysis::quad_form(rx_cov, &col);
            (quad.max(0.0) / 2.0).sqrt()
        })
        .collect()
}

/// Monte Carlo estimate of the per-subcarrier quantization-distortion
/// covariance.
///
/// Per frame the chain runs end to end; the distortion is isolated as
/// `eta[k] = z[k] - alpha_emp U^H r[k]` with an *empirical* linear gain
/// (estimated from the quantizer itself, not assumed equal to `1 - gamma`),
/// and per-subcarrier sample covariances are accumulated over frames. All
/// `Nc` subcarriers are returned, including the oversampling band.
pub fn estimate_qd_covariance_mc(
    ch: &ChannelRealization,
    analog: &CMat,
    q: &ScalarQuantizer,
    scenario: &Scenario,
    n_frames: usize,
    stream: &RngStream,
) -> Vec<CMat> {
    assert!(n_frames >= 100, "need at least 100 frames");
    let nrf = analog.ncols();
    let nc = scenario.total_subcarriers();
    let taps = crate::channel::time_taps(ch);
    let rx_cov = analytic_rx_covariance(ch, scenario);
    let scales = rf_input_scales(&rx_cov, analog);
    let alpha = bussgang_alpha_empirical(q, 200_000, &mut stream.sub_rng(0));
    let mut covs: Vec<CMat> = (0..nc).map(|_| CMat::zeros(nrf, nrf)).collect();
    for frame_idx in 0..n_frames {
        let mut rng = stream.sub_rng(frame_idx as u64 + 1);
        let symbols = draw_symbols(scenario, SymbolPrior::Gaussian, &mut rng);
        let frame = modulate(&symbols, scenario).expect("symbols respect the band");
        let r = propagate(&frame, &taps, scenario.noise_variance(), &mut rng);
        let rx = receive_quantized(&r, analog, q, &scales).expect("valid scales");
        let (_, y_freq) = receive_unquantized(&r, analog);
        for k in 0..nc {
            // eta[k] = z[k] - alpha * y[k]; rank-one update of the covariance
            let eta: Vec<C64> = (0..nrf)
                .map(|j| rx.z_freq[(j, k)] - y_freq[(j, k)] * alpha)
                .collect();
            let cov = &mut covs[k];
            for c in 0..nrf {
                for rr in 0..nrf {
                    cov[(rr, c)] += eta[rr] * eta[c].conj();
                }
            }
        }
    }
    let w = C64::from(1.0 / n_frames as f64);
    for cov in &mut covs {
        *cov *= w;
    }
    covs
}

/// Empirical SINDR per user and data subcarrier.
#[derive(Debug, Clone)]
pub struct SindrEstimate {
    /// `I x K`; entries flagged in `saturated` hold `f64::INFINITY`.
    pub zeta: RMat,
    /// `(user, subcarrier)` pairs whose interference-plus-noise estimate was
    /// not positive (sampling noise at extreme SINDR).
    pub saturated: Vec<(usize, usize)>,
}

/// Monte Carlo estimate of the post-combining SINDR for each user and data
/// subcarrier.
///
/// Per frame the chain runs end to end and the combiner output
/// `x_i[k] = u_i[k]^H z[k]` is regressed on the transmitted symbol: the
/// linear gain is `g = E[x s*] / E[|s|^2]` and the
/// interference-plus-noise-and-distortion power is the residual
/// `E[|x|^2] - |g|^2 E[|s|^2]`.
pub fn estimate_sindr_mc(
    ch: &ChannelRealization,
    combiner: &analysis::HybridCombiner,
    q: &ScalarQuantizer,
    scenario: &Scenario,
    n_frames: usize,
    stream: &RngStream,
    prior: SymbolPrior,
) -> SindrEstimate {
    estimate_sindr_mc_parts(
        ch,
        combiner.analog(),
        combiner.digital(),
        q,
        scenario,
        n_frames,
        stream,
        prior,
    )
}

/// [`estimate_sindr_mc`] on raw combiner parts; accepts any analog matrix
/// (e.g. the identity stage of the fully digital receiver).
#[allow(clippy::too_many_arguments)]
pub fn estimate_sindr_mc_parts(
    ch: &ChannelRealization,
    analog: &CMat,
    digital: &[CMat],
    q: &ScalarQuantizer,
    scenario: &Scenario,
    n_frames: usize,
    stream: &RngStream,
    prior: SymbolPrior,
) -> SindrEstimate {
    assert!(n_frames >= 10, "need frames to regress on");
    let users = scenario.users();
    let k_data = scenario.data_subcarriers();
    let taps = crate::channel::time_taps(ch);
    let rx_cov = analytic_rx_covariance(ch, scenario);
    let scales = rf_input_scales(&rx_cov, analog);

    let mut cross = vec![C64::default(); users * k_data]; // sum x s*
    let mut sym_pow = vec![KahanSum::default(); users * k_data]; // sum |s|^2
    let mut out_pow = vec![KahanSum::default(); users * k_data]; // sum |x|^2
    for frame_idx in 0..n_frames {
        let mut rng = stream.sub_rng(frame_idx as u64 + 1);
        let symbols = draw_symbols(scenario, prior, &mut rng);
        let frame = modulate(&symbols, scenario).expect("symbols respect the band");
        let r = propagate(&frame, &taps, scenario.noise_variance(), &mut rng);
        let rx = receive_quantized(&r, analog, q, &scales).expect("valid scales");
        for k in 0..k_data {
            let u_k = &digital[k];
            let z_col = rx.z_freq.column(k);
            for i in 0..users {
                let x = u_k.column(i).dotc(&z_col);
                let s = symbols[(i, k)];
                let idx = i * k_data + k;
                cross[idx] += x * s.conj();
                sym_pow[idx].add(s.norm_sqr());
                out_pow[idx].add(x.norm_sqr());
            }
        }
    }
    let mut zeta = RMat::zeros(users, k_data);
    let mut saturated = Vec::new();
    for i in 0..users {
        for k in 0..k_data {
            let idx = i * k_data + k;
            let sp = sym_pow[idx].value();
            let g = cross[idx] / C64::from(sp);
            let signal = g.norm_sqr() * sp / n_frames as f64;
            let residual = out_pow[idx].value() / n_frames as f64 - signal;
            if residual > 0.0 {
                zeta[(i, k)] = signal / residual;
            } else {
                zeta[(i, k)] = f64::INFINITY;
                saturated.push((i, k));
            }
        }
    }
    SindrEstimate { zeta, saturated }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_paths, freq_channel, time_taps};
    use crate::config::SystemConfig;
    use crate::util::rel_frobenius_error;

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
        let mut rng = RngStream::new(seed, 123).rng();
        let scale = 1.0 / (m as f64).sqrt();
        CMat::from_fn(m, nrf, |_, _| {
            C64::from_polar(scale, rng.gen::<f64>() * std::f64::consts::TAU)
        })
    }

    #[test]
    fn modulate_zero_is_zero_and_band_is_enforced() {
        let scen = scenario(4, 2, 2, 8, 2);
        let zeros = CMat::zeros(2, 16);
        let frame = modulate(&zeros, &scen).unwrap();
        assert!(frame.time.iter().all(|z| *z == C64::default()));
        let mut bad = zeros.clone();
        bad[(0, 12)] = C64::new(1.0, 0.0);
        assert!(matches!(
            modulate(&bad, &scen),
            Err(ChainError::NonZeroOversamplingBand)
        ));
    }

    #[test]
    fn modulate_single_tone_is_constant() {
        let scen = scenario(4, 2, 1, 8, 1);
        let mut freq = CMat::zeros(1, 8);
        freq[(0, 0)] = C64::new(1.0, 0.0);
        let frame = modulate(&freq, &scen).unwrap();
        let expected = C64::from((1.0f64 / 8.0).sqrt());
        for n in 0..8 {
            assert!((frame.time[(0, n)] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn modulate_power_is_p_over_osr() {
        let scen = scenario(4, 2, 2, 16, 4);
        let mut rng = RngStream::new(3, 0).rng();
        let symbols = draw_symbols(&scen, SymbolPrior::Gaussian, &mut rng);
        let frame = modulate(&symbols, &scen).unwrap();
        let nc = scen.total_subcarriers() as f64;
        let avg_power = frame.time.iter().map(|z| z.norm_sqr()).sum::<f64>() / (2.0 * nc);
        // per-frame average; the symbol draw itself fluctuates, so compare
        // against the realized frequency-domain power
        let sym_power = symbols.iter().map(|z| z.norm_sqr()).sum::<f64>() / (2.0 * nc);
        assert!((avg_power - sym_power).abs() < 1e-12 * sym_power.max(1.0));
    }

    #[test]
    fn propagate_identity_channel_passes_through() {
        let scen = scenario(2, 2, 2, 8, 1);
        let mut rng = RngStream::new(4, 0).rng();
        let symbols = draw_symbols(&scen, SymbolPrior::Gaussian, &mut rng);
        let frame = modulate(&symbols, &scen).unwrap();
        let mut taps = vec![CMat::zeros(2, 2); 8];
        taps[0] = CMat::identity(2, 2);
        let r = propagate(&frame, &taps, 0.0, &mut rng);
        assert!(rel_frobenius_error(&r, &frame.time) < 1e-14);
    }

    #[test]
    fn propagate_pure_noise_has_expected_variance() {
        // 16 antennas x 1024 samples > 1e4 draws
        let scen = scenario(16, 2, 2, 256, 4);
        let frame = modulate(&CMat::zeros(2, 1024), &scen).unwrap();
        let taps = vec![CMat::zeros(16, 2); 1024];
        let mut rng = RngStream::new(5, 0).rng();
        let noise_var = 0.37;
        let r = propagate(&frame, &taps, noise_var, &mut rng);
        let measured = r.iter().map(|z| z.norm_sqr()).sum::<f64>() / (16.0 * 1024.0);
        assert!(
            (measured - noise_var).abs() < 0.03 * noise_var,
            "variance {measured} vs {noise_var}"
        );
    }

    #[test]
    fn propagate_matches_frequency_domain_model() {
        // Noiseless circular convolution equals sqrt(p) H[k] s[k] per bin.
        let scen = scenario(4, 2, 2, 8, 2);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(6, 0)), &scen);
        let taps = time_taps(&ch);
        let mut rng = RngStream::new(6, 1).rng();
        let symbols = draw_symbols(&scen, SymbolPrior::Gaussian, &mut rng);
        let frame = modulate(&symbols, &scen).unwrap();
        let r = propagate(&frame, &taps, 0.0, &mut rng);
        let r_freq = fft::dft_rows_unitary(&r);
        let sqrt_p = scen.symbol_power().sqrt();
        let frame_scale = r_freq.norm();
        for k in 0..scen.total_subcarriers() {
            let expected = ch.at(k) * symbols.column(k) * C64::from(sqrt_p);
            let got = r_freq.column(k).clone_owned();
            // zero-padded bins are compared in absolute terms
            let err = (&got - &expected).norm() / expected.norm().max(1e-6 * frame_scale);
            assert!(err < 1e-8, "subcarrier {k}: error {err}");
        }
    }

    #[test]
    fn high_resolution_receive_is_nearly_linear() {
        let scen = scenario(8, 4, 2, 16, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(7, 0)), &scen);
        let taps = time_taps(&ch);
        let analog = random_constant_modulus(8, 4, 1);
        let q = ScalarQuantizer::design(12).unwrap();
        let scales = rf_input_scales(&analytic_rx_covariance(&ch, &scen), &analog);
        let mut rng = RngStream::new(7, 1).rng();
        let symbols = draw_symbols(&scen, SymbolPrior::Gaussian, &mut rng);
        let frame = modulate(&symbols, &scen).unwrap();
        let r = propagate(&frame, &taps, scen.noise_variance(), &mut rng);
        let rx = receive_quantized(&r, &analog, &q, &scales).unwrap();
        let (_, y_freq) = receive_unquantized(&r, &analog);
        let rel = rel_frobenius_error(&rx.z_freq, &y_freq);
        assert!(rel < 1e-2, "12-bit chain deviates by {rel}");
    }

    #[test]
    fn one_bit_receive_has_fixed_modulus() {
        let scen = scenario(8, 2, 2, 16, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(8, 0)), &scen);
        let taps = time_taps(&ch);
        let analog = random_constant_modulus(8, 2, 2);
        let q = ScalarQuantizer::design(1).unwrap();
        let scales = rf_input_scales(&analytic_rx_covariance(&ch, &scen), &analog);
        let mut rng = RngStream::new(8, 1).rng();
        let symbols = draw_symbols(&scen, SymbolPrior::Gaussian, &mut rng);
        let frame = modulate(&symbols, &scen).unwrap();
        let r = propagate(&frame, &taps, scen.noise_variance(), &mut rng);
        let rx = receive_quantized(&r, &analog, &q, &scales).unwrap();
        let level = (2.0 / std::f64::consts::PI).sqrt();
        for j in 0..2 {
            let expected = scales[j] * level;
            for n in 0..16 {
                let z = rx.z_time[(j, n)];
                assert!((z.re.abs() - expected).abs() < 1e-12);
                assert!((z.im.abs() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn receive_rejects_bad_scales() {
        let scen = scenario(4, 2, 2, 8, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(9, 0)), &scen);
        let taps = time_taps(&ch);
        let analog = random_constant_modulus(4, 2, 3);
        let q = ScalarQuantizer::design(2).unwrap();
        let mut rng = RngStream::new(9, 1).rng();
        let frame = modulate(&draw_symbols(&scen, SymbolPrior::Gaussian, &mut rng), &scen).unwrap();
        let r = propagate(&frame, &taps, 0.01, &mut rng);
        assert!(matches!(
            receive_quantized(&r, &analog, &q, &[1.0, -0.5]),
            Err(ChainError::BadScale)
        ));
    }

    #[test]
    fn analytic_rx_covariance_matches_empirical() {
        let scen = scenario(6, 2, 2, 8, 2);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(10, 0)), &scen);
        let taps = time_taps(&ch);
        let analytic = analytic_rx_covariance(&ch, &scen);
        // zero channel sanity
        let zero = ChannelRealization::from_matrices(vec![CMat::zeros(6, 2); 16]);
        let noise_only = analytic_rx_covariance(&zero, &scen);
        let expected = CMat::identity(6, 6) * C64::from(scen.noise_variance());
        assert!(rel_frobenius_error(&noise_only, &expected) < 1e-14);
        // trace is linear in symbol power
        let mut cfg2 = scen.config().clone();
        cfg2.symbol_power = 2.0;
        let scen2 = Scenario::new(cfg2).unwrap();
        let doubled = analytic_rx_covariance(&ch, &scen2);
        let tr = |m: &CMat| (0..6).map(|i| m[(i, i)].re).sum::<f64>();
        let noise_tr = 6.0 * scen.noise_variance();
        assert!(
            ((tr(&doubled) - 2.0 * noise_tr) - 2.0 * (tr(&analytic) - noise_tr)).abs() < 1e-9
        );
        // Monte Carlo covariance over frames and samples
        let stream = RngStream::new(10, 1);
        let n_frames: usize = 600;
        let mut emp = CMat::zeros(6, 6);
        for f in 0..n_frames {
            let mut rng = stream.sub_rng(f as u64);
            let symbols = draw_symbols(&scen, SymbolPrior::Gaussian, &mut rng);
            let frame = modulate(&symbols, &scen).unwrap();
            let r = propagate(&frame, &taps, scen.noise_variance(), &mut rng);
            emp.gemm(
                C64::from(1.0 / (n_frames * scen.total_subcarriers()) as f64),
                &r,
                &r.adjoint(),
                C64::from(1.0),
            );
        }
        let rel = rel_frobenius_error(&emp, &analytic);
        assert!(rel < 0.03, "empirical covariance off by {rel}");
    }

    #[test]
    fn qd_covariance_shrinks_with_resolution_and_spreads_out_of_band() {
        let scen = scenario(6, 3, 2, 8, 2);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(11, 0)), &scen);
        let analog = random_constant_modulus(6, 3, 4);
        let stream = RngStream::new(11, 1);
        let q1 = ScalarQuantizer::design(1).unwrap();
        let q12 = ScalarQuantizer::design(12).unwrap();
        let c1 = estimate_qd_covariance_mc(&ch, &analog, &q1, &scen, 200, &stream);
        let c12 = estimate_qd_covariance_mc(&ch, &analog, &q12, &scen, 200, &stream);
        // distortion power in the oversampling band collapses with resolution
        let excess_diag = |covs: &[CMat]| {
            let mut acc = 0.0;
            for k in scen.data_subcarriers()..scen.total_subcarriers() {
                acc += (0..3).map(|j| covs[k][(j, j)].re).sum::<f64>();
            }
            acc / (scen.total_subcarriers() - scen.data_subcarriers()) as f64
        };
        let e1 = excess_diag(&c1);
        let e12 = excess_diag(&c12);
        assert!(e1 > 10.0 * e12, "1-bit excess-band QD {e1} vs 12-bit {e12}");
    }

    #[test]
    fn qd_estimate_is_orthogonal_to_input() {
        // cross-correlation between the extracted distortion and the linear
        // output is small when the empirical gain is used
        let scen = scenario(6, 3, 2, 8, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(12, 0)), &scen);
        let taps = time_taps(&ch);
        let analog = random_constant_modulus(6, 3, 5);
        let q = ScalarQuantizer::design(3).unwrap();
        let scales = rf_input_scales(&analytic_rx_covariance(&ch, &scen), &analog);
        let stream = RngStream::new(12, 1);
        let alpha = bussgang_alpha_empirical(&q, 200_000, &mut stream.sub_rng(0));
        let n_frames = 400;
        let nrf = 3;
        let mut cross = vec![C64::default(); nrf];
        let mut eta_pow = vec![0.0f64; nrf];
        let mut y_pow = vec![0.0f64; nrf];
        for f in 0..n_frames {
            let mut rng = stream.sub_rng(f + 1);
            let symbols = draw_symbols(&scen, SymbolPrior::Gaussian, &mut rng);
            let frame = modulate(&symbols, &scen).unwrap();
            let r = propagate(&frame, &taps, scen.noise_variance(), &mut rng);
            let rx = receive_quantized(&r, &analog, &q, &scales).unwrap();
            let (_, y_freq) = receive_unquantized(&r, &analog);
            for k in 0..scen.total_subcarriers() {
                for j in 0..nrf {
                    let y = y_freq[(j, k)];
                    let eta = rx.z_freq[(j, k)] - y * alpha;
                    cross[j] += eta * y.conj();
                    eta_pow[j] += eta.norm_sqr();
                    y_pow[j] += y.norm_sqr();
                }
            }
        }
        for j in 0..nrf {
            let corr = cross[j].norm() / (eta_pow[j] * y_pow[j]).sqrt();
            assert!(corr < 0.05, "chain {j}: |corr| = {corr}");
        }
    }

    #[test]
    fn sindr_estimate_degenerates_cleanly() {
        // No quantization (12-bit), no noise, single user, matched combiner:
        // the residual is numerically zero and the estimate saturates.
        let scen = Scenario::new(SystemConfig {
            antennas: 4,
            rf_chains: 4,
            users: 1,
            data_subcarriers: 8,
            osr: 1,
            snr_db: 300.0,
            ..SystemConfig::default()
        })
        .unwrap();
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(13, 0)), &scen);
        let m = 4usize;
        let analog = CMat::from_fn(m, m, |r, c| {
            C64::from_polar(0.5, -std::f64::consts::TAU * (r * c) as f64 / m as f64)
        });
        let digital: Vec<CMat> = (0..8)
            .map(|k| {
                let b = analog.ad_mul(ch.at(k));
                CMat::from_column_slice(m, 1, b.column(0).clone_owned().as_slice())
            })
            .collect();
        let combiner = analysis::HybridCombiner::new(analog, digital).unwrap();
        let q = ScalarQuantizer::design(12).unwrap();
        let est = estimate_sindr_mc(&ch, &combiner, &q, &scen, 50, &RngStream::new(13, 1), SymbolPrior::Gaussian);
        // with quantization still present the chain is not exactly linear,
        // but at 12 bits and 300 dB SNR most entries saturate or are huge
        let huge = est
            .zeta
            .iter()
            .filter(|&&z| z > 1e6 || z.is_infinite())
            .count();
        assert!(huge >= 6, "only {huge} entries saturated: {:?}", est.zeta);
    }

    #[test]
    fn sindr_estimate_matches_linear_theory_without_quantization() {
        // 12-bit ADCs at moderate SNR: empirical SINDR should sit near the
        // unquantized closed form (gamma ~ 1.6e-7).
        let scen = scenario(8, 4, 2, 8, 1);
        let ch = freq_channel(&draw_paths(&scen, &RngStream::new(14, 0)), &scen);
        let analog = random_constant_modulus(8, 4, 6);
        let q = ScalarQuantizer::design(12).unwrap();
        let noise = analysis::effective_noise_cov(&ch, &analog, q.gamma(), 1.0, scen.snr_linear(), 8).unwrap();
        // MMSE-like digital combiner
        let digital: Vec<CMat> = (0..8)
            .map(|k| {
                let b = analog.ad_mul(ch.at(k));
                let j = &b * b.adjoint() + &noise.cov;
                let chol = nalgebra::Cholesky::new(j).unwrap();
                let mut u = CMat::zeros(4, 2);
                for i in 0..2 {
                    u.set_column(i, &chol.solve(&b.column(i).clone_owned()));
                }
                u
            })
            .collect();
        let zeta_theory = analysis::sindr(&ch, &analog, &digital, &noise.cov);
        let combiner = analysis::HybridCombiner::new(analog, digital).unwrap();
        let est = estimate_sindr_mc(&ch, &combiner, &q, &scen, 800, &RngStream::new(14, 1), SymbolPrior::Gaussian);
        let mut total_db = 0.0;
        for i in 0..2 {
            for k in 0..8 {
                let ratio_db = 10.0 * (est.zeta[(i, k)] / zeta_theory[(i, k)]).log10();
                total_db += ratio_db.abs();
            }
        }
        let mean_db = total_db / 16.0;
        assert!(mean_db < 1.0, "mean |dB error| = {mean_db}");
    }
}
