//! Wideband multipath channel generation with beam squint.
//!
//! Each user sees `L` paths with complex gain, delay, and angle of arrival.
//! Steering vectors are evaluated at every subcarrier frequency, so a wide
//! band squints the array response; tap gains come from a raised-cosine
//! pulse sampled at the (possibly oversampled) grid.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::fft;
use crate::rng::{complex_normal, RngStream};
use crate::{C64, CMat, CVec};

/// One propagation path: complex gain, delay in seconds, angle of arrival in
/// radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: C64,
    pub delay_s: f64,
    pub aoa_rad: f64,
}

/// Per-user path parameters; exactly `paths_per_user` entries per user.
#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    per_user: Vec<Vec<PathComponent>>,
}

/// Serialized form of one path: real/imaginary gain, delay, angle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct PathRecord {
    lambda_re: f64,
    lambda_im: f64,
    tau: f64,
    theta: f64,
}

impl PathParams {
    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    pub fn paths(&self, user: usize) -> &[PathComponent] {
        &self.per_user[user]
    }

    /// JSON dump: per user, an array of `{lambda_re, lambda_im, tau, theta}`.
    pub fn to_json(&self) -> String {
        let records: Vec<Vec<PathRecord>> = self
            .per_user
            .iter()
            .map(|paths| {
                paths
                    .iter()
                    .map(|p| PathRecord {
                        lambda_re: p.gain.re,
                        lambda_im: p.gain.im,
                        tau: p.delay_s,
                        theta: p.aoa_rad,
                    })
                    .collect()
            })
            .collect();
        serde_json::to_string(&records).expect("path parameters serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        let records: Vec<Vec<PathRecord>> = serde_json::from_str(s)?;
        Ok(Self {
            per_user: records
                .into_iter()
                .map(|paths| {
                    paths
                        .into_iter()
                        .map(|r| PathComponent {
                            gain: C64::new(r.lambda_re, r.lambda_im),
                            delay_s: r.tau,
                            aoa_rad: r.theta,
                        })
                        .collect()
                })
                .collect(),
        })
    }
}

/// Frequency-domain channel: one `M x I` matrix per subcarrier (all `Nc` of
/// them, including the oversampling band), plus the generating paths.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    per_subcarrier: Vec<CMat>,
    paths: PathParams,
}

impl ChannelRealization {
    /// Channel matrix at subcarrier `k` (column `i` is user `i`).
    pub fn at(&self, k: usize) -> &CMat {
        &self.per_subcarrier[k]
    }

    pub fn subcarriers(&self) -> usize {
        self.per_subcarrier.len()
    }

    pub fn antennas(&self) -> usize {
        self.per_subcarrier[0].nrows()
    }

    pub fn users(&self) -> usize {
        self.per_subcarrier[0].ncols()
    }

    pub fn paths(&self) -> &PathParams {
        &self.paths
    }

    /// Build directly from per-subcarrier matrices (test helper).
    pub fn from_matrices(per_subcarrier: Vec<CMat>) -> Self {
        assert!(!per_subcarrier.is_empty());
        let shape = per_subcarrier[0].shape();
        assert!(per_subcarrier.iter().all(|m| m.shape() == shape));
        Self {
            per_subcarrier,
            paths: PathParams { per_user: vec![] },
        }
    }
}

/// Draw path parameters: gains CN(0,1), delays uniform on `[0, D0/Bw]`,
/// angles uniform on `[0, 2*pi)`, independently per user and path.
pub fn draw_paths(scenario: &Scenario, stream: &RngStream) -> PathParams {
    use rand::Rng;
    let mut rng = stream.rng();
    let delay_spread = scenario.nyquist_delay_taps() as f64 / scenario.bandwidth_hz();
    let per_user = (0..scenario.users())
        .map(|_| {
            (0..scenario.paths_per_user())
                .map(|_| PathComponent {
                    gain: complex_normal(&mut rng),
                    delay_s: rng.gen::<f64>() * delay_spread,
                    aoa_rad: rng.gen::<f64>() * std::f64::consts::TAU,
                })
                .collect()
        })
        .collect();
    PathParams { per_user }
}

/// Array steering vector at angle `theta` and frequency `f_hz` for a uniform
/// linear array of `m` antennas spaced half a wavelength at the carrier:
/// `(1/sqrt(M)) [1, e^{-j pi (f/fc) sin(theta)}, ...]`. Unit Euclidean norm.
pub fn steering_vector(theta: f64, f_hz: f64, carrier_hz: f64, m: usize) -> CVec {
    let scale = 1.0 / (m as f64).sqrt();
    let step = -std::f64::consts::PI * (f_hz / carrier_hz) * theta.sin();
    DVector::from_fn(m, |a, _| C64::from_polar(scale, step * a as f64))
}

/// Time-domain raised cosine with symbol period `ts` and roll-off in `(0,1]`:
/// `sinc(t/Ts) cos(pi r t/Ts) / (1 - (2 r t/Ts)^2)`, with the removable
/// singularity at `|t| = Ts/(2r)` filled by its limit `(pi/4) sinc(1/(2r))`.
pub fn raised_cosine(t: f64, ts: f64, rolloff: f64) -> f64 {
    assert!(ts > 0.0, "symbol period must be positive");
    assert!(rolloff > 0.0 && rolloff <= 1.0, "roll-off must be in (0, 1]");
    let x = t / ts;
    let denom = 1.0 - (2.0 * rolloff * x) * (2.0 * rolloff * x);
    if denom.abs() < 1e-9 {
        return std::f64::consts::FRAC_PI_4 * sinc(1.0 / (2.0 * rolloff));
    }
    sinc(x) * (std::f64::consts::PI * rolloff * x).cos() / denom
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let px = std::f64::consts::PI * x;
    px.sin() / px
}

/// Frequency-domain channel from path parameters:
/// `h_i[k] = sqrt(M/L) * sum_l g_{i,l}[k] a(theta_{i,l}, f_k)` with tap gains
/// `g_{i,l}[k] = sum_d lambda * p_rc(d/fs - tau) e^{-j 2 pi k d / Nc}` summed
/// over the `D` delay taps, for every subcarrier `k` in `[0, Nc)`.
pub fn freq_channel(paths: &PathParams, scenario: &Scenario) -> ChannelRealization {
    assert_eq!(paths.users(), scenario.users(), "paths drawn for another scenario");
    let m = scenario.antennas();
    let users = scenario.users();
    let nc = scenario.total_subcarriers();
    let n_paths = scenario.paths_per_user();
    let fs = scenario.sample_rate_hz();
    let ts = 1.0 / scenario.bandwidth_hz();
    let d_taps = scenario.delay_taps();
    let prefactor = (m as f64 / n_paths as f64).sqrt();

    let mut per_subcarrier: Vec<CMat> = (0..nc).map(|_| CMat::zeros(m, users)).collect();
    // Per path: pulse-shaped taps -> DFT over the tap index gives g[k] for
    // every subcarrier at once.
    let mut taps = vec![C64::default(); nc];
    for (i, user_paths) in paths.per_user.iter().enumerate() {
        for p in user_paths {
            for (d, slot) in taps.iter_mut().enumerate() {
                *slot = if d < d_taps {
                    C64::from(raised_cosine(d as f64 / fs - p.delay_s, ts, 1.0)) * p.gain
                } else {
                    C64::default()
                };
            }
            fft::forward_raw(&mut taps);
            for k in 0..nc {
                let g = taps[k] * prefactor;
                let a = steering_vector(p.aoa_rad, scenario.subcarrier_freq_hz(k), scenario.carrier_hz(), m);
                let mut col = per_subcarrier[k].column_mut(i);
                col.axpy(g, &a, C64::from(1.0));
            }
        }
    }
    ChannelRealization {
        per_subcarrier,
        paths: paths.clone(),
    }
}

/// Time-domain taps `H[d] = (1/Nc) sum_k H[k] e^{+j 2 pi k d / Nc}`; the
/// exact inverse of the tap-to-subcarrier DFT, so the returned `Nc` matrices
/// regenerate the frequency response bit-for-bit (up to rounding).
pub fn time_taps(ch: &ChannelRealization) -> Vec<CMat> {
    let nc = ch.subcarriers();
    let m = ch.antennas();
    let users = ch.users();
    let mut out: Vec<CMat> = (0..nc).map(|_| CMat::zeros(m, users)).collect();
    let mut seq = vec![C64::default(); nc];
    let scale = 1.0 / nc as f64;
    for a in 0..m {
        for i in 0..users {
            for k in 0..nc {
                seq[k] = ch.at(k)[(a, i)];
            }
            fft::inverse_raw(&mut seq);
            for d in 0..nc {
                out[d][(a, i)] = seq[d] * scale;
            }
        }
    }
    out
}
