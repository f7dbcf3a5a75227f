//! Seeded Monte Carlo sweeps over the receiver designs.
//!
//! One sweep iterates over its points (SNR, bandwidth, OSR, or an ADC-bits x
//! OSR grid), draws `n_realizations` channels per point from
//! `RngStream(master_seed, realization)`, designs every requested receiver on
//! the *same* channel (paired comparison), and aggregates spectral
//! efficiency and energy efficiency into [`ResultRow`]s. Identical inputs
//! yield identical rows regardless of scheduling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use qmimo_core::analysis::{effective_noise_cov, sindr, spectral_efficiency};
use qmimo_core::channel::{draw_paths, freq_channel, ChannelRealization};
use qmimo_core::config::{ConfigError, Scenario, SystemConfig};
use qmimo_core::optimizer::{
    design_fully_digital_mmse, design_hybrid, init_analog_svd, init_digital_mmse, DesignOptions,
    OptimizerError,
};
use qmimo_core::power::{digital_receiver_power, hybrid_receiver_power, PowerModel};
use qmimo_core::quantizer::{distortion_factor, QuantizerError, ScalarQuantizer};
use qmimo_core::signal_chain::{estimate_sindr_mc_parts, SymbolPrior};
use qmimo_core::util::mean_and_stderr;
use qmimo_core::{CMat, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    ProposedHybrid,
    SvdHybrid,
    DigitalMmse,
}

impl ReceiverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReceiverKind::ProposedHybrid => "proposed_hybrid",
            ReceiverKind::SvdHybrid => "svd_hybrid",
            ReceiverKind::DigitalMmse => "digital_mmse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "proposed_hybrid" => Some(Self::ProposedHybrid),
            "svd_hybrid" => Some(Self::SvdHybrid),
            "digital_mmse" => Some(Self::DigitalMmse),
            _ => None,
        }
    }

    pub fn all() -> Vec<ReceiverKind> {
        vec![
            ReceiverKind::ProposedHybrid,
            ReceiverKind::SvdHybrid,
            ReceiverKind::DigitalMmse,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Sweep values are SNR points in dB.
    Snr,
    /// Sweep values are transmission bandwidths in Hz (subcarrier spacing is
    /// adjusted, the subcarrier count stays fixed).
    Bandwidth,
    /// Sweep values are integer oversampling ratios.
    Osr,
    /// Sweep values are ADC resolutions; each is crossed with `grid_betas`.
    EeGrid,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::Snr => "snr",
            SweepKind::Bandwidth => "bandwidth",
            SweepKind::Osr => "osr",
            SweepKind::EeGrid => "ee_grid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "snr" => Some(Self::Snr),
            "bandwidth" => Some(Self::Bandwidth),
            "osr" => Some(Self::Osr),
            "ee_grid" | "ee-grid" => Some(Self::EeGrid),
            _ => None,
        }
    }
}

/// What to sweep and how hard to average.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// Sweep points, ascending (unit depends on `kind`).
    pub values: Vec<f64>,
    pub receivers: Vec<ReceiverKind>,
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Also run the brute-force chain and report empirical-SINDR rows
    /// (receiver names suffixed `_mc`).
    pub mc_oracle: bool,
    /// Frames per empirical-SINDR estimate.
    pub mc_frames: usize,
    /// Oversampling ratios crossed with each `values` entry for
    /// [`SweepKind::EeGrid`].
    pub grid_betas: Vec<usize>,
    /// Record wall-clock design times. Off by default so that re-runs of the
    /// same seed produce bitwise-identical output files.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, values: Vec<f64>) -> Self {
        Self {
            kind,
            values,
            receivers: ReceiverKind::all(),
            n_realizations: 100,
            master_seed: 1,
            mc_oracle: false,
            mc_frames: 200,
            grid_betas: vec![1, 2, 4, 8, 16],
            timing: false,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.values.is_empty() {
            return Err(HarnessError::EmptySweep);
        }
        if self.values.windows(2).any(|w| w[0] > w[1]) {
            return Err(HarnessError::UnsortedValues);
        }
        if self.n_realizations == 0 {
            return Err(HarnessError::NoRealizations);
        }
        if self.receivers.is_empty() {
            return Err(HarnessError::NoReceivers);
        }
        if self.kind == SweepKind::EeGrid && self.grid_betas.is_empty() {
            return Err(HarnessError::EmptySweep);
        }
        Ok(())
    }
}

/// One aggregated result: a sweep point times a receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_kind: String,
    pub sweep_value: f64,
    pub receiver: String,
    pub b: u32,
    pub beta: usize,
    pub se_mean: f64,
    pub se_stderr: f64,
    pub ee: f64,
    pub n_realizations: usize,
    pub wall_time_s: f64,
    pub iterations_mean: f64,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("sweep values must be non-empty")]
    EmptySweep,
    #[error("sweep values must be sorted ascending")]
    UnsortedValues,
    #[error("need at least one realization")]
    NoRealizations,
    #[error("need at least one receiver")]
    NoReceivers,
    #[error("oversampling sweep values must be positive integers, got {0}")]
    FractionalOsr(f64),
    #[error("{failed} of {total} realizations failed (more than 1%), first failure at seed {first_seed}: {first_error}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first_seed: u64,
        first_error: String,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Analysis(#[from] qmimo_core::analysis::AnalysisError),
}

struct RealizationResult {
    rates: Vec<f64>,
    mc_rates: Vec<f64>,
    iterations: Vec<f64>,
    seconds: Vec<f64>,
}

/// Per-realization design and evaluation of every receiver on one channel.
fn run_realization(
    scenario: &Scenario,
    gamma: f64,
    quantizer: &ScalarQuantizer,
    spec: &SweepSpec,
    ch: &ChannelRealization,
    stream: &RngStream,
    opts: &DesignOptions,
) -> Result<RealizationResult, HarnessError> {
    let mut rates = Vec::with_capacity(spec.receivers.len());
    let mut mc_rates = Vec::new();
    let mut iterations = Vec::with_capacity(spec.receivers.len());
    let mut seconds = Vec::with_capacity(spec.receivers.len());
    for receiver in &spec.receivers {
        let started = std::time::Instant::now();
        let (rate, iters, analog, digital): (f64, f64, CMat, Vec<CMat>) = match receiver {
            ReceiverKind::ProposedHybrid => {
                let out = design_hybrid(ch, scenario, gamma, opts)?;
                let iters = out.trace.len() as f64;
                let (analog, digital) = out.combiner.into_parts();
                (out.rate, iters, analog, digital)
            }
            ReceiverKind::SvdHybrid => {
                let analog = init_analog_svd(ch, scenario);
                let noise = effective_noise_cov(
                    ch,
                    &analog,
                    gamma,
                    scenario.osr() as f64,
                    scenario.snr_linear(),
                    scenario.data_subcarriers(),
                )?;
                let digital = init_digital_mmse(ch, &analog, gamma, scenario)?;
                let zeta = sindr(ch, &analog, &digital, &noise.cov);
                (spectral_efficiency(&zeta), 1.0, analog, digital)
            }
            ReceiverKind::DigitalMmse => {
                let out = design_fully_digital_mmse(ch, scenario, gamma)?;
                let analog = CMat::identity(scenario.antennas(), scenario.antennas());
                (out.rate, 1.0, analog, out.digital)
            }
        };
        if spec.mc_oracle {
            let est = estimate_sindr_mc_parts(
                ch,
                &analog,
                &digital,
                quantizer,
                scenario,
                spec.mc_frames,
                &stream.with_stream(stream.stream_id ^ 0x4d43_0000_0000_0000),
                SymbolPrior::Gaussian,
            );
            let mut zeta = est.zeta;
            for v in zeta.iter_mut() {
                if !v.is_finite() {
                    *v = 1e12;
                }
            }
            mc_rates.push(spectral_efficiency(&zeta));
        }
        seconds.push(started.elapsed().as_secs_f64());
        rates.push(rate);
        iterations.push(iters);
    }
    Ok(RealizationResult {
        rates,
        mc_rates,
        iterations,
        seconds,
    })
}

fn point_configs(
    spec: &SweepSpec,
    base: &SystemConfig,
) -> Result<Vec<(f64, SystemConfig)>, HarnessError> {
    let mut points = Vec::new();
    match spec.kind {
        SweepKind::Snr => {
            for &v in &spec.values {
                let mut cfg = base.clone();
                cfg.snr_db = v;
                points.push((v, cfg));
            }
        }
        SweepKind::Bandwidth => {
            for &v in &spec.values {
                let mut cfg = base.clone();
                cfg.subcarrier_spacing_hz = v / base.data_subcarriers as f64;
                points.push((v, cfg));
            }
        }
        SweepKind::Osr => {
            for &v in &spec.values {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(HarnessError::FractionalOsr(v));
                }
                let mut cfg = base.clone();
                cfg.osr = v as usize;
                points.push((v, cfg));
            }
        }
        SweepKind::EeGrid => {
            for &v in &spec.values {
                if v.fract() != 0.0 || v < 1.0 || v > 12.0 {
                    return Err(HarnessError::FractionalOsr(v));
                }
                for &beta in &spec.grid_betas {
                    let mut cfg = base.clone();
                    cfg.adc_bits = v as u32;
                    cfg.osr = beta;
                    points.push((v, cfg));
                }
            }
        }
    }
    Ok(points)
}

/// Run a sweep: every receiver on every realization of every point.
///
/// Realization `r` of each point uses `RngStream(master_seed, r)`, so the
/// same channels pair every receiver, and (for path parameters) the sweep
/// points themselves. Failed realizations are skipped and counted; more than
/// 1% failures aborts the sweep.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &SystemConfig,
    pm: &PowerModel,
) -> Result<Vec<ResultRow>, HarnessError> {
    run_sweep_with_options(spec, base, pm, &DesignOptions::default())
}

pub fn run_sweep_with_options(
    spec: &SweepSpec,
    base: &SystemConfig,
    pm: &PowerModel,
    opts: &DesignOptions,
) -> Result<Vec<ResultRow>, HarnessError> {
    spec.validate()?;
    let mut rows = Vec::new();
    let mut failures: Vec<(u64, String)> = Vec::new();
    let mut total_runs = 0usize;
    for (value, cfg) in point_configs(spec, base)? {
        let scenario = Scenario::new(cfg.clone())?;
        let gamma = distortion_factor(cfg.adc_bits, cfg.gamma_model)?;
        let quantizer = ScalarQuantizer::design(cfg.adc_bits)?;
        let mut per_receiver: Vec<Vec<f64>> = vec![Vec::new(); spec.receivers.len()];
        let mut per_receiver_mc: Vec<Vec<f64>> = vec![Vec::new(); spec.receivers.len()];
        let mut per_receiver_iters: Vec<Vec<f64>> = vec![Vec::new(); spec.receivers.len()];
        let mut per_receiver_secs: Vec<Vec<f64>> = vec![Vec::new(); spec.receivers.len()];
        for r in 0..spec.n_realizations {
            total_runs += 1;
            let stream = RngStream::new(spec.master_seed, r as u64);
            let ch = freq_channel(&draw_paths(&scenario, &stream), &scenario);
            match run_realization(&scenario, gamma, &quantizer, spec, &ch, &stream, opts) {
                Ok(res) => {
                    for (i, rate) in res.rates.iter().enumerate() {
                        per_receiver[i].push(*rate);
                        per_receiver_iters[i].push(res.iterations[i]);
                        per_receiver_secs[i].push(res.seconds[i]);
                    }
                    if spec.mc_oracle {
                        for (i, rate) in res.mc_rates.iter().enumerate() {
                            per_receiver_mc[i].push(*rate);
                        }
                    }
                }
                Err(e) => {
                    log::warn!("realization {r} of point {value} failed: {e}");
                    failures.push((r as u64, e.to_string()));
                }
            }
        }
        if failures.len() * 100 > total_runs {
            let (first_seed, first_error) = failures[0].clone();
            return Err(HarnessError::TooManyFailures {
                failed: failures.len(),
                total: total_runs,
                first_seed,
                first_error,
            });
        }
        for (i, receiver) in spec.receivers.iter().enumerate() {
            let power = match receiver {
                ReceiverKind::DigitalMmse => digital_receiver_power(&scenario, pm),
                _ => hybrid_receiver_power(&scenario, pm),
            };
            let (se_mean, se_stderr) = mean_and_stderr(&per_receiver[i]);
            let (secs_mean, _) = mean_and_stderr(&per_receiver_secs[i]);
            let (iters_mean, _) = mean_and_stderr(&per_receiver_iters[i]);
            rows.push(ResultRow {
                sweep_kind: spec.kind.as_str().to_string(),
                sweep_value: value,
                receiver: receiver.as_str().to_string(),
                b: cfg.adc_bits,
                beta: cfg.osr,
                se_mean,
                se_stderr,
                ee: se_mean / power,
                n_realizations: per_receiver[i].len(),
                wall_time_s: if spec.timing { secs_mean } else { 0.0 },
                iterations_mean: iters_mean,
            });
            if spec.mc_oracle {
                let (mc_mean, mc_stderr) = mean_and_stderr(&per_receiver_mc[i]);
                rows.push(ResultRow {
                    sweep_kind: spec.kind.as_str().to_string(),
                    sweep_value: value,
                    receiver: format!("{}_mc", receiver.as_str()),
                    b: cfg.adc_bits,
                    beta: cfg.osr,
                    se_mean: mc_mean,
                    se_stderr: mc_stderr,
                    ee: mc_mean / power,
                    n_realizations: per_receiver_mc[i].len(),
                    wall_time_s: 0.0,
                    iterations_mean: 0.0,
                });
            }
        }
    }
    Ok(rows)
}

/// Dump the path parameters of every (point, realization) pair of a sweep as
/// a JSON array (reproducibility aid).
pub fn dump_paths_json(spec: &SweepSpec, base: &SystemConfig) -> Result<String, HarnessError> {
    spec.validate()?;
    let mut entries = Vec::new();
    for (value, cfg) in point_configs(spec, base)? {
        let scenario = Scenario::new(cfg)?;
        for r in 0..spec.n_realizations {
            let stream = RngStream::new(spec.master_seed, r as u64);
            let paths = draw_paths(&scenario, &stream);
            entries.push(serde_json::json!({
                "sweep_value": value,
                "realization": r,
                "users": serde_json::from_str::<serde_json::Value>(&paths.to_json()).expect("valid json"),
            }));
        }
    }
    Ok(serde_json::to_string_pretty(&entries).expect("serializable"))
}
