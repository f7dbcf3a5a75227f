//! Command-line front end: seeded sweeps, the self-check battery, and the
//! energy-efficiency grid.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qmimo_cli::config_file::ConfigDocument;
use qmimo_cli::output::{write_results, OutputFormat};
use qmimo_cli::sweep::{run_sweep, ReceiverKind, SweepKind};
use qmimo_cli::validate::{run_validation, ValidationOptions};
use qmimo_core::config::{GammaModel, Scenario};

#[derive(Parser)]
#[command(
    name = "qmimo",
    about = "Link-level sweeps for a massive MIMO-OFDM uplink with low-resolution ADCs, oversampling, and hybrid combining",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo sweep (SNR, bandwidth, or OSR).
    Sweep(SweepArgs),
    /// Sweep ADC bits crossed with oversampling ratios and report energy
    /// efficiency.
    EeGrid(EeGridArgs),
    /// Run the analysis-vs-simulation validation battery.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file with {system, power, sweep} sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base-station antennas.
    #[arg(long)]
    antennas: Option<usize>,
    /// RF chains.
    #[arg(long)]
    rf_chains: Option<usize>,
    /// Users.
    #[arg(long)]
    users: Option<usize>,
    /// Data subcarriers.
    #[arg(long)]
    subcarriers: Option<usize>,
    /// ADC resolution in bits.
    #[arg(long)]
    bits: Option<u32>,
    /// Oversampling ratio.
    #[arg(long)]
    beta: Option<usize>,
    /// SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Distortion-factor source: lloyd_max or fit.
    #[arg(long)]
    gamma_model: Option<String>,
    /// Master seed of the realization streams.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn load(&self) -> Result<ConfigDocument, String> {
        let mut doc = match &self.config {
            Some(path) => ConfigDocument::load(path).map_err(|e| e.to_string())?,
            None => ConfigDocument::default(),
        };
        if let Some(v) = self.antennas {
            doc.system.antennas = v;
        }
        if let Some(v) = self.rf_chains {
            doc.system.rf_chains = v;
        }
        if let Some(v) = self.users {
            doc.system.users = v;
        }
        if let Some(v) = self.subcarriers {
            doc.system.data_subcarriers = v;
        }
        if let Some(v) = self.bits {
            doc.system.adc_bits = v;
        }
        if let Some(v) = self.beta {
            doc.system.osr = v;
        }
        if let Some(v) = self.snr_db {
            doc.system.snr_db = v;
        }
        if let Some(v) = &self.gamma_model {
            doc.system.gamma_model = match v.as_str() {
                "lloyd_max" | "lloyd-max" => GammaModel::LloydMax,
                "fit" => GammaModel::Fit,
                other => return Err(format!("unknown gamma model `{other}`")),
            };
        }
        if let Some(v) = self.seed {
            doc.sweep.master_seed = v;
        }
        Ok(doc)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// What to sweep: snr, bandwidth, or osr.
    #[arg(long)]
    kind: String,
    /// Comma-separated sweep points (dB, Hz, or integer ratios).
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    /// Comma-separated subset of {proposed_hybrid, svd_hybrid, digital_mmse}.
    #[arg(long)]
    receivers: Option<String>,
    /// Channel realizations per sweep point.
    #[arg(long)]
    realizations: Option<usize>,
    /// Also run the brute-force chain (adds `<receiver>_mc` rows).
    #[arg(long)]
    mc_oracle: bool,
    /// Record wall-clock design times (off keeps re-runs bitwise identical).
    #[arg(long)]
    timing: bool,
    /// Output CSV path.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Optional JSON mirror path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Optional JSON dump of every realization's path parameters.
    #[arg(long)]
    dump_paths: Option<PathBuf>,
}

#[derive(Args)]
struct EeGridArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated ADC resolutions (default 1..8).
    #[arg(long)]
    bits_axis: Option<String>,
    /// Comma-separated oversampling ratios (default 1,2,4,8,16).
    #[arg(long)]
    betas: Option<String>,
    #[arg(long)]
    receivers: Option<String>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value = "ee_grid.csv")]
    out: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Frames for the distortion-covariance comparison.
    #[arg(long, default_value_t = 500)]
    qd_frames: usize,
    /// Frames for the SINDR comparison.
    #[arg(long, default_value_t = 300)]
    sindr_frames: usize,
    /// Negative control: corrupt the gradient so its check must fail.
    #[arg(long, hide = true)]
    corrupt_gradient: bool,
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad value `{p}`: {e}")))
        .collect()
}

fn parse_receivers(s: &str) -> Result<Vec<ReceiverKind>, String> {
    s.split(',')
        .map(|p| ReceiverKind::parse(p.trim()).ok_or_else(|| format!("unknown receiver `{p}`")))
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, String> {
    let doc = args.common.load()?;
    let kind = SweepKind::parse(&args.kind).ok_or_else(|| {
        format!("unknown sweep kind `{}` (expected snr, bandwidth, or osr)", args.kind)
    })?;
    if kind == SweepKind::EeGrid {
        return Err("use the ee-grid subcommand for the bits x OSR grid".into());
    }
    let mut spec = doc.sweep_spec(kind);
    if let Some(v) = &args.values {
        spec.values = parse_list(v)?;
    }
    if let Some(r) = &args.receivers {
        spec.receivers = parse_receivers(r)?;
    }
    if let Some(n) = args.realizations {
        spec.n_realizations = n;
    }
    spec.mc_oracle |= args.mc_oracle;
    spec.timing |= args.timing;
    let rows = run_sweep(&spec, &doc.system, &doc.power).map_err(|e| e.to_string())?;
    write_results(&rows, &args.out, OutputFormat::Csv).map_err(|e| e.to_string())?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    if let Some(json) = &args.json {
        write_results(&rows, json, OutputFormat::Json).map_err(|e| e.to_string())?;
    }
    if let Some(path) = &args.dump_paths {
        let dump = qmimo_cli::sweep::dump_paths_json(&spec, &doc.system).map_err(|e| e.to_string())?;
        std::fs::write(path, dump).map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ee_grid(args: EeGridArgs) -> Result<ExitCode, String> {
    let doc = args.common.load()?;
    let mut spec = doc.sweep_spec(SweepKind::EeGrid);
    if let Some(v) = &args.bits_axis {
        spec.values = parse_list(v)?;
    }
    if let Some(b) = &args.betas {
        spec.grid_betas = parse_list(b)?
            .into_iter()
            .map(|v| {
                if v.fract() == 0.0 && v >= 1.0 {
                    Ok(v as usize)
                } else {
                    Err(format!("bad OSR `{v}`"))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(r) = &args.receivers {
        spec.receivers = parse_receivers(r)?;
    }
    if let Some(n) = args.realizations {
        spec.n_realizations = n;
    }
    spec.timing |= args.timing;
    let rows = run_sweep(&spec, &doc.system, &doc.power).map_err(|e| e.to_string())?;
    write_results(&rows, &args.out, OutputFormat::Csv).map_err(|e| e.to_string())?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    if let Some(json) = &args.json {
        write_results(&rows, json, OutputFormat::Json).map_err(|e| e.to_string())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, String> {
    let doc = args.common.load()?;
    let scenario = Scenario::new(doc.system.clone()).map_err(|e| e.to_string())?;
    if scenario.antennas() > 32 {
        log::warn!("validation is a brute-force comparison; antennas > 32 will be slow");
    }
    let opts = ValidationOptions {
        master_seed: doc.sweep.master_seed,
        qd_frames: args.qd_frames,
        sindr_frames: args.sindr_frames,
        corrupt_gradient: args.corrupt_gradient,
        ..ValidationOptions::default()
    };
    let report = run_validation(&scenario, &opts);
    print!("{}", report.render());
    if report.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::EeGrid(args) => cmd_ee_grid(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
