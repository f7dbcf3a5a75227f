//! Experiment harness for the quantized MIMO-OFDM receiver library: seeded
//! Monte Carlo sweeps over SNR, bandwidth, oversampling, and ADC resolution
//! for three receiver designs, a self-check battery, and CSV/JSON reporting.

pub mod config_file;
pub mod output;
pub mod sweep;
pub mod validate;

pub use config_file::ConfigDocument;
pub use output::{emit_csv, emit_json, parse_csv, write_results, OutputFormat, CSV_HEADER};
pub use sweep::{run_sweep, ReceiverKind, ResultRow, SweepKind, SweepSpec};
pub use validate::{run_validation, ValidationOptions, ValidationReport};
