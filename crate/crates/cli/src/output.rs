//! Result persistence: CSV with a fixed schema and a JSON mirror.
//!
//! Floats are written in round-trip scientific notation with a '.' decimal
//! separator, so `parse_csv(emit_csv(rows)) == rows` exactly and re-running a
//! seeded sweep reproduces output files byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::sweep::ResultRow;

/// Exact column order of the CSV schema.
pub const CSV_HEADER: &str =
    "sweep_kind,sweep_value,receiver,b,beta,se_mean,se_stderr,ee,n_realizations,wall_time_s,iterations_mean";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("CSV header mismatch: expected `{CSV_HEADER}`, got `{0}`")]
    BadHeader(String),
    #[error("CSV line {line}: expected 11 fields, got {got}")]
    BadFieldCount { line: usize, got: usize },
    #[error("CSV line {line}: {source}")]
    BadNumber {
        line: usize,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Render rows as CSV (header plus one line per row).
pub fn emit_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.sweep_kind,
            fmt_f64(r.sweep_value),
            r.receiver,
            r.b,
            r.beta,
            fmt_f64(r.se_mean),
            fmt_f64(r.se_stderr),
            fmt_f64(r.ee),
            r.n_realizations,
            fmt_f64(r.wall_time_s),
            fmt_f64(r.iterations_mean),
        );
    }
    out
}

/// Render rows as a JSON array with the same field names as the CSV columns.
pub fn emit_json(rows: &[ResultRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

/// Parse CSV produced by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, OutputError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != CSV_HEADER {
        return Err(OutputError::BadHeader(header.to_string()));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(OutputError::BadFieldCount {
                line: line_no,
                got: fields.len(),
            });
        }
        let num = |s: &str| -> Result<f64, OutputError> {
            s.parse::<f64>().map_err(|e| OutputError::BadNumber {
                line: line_no,
                source: Box::new(e),
            })
        };
        let int = |s: &str| -> Result<u64, OutputError> {
            s.parse::<u64>().map_err(|e| OutputError::BadNumber {
                line: line_no,
                source: Box::new(e),
            })
        };
        rows.push(ResultRow {
            sweep_kind: fields[0].to_string(),
            sweep_value: num(fields[1])?,
            receiver: fields[2].to_string(),
            b: int(fields[3])? as u32,
            beta: int(fields[4])? as usize,
            se_mean: num(fields[5])?,
            se_stderr: num(fields[6])?,
            ee: num(fields[7])?,
            n_realizations: int(fields[8])? as usize,
            wall_time_s: num(fields[9])?,
            iterations_mean: num(fields[10])?,
        });
    }
    Ok(rows)
}

/// Write rows to `path` in the requested format.
pub fn write_results(
    rows: &[ResultRow],
    path: &Path,
    format: OutputFormat,
) -> Result<(), OutputError> {
    let body = match format {
        OutputFormat::Csv => emit_csv(rows),
        OutputFormat::Json => emit_json(rows),
    };
    fs::write(path, body).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                sweep_kind: "snr".into(),
                sweep_value: -10.0,
                receiver: "proposed_hybrid".into(),
                b: 3,
                beta: 1,
                se_mean: 17.75638251,
                se_stderr: 0.123456789e-2,
                ee: 0.9581234,
                n_realizations: 100,
                wall_time_s: 0.0,
                iterations_mean: 42.5,
            },
            ResultRow {
                sweep_kind: "osr".into(),
                sweep_value: 4.0,
                receiver: "digital_mmse".into(),
                b: 1,
                beta: 4,
                se_mean: 0.1 + 0.2, // deliberately non-representable
                se_stderr: f64::MIN_POSITIVE,
                ee: 1.0 / 3.0,
                n_realizations: 7,
                wall_time_s: 1.5e-3,
                iterations_mean: 1.0,
            },
        ]
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rows = sample_rows();
        let parsed = parse_csv(&emit_csv(&rows)).unwrap();
        assert_eq!(rows, parsed);
    }

    #[test]
    fn empty_rows_emit_header_only() {
        let csv = emit_csv(&[]);
        assert_eq!(csv.trim_end(), CSV_HEADER);
        assert!(parse_csv(&csv).unwrap().is_empty());
    }

    #[test]
    fn header_is_locale_independent_and_exact() {
        let csv = emit_csv(&sample_rows());
        let first = csv.lines().next().unwrap();
        assert_eq!(first, CSV_HEADER);
        assert!(!csv.contains(';'));
        // scientific notation with '.' decimals
        assert!(csv.lines().nth(1).unwrap().contains('e'));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(parse_csv("nope"), Err(OutputError::BadHeader(_))));
        let bad = format!("{CSV_HEADER}\nsnr,1,rx,1\n");
        assert!(matches!(
            parse_csv(&bad),
            Err(OutputError::BadFieldCount { line: 2, got: 4 })
        ));
        let nan = format!("{CSV_HEADER}\nsnr,xyz,rx,1,1,0,0,0,1,0,0\n");
        assert!(matches!(parse_csv(&nan), Err(OutputError::BadNumber { .. })));
    }

    #[test]
    fn json_mirror_has_same_fields() {
        let rows = sample_rows();
        let json = emit_json(&rows);
        let parsed: Vec<ResultRow> = serde_json::from_str(&json).unwrap();
        assert_eq!(rows, parsed);
        for field in CSV_HEADER.split(',') {
            assert!(json.contains(&format!("\"{field}\"")), "missing {field}");
        }
    }
}
