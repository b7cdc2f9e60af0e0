//! Trace persistence.
//!
//! One record per epoch. Time-valued fields are stored as integer picoseconds
//! (i64) so CSV output is diff-stable and write/read round-trips losslessly;
//! the two skew estimates stay f64 (their interesting range, ~1e-12, has no
//! integer representation that keeps precision).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts seconds to the nearest integer picosecond.
pub fn round_ps(seconds: f64) -> i64 {
    (seconds * 1e12).round() as i64
}

/// Converts integer picoseconds back to seconds.
pub fn ps_to_s(ps: i64) -> f64 {
    ps as f64 * 1e-12
}

/// One epoch of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch_index: u64,
    /// Epoch timestamp n*tau, ps.
    pub time_ps: i64,
    /// True post-correction offset (the evaluation observable), ps.
    pub theta_true_ps: i64,
    /// Measured offset theta_M, ps.
    pub theta_m_ps: i64,
    /// Applied correction u_theta, ps.
    pub u_theta_ps: i64,
    /// Skew-predicted offset offsetF, ps.
    pub offset_f_ps: i64,
    /// Attack index, ps.
    pub i_attack_ps: i64,
    /// gamma_best after this epoch's update, dimensionless.
    pub gamma_best: f64,
    /// gamma_hat_E at this epoch, dimensionless.
    pub gamma_e: f64,
    /// Ground-truth injected delay (0 when no attack), ps.
    pub attack_true_delay_ps: i64,
    pub attack_detected: bool,
}

// NaN never enters a record (inputs are validated finite), so exact
// comparison is total here.
impl Eq for TraceRecord {}

/// Writes records as CSV with a fixed header.
pub fn write_trace(records: &[TraceRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes header-and-rows CSV to any writer (used by the CLI for stdout).
pub fn write_trace_to<W: std::io::Write>(records: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    if records.is_empty() {
        // serialize() writes the header lazily; emit it explicitly for the
        // header-only case
        w.write_record([
            "epoch_index",
            "time_ps",
            "theta_true_ps",
            "theta_m_ps",
            "u_theta_ps",
            "offset_f_ps",
            "i_attack_ps",
            "gamma_best",
            "gamma_e",
            "attack_true_delay_ps",
            "attack_detected",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace back; malformed rows are reported with their line number.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<TraceRecord>() {
        match row {
            Ok(r) => out.push(r),
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(0);
                return Err(Error::TraceParse {
                    path: path.to_path_buf(),
                    line,
                    msg: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}
