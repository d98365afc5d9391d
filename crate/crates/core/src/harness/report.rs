//! Per-session CSV output.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::session::SessionResult;

pub const CSV_HEADER: [&str; 5] = [
    "session",
    "classes",
    "accuracy",
    "mean_abs_offdiag_cos",
    "max_abs_offdiag_cos",
];

#[derive(Serialize)]
struct Row {
    session: usize,
    classes: usize,
    accuracy: f64,
    mean_abs_offdiag_cos: f64,
    max_abs_offdiag_cos: f64,
}

/// Writes `session,classes,accuracy,mean_abs_offdiag_cos,max_abs_offdiag_cos`,
/// one row per session in order.
pub fn write_session_csv<W: Write>(out: W, results: &[SessionResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(Row {
            session: r.session,
            classes: r.classes,
            accuracy: r.accuracy,
            mean_abs_offdiag_cos: r.mean_abs_offdiag_cos,
            max_abs_offdiag_cos: r.max_abs_offdiag_cos,
        })
        .map_err(csv_err)?;
    }
    if results.is_empty() {
        w.write_record(CSV_HEADER).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

/// Uncompressed vs compressed accuracy per session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionRow {
    pub session: usize,
    pub classes: usize,
    pub accuracy: f64,
    pub compressed_accuracy: f64,
    pub drop: f64,
}

pub fn write_compression_csv<W: Write>(out: W, rows: &[CompressionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
