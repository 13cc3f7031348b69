use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::algorithms::RunTrace;
use crate::error::Result;

pub const TRACE_HEADER: [&str; 4] = ["iteration", "error", "consensus_error", "grad_norm_sq"];
pub const SUMMARY_HEADER: [&str; 8] = [
    "algorithm",
    "topology",
    "n",
    "k",
    "eta",
    "seed",
    "iters_to_target",
    "final_error",
];

/// One line of `summary.csv`. `seed` is a string so that aggregate rows can
/// say `mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub topology: String,
    pub n: usize,
    pub k: usize,
    pub eta: f64,
    pub seed: String,
    pub iters_to_target: Option<f64>,
    pub final_error: f64,
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(TRACE_HEADER)?;
    for r in trace.records() {
        w.write_record([
            r.iteration.to_string(),
            r.error.to_string(),
            r.consensus_error.to_string(),
            r.grad_norm_sq.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())?.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.topology.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.eta.to_string(),
            r.seed.clone(),
            r.iters_to_target.map(|v| v.to_string()).unwrap_or_default(),
            r.final_error.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())?.flush()?;
    Ok(())
}
