//! Experiment report records and JSON/CSV emission.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentSpec, SketchFamily, Variant};
use crate::error::Result;
use crate::sketch::ThresholdChoice;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub centered: bool,
    pub spectral_norm: f64,
    pub frobenius_norm: f64,
    pub l1_norm: f64,
    pub stable_rank: f64,
}

/// Outcome of the α search for the hybrid variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingSummary {
    /// α actually used for sampling.
    pub alpha: f64,
    pub optimized: bool,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_at_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub sigma_min_sq: f64,
    pub sigma_min_computed: bool,
    /// Sample size the bound asks for at (eps, delta, k), if representable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theoretical_s: Option<u64>,
}

/// One sketch (per family and seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchRecord {
    pub family: SketchFamily,
    pub seed: u64,
    /// Draw count; 0 for copy and threshold sketches.
    pub s: u64,
    pub nnz: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_norm_diff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_diff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sketch_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One (variant, r, seed) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub variant: Variant,
    pub r: usize,
    pub seed: u64,
    /// trace(VᵀAᵀAV) against the original (centered) matrix.
    pub f: Option<f64>,
    /// f divided by the matching G variant's f.
    pub ratio: Option<f64>,
    pub sketch_nnz: Option<usize>,
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Medians over seeds for one (variant, r); failed cells are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub variant: Variant,
    pub r: usize,
    pub f: Option<f64>,
    pub ratio: Option<f64>,
    pub sketch_nnz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub version: String,
    pub spec: ExperimentSpec,
    /// Variants actually run, including added G baselines, in canonical order.
    pub variants: Vec<Variant>,
    pub dataset: DatasetInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdChoice>,
    pub notes: Vec<String>,
    pub sketches: Vec<SketchRecord>,
    pub cells: Vec<Cell>,
    pub medians: Vec<MedianRow>,
}

impl ExperimentReport {
    pub fn median(&self, variant: Variant, r: usize) -> Option<&MedianRow> {
        self.medians.iter().find(|m| m.variant == variant && m.r == r)
    }

    pub fn cells_for(&self, variant: Variant, r: usize) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.variant == variant && c.r == r)
    }
}

/// Median of the values; mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

pub fn to_json(report: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    variant: &'a str,
    r: usize,
    seed: String,
    f: Option<f64>,
    ratio: Option<f64>,
    sketch_nnz: Option<f64>,
    converged: Option<bool>,
    solver_ms: Option<f64>,
    error: &'a str,
}

pub fn write_csv<W: Write>(report: &ExperimentReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in &report.cells {
        w.serialize(CsvRow {
            variant: c.variant.name(),
            r: c.r,
            seed: c.seed.to_string(),
            f: c.f,
            ratio: c.ratio,
            sketch_nnz: c.sketch_nnz.map(|x| x as f64),
            converged: c.converged,
            solver_ms: c.solver_ms,
            error: c.error.as_deref().unwrap_or(""),
        })?;
    }
    for m in &report.medians {
        w.serialize(CsvRow {
            variant: m.variant.name(),
            r: m.r,
            seed: "median".into(),
            f: m.f,
            ratio: m.ratio,
            sketch_nnz: m.sketch_nnz,
            converged: None,
            solver_ms: m.solver_ms,
            error: "",
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: Option<&Path>) -> Result<()> {
    let mut out: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        ReportFormat::Json => out.write_all(to_json(report)?.as_bytes())?,
        ReportFormat::Csv => write_csv(report, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
