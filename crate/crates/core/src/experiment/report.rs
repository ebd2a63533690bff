//! CSV and JSON artifacts.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a
//! profile back reproduces the estimates exactly and repeated runs produce
//! byte-identical files.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CompareConfig, ExperimentError, SampleDump};
use crate::singlering::AnalyticModel;
use crate::stats::{BinEstimate, ComparisonReport, ProfileEstimates, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictRow {
    pub r: f64,
    #[serde(rename = "F")]
    pub cdf: f64,
    pub rho: f64,
    #[serde(rename = "O")]
    pub overlap: f64,
    pub c: f64,
}

pub fn write_predict_csv<W: Write>(w: W, rows: &[PredictRow]) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ProfileRow {
    r_lo: f64,
    r_hi: f64,
    r_mid: f64,
    count: u64,
    rho_hat: f64,
    rho_se: f64,
    rho_analytic: f64,
    #[serde(rename = "O_hat")]
    o_hat: f64,
    #[serde(rename = "O_se")]
    o_se: f64,
    #[serde(rename = "O_analytic")]
    o_analytic: f64,
    c_hat: f64,
    c_analytic: f64,
    in_bulk: u8,
}

/// Profile table with analytic columns from `model`; `in_bulk` is taken from
/// `report` when one is available and is 0 otherwise.
pub fn write_profile_csv<W: Write>(
    mut w: W,
    est: &ProfileEstimates,
    model: &AnalyticModel,
    report: Option<&ComparisonReport>,
) -> Result<(), ExperimentError> {
    writeln!(w, "# model={}", model.label())?;
    writeln!(w, "# n={}", est.n)?;
    writeln!(w, "# samples={}", est.samples)?;
    writeln!(w, "# rejected={}", est.rejected)?;
    writeln!(w, "# below={}", est.below)?;
    writeln!(w, "# above={}", est.above)?;
    let mut out = csv::Writer::from_writer(w);
    let grid = &est.grid;
    for (b, bin) in est.bins.iter().enumerate() {
        let r = grid.mid(b);
        out.serialize(ProfileRow {
            r_lo: grid.lo(b),
            r_hi: grid.hi(b),
            r_mid: r,
            count: bin.count,
            rho_hat: bin.rho,
            rho_se: bin.rho_se,
            rho_analytic: model.radial_density(r),
            o_hat: bin.overlap,
            o_se: bin.overlap_se,
            o_analytic: model.overlap_correlator(r),
            c_hat: bin.c,
            c_analytic: model.conditional_kappa2(r).unwrap_or(f64::NAN),
            in_bulk: report.is_some_and(|rep| rep.bins[b].in_bulk) as u8,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_profile_csv`]; analytic columns are ignored.
pub fn read_profile_csv<R: BufRead>(r: R) -> Result<ProfileEstimates, ExperimentError> {
    let bad = |m: String| ExperimentError::Profile(m);
    let mut meta = std::collections::HashMap::new();
    let mut body = String::new();
    for line in r.lines() {
        let line = line?;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let field = |k: &str| -> Result<u64, ExperimentError> {
        meta.get(k)
            .ok_or_else(|| bad(format!("missing `# {k}=` header")))?
            .parse()
            .map_err(|e| bad(format!("`# {k}=`: {e}")))
    };
    let rows: Vec<ProfileRow> = csv::Reader::from_reader(body.as_bytes()).deserialize().collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(bad("no bins".into()));
    }
    let mut edges: Vec<f64> = rows.iter().map(|r| r.r_lo).collect();
    edges.push(rows.last().unwrap().r_hi);
    if rows.windows(2).any(|w| w[0].r_hi != w[1].r_lo) {
        return Err(bad("bins are not contiguous".into()));
    }
    let grid = RadialGrid::from_edges(edges)?;
    let bins = rows
        .iter()
        .map(|r| BinEstimate {
            count: r.count,
            rho: r.rho_hat,
            rho_se: r.rho_se,
            overlap: r.o_hat,
            overlap_se: r.o_se,
            c: r.c_hat,
            c_se: f64::NAN,
        })
        .collect();
    Ok(ProfileEstimates {
        grid,
        n: field("n")? as usize,
        samples: field("samples")?,
        rejected: field("rejected")?,
        below: field("below")?,
        above: field("above")?,
        bins,
    })
}

/// One row per eigenvalue: `sample_index, i, re, im, O_ii`.
pub fn write_sample_dump<W: Write>(w: W, dump: &SampleDump) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sample_index", "i", "re", "im", "O_ii"])?;
    for (sample, records) in &dump.0 {
        for (i, rec) in records.iter().enumerate() {
            out.serialize((sample, i, rec.eigenvalue.re, rec.eigenvalue.im, rec.overlap))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    #[serde(rename = "max_sup_err_O")]
    pub max_sup_err_o: Option<f64>,
    pub max_sup_err_rho: Option<f64>,
    pub max_rel_err_c: Option<f64>,
}

/// Machine-readable outcome of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub samples: u64,
    pub rejected: u64,
    pub below_grid: u64,
    pub above_grid: u64,
    pub c_edge: f64,
    pub bulk_lo: f64,
    pub bulk_hi: f64,
    pub bulk_bins: usize,
    #[serde(rename = "bulk_sup_err_O")]
    pub bulk_sup_err_o: f64,
    #[serde(rename = "bulk_l2_err_O")]
    pub bulk_l2_err_o: f64,
    pub bulk_sup_err_rho: f64,
    pub bulk_l2_err_rho: f64,
    pub bulk_sup_rel_err_c: f64,
    #[serde(rename = "edge_sup_err_O")]
    pub edge_sup_err_o: f64,
    pub edge_sup_err_rho: f64,
    pub thresholds: Thresholds,
    pub pass: bool,
    pub failures: Vec<String>,
}

impl Summary {
    pub(super) fn new(est: &ProfileEstimates, rep: &ComparisonReport, cfg: &CompareConfig, failures: Vec<String>) -> Self {
        Self {
            model: rep.model.clone(),
            n: est.n,
            samples: est.samples,
            rejected: est.rejected,
            below_grid: est.below,
            above_grid: est.above,
            c_edge: cfg.c_edge,
            bulk_lo: rep.bulk_lo,
            bulk_hi: rep.bulk_hi,
            bulk_bins: rep.bulk_bins,
            bulk_sup_err_o: rep.bulk_sup_err_o,
            bulk_l2_err_o: rep.bulk_l2_err_o,
            bulk_sup_err_rho: rep.bulk_sup_err_rho,
            bulk_l2_err_rho: rep.bulk_l2_err_rho,
            bulk_sup_rel_err_c: rep.bulk_sup_rel_err_c,
            edge_sup_err_o: rep.edge_sup_err_o,
            edge_sup_err_rho: rep.edge_sup_err_rho,
            thresholds: Thresholds {
                max_sup_err_o: cfg.max_sup_err_o,
                max_sup_err_rho: cfg.max_sup_err_rho,
                max_rel_err_c: cfg.max_rel_err_c,
            },
            pass: failures.is_empty(),
            failures,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub report: ComparisonReport,
    pub summary: Summary,
}

impl CompareOutcome {
    pub fn passed(&self) -> bool {
        self.summary.pass
    }
}
