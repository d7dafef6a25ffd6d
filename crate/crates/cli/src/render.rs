//! Report layouts: markdown tables with integer cells, CSV and JSON with
//! unrounded values.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use eb_shrink_core::experiments::RiskReport;
use eb_shrink_core::presets::TablePreset;
use eb_shrink_core::QuadratureSpec;

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: [&str; 5] = ["estimator", "config", "risk", "se", "ratio"];

/// Numeric settings printed in every report header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub replications: usize,
    pub quadrature: QuadratureSpec,
    pub window_tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableColumn {
    pub label: String,
    pub report: RiskReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub label: String,
    pub values: Vec<f64>,
}

/// Everything produced by a table preset run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub table: String,
    pub title: String,
    pub provenance: Provenance,
    pub rows: Vec<String>,
    pub columns: Vec<TableColumn>,
    pub published: Vec<PublishedRow>,
}

impl TableReport {
    pub fn new(preset: &TablePreset, provenance: Provenance, reports: Vec<RiskReport>) -> Self {
        Self {
            table: preset.table.name().to_string(),
            title: preset.title.clone(),
            provenance,
            rows: preset.rows.clone(),
            columns: preset
                .columns
                .iter()
                .zip(reports)
                .map(|(c, report)| TableColumn {
                    label: c.label.clone(),
                    report,
                })
                .collect(),
            published: preset
                .references
                .iter()
                .map(|r| PublishedRow {
                    label: r.label.clone(),
                    values: r.values.clone(),
                })
                .collect(),
        }
    }

    /// Mean risk of `estimator` in every column.
    pub fn row(&self, estimator: &str) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| c.report.get(estimator).map(|e| e.risk).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Report of a single `run` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub report: RiskReport,
}

/// `x` with 17 significant digits, enough to round-trip any f64.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(out: &mut String, p: &Provenance) {
    let tau = match p.window_tau {
        Some(t) => t.to_string(),
        None => "exact".to_string(),
    };
    writeln!(
        out,
        "seed: {} | replications: {} | quad_half_width: {} | quad_step: {} | window_tau: {}",
        p.seed, p.replications, p.quadrature.half_width, p.quadrature.step, tau
    )
    .unwrap();
}

/// Integers as printed in the published tables.
fn rounded(x: f64) -> String {
    if x.is_finite() {
        format!("{}", x.round() as i64)
    } else {
        "-".to_string()
    }
}

pub fn table_markdown(t: &TableReport) -> String {
    let mut out = String::new();
    writeln!(out, "# {}: {}", t.table, t.title).unwrap();
    writeln!(out).unwrap();
    header(&mut out, &t.provenance);
    writeln!(out).unwrap();
    let labels: Vec<&str> = t.columns.iter().map(|c| c.label.as_str()).collect();
    writeln!(out, "| estimator | {} |", labels.join(" | ")).unwrap();
    writeln!(out, "|---|{}", "---:|".repeat(labels.len())).unwrap();
    for name in &t.rows {
        let cells: Vec<String> = t.row(name).into_iter().map(rounded).collect();
        writeln!(out, "| {} | {} |", name, cells.join(" | ")).unwrap();
    }
    for p in &t.published {
        let cells: Vec<String> = p.values.iter().copied().map(rounded).collect();
        writeln!(out, "| {} | {} |", p.label, cells.join(" | ")).unwrap();
    }
    out
}

pub fn run_markdown(r: &RunReport) -> String {
    let mut out = String::new();
    writeln!(out, "# run: n = {}", r.report.n).unwrap();
    writeln!(out).unwrap();
    header(&mut out, &r.provenance);
    if let Some(b) = &r.report.baseline {
        writeln!(out, "baseline: {b}").unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "| estimator | config | risk | se | ratio |").unwrap();
    writeln!(out, "|---|---|---:|---:|---:|").unwrap();
    for e in &r.report.entries {
        let ratio = e.ratio.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "| {} | {} | {} | {:.2} | {} |",
            e.name,
            e.config,
            rounded(e.risk),
            e.se,
            ratio
        )
        .unwrap();
    }
    out
}

fn csv_rows<I>(rows: I) -> CliResult<String>
where
    I: IntoIterator<Item = [String; 5]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)
        .map_err(|e| CliError::Output(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Output(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

fn ratio_cell(r: Option<f64>) -> String {
    r.map(sig17).unwrap_or_default()
}

/// One row per (estimator, column); `config` is the column label.
pub fn table_csv(t: &TableReport) -> CliResult<String> {
    let mut rows = Vec::new();
    for c in &t.columns {
        for e in &c.report.entries {
            rows.push([
                e.name.clone(),
                c.label.clone(),
                sig17(e.risk),
                sig17(e.se),
                ratio_cell(e.ratio),
            ]);
        }
    }
    csv_rows(rows)
}

/// One row per estimator; `config` is the estimator's settings.
pub fn run_csv(r: &RunReport) -> CliResult<String> {
    csv_rows(r.report.entries.iter().map(|e| {
        [
            e.name.clone(),
            e.config.clone(),
            sig17(e.risk),
            sig17(e.se),
            ratio_cell(e.ratio),
        ]
    }))
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Parsed CSV row, for consumers of the CSV layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub estimator: String,
    pub config: String,
    pub risk: f64,
    pub se: f64,
    pub ratio: Option<f64>,
}

pub fn parse_csv(text: &str) -> CliResult<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| CliError::Output(e.to_string()))?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(CliError::Output(format!("unexpected CSV header {headers:?}")));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| CliError::Output(format!("bad number `{s}`: {e}")))
    };
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::Output(e.to_string()))?;
            Ok(CsvRow {
                estimator: rec[0].to_string(),
                config: rec[1].to_string(),
                risk: num(&rec[2])?,
                se: num(&rec[3])?,
                ratio: if rec[4].is_empty() { None } else { Some(num(&rec[4])?) },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(sig17(53.0), "5.3000000000000000e1");
        for x in [0.1, 1.0 / 3.0, 12345.678901234567, 1e-300, 2.0f64.sqrt()] {
            let s = sig17(x);
            let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn rounding_matches_published_style() {
        assert_eq!(rounded(47.4), "47");
        assert_eq!(rounded(47.5), "48");
        assert_eq!(rounded(f64::NAN), "-");
    }
}
