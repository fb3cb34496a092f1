use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::experiment::{ExperimentConfig, System};
use super::metrics::Metrics;
use super::predictions::PredictionRow;
use crate::corpus::{Domain, Scenario};
use crate::error::{Error, Result};

pub const REPORT_HEADER: [&str; 8] = [
    "scenario", "system", "features", "domain", "f1_pos", "f1_macro", "accuracy", "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainResult {
    pub domain: Domain,
    /// Test-set scores, or the fold mean under cross-validation.
    pub metrics: Metrics,
    /// Per-fold scores; empty outside cross-validation.
    pub folds: Vec<Metrics>,
    /// Predicted label for every scored pair.
    #[serde(skip)]
    pub predictions: Vec<PredictionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub scenario: Scenario,
    pub system: System,
    pub features: String,
    pub mode: String,
    pub seed: u64,
    pub rows: Vec<DomainResult>,
    pub config_hash: String,
    pub checksums: BTreeMap<String, String>,
}

impl EvalReport {
    /// Arithmetic mean over the domain rows.
    pub fn average(&self) -> Option<Metrics> {
        Metrics::mean(&self.rows.iter().map(|r| r.metrics).collect::<Vec<_>>())
    }

    pub fn row(&self, domain: Domain) -> Option<&DomainResult> {
        self.rows.iter().find(|r| r.domain == domain)
    }

    fn csv_records(&self) -> Vec<[String; 8]> {
        let record = |domain: &str, m: &Metrics| {
            [
                self.scenario.name().to_string(),
                self.system.name().to_string(),
                self.features.clone(),
                domain.to_string(),
                format!("{:.6}", m.f1_pos),
                format!("{:.6}", m.f1_macro),
                format!("{:.6}", m.accuracy),
                self.seed.to_string(),
            ]
        };
        let mut out: Vec<_> = self.rows.iter().map(|r| record(r.domain.short(), &r.metrics)).collect();
        if let Some(avg) = self.average() {
            out.push(record("AVG", &avg));
        }
        out
    }
}

/// Report rows of every run, one line per domain plus an `AVG` line each.
pub fn report_csv_string(reports: &[EvalReport]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(REPORT_HEADER)?;
    for r in reports {
        for rec in r.csv_records() {
            wtr.write_record(&rec)?;
        }
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Config(format!("report buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_report_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    std::fs::write(path, report_csv_string(reports)?).map_err(|e| Error::io(path, e))
}

/// `raw` for text-only features, `structured` once page views or Wikidata
/// enter.
pub fn resource_kind(report: &EvalReport) -> &'static str {
    if report.features.contains("page_view") || report.features.contains("wd") {
        "structured"
    } else {
        "raw"
    }
}

/// Fixed-width F1 table with one line per run and one column per domain.
pub fn render_table(reports: &[EvalReport]) -> String {
    let header = ["Scenario", "Resources", "System", "Feature set"];
    let cells: Vec<[String; 4]> = reports
        .iter()
        .map(|r| {
            [
                r.scenario.name().to_string(),
                resource_kind(r).to_string(),
                r.system.name().to_string(),
                r.features.clone(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for c in &cells {
        for (w, s) in widths.iter_mut().zip(c) {
            *w = (*w).max(s.chars().count());
        }
    }
    let mut out = String::new();
    let push_line = |out: &mut String, text: &[String; 4], nums: &[String]| {
        for (s, w) in text.iter().zip(widths) {
            let _ = write!(out, "{s:<w$} | ");
        }
        let _ = writeln!(out, "{}", nums.join(" | "));
    };
    let mut cols: Vec<String> = Domain::ALL.iter().map(|d| format!("{:>5}", d.short())).collect();
    cols.push(format!("{:>5}", "AVG"));
    push_line(&mut out, &header.map(String::from), &cols);
    let rule = widths.iter().map(|w| w + 3).sum::<usize>() + cols.len() * 8 - 3;
    let _ = writeln!(out, "{}", "-".repeat(rule));
    for (r, text) in reports.iter().zip(&cells) {
        let mut nums: Vec<String> = Domain::ALL
            .iter()
            .map(|&d| r.row(d).map_or_else(|| format!("{:>5}", "-"), |row| format!("{:.3}", row.metrics.f1_pos)))
            .collect();
        nums.push(r.average().map_or_else(|| format!("{:>5}", "-"), |m| format!("{:.3}", m.f1_pos)));
        push_line(&mut out, text, &nums);
    }
    out
}

/// Everything needed to rerun a batch of experiments.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub configs: Vec<ExperimentConfig>,
    pub config_hashes: Vec<String>,
    pub seeds: Vec<u64>,
    pub checksums: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, configs: &[ExperimentConfig], checksums: &BTreeMap<String, String>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            configs: configs.to_vec(),
            config_hashes: configs.iter().map(ExperimentConfig::config_hash).collect(),
            seeds: configs.iter().map(|c| c.seed).collect(),
            checksums: checksums.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}
