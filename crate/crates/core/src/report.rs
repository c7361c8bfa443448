//! Markdown, CSV and JSON reports for metrics.
//!
//! JSON is the authoritative encoding. CSV prints every number at full
//! round-trip precision; markdown rounds to three decimals.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::bench::RuntimeStats;
use crate::curation::CurationReport;
use crate::eval_coco::{CocoMetrics, MetricSummary};
use crate::eval_docling::DoclingEvalReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    /// Picks the format from a file extension; unknown extensions get JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("md" | "markdown") => ReportFormat::Markdown,
            Some("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReportOptions {
    /// Adds an AP-95 column to markdown tables.
    pub include_ap95: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(u64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

pub trait Report: Serialize {
    /// Tables for markdown (first) and CSV (second) output.
    fn tables(&self, options: &ReportOptions) -> (Vec<Table>, Table);
}

fn summary_row(name: &str, s: &MetricSummary, ap95: bool) -> Vec<Cell> {
    let mut row = vec![
        Cell::Text(name.to_string()),
        Cell::Num(s.map_50_95),
        Cell::Num(s.ap_50),
        Cell::Num(s.ap_75),
        Cell::Num(s.ap_large),
        Cell::Num(s.ap_medium),
        Cell::Num(s.ap_small),
    ];
    if ap95 {
        row.push(Cell::Num(s.ap_95));
    }
    row
}

const COCO_COLUMNS: [&str; 7] = [
    "class",
    "mAP-50:95",
    "AP-50",
    "AP-75",
    "AP-large",
    "AP-medium",
    "AP-small",
];

impl Report for CocoMetrics {
    fn tables(&self, options: &ReportOptions) -> (Vec<Table>, Table) {
        let mut md = Table::new(&COCO_COLUMNS);
        if options.include_ap95 {
            md.headers.push("AP-95".into());
        }
        let mut csv = Table::new(&COCO_COLUMNS);
        csv.headers.extend(["AP-95".to_string(), "AR-50:95".to_string()]);

        let entries = std::iter::once(("all".to_string(), &self.summary))
            .chain(self.per_class.iter().map(|(l, s)| (l.name().to_string(), s)));
        for (name, s) in entries {
            md.rows.push(summary_row(&name, s, options.include_ap95));
            let mut row = summary_row(&name, s, true);
            row.push(Cell::Num(s.ar_50_95));
            csv.rows.push(row);
        }
        (vec![md], csv)
    }
}

impl Report for DoclingEvalReport {
    fn tables(&self, _: &ReportOptions) -> (Vec<Table>, Table) {
        let labels = self
            .label_intersection
            .iter()
            .map(|l| l.name())
            .collect::<Vec<_>>()
            .join("; ");
        let mut t = Table::new(&["mAP-50:95", "samples", "skipped", "labels"]);
        t.rows.push(vec![
            Cell::Num(self.map_50_95),
            Cell::Int(self.samples_total as u64),
            Cell::Int(self.samples_skipped as u64),
            Cell::Text(labels),
        ]);
        (vec![t.clone()], t)
    }
}

impl Report for RuntimeStats {
    fn tables(&self, _: &ReportOptions) -> (Vec<Table>, Table) {
        let mut md = Table::new(&["Device", "Batch-Size", "Model", "mean", "median", "min", "max"]);
        let row = vec![
            Cell::Text(self.device.clone()),
            Cell::Int(self.batch_size as u64),
            Cell::Text(self.model.clone()),
            Cell::Num(self.mean),
            Cell::Num(self.median),
            Cell::Num(self.min),
            Cell::Num(self.max),
        ];
        md.rows.push(row.clone());
        let mut csv = md.clone();
        csv.headers.push("n_images".into());
        let mut csv_row = row;
        csv_row.push(Cell::Int(self.n_images as u64));
        csv.rows = vec![csv_row];
        (vec![md], csv)
    }
}

impl Report for CurationReport {
    fn tables(&self, _: &ReportOptions) -> (Vec<Table>, Table) {
        let mut main = Table::new(&["threshold", "pages", "excluded", "fraction"]);
        let row = vec![
            Cell::Num(self.threshold),
            Cell::Int(self.pages_total as u64),
            Cell::Int(self.pages_excluded as u64),
            Cell::Num(self.exclusion_fraction),
        ];
        main.rows.push(row.clone());
        let mut hits = Table::new(&["delta label", "flagged pages"]);
        for (l, n) in &self.delta_hits {
            hits.rows.push(vec![Cell::Text(l.name().to_string()), Cell::Int(*n as u64)]);
        }
        let mut csv = main.clone();
        let mut csv_row = row;
        for (l, n) in &self.delta_hits {
            csv.headers.push(format!("hits:{}", l.name()));
            csv_row.push(Cell::Int(*n as u64));
        }
        csv.rows = vec![csv_row];
        let mut md = vec![main];
        if !hits.rows.is_empty() {
            md.push(hits);
        }
        (md, csv)
    }
}

fn md_cell(c: &Cell) -> String {
    match c {
        Cell::Text(s) => s.replace('|', "\\|"),
        Cell::Num(v) => format!("{v:.3}"),
        Cell::Int(v) => v.to_string(),
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
        Cell::Num(v) => v.to_string(),
        Cell::Int(v) => v.to_string(),
    }
}

fn render_markdown(tables: &[Table]) -> String {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "| {} |", t.headers.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(t.headers.len()));
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(md_cell).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
    }
    out
}

fn render_csv(t: &Table) -> String {
    let mut out = String::new();
    let headers: Vec<String> = t.headers.iter().map(|h| csv_cell(&Cell::Text(h.clone()))).collect();
    let _ = writeln!(out, "{}", headers.join(","));
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(csv_cell).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn emit_report<R: Report>(metrics: &R, format: ReportFormat, options: &ReportOptions) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(metrics).expect("metrics serialize");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => render_markdown(&metrics.tables(options).0),
        ReportFormat::Csv => render_csv(&metrics.tables(options).1),
    }
}
